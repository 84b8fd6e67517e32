// Acceptance checks at desk scale. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dualsr/bounds.hpp"
#include "dualsr/certificate.hpp"
#include "dualsr/dual_solver.hpp"
#include "dualsr/errors.hpp"
#include "dualsr/kernel.hpp"
#include "dualsr/lab.hpp"
#include "dualsr/model.hpp"
#include "dualsr/rng.hpp"

using namespace dualsr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const std::vector<double> kDeskT{0.25, 0.5, 0.8};
const std::vector<double> kDeskA{1.0, 2.0, 1.5};

Instance desk_instance() {
  return make_instance(SpikeTrain(kDeskT, kDeskA), SamplingDesign::uniform(30), GaussianKernel(0.08));
}

const ReferenceSolution& desk_reference() {
  static const ReferenceSolution ref = solve_reference(desk_instance(), ExchangeOptions{});
  return ref;
}

Outcome exact_recovery() {
  const auto start = std::chrono::steady_clock::now();
  const Instance inst = desk_instance();
  const DualSolution dual = solve(inst.y, inst.design, inst.kernel);
  const DualCertificate cert(dual.lambda, inst.design, inst.kernel);
  const CertificateReport rep = verify_conditions(cert);
  const SpikeTrain rec = extract_spikes(cert, inst.y);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rec.size() != 3) return {false, fmt("recovered %zu spikes, expected 3", rec.size())};
  double loc = 0.0;
  double amp = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    loc = std::max(loc, std::abs(rec.locations()[k] - kDeskT[k]));
    amp = std::max(amp, std::abs(rec.amplitudes()[k] - kDeskA[k]));
  }
  const double gap = std::abs(dual.objective - 4.5);
  const bool ok = rep.valid && loc <= 1e-6 && amp <= 1e-8 && gap <= 1e-6 && seconds <= 10.0;
  return {ok, fmt("location err %.2e, amplitude err %.2e, |objective - 4.5| %.2e, %.2f s", loc,
                  amp, gap, seconds)};
}

Outcome certificate_conditions() {
  const ReferenceSolution& ref = desk_reference();
  const DualCertificate cert(ref.dual.lambda, ref.instance.design, ref.instance.kernel);
  double eq = 0.0;
  for (double t : ref.recovered.locations()) eq = std::max(eq, std::abs(cert.q(t) - 1.0));
  const std::size_t n = 100000;
  double sup = -1e300;
  for (std::size_t i = 0; i < n; ++i) sup = std::max(sup, cert.q(static_cast<double>(i) / (n - 1)));
  for (const Maximizer& m : local_maximizers(cert, n)) sup = std::max(sup, m.q_value);
  const bool ok = eq <= 1e-8 && sup <= 1.0 + 1e-8;
  return {ok, fmt("max |q(t_k) - 1| %.2e, sup q - 1 = %.2e over 1e5 grid + polished maxima", eq,
                  sup - 1.0)};
}

Outcome location_certification() {
  StudyConfig cfg;
  cfg.trial_count = 1000;
  cfg.radius_fractions = {0.5};
  const LocationStudy st = run_location_study(desk_reference(), cfg);
  double worst = 0.0;
  std::size_t within = 0;
  for (const TrialRecord& r : st.records) {
    worst = std::max(worst, r.ratio);
    if (r.status == TrialStatus::ok) ++within;
  }
  const bool ok = st.passed() && st.records.size() == 3000 && within == 3000;
  return {ok, fmt("%zu/%zu trials within bound, %zu escapes, max ratio %.3f", within,
                  st.records.size(), st.escapes, worst)};
}

Outcome implicit_derivative_check() {
  InstanceConfig ic;
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ReferenceSolution ref = solve_reference(generate_instance(ic, seed), ExchangeOptions{});
    for (std::uint64_t dir = 0; dir < 20; ++dir) {
      const Vector u = random_unit_vector(ic.m, seed, 1000 + dir);
      for (double t : ref.recovered.locations()) {
        const DerivativeCheck c = check_implicit_derivative(ref.dual.lambda, t, ref.instance.design,
                                                            ref.instance.kernel, u);
        worst = std::max(worst, c.relative_error);
        ++checks;
      }
    }
  }
  return {worst <= 1e-5, fmt("max relative error %.2e over %zu spike-direction pairs (10 instances x 20 directions)",
                             worst, checks)};
}

Outcome e_bound() {
  PhiloxStream rng(2024, 5);
  double worst = 0.0;
  std::size_t finite = 0;
  for (int pair = 0; pair < 1000; ++pair) {
    const double sigma = 0.05 + 0.45 * rng.uniform();
    const std::size_t m = 5 + static_cast<std::size_t>(rng.uniform() * 76.0);
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
    std::vector<double> t(k);
    for (double& v : t) v = rng.uniform();
    std::sort(t.begin(), t.end());
    const double scale = sigma * std::pow(10.0, -6.0 + 5.0 * rng.uniform());
    std::vector<double> tt(k);
    for (std::size_t i = 0; i < k; ++i) tt[i] = t[i] + scale * rng.normal();
    const SamplingDesign d = SamplingDesign::uniform(m);
    const GaussianKernel ker(sigma);
    const double e = (phi_matrix(tt, d, ker) - phi_matrix(t, d, ker)).norm();
    // The coefficient depends on sigma and M only.
    const AmplitudeBoundReport rep = amplitude_report(Matrix::Identity(2, 2), sigma, m);
    const double bound = E_frobenius_bound(rep, t, tt);
    const double ratio = bound > 0.0 ? e / bound : (e == 0.0 ? 0.0 : INFINITY);
    if (std::isfinite(bound)) ++finite;
    worst = std::max(worst, ratio);
  }
  return {worst <= 1.0, fmt("max ||E||_F / bound %.3e over 1000 pairs (%zu with finite bound)", worst,
                            finite)};
}

Outcome neumann_expansion() {
  const Instance inst = desk_instance();
  const Matrix phi = phi_matrix(inst.signal.locations(), inst.design, inst.kernel);
  const Matrix e = scaled_perturbation(phi, 0.1, 1);
  const NeumannCheck nc = verify_neumann(phi, e, 30);
  const double rho = nc.matrices.rho;
  // Successive ratios are meaningful only while the error is above rounding.
  const double floor = 1e3 * 2.220446049250313e-16 * nc.matrices.pinv_norm;
  double worst_ratio = 0.0;
  int orders = 0;
  for (std::size_t n = 1; n < nc.errors.size(); ++n) {
    if (nc.errors[n] <= floor) break;
    worst_ratio = std::max(worst_ratio, nc.errors[n] / nc.errors[n - 1]);
    ++orders;
  }
  const double last = nc.errors.back();
  const bool ok = last <= 1e-10 && worst_ratio <= rho + 0.05 && orders >= 3 && nc.within_bounds;
  return {ok, fmt("error at order 30 %.2e, max successive ratio %.3f over %d orders, rho %.3f",
                  last, worst_ratio, orders, rho)};
}

Outcome amplitude_first_order() {
  const Instance inst = make_instance(SpikeTrain({0.2, 0.8}, {1.0, 1.5}), SamplingDesign::uniform(30),
                                      GaussianKernel(0.5));
  StudyConfig cfg;
  cfg.trial_count = 100;
  cfg.radius_fractions = {1e-5, 1e-4, 1e-3, 1e-2};
  const AmplitudeStudy st = run_amplitude_study(inst, cfg);
  double worst = 0.0;
  bool ok = st.e_bound_violations == 0 && st.worst_expansion_error <= 1e-9;
  for (const TrialRecord& r : st.records) {
    const double eps = r.perturbation_norm;
    worst = std::max(worst, r.ratio);
    if (!(r.ratio <= first_order_allowance(eps))) ok = false;
  }
  return {ok, fmt("%zu samples, max ratio %.2e, max expansion error %.2e (sigma 0.5, radius %.2e)",
                  st.records.size(), worst, st.worst_expansion_error, st.report.admissible_radius)};
}

Outcome kernel_suprema() {
  double worst = 0.0;
  for (double sigma : {0.05, 0.08, 0.3, 1.0}) {
    const GaussianKernel k(sigma);
    const std::size_t n = 1000000;
    const double span = 5.0 * sigma;
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = -span + 2.0 * span * static_cast<double>(i) / (n - 1);
      m1 = std::max(m1, std::abs(k.deriv(t, 1)));
      m2 = std::max(m2, std::abs(k.deriv(t, 2)));
    }
    const double w1 = std::sqrt(2.0) / (sigma * std::sqrt(std::exp(1.0)));
    const double w2 = 2.0 / (sigma * sigma);
    worst = std::max({worst, std::abs(m1 - w1) / w1, std::abs(m2 - w2) / w2,
                      std::abs(k.sup_abs_deriv(1) - w1) / w1, std::abs(k.sup_abs_deriv(2) - w2) / w2});
  }
  return {worst <= 1e-6, fmt("max relative deviation %.2e over sigma {0.05, 0.08, 0.3, 1}", worst)};
}

Outcome formula_consistency() {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double q2 = std::pow(10.0, -2.0 + 8.0 * u(gen));
    const double nrm = std::pow(10.0, -2.0 + 5.0 * u(gen));
    const double sigma = 0.01 + 0.99 * u(gen);
    const std::size_t m = 1 + static_cast<std::size_t>(u(gen) * 10000.0);
    const double a = delta_lambda_product(q2, nrm, sigma, m);
    const double b = delta_lambda_closed(q2, nrm, sigma, m);
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  return {worst <= 1e-12, fmt("max relative difference %.2e over 1e4 tuples", worst)};
}

Outcome scaling_trends() {
  std::vector<StudyConfig> configs;
  for (std::size_t m : {10u, 20u, 40u, 80u}) {
    StudyConfig c;
    c.instance.m = m;
    c.instance.sigma = 0.35;
    c.locations = kDeskT;
    c.amplitudes = kDeskA;
    c.trial_count = 50;
    configs.push_back(c);
  }
  const ScalingStudy st = scaling_study(configs);
  bool ok = st.fits.size() == 3;
  std::string detail = "sigma 0.35, M {10,20,40,80}:";
  for (const ScalingFit& f : st.fits) {
    ok = ok && f.delta_lambda_slope >= -1.2 && f.delta_lambda_slope <= -0.8 &&
         f.c_term_slope >= 0.3 && f.c_term_slope <= 0.7;
    detail += fmt(" spike %zu slopes %.3f / %.3f;", f.spike, f.delta_lambda_slope, f.c_term_slope);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact recovery", exact_recovery},
      {"certificate conditions", certificate_conditions},
      {"location bound, 1000 trials per spike", location_certification},
      {"implicit derivative vs finite differences", implicit_derivative_check},
      {"kernel perturbation bound", e_bound},
      {"series expansion of the pseudoinverse", neumann_expansion},
      {"first-order amplitude bound", amplitude_first_order},
      {"kernel derivative suprema", kernel_suprema},
      {"delta_lambda forms agree", formula_consistency},
      {"sample-count scaling", scaling_trends},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
