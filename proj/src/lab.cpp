#include "dualsr/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "dualsr/errors.hpp"
#include "dualsr/rng.hpp"

namespace dualsr {

void StudyConfig::validate() const {
  if (trial_count < 1) throw InvalidArgument("trial_count: must be >= 1");
  if (radius_fractions.empty()) throw InvalidArgument("radius_fractions: must not be empty");
  for (std::size_t i = 0; i < radius_fractions.size(); ++i) {
    const double f = radius_fractions[i];
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("radius_fractions: values must lie in [0, 1]");
    if (i > 0 && f < radius_fractions[i - 1]) {
      throw InvalidArgument("radius_fractions: must be sorted ascending");
    }
  }
  if (series_order < 1) throw InvalidArgument("series_order: must be >= 1");
  if (locations.size() != amplitudes.size()) {
    throw InvalidArgument("locations/amplitudes: lengths differ");
  }
  solver.validate();
  if (locations.empty()) instance.validate();
}

Instance build_instance(const StudyConfig& config) {
  config.validate();
  if (config.locations.empty()) return generate_instance(config.instance, config.instance_seed);
  const InstanceConfig& ic = config.instance;
  const GaussianKernel kernel(ic.sigma);
  const double lo = -ic.margin;
  const double hi = 1.0 + ic.margin;
  SamplingDesign design = SamplingDesign::uniform(ic.m, lo, hi);
  if (ic.sampling == SamplingMode::seeded_random) {
    PhiloxStream rng(config.instance_seed, 0x5eed0002);
    std::vector<double> s(ic.m);
    for (double& v : s) v = lo + (hi - lo) * rng.uniform();
    design = SamplingDesign(std::move(s));
  }
  return make_instance(SpikeTrain(config.locations, config.amplitudes), std::move(design), kernel);
}

const char* to_string(TrialStatus status) noexcept {
  switch (status) {
    case TrialStatus::ok:
      return "ok";
    case TrialStatus::bound_exceeded:
      return "bound_exceeded";
    case TrialStatus::basin_escape:
      return "basin_escape";
    case TrialStatus::e_bound_violated:
      return "e_bound_violated";
    case TrialStatus::expansion_mismatch:
      return "expansion_mismatch";
  }
  return "unknown";
}

double track_maximizer(const Vector& lambda, const SamplingDesign& design,
                       const GaussianKernel& kernel, double t_init) {
  const DualCertificate cert(lambda, design, kernel);
  const auto samples = design.samples();
  const auto slope = [&](double t) { return cert.q(t, 1); };

  // Smallest symmetric bracket around t_init with q'(lo) > 0 > q'(hi).
  const double sigma = kernel.sigma();
  double h = 1e-6 * sigma;
  double lo = 0.0;
  double hi = 0.0;
  bool bracketed = false;
  while (h <= sigma) {
    lo = std::max(0.0, t_init - h);
    hi = std::min(1.0, t_init + h);
    if (slope(lo) > 0.0 && slope(hi) < 0.0) {
      bracketed = true;
      break;
    }
    h *= 2.0;
  }
  if (!bracketed) {
    std::ostringstream msg;
    msg << "track_maximizer: no maximizer bracket within sigma of t = " << t_init;
    throw BasinEscape(msg.str());
  }

  double scale = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    scale += std::abs(lambda(static_cast<Eigen::Index>(j)) * kernel.deriv(t_init - samples[j], 1));
  }
  const double f_tol = 1e-13 * std::max(1.0, scale);
  const auto f_df = [&cert](double t) {
    const auto v = cert.q012(t);
    return std::pair<double, double>{v[1], v[2]};
  };
  const double x0 = std::clamp(t_init, lo, hi);
  const RootResult root = safeguarded_newton(f_df, lo, hi, x0, f_tol, 200);
  if (!root.converged) throw BasinEscape("track_maximizer: safeguard budget exhausted");
  if (!(cert.q(root.x, 2) < 0.0)) {
    throw BasinEscape("track_maximizer: converged to a point with q'' >= 0");
  }
  return root.x;
}

Vector implicit_derivative(const Vector& lambda, double t, const SamplingDesign& design,
                           const GaussianKernel& kernel) {
  const DualCertificate cert(lambda, design, kernel);
  const auto v = cert.q012(t);
  if (std::abs(v[1]) > 1e-10) {
    std::ostringstream msg;
    msg << "implicit_derivative: t = " << t << " is not stationary (q' = " << v[1] << ")";
    throw InvalidArgument(msg.str());
  }
  if (std::abs(v[2]) < 1e-14) throw IllPosed("implicit_derivative: degenerate curvature q'' ~ 0");
  const auto samples = design.samples();
  Vector d(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    d(static_cast<Eigen::Index>(j)) = -kernel.deriv(t - samples[j], 1) / v[2];
  }
  return d;
}

DerivativeCheck check_implicit_derivative(const Vector& lambda, double t,
                                          const SamplingDesign& design,
                                          const GaussianKernel& kernel, const Vector& direction,
                                          double step) {
  const Vector grad = implicit_derivative(lambda, t, design, kernel);
  const double plus = track_maximizer(lambda + step * direction, design, kernel, t);
  const double minus = track_maximizer(lambda - step * direction, design, kernel, t);
  DerivativeCheck c;
  c.finite_difference = (plus - minus) / (2.0 * step);
  c.analytic = direction.dot(grad);
  const double denom = std::max(std::abs(c.analytic), 1e-3 * grad.norm());
  c.relative_error = std::abs(c.finite_difference - c.analytic) / denom;
  return c;
}

Vector random_unit_vector(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  if (n == 0) throw InvalidArgument("random_unit_vector: dimension must be >= 1");
  PhiloxStream rng(seed, stream);
  Vector u(static_cast<Eigen::Index>(n));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.normal();
    norm = u.norm();
  } while (norm == 0.0);
  return u / norm;
}

ReferenceSolution solve_reference(const Instance& instance, const ExchangeOptions& options) {
  ReferenceSolution ref{instance, solve(instance.y, instance.design, instance.kernel, options), {}};
  const DualCertificate cert(ref.dual.lambda, instance.design, instance.kernel);
  ref.recovered = extract_spikes(cert, instance.y);
  return ref;
}

namespace {

// Stream ids: study tag in the top byte, then spike, fraction index and trial.
std::uint64_t stream_id(std::uint64_t tag, std::size_t spike, std::size_t fraction,
                        std::size_t trial) {
  return (tag << 56) | (static_cast<std::uint64_t>(spike) << 44) |
         (static_cast<std::uint64_t>(fraction) << 32) | static_cast<std::uint64_t>(trial);
}

constexpr std::uint64_t kLocationTag = 0x1;
constexpr std::uint64_t kAmplitudeTag = 0x2;

double safe_ratio(double measured, double bound) {
  if (bound > 0.0) return measured / bound;
  return measured == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

LocationStudy run_location_study(const ReferenceSolution& ref, const StudyConfig& config) {
  config.validate();
  const Instance& inst = ref.instance;
  const Vector& lambda_star = ref.dual.lambda;
  const DualCertificate cert(lambda_star, inst.design, inst.kernel);
  const std::size_t m = inst.design.size();

  LocationStudy study;
  const auto spikes = ref.recovered.locations();
  for (std::size_t k = 0; k < spikes.size(); ++k) {
    study.reports.push_back(location_report(cert, spikes[k]));
  }
  for (std::size_t k = 0; k < spikes.size(); ++k) {
    const LocationBoundReport& rep = study.reports[k];
    for (std::size_t fi = 0; fi < config.radius_fractions.size(); ++fi) {
      const double fraction = config.radius_fractions[fi];
      for (std::size_t trial = 0; trial < config.trial_count; ++trial) {
        TrialRecord rec;
        rec.trial = trial;
        rec.spike = k;
        rec.fraction = fraction;
        const Vector u = random_unit_vector(m, config.seed, stream_id(kLocationTag, k, fi, trial));
        const Vector lambda = lambda_star + (fraction * rep.delta_lambda) * u;
        const LocationBound lb = location_bound(rep, lambda, lambda_star);
        rec.perturbation_norm = (lambda - lambda_star).norm();
        rec.theoretical_bound = lb.bound;
        rec.admissible = lb.admissible;
        try {
          const double t = track_maximizer(lambda, inst.design, inst.kernel, rep.t_star);
          rec.measured_error = std::abs(t - rep.t_star);
          rec.ratio = safe_ratio(rec.measured_error, rec.theoretical_bound);
          if (rec.ratio > 1.0) {
            rec.status = TrialStatus::bound_exceeded;
            if (rec.admissible) ++study.violations;
          }
        } catch (const BasinEscape&) {
          rec.status = TrialStatus::basin_escape;
          rec.measured_error = std::numeric_limits<double>::quiet_NaN();
          rec.ratio = std::numeric_limits<double>::quiet_NaN();
          if (rec.admissible) ++study.escapes;
        }
        study.records.push_back(rec);
      }
    }
  }
  return study;
}

LocationStudy run_location_study(const StudyConfig& config) {
  return run_location_study(solve_reference(build_instance(config), config.solver), config);
}

AmplitudeStudy run_amplitude_study(const Instance& instance, const StudyConfig& config) {
  config.validate();
  const auto t_star = instance.signal.locations();
  const auto amps = instance.signal.amplitudes();
  if (t_star.empty()) throw InvalidArgument("run_amplitude_study: instance has no spikes");
  const std::size_t kdim = t_star.size();
  const std::size_t m = instance.design.size();
  const Matrix phi = phi_matrix(t_star, instance.design, instance.kernel);
  const Vector y = instance.y.as_vector();
  const Vector a_star = Eigen::Map<const Vector>(amps.data(), static_cast<Eigen::Index>(kdim));

  AmplitudeStudy study;
  study.report = amplitude_report(phi, instance.kernel.sigma(), m);
  const AmplitudeBoundReport& rep = study.report;
  if (!std::isfinite(rep.first_order_coeff) || !(rep.admissible_radius > 0.0)) {
    std::ostringstream msg;
    msg << "run_amplitude_study: bounds are not representable in double precision at sigma = "
        << instance.kernel.sigma() << " (e^{4/sigma^2} = " << std::exp(4.0 / (rep.sigma * rep.sigma))
        << ", admissible radius = " << rep.admissible_radius << ")";
    throw InvalidArgument(msg.str());
  }
  if (rep.admissible_radius * config.radius_fractions.back() <
      64.0 * std::numeric_limits<double>::epsilon()) {
    std::ostringstream msg;
    msg << "run_amplitude_study: admissible radius " << rep.admissible_radius << " at sigma = "
        << instance.kernel.sigma() << " is below the resolution of the spike locations";
    throw InvalidArgument(msg.str());
  }

  for (std::size_t fi = 0; fi < config.radius_fractions.size(); ++fi) {
    const double fraction = config.radius_fractions[fi];
    for (std::size_t trial = 0; trial < config.trial_count; ++trial) {
      TrialRecord rec;
      rec.trial = trial;
      rec.fraction = fraction;
      const Vector u =
          random_unit_vector(kdim, config.seed, stream_id(kAmplitudeTag, 0, fi, trial));
      std::vector<double> t_tilde(kdim);
      for (std::size_t k = 0; k < kdim; ++k) {
        t_tilde[k] = std::clamp(t_star[k] + fraction * rep.admissible_radius *
                                                u(static_cast<Eigen::Index>(k)),
                                0.0, 1.0);
      }
      double sq = 0.0;
      for (std::size_t k = 0; k < kdim; ++k) sq += (t_tilde[k] - t_star[k]) * (t_tilde[k] - t_star[k]);
      const double eps = std::sqrt(sq);
      rec.perturbation_norm = eps;
      rec.admissible = eps <= rep.admissible_radius;

      const Matrix phi_tilde = phi_matrix(t_tilde, instance.design, instance.kernel);
      const Matrix e = phi_tilde - phi;
      const Vector a_tilde = least_squares(phi_tilde, y);
      rec.measured_error = (a_star - a_tilde).norm();
      rec.theoretical_bound = rep.first_order_coeff * a_star.norm() * eps;
      rec.ratio = safe_ratio(rec.measured_error, rec.theoretical_bound);
      rec.e_frobenius = e.norm();
      rec.e_frobenius_bound = E_frobenius_bound(rep, t_star, t_tilde);

      const PerturbationMatrices pm = matrix_perturbation(phi, e, config.series_order);
      rec.neumann_rho = pm.rho;
      const Vector ea = e * a_star;
      const Vector expansion = a_star - pseudoinverse(phi) * ea - pm.F_transpose * ea;
      rec.expansion_error = (a_tilde - expansion).norm();

      if (rec.e_frobenius > rec.e_frobenius_bound) {
        rec.status = TrialStatus::e_bound_violated;
        ++study.e_bound_violations;
      } else if (rec.admissible && rec.ratio > first_order_allowance(eps)) {
        rec.status = TrialStatus::bound_exceeded;
      } else if (pm.rho <= 0.1 && rec.expansion_error > kExpansionTol) {
        rec.status = TrialStatus::expansion_mismatch;
      }
      study.worst_first_order_excess =
          std::max(study.worst_first_order_excess, rec.ratio - first_order_allowance(eps));
      study.worst_expansion_error = std::max(study.worst_expansion_error, rec.expansion_error);
      study.records.push_back(rec);
    }
  }
  return study;
}

AmplitudeStudy run_amplitude_study(const StudyConfig& config) {
  return run_amplitude_study(build_instance(config), config);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("loglog_slope: need at least two (x, y) pairs");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("loglog_slope: values must be positive");
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("loglog_slope: x values are all equal");
  return sxy / sxx;
}

ScalingStudy scaling_study(const std::vector<StudyConfig>& configs) {
  if (configs.empty()) throw InvalidArgument("scaling_study: no configurations");
  ScalingStudy study;
  for (const StudyConfig& config : configs) {
    const LocationStudy loc = run_location_study(config);
    for (std::size_t k = 0; k < loc.reports.size(); ++k) {
      const LocationBoundReport& rep = loc.reports[k];
      ScalingRow row;
      row.M = rep.M;
      row.spike = k;
      row.C_tstar = rep.C_tstar;
      row.C_tstar_m_term = rep.C_tstar_m_term;
      row.delta_lambda = rep.delta_lambda;
      row.q2 = rep.q2;
      row.R = rep.R;
      for (const TrialRecord& r : loc.records) {
        if (r.spike != k || r.status == TrialStatus::basin_escape) continue;
        row.max_ratio = std::max(row.max_ratio, r.ratio);
        if (r.perturbation_norm > 0.0) {
          row.max_error_per_unit =
              std::max(row.max_error_per_unit, r.measured_error / r.perturbation_norm);
        }
      }
      study.rows.push_back(row);
    }
  }

  std::map<std::size_t, std::vector<const ScalingRow*>> by_spike;
  for (const ScalingRow& r : study.rows) by_spike[r.spike].push_back(&r);
  for (const auto& [spike, rows] : by_spike) {
    std::vector<double> m;
    std::vector<double> dl;
    std::vector<double> ct;
    std::vector<double> c;
    for (const ScalingRow* r : rows) {
      m.push_back(static_cast<double>(r->M));
      dl.push_back(r->delta_lambda);
      ct.push_back(r->C_tstar_m_term);
      c.push_back(r->C_tstar);
    }
    const bool distinct = std::any_of(m.begin(), m.end(), [&](double v) { return v != m.front(); });
    if (!distinct) continue;
    study.fits.push_back({spike, loglog_slope(m, dl), loglog_slope(m, ct), loglog_slope(m, c)});
  }
  return study;
}

namespace {

const char* kLocationHeader =
    "trial,fraction,perturbation_norm,measured_error,theoretical_bound,ratio,admissible,status";

void write_common(std::ostream& out, const TrialRecord& r) {
  out << r.trial << ',' << r.fraction << ',' << r.perturbation_norm << ',' << r.measured_error
      << ',' << r.theoretical_bound << ',' << r.ratio << ',' << (r.admissible ? 1 : 0) << ','
      << to_string(r.status);
}

}  // namespace

Matrix scaled_perturbation(const Matrix& phi, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0)) throw InvalidArgument("ratio: must be positive");
  PhiloxStream rng(seed, 3ULL << 56);
  Matrix e(phi.rows(), phi.cols());
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) = rng.normal();
  }
  const double pinv_norm = 1.0 / singular_extremes(phi).min;
  return e * (ratio / (spectral_norm(e) * pinv_norm));
}

NeumannCheck verify_neumann(const Matrix& phi, const Matrix& e, int series_order) {
  if (series_order < 1) throw InvalidArgument("series_order: must be >= 1");
  NeumannCheck out;
  const Matrix direct = pseudoinverse(phi + e);
  const Matrix pinv = pseudoinverse(phi);
  const double perturbed_norm = spectral_norm(phi + e);
  for (int n = 1; n <= series_order; ++n) {
    PerturbationMatrices p = matrix_perturbation(phi, e, n);
    const double err = spectral_norm(direct - (pinv + p.F_transpose));
    const double bound = p.pinv_norm * p.pinv_norm * std::pow(p.rho, n + 1) / (1.0 - p.rho) *
                         perturbed_norm;
    out.errors.push_back(err);
    out.bounds.push_back(bound);
    if (err > bound * (1.0 + kBoundSlack) + 1e-14) out.within_bounds = false;
    if (n == series_order) out.matrices = std::move(p);
  }
  return out;
}

void write_location_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  const auto old = out.precision(17);
  out << kLocationHeader << ",spike\n";
  for (const TrialRecord& r : records) {
    write_common(out, r);
    out << ',' << r.spike << '\n';
  }
  out.precision(old);
}

void write_amplitude_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  const auto old = out.precision(17);
  out << kLocationHeader << ",expansion_error,e_frobenius,e_frobenius_bound,neumann_rho\n";
  for (const TrialRecord& r : records) {
    write_common(out, r);
    out << ',' << r.expansion_error << ',' << r.e_frobenius << ',' << r.e_frobenius_bound << ','
        << r.neumann_rho << '\n';
  }
  out.precision(old);
}

void write_scaling_csv(std::ostream& out, const ScalingStudy& study) {
  const auto old = out.precision(17);
  out << "M,spike,max_ratio,max_error_per_unit,C_tstar,C_tstar_m_term,delta_lambda,q2,R\n";
  for (const ScalingRow& r : study.rows) {
    out << r.M << ',' << r.spike << ',' << r.max_ratio << ',' << r.max_error_per_unit << ','
        << r.C_tstar << ',' << r.C_tstar_m_term << ',' << r.delta_lambda << ','
        << r.q2 << ',' << r.R << '\n';
  }
  out.precision(old);
}

}  // namespace dualsr
