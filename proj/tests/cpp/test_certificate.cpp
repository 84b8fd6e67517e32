#include <doctest.h>

#include <cmath>
#include <random>

#include "dualsr/certificate.hpp"
#include "dualsr/errors.hpp"
#include "helpers.hpp"

using namespace dualsr;

namespace {

/// Golden-section maximization of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Vector unit(std::size_t m, std::size_t j) { return Vector::Unit(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)); }

}  // namespace

TEST_SUITE("certificate") {
  TEST_CASE("q evaluation") {
    const SamplingDesign d = SamplingDesign::uniform(11);
    const GaussianKernel k(0.1);
    const DualCertificate zero(Vector::Zero(11), d, k);
    for (int order = 0; order <= 2; ++order) CHECK(q_eval(zero, 0.37, order) == 0.0);

    const DualCertificate ej(unit(11, 4), d, k);
    CHECK(q_eval(ej, 0.4, 0) == 1.0);
    CHECK(q_eval(ej, 0.47, 0) == k.eval(0.47 - 0.4));

    const DualCertificate pair(Vector::Constant(2, 0.5), SamplingDesign({0.4, 0.6}), GaussianKernel(0.3));
    CHECK(q_eval(pair, 0.5, 0) == doctest::Approx(std::exp(-1.0 / 9.0)).epsilon(1e-15));
    CHECK(q_eval(pair, 0.5, 0) == doctest::Approx(0.8948393).epsilon(1e-7));
    CHECK_THROWS_AS(q_eval(pair, 0.5, 3), InvalidArgument);
  }

  TEST_CASE("q is linear in lambda and its derivatives match finite differences") {
    std::mt19937_64 gen(21);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const SamplingDesign d = SamplingDesign::uniform(25);
    const GaussianKernel k(0.09);
    for (int rep = 0; rep < 200; ++rep) {
      Vector l1(25);
      Vector l2(25);
      for (int j = 0; j < 25; ++j) {
        l1(j) = nd(gen);
        l2(j) = nd(gen);
      }
      const double al = nd(gen);
      const double be = nd(gen);
      const double s = ud(gen);
      const DualCertificate c1(l1, d, k);
      const DualCertificate c2(l2, d, k);
      const DualCertificate cc(al * l1 + be * l2, d, k);
      const double scale = std::abs(al) * l1.cwiseAbs().sum() + std::abs(be) * l2.cwiseAbs().sum();
      CHECK(std::abs(cc.q(s) - al * c1.q(s) - be * c2.q(s)) <= 1e-13 * std::max(1.0, scale));

      const double h = 1e-6;
      const double fd1 = (c1.q(s + h) - c1.q(s - h)) / (2 * h);
      const double fd2 = (c1.q(s + h) - 2 * c1.q(s) + c1.q(s - h)) / (h * h);
      const double h2 = 1e-5;
      const double fd2b = (c1.q(s + h2, 1) - c1.q(s - h2, 1)) / (2 * h2);
      const double s1 = std::max(std::abs(c1.q(s, 1)), 1e-3 * l1.cwiseAbs().sum() / 0.09);
      const double s2 = std::max(std::abs(c1.q(s, 2)), 1e-3 * l1.cwiseAbs().sum() / (0.09 * 0.09));
      CHECK(std::abs(fd1 - c1.q(s, 1)) / s1 <= 1e-6);
      CHECK(std::abs(fd2b - c1.q(s, 2)) / s2 <= 1e-6);
      CHECK(std::abs(fd2 - c1.q(s, 2)) / s2 <= 1e-2);  // second differences lose half the digits
      const auto three = c1.q012(s);
      CHECK(three[0] == doctest::Approx(c1.q(s)).epsilon(1e-13));
    }
  }

  TEST_CASE("maximizers of simple certificates") {
    const double sigma = 0.1;
    const SamplingDesign d = SamplingDesign::uniform(11);
    const DualCertificate ej(unit(11, 3), d, GaussianKernel(sigma));
    const auto m = local_maximizers(ej, 2000);
    REQUIRE(m.size() == 1);
    CHECK(m[0].location == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(m[0].q_value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m[0].q_second == doctest::Approx(-2.0 / (sigma * sigma)).epsilon(1e-9));

    const DualCertificate sym(Vector::Constant(2, 0.6), SamplingDesign({0.47, 0.53}), GaussianKernel(0.2));
    const auto ms = local_maximizers(sym, 2000);
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].location == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ms[0].q_second < 0.0);

    CHECK_THROWS_AS(local_maximizers(DualCertificate(Vector::Zero(11), d, GaussianKernel(sigma)), 100),
                    InvalidArgument);

    // A decreasing certificate peaks at the left boundary.
    const DualCertificate edge(unit(11, 0), SamplingDesign::uniform(11, -0.2, 1.0), GaussianKernel(0.1));
    const auto mb = local_maximizers(edge, 2000);
    REQUIRE(!mb.empty());
    CHECK(mb.front().location == 0.0);
    CHECK(mb.front().boundary);
  }

  TEST_CASE("desk certificate: maximizers, conditions and extraction") {
    const auto& ref = testutil::desk_reference();
    const Instance& inst = ref.instance;
    const DualCertificate cert(ref.dual.lambda, inst.design, inst.kernel);
    const auto maxima = local_maximizers(cert, 100000);
    std::vector<Maximizer> peaks;
    for (const auto& m : maxima) {
      CHECK(m.q_second <= 0.0);
      if (!m.boundary) CHECK(std::abs(m.q_first) <= kStationarityTol);
      if (m.q_value >= 1.0 - 1e-6) peaks.push_back(m);
    }
    REQUIRE(peaks.size() == 3);
    const double truth[3] = {0.25, 0.5, 0.8};
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(peaks[static_cast<std::size_t>(i)].location - truth[i]) <= 1e-6);
      CHECK(std::abs(peaks[static_cast<std::size_t>(i)].q_value - 1.0) <= 1e-8);
    }
    // Independent oracle: bracket each maximizer on a 1e6-point grid, then golden section.
    const int n = 1000000;
    for (const auto& m : maxima) {
      if (m.boundary) continue;
      const int i = static_cast<int>(std::lround(m.location * (n - 1)));
      const double lo = std::max(0.0, static_cast<double>(i - 2) / (n - 1));
      const double hi = std::min(1.0, static_cast<double>(i + 2) / (n - 1));
      const double g = golden_max([&](double s) { return cert.q(s); }, lo, hi);
      // Golden section resolves a quadratic peak only to ~sqrt(eps / |q''|).
      CHECK(std::abs(g - m.location) <= 1e-9 + std::sqrt(4e-16 / std::abs(m.q_second)));
    }

    const CertificateReport rep = verify_conditions(cert);
    CHECK(rep.valid);
    CHECK(rep.eq_violation <= 1e-8);
    CHECK(rep.strict_margin > 0.0);
    CHECK(rep.spikes.size() == 3);

    const SpikeTrain rec = extract_spikes(cert, inst.y);
    REQUIRE(rec.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(rec.locations()[i] - inst.signal.locations()[i]) <= 1e-6);
      CHECK(std::abs(rec.amplitudes()[i] - inst.signal.amplitudes()[i]) <= 1e-8);
    }
    const Measurements back = forward(rec, inst.design, inst.kernel);
    CHECK((back.as_vector() - inst.y.as_vector()).norm() <= 1e-7);
  }

  TEST_CASE("verify conditions on single kernels") {
    const SamplingDesign d = SamplingDesign::uniform(21);
    const GaussianKernel k(0.08);
    const CertificateReport ok = verify_conditions(DualCertificate(unit(21, 10), d, k));
    CHECK(ok.valid);
    REQUIRE(ok.spikes.size() == 1);
    CHECK(ok.spikes[0].location == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ok.eq_violation == doctest::Approx(0.0).epsilon(1e-15));

    const CertificateReport bad = verify_conditions(DualCertificate(1.1 * unit(21, 10), d, k));
    CHECK_FALSE(bad.valid);
  }

  TEST_CASE("extraction edge cases") {
    const SamplingDesign d = SamplingDesign::uniform(21);
    const GaussianKernel k(0.08);
    const Measurements y = forward(SpikeTrain({0.5}, {2.0}), d, k);
    const SpikeTrain one = extract_spikes(DualCertificate(unit(21, 10), d, k), y);
    REQUIRE(one.size() == 1);
    CHECK(one.locations()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(one.amplitudes()[0] == doctest::Approx(2.0).epsilon(1e-12));

    // No candidates at all: the certificate never reaches one and y vanishes.
    const Measurements zero{std::vector<double>(21, 0.0)};
    const SpikeTrain none = extract_spikes(DualCertificate(0.5 * unit(21, 10), d, k), zero);
    CHECK(none.empty());
    CHECK_THROWS_AS(extract_spikes(DualCertificate(1.1 * unit(21, 10), d, k), y), InvalidArgument);
  }
}
