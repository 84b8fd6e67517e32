#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "dualsr/bounds.hpp"
#include "dualsr/errors.hpp"
#include "helpers.hpp"

using namespace dualsr;
using testutil::rel_err;

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("single-kernel certificate constants in long double") {
    for (double sigma : {0.05, 0.08, 0.2}) {
      for (std::size_t m : {5u, 21u, 80u}) {
        const SamplingDesign d = SamplingDesign::uniform(m);
        const std::size_t j = m / 2;
        const DualCertificate cert(Vector::Unit(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)), d,
                                   GaussianKernel(sigma));
        const LocationBoundReport r = location_report(cert, d.samples()[j]);
        const long double s = sigma;
        const long double c = 3.9036L;
        const long double mm = static_cast<long double>(m);
        const long double q2 = 2.0L / (s * s);
        const long double cr = c / s;
        const long double delta0 = s * s * q2 / (std::sqrt(mm) * (4.0L + 2.0L * cr));
        const long double dl = s * std::sqrt(std::exp(1.0L)) * q2 / (2.0L * std::sqrt(2.0L * mm)) * delta0;
        const long double cm = 2.0L * std::sqrt(2.0L * mm) * (2.0L + cr) / (q2 * std::sqrt(std::exp(1.0L)));
        CHECK(rel_err(r.q2, static_cast<double>(-q2)) <= 1e-12);
        CHECK(rel_err(r.R, 1.0 / sigma) <= 1e-15);
        CHECK(rel_err(r.delta0, static_cast<double>(delta0)) <= 1e-12);
        CHECK(rel_err(r.delta_lambda, static_cast<double>(dl)) <= 1e-12);
        CHECK(rel_err(r.C_tstar_m_term, static_cast<double>(cm)) <= 1e-12);
        CHECK(rel_err(r.C_tstar, static_cast<double>((1.0L + cm) / (4.0L + cr))) <= 1e-12);
      }
    }
  }

  TEST_CASE("the two forms of delta_lambda agree") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> lq(-2.0, 6.0);
    std::uniform_real_distribution<double> ln(-2.0, 3.0);
    std::uniform_real_distribution<double> ls(0.01, 1.0);
    std::uniform_int_distribution<std::size_t> lm(1, 10000);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double q2 = std::pow(10.0, lq(gen));
      const double nrm = std::pow(10.0, ln(gen));
      const double sigma = ls(gen);
      const std::size_t m = lm(gen);
      worst = std::max(worst, rel_err(delta_lambda_product(q2, nrm, sigma, m),
                                      delta_lambda_closed(q2, nrm, sigma, m)));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("sample-count scaling of the constants") {
    for (std::size_t m : {10u, 40u, 160u}) {
      const auto a = location_constants(-300.0, 5.0, 0.1, m);
      const auto b = location_constants(-300.0, 5.0, 0.1, 2 * m);
      CHECK(rel_err(b.delta_lambda / a.delta_lambda, 0.5) <= 1e-14);
      CHECK(rel_err(b.delta0 / a.delta0, 1.0 / std::sqrt(2.0)) <= 1e-14);
      CHECK(rel_err(b.C_tstar_m_term / a.C_tstar_m_term, std::sqrt(2.0)) <= 1e-14);
    }
    CHECK_THROWS_AS(location_constants(0.0, 1.0, 0.1, 10), InvalidArgument);
    CHECK_THROWS_AS(location_constants(-1.0, 1.0, 0.1, 0), InvalidArgument);
  }

  TEST_CASE("location report preconditions and bound") {
    const SamplingDesign d = SamplingDesign::uniform(11);
    const DualCertificate cert(Vector::Unit(11, 5), d, GaussianKernel(0.1));
    CHECK_THROWS_AS(location_report(cert, 0.3), InvalidArgument);
    const DualCertificate low(0.5 * Vector::Unit(11, 5), d, GaussianKernel(0.1));
    CHECK_THROWS_AS(location_report(low, 0.5), InvalidArgument);

    const LocationBoundReport r = location_report(cert, 0.5);
    const Vector star = cert.lambda();
    Vector pert = star;
    pert(0) += 0.5 * r.delta_lambda;
    LocationBound b = location_bound(r, pert, star);
    CHECK(b.admissible);
    CHECK(rel_err(b.bound, r.C_tstar * 0.5 * r.delta_lambda) <= 1e-14);
    pert(0) = star(0) + 2.0 * r.delta_lambda;
    b = location_bound(r, pert, star);
    CHECK_FALSE(b.admissible);
    CHECK(location_bound(r, star, star).bound == 0.0);
    CHECK_THROWS_AS(location_bound(r, Vector::Zero(3), star), InvalidArgument);
  }

  TEST_CASE("amplitude report") {
    const AmplitudeBoundReport r = amplitude_report(Matrix::Identity(2, 2), 2.0, 4);
    const double e = std::exp(1.0);
    CHECK(rel_err(r.E_frobenius_coeff, 2.0 * e) <= 1e-15);
    CHECK(rel_err(r.first_order_coeff, 2.0 * e) <= 1e-15);
    CHECK(rel_err(r.admissible_radius, (std::sqrt(2.0) - 1.0) / (2.0 * e)) <= 1e-14);
    CHECK(r.sigma_min == doctest::Approx(1.0));

    const AmplitudeBoundReport tiny = amplitude_report(Matrix::Identity(2, 2), 0.05, 4);
    CHECK(std::isinf(tiny.E_frobenius_coeff));
    CHECK(tiny.admissible_radius == 0.0);

    Matrix rank1(3, 2);
    rank1 << 1, 2, 1, 2, 1, 2;
    CHECK_THROWS_AS(amplitude_report(rank1, 0.5, 3), IllPosed);
    CHECK_THROWS_AS(amplitude_report(Matrix::Identity(2, 2), -1.0, 2), InvalidArgument);

    const std::vector<double> t{0.2, 0.6};
    CHECK(E_frobenius_bound(r, t, t) == 0.0);
    CHECK(rel_err(E_frobenius_bound(r, t, std::vector<double>{0.23, 0.64}), 2.0 * e * 0.05) <= 1e-14);
  }

  TEST_CASE("the E bound dominates the measured kernel perturbation") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> us(0.05, 0.5);
    std::uniform_real_distribution<double> ut(0.1, 0.9);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    int checked = 0;
    for (int pair = 0; pair < 1000; ++pair) {
      const double sigma = us(gen);
      const std::size_t m = 20;
      const SamplingDesign d = SamplingDesign::uniform(m);
      const GaussianKernel k(sigma);
      const std::vector<double> t{ut(gen) * 0.5, 0.5 + ut(gen) * 0.5};
      const double scale = 1e-3 * sigma;
      const std::vector<double> tt{t[0] + scale * ud(gen), t[1] + scale * ud(gen)};
      const Matrix e = phi_matrix(tt, d, k) - phi_matrix(t, d, k);
      const AmplitudeBoundReport r = amplitude_report(Matrix::Identity(2, 2), sigma, m);
      const double bound = E_frobenius_bound(r, t, tt);
      CHECK(e.norm() <= bound * (1.0 + 1e-12));
      ++checked;
    }
    CHECK(checked == 1000);
  }

  TEST_CASE("series against a literal long-double evaluation") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> nd;
    const Instance inst = testutil::desk_instance();
    const Matrix phi = phi_matrix(inst.signal.locations(), inst.design, inst.kernel);
    Matrix e(phi.rows(), phi.cols());
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = nd(gen);
    e *= 0.05 * singular_extremes(phi).min / spectral_norm(e);
    const int n = 12;
    const PerturbationMatrices p = matrix_perturbation(phi, e, n);

    const LMatrix lphi = phi.cast<long double>();
    const LMatrix le = e.cast<long double>();
    const LMatrix g = (lphi.transpose() * lphi).inverse();
    const LMatrix delta = le.transpose() * lphi + lphi.transpose() * le + le.transpose() * le;
    LMatrix s = LMatrix::Zero(g.rows(), g.cols());
    for (int k = 1; k <= n; ++k) {
      LMatrix power = LMatrix::Identity(g.rows(), g.cols());
      for (int i = 0; i < k; ++i) power = power * (delta * g);
      s += ((k % 2) ? -1.0L : 1.0L) * g * power;
    }
    CHECK((p.S_Phi - s.cast<double>()).norm() <= 1e-12 * std::max(1.0, p.S_Phi.norm()));
    CHECK((p.Delta - delta.cast<double>()).norm() <= 1e-13 * delta.cast<double>().norm());
    CHECK(spectral_norm(p.Delta) <= p.D * (1.0 + 1e-12));
    CHECK(p.rho < 1.0);
    CHECK(rel_err(p.tail_estimate, std::pow(p.rho, n + 1) / (1.0 - p.rho)) <= 1e-13);
    // The series converges to inv(Phi~^T Phi~) - G.
    const LMatrix pt = lphi + le;
    const LMatrix exact = (pt.transpose() * pt).inverse() - g;
    CHECK((p.S_Phi - exact.cast<double>()).norm() <= 2.0 * p.S_Phi_bound * p.tail_estimate + 1e-12);
  }

  TEST_CASE("zero perturbation and divergence") {
    const Matrix phi = Matrix::Identity(3, 2) + Matrix::Constant(3, 2, 0.1);
    const PerturbationMatrices p = matrix_perturbation(phi, Matrix::Zero(3, 2), 5);
    CHECK(p.D == 0.0);
    CHECK(p.rho == 0.0);
    CHECK(p.S_Phi.norm() == 0.0);
    CHECK((p.F_transpose).norm() == 0.0);

    try {
      (void)matrix_perturbation(phi, Matrix::Constant(3, 2, 1.0), 5);
      FAIL("expected divergence");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("rho") != std::string::npos);
    }
    CHECK_THROWS_AS(matrix_perturbation(phi, Matrix::Zero(2, 2), 5), InvalidArgument);
    CHECK_THROWS_AS(matrix_perturbation(phi, Matrix::Zero(3, 2), 0), InvalidArgument);
  }
}
