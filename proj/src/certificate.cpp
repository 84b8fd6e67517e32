#include "dualsr/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualsr/errors.hpp"
#include "dualsr/numerics.hpp"

namespace dualsr {

DualCertificate::DualCertificate(Vector lambda, SamplingDesign design, GaussianKernel kernel)
    : lambda_(std::move(lambda)), design_(std::move(design)), kernel_(kernel) {
  if (static_cast<std::size_t>(lambda_.size()) != design_.size()) {
    throw InvalidArgument("DualCertificate: lambda length differs from the number of samples");
  }
  if (!lambda_.allFinite()) throw InvalidArgument("DualCertificate: non-finite lambda");
}

double DualCertificate::q(double s, int order) const noexcept {
  const auto samples = design_.samples();
  double acc = 0.0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double w = lambda_(static_cast<Eigen::Index>(j));
    if (w != 0.0) acc += w * kernel_.derivative_unchecked(s - samples[j], order);
  }
  return acc;
}

std::array<double, 3> DualCertificate::q012(double s) const noexcept {
  const auto samples = design_.samples();
  const double inv_s2 = 1.0 / (kernel_.sigma() * kernel_.sigma());
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double w = lambda_(static_cast<Eigen::Index>(j));
    if (w == 0.0) continue;
    const double u = s - samples[j];
    const double g = w * std::exp(-u * u * inv_s2);
    out[0] += g;
    out[1] += -2.0 * u * inv_s2 * g;
    out[2] += (4.0 * u * u * inv_s2 * inv_s2 - 2.0 * inv_s2) * g;
  }
  return out;
}

double q_eval(const DualCertificate& cert, double s, int order) {
  if (order < 0 || order > 2) {
    throw InvalidArgument("q_eval: order must be 0, 1 or 2, got " + std::to_string(order));
  }
  return cert.q(s, order);
}

std::optional<Maximizer> polish_maximizer(const DualCertificate& cert, double lo, double hi) {
  const auto f_df = [&cert](double x) {
    const auto v = cert.q012(x);
    return std::pair<double, double>{v[1], v[2]};
  };
  const RootResult root = safeguarded_newton(f_df, lo, hi, 0.5 * (lo + hi), kStationarityTol, 100);
  if (!root.converged) return std::nullopt;
  const auto v = cert.q012(root.x);
  if (!(v[2] < 0.0)) return std::nullopt;
  return Maximizer{root.x, v[0], v[1], v[2], false};
}

namespace {

std::vector<double> uniform_grid(std::size_t n) {
  n = std::max<std::size_t>(n, 2);
  std::vector<double> x(n);
  const double h = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = h * static_cast<double>(i);
  x[n - 1] = 1.0;
  return x;
}

Maximizer make_point(const DualCertificate& cert, double x, bool boundary) {
  const auto v = cert.q012(x);
  return Maximizer{x, v[0], v[1], v[2], boundary};
}

}  // namespace

std::vector<Maximizer> local_maximizers(const DualCertificate& cert, std::size_t seed_grid_size) {
  if (cert.is_zero()) throw InvalidArgument("local_maximizers: lambda is identically zero");
  const std::vector<double> grid = uniform_grid(seed_grid_size);
  std::vector<double> slope(grid.size());
  // Same evaluation path as the polish step, so bracket signs agree.
  for (std::size_t i = 0; i < grid.size(); ++i) slope[i] = cert.q012(grid[i])[1];

  std::vector<Maximizer> found;
  // One-sided maxima at the ends of I.
  if (slope.front() < 0.0) found.push_back(make_point(cert, 0.0, true));
  if (slope.back() > 0.0) found.push_back(make_point(cert, 1.0, true));
  if (slope.front() == 0.0 && cert.q(0.0, 2) < 0.0) found.push_back(make_point(cert, 0.0, false));
  if (slope.back() == 0.0 && cert.q(1.0, 2) < 0.0) found.push_back(make_point(cert, 1.0, false));

  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (slope[i] > 0.0 && slope[i + 1] <= 0.0) {
      if (auto m = polish_maximizer(cert, grid[i], grid[i + 1])) found.push_back(*m);
    }
  }

  std::sort(found.begin(), found.end(),
            [](const Maximizer& a, const Maximizer& b) { return a.location < b.location; });
  std::vector<Maximizer> merged;
  for (const Maximizer& m : found) {
    if (!merged.empty() && std::abs(m.location - merged.back().location) <= kMergeTol) {
      if (m.q_value > merged.back().q_value) merged.back() = m;
      continue;
    }
    merged.push_back(m);
  }
  return merged;
}

CertificateReport verify_conditions(const DualCertificate& cert, double spike_tol,
                                    double strict_tol, std::size_t grid_size) {
  if (!(spike_tol >= 0.0)) throw InvalidArgument("verify_conditions: spike_tol must be >= 0");
  CertificateReport report;
  report.grid_size = std::max<std::size_t>(grid_size, 2);
  report.spike_tol = spike_tol;
  report.strict_tol = strict_tol;
  report.neighborhood_radius = cert.kernel().sigma() / 4.0;

  if (cert.is_zero()) {
    report.sup_q = 0.0;
    report.strict_margin = 1.0;
    report.valid = report.strict_margin > strict_tol;
    return report;
  }

  report.maximizers = local_maximizers(cert, report.grid_size);
  for (const Maximizer& m : report.maximizers) {
    if (m.q_value >= 1.0 - spike_tol) {
      report.spikes.push_back(m);
      report.eq_violation = std::max(report.eq_violation, std::abs(m.q_value - 1.0));
    }
  }

  const double r = report.neighborhood_radius;
  const auto outside = [&](double x) {
    return std::none_of(report.spikes.begin(), report.spikes.end(),
                        [&](const Maximizer& s) { return std::abs(x - s.location) < r; });
  };

  double sup_all = -std::numeric_limits<double>::infinity();
  double sup_out = -std::numeric_limits<double>::infinity();
  const std::vector<double> grid = uniform_grid(report.grid_size);
  for (double x : grid) {
    const double v = cert.q(x, 0);
    sup_all = std::max(sup_all, v);
    if (outside(x)) sup_out = std::max(sup_out, v);
  }
  for (const Maximizer& m : report.maximizers) {
    sup_all = std::max(sup_all, m.q_value);
    if (outside(m.location)) sup_out = std::max(sup_out, m.q_value);
  }
  // Closed complement: include the edges of each neighbourhood.
  for (const Maximizer& s : report.spikes) {
    for (double x : {s.location - r, s.location + r}) {
      if (x >= 0.0 && x <= 1.0) sup_out = std::max(sup_out, cert.q(x, 0));
    }
  }
  report.sup_q = sup_all;
  // Neighbourhoods covering all of I leave nothing to certify.
  report.strict_margin = std::isfinite(sup_out) ? 1.0 - sup_out : 1.0;
  report.valid = report.eq_violation <= spike_tol && report.strict_margin > strict_tol;
  return report;
}

SpikeTrain extract_spikes(const DualCertificate& cert, const Measurements& y, double spike_tol) {
  if (y.size() != cert.design().size()) {
    throw InvalidArgument("extract_spikes: measurement length differs from the design");
  }
  const CertificateReport report = verify_conditions(cert, spike_tol);
  if (!report.valid) {
    throw InvalidArgument("extract_spikes: certificate does not satisfy the optimality conditions");
  }
  if (report.spikes.empty()) {
    const bool zero = std::all_of(y.y.begin(), y.y.end(), [](double v) { return v == 0.0; });
    if (!zero) throw IllPosed("extract_spikes: no spike candidates but measurements are nonzero");
    return {};
  }
  std::vector<double> locations;
  locations.reserve(report.spikes.size());
  for (const Maximizer& m : report.spikes) locations.push_back(std::clamp(m.location, 0.0, 1.0));

  const Matrix phi = phi_matrix(locations, cert.design(), cert.kernel());
  const Vector a = least_squares(phi, y.as_vector());
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!(a(k) > 0.0)) {
      throw IllPosed("extract_spikes: non-positive amplitude " + std::to_string(a(k)) +
                     " at t = " + std::to_string(locations[static_cast<std::size_t>(k)]) +
                     " (spurious maximizer admitted at spike_tol)");
    }
  }
  return SpikeTrain(std::move(locations), std::vector<double>(a.data(), a.data() + a.size()));
}

}  // namespace dualsr
