#include "dualsr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dualsr/errors.hpp"
#include "dualsr/rng.hpp"

namespace dualsr {

SpikeTrain::SpikeTrain(std::vector<double> locations, std::vector<double> amplitudes)
    : locations_(std::move(locations)), amplitudes_(std::move(amplitudes)) {
  if (locations_.size() != amplitudes_.size()) {
    throw InvalidArgument("SpikeTrain: locations and amplitudes differ in length");
  }
  for (std::size_t k = 0; k < locations_.size(); ++k) {
    const double t = locations_[k];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw InvalidArgument("SpikeTrain: location " + std::to_string(t) + " outside [0, 1]");
    }
    if (k > 0 && !(t > locations_[k - 1])) {
      throw InvalidArgument("SpikeTrain: locations must be strictly increasing");
    }
    if (!(amplitudes_[k] > 0.0) || !std::isfinite(amplitudes_[k])) {
      throw InvalidArgument("SpikeTrain: amplitudes must be positive and finite");
    }
  }
}

double SpikeTrain::total_mass() const noexcept {
  return std::accumulate(amplitudes_.begin(), amplitudes_.end(), 0.0);
}

SamplingDesign::SamplingDesign(std::vector<double> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw InvalidArgument("SamplingDesign: need at least one sample");
  for (double s : samples_) {
    if (!std::isfinite(s)) throw InvalidArgument("SamplingDesign: non-finite sample");
  }
  std::sort(samples_.begin(), samples_.end());
  if (std::adjacent_find(samples_.begin(), samples_.end()) != samples_.end()) {
    throw InvalidArgument("SamplingDesign: duplicate sample points");
  }
}

SamplingDesign SamplingDesign::uniform(std::size_t m, double lo, double hi) {
  if (m == 0) throw InvalidArgument("SamplingDesign::uniform: m must be >= 1");
  if (!(hi > lo) && m > 1) throw InvalidArgument("SamplingDesign::uniform: empty interval");
  std::vector<double> s(m);
  if (m == 1) {
    s[0] = 0.5 * (lo + hi);
  } else {
    const double h = (hi - lo) / static_cast<double>(m - 1);
    for (std::size_t j = 0; j < m; ++j) s[j] = lo + h * static_cast<double>(j);
    s[m - 1] = hi;
  }
  return SamplingDesign(std::move(s));
}

Measurements forward(const SpikeTrain& signal, const SamplingDesign& design,
                     const GaussianKernel& kernel) {
  const auto samples = design.samples();
  const auto t = signal.locations();
  const auto a = signal.amplitudes();
  Measurements out{std::vector<double>(samples.size(), 0.0)};
  for (std::size_t j = 0; j < samples.size(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) acc += a[k] * kernel.eval(t[k] - samples[j]);
    out.y[j] = acc;
  }
  return out;
}

Matrix phi_matrix(std::span<const double> locations, const SamplingDesign& design,
                  const GaussianKernel& kernel) {
  if (locations.empty()) throw InvalidArgument("phi_matrix: locations must be nonempty");
  const auto s = design.samples();
  Matrix phi(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(locations.size()));
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    for (Eigen::Index j = 0; j < phi.cols(); ++j) {
      phi(i, j) = kernel.eval(locations[static_cast<std::size_t>(j)] - s[static_cast<std::size_t>(i)]);
    }
  }
  return phi;
}

Matrix phi_derivative_matrix(std::span<const double> locations, const SamplingDesign& design,
                             const GaussianKernel& kernel) {
  if (locations.empty()) throw InvalidArgument("phi_derivative_matrix: locations must be nonempty");
  const auto s = design.samples();
  Matrix d(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(locations.size()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      d(i, j) = kernel.derivative_unchecked(
          locations[static_cast<std::size_t>(j)] - s[static_cast<std::size_t>(i)], 1);
    }
  }
  return d;
}

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::uniform_grid ? "uniform" : "random";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "uniform") return SamplingMode::uniform_grid;
  if (name == "random") return SamplingMode::seeded_random;
  throw InvalidArgument("sampling mode must be 'uniform' or 'random', got '" + name + "'");
}

void InstanceConfig::validate() const {
  if (m == 0) throw InvalidArgument("m: need at least one sample");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma: must be positive");
  if (!(amp_min > 0.0) || !(amp_max >= amp_min) || !std::isfinite(amp_max)) {
    throw InvalidArgument("amp_min/amp_max: need 0 < amp_min <= amp_max");
  }
  if (!(min_spacing >= 0.0)) throw InvalidArgument("spacing: must be non-negative");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw InvalidArgument("margin: must be non-negative");
  if (!(edge >= 0.0 && edge < 0.5)) throw InvalidArgument("edge: must lie in [0, 0.5)");
  if (k > 1) {
    const double span = 1.0 - 2.0 * edge;
    if (static_cast<double>(k - 1) * min_spacing > span) {
      std::ostringstream msg;
      msg << "spacing: " << k << " spikes with spacing " << min_spacing
          << " do not fit in [" << edge << ", " << 1.0 - edge << "]";
      throw InvalidArgument(msg.str());
    }
  }
}

Instance make_instance(SpikeTrain signal, SamplingDesign design, GaussianKernel kernel) {
  Measurements y = forward(signal, design, kernel);
  return Instance{kernel, std::move(signal), std::move(design), std::move(y)};
}

Instance generate_instance(const InstanceConfig& config, std::uint64_t seed) {
  config.validate();
  PhiloxStream rng(seed, 0x5eed'0001ull);

  // Spacing-constrained uniform draw: sort K uniforms on the slack interval,
  // then push the i-th point right by i * spacing.
  std::vector<double> t(config.k);
  const double span = 1.0 - 2.0 * config.edge;
  const double slack = span - static_cast<double>(config.k > 0 ? config.k - 1 : 0) * config.min_spacing;
  for (auto& v : t) v = rng.uniform() * slack;
  std::sort(t.begin(), t.end());
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] += config.edge + static_cast<double>(i) * config.min_spacing;
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    // Equal draws with zero spacing would break strict ordering.
    if (!(t[i] > t[i - 1])) t[i] = std::nextafter(t[i - 1], 2.0);
  }

  std::vector<double> a(config.k);
  for (auto& v : a) v = config.amp_min + (config.amp_max - config.amp_min) * rng.uniform();

  const double lo = -config.margin;
  const double hi = 1.0 + config.margin;
  std::vector<double> s;
  if (config.sampling == SamplingMode::uniform_grid) {
    const SamplingDesign grid = SamplingDesign::uniform(config.m, lo, hi);
    s.assign(grid.samples().begin(), grid.samples().end());
  } else {
    s.reserve(config.m);
    while (s.size() < config.m) {
      const double v = lo + (hi - lo) * rng.uniform();
      if (std::find(s.begin(), s.end(), v) == s.end()) s.push_back(v);
    }
  }

  return make_instance(SpikeTrain(std::move(t), std::move(a)), SamplingDesign(std::move(s)),
                       GaussianKernel(config.sigma));
}

}  // namespace dualsr
