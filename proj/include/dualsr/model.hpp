#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualsr/kernel.hpp"

namespace dualsr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Discrete non-negative measure sum_k a_k delta_{t_k} on [0, 1].
///
/// Locations are strictly increasing and lie in [0, 1]; amplitudes are
/// strictly positive. Spikes exactly at 0 or 1 are allowed.
class SpikeTrain {
 public:
  SpikeTrain() = default;
  SpikeTrain(std::vector<double> locations, std::vector<double> amplitudes);

  std::span<const double> locations() const noexcept { return locations_; }
  std::span<const double> amplitudes() const noexcept { return amplitudes_; }
  std::size_t size() const noexcept { return locations_.size(); }
  bool empty() const noexcept { return locations_.empty(); }
  double total_mass() const noexcept;

 private:
  std::vector<double> locations_;
  std::vector<double> amplitudes_;
};

/// Sample positions s_1 < ... < s_M. Input is sorted on construction;
/// duplicates are rejected.
class SamplingDesign {
 public:
  explicit SamplingDesign(std::vector<double> samples);

  /// M equispaced points on [lo, hi] (both ends included; M = 1 gives the midpoint).
  static SamplingDesign uniform(std::size_t m, double lo = 0.0, double hi = 1.0);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  std::vector<double> samples_;
};

/// y_j = sum_k a_k phi(t_k - s_j).
struct Measurements {
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
  Vector as_vector() const { return Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())); }
};

Measurements forward(const SpikeTrain& signal, const SamplingDesign& design,
                     const GaussianKernel& kernel);

/// M x K matrix with entries phi(t_j - s_i). Throws on empty locations.
Matrix phi_matrix(std::span<const double> locations, const SamplingDesign& design,
                  const GaussianKernel& kernel);

/// M x K matrix with entries phi'(t_j - s_i) (derivative in t_j).
Matrix phi_derivative_matrix(std::span<const double> locations, const SamplingDesign& design,
                             const GaussianKernel& kernel);

enum class SamplingMode { uniform_grid, seeded_random };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

struct InstanceConfig {
  std::size_t k = 3;
  std::size_t m = 30;
  double sigma = 0.08;
  double min_spacing = 0.2;
  double amp_min = 0.5;
  double amp_max = 2.0;
  SamplingMode sampling = SamplingMode::uniform_grid;
  /// Samples live in [-margin, 1 + margin].
  double margin = 0.0;
  /// Locations are drawn from [edge, 1 - edge].
  double edge = 0.05;

  void validate() const;
};

struct Instance {
  GaussianKernel kernel{1.0};
  SpikeTrain signal;
  SamplingDesign design{std::vector<double>{0.0}};
  Measurements y;
};

/// Builds the exact forward image of a given signal.
Instance make_instance(SpikeTrain signal, SamplingDesign design, GaussianKernel kernel);

/// Deterministic random instance. Throws InvalidArgument if K spikes with the
/// requested spacing cannot fit in [edge, 1 - edge].
Instance generate_instance(const InstanceConfig& config, std::uint64_t seed);

}  // namespace dualsr
