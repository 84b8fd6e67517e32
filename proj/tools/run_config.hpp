#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualsr/certificate.hpp"
#include "dualsr/dual_solver.hpp"
#include "dualsr/lab.hpp"
#include "dualsr/model.hpp"

namespace CLI {
class App;
class Option;
}  // namespace CLI

namespace dualsr::cli {

/// Every setting of a run under one flat key. JSON config files use the keys
/// verbatim; command-line flags use the same names with dashes.
struct RunConfig {
  // instance
  std::size_t k = 3;
  std::size_t m = 30;
  double sigma = 0.08;
  double min_spacing = 0.2;
  double amp_min = 0.5;
  double amp_max = 2.0;
  std::string sampling = "uniform";
  double margin = 0.0;
  double edge = 0.05;
  std::vector<double> locations;
  std::vector<double> amplitudes;
  std::uint64_t seed = 7;

  // solver
  std::size_t initial_grid_size = 64;
  double feasibility_tol = 1e-9;
  int max_outer_iterations = 200;
  bool refinement = true;
  bool local_reduction = true;
  double norm_penalty = 1e-8;
  double box = 0.0;
  std::size_t verification_grid = 100001;

  // certificate
  double spike_tol = 1e-6;
  double strict_tol = 0.0;
  std::size_t certificate_grid = kDefaultVerificationGrid;

  // studies
  std::size_t trials = 1000;
  std::vector<double> fractions{0.5};
  std::uint64_t study_seed = 1;
  int series_order = 30;
  std::vector<std::size_t> m_values{10, 20, 40, 80};
  double neumann_ratio = 0.1;

  // files
  std::string out = ".";
  std::string instance_file;
  std::string dual_file;
  bool emit_plot_data = false;

  /// Throws InvalidArgument naming the offending key.
  void validate() const;

  InstanceConfig instance_config() const;
  ExchangeOptions solver_options() const;
  StudyConfig study_config() const;

  nlohmann::json to_json() const;
  /// Starts from the defaults; unknown keys and ill-typed values throw InvalidArgument.
  static RunConfig from_json(const nlohmann::json& j);
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// FNV-1a of the canonical (sorted-key, compact) JSON form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Flags bound to `flags`; after parsing, apply_overrides copies every flag the
/// user actually passed onto `target`.
class FlagSet {
 public:
  void bind(CLI::App& app, RunConfig& flags);
  void apply_overrides(RunConfig& target, const RunConfig& flags) const;

 private:
  struct Binding {
    CLI::Option* option;
    std::function<void(RunConfig&, const RunConfig&)> copy;
  };
  std::vector<Binding> bindings_;
};

}  // namespace dualsr::cli
