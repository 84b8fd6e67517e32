#include "run_config.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <type_traits>

#include <CLI11.hpp>

#include "dualsr/errors.hpp"
#include "dualsr/io.hpp"

namespace dualsr::cli {
namespace {

using nlohmann::json;

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class F>
void for_each_field(F&& f) {
  f("k", &RunConfig::k, "number of spikes when generating");
  f("m", &RunConfig::m, "number of samples");
  f("sigma", &RunConfig::sigma, "Gaussian kernel width");
  f("min_spacing", &RunConfig::min_spacing, "minimum spike separation when generating");
  f("amp_min", &RunConfig::amp_min, "smallest generated amplitude");
  f("amp_max", &RunConfig::amp_max, "largest generated amplitude");
  f("sampling", &RunConfig::sampling, "uniform or random");
  f("margin", &RunConfig::margin, "samples cover [-margin, 1 + margin]");
  f("edge", &RunConfig::edge, "generated spikes lie in [edge, 1 - edge]");
  f("locations", &RunConfig::locations, "explicit spike locations (replace generation)");
  f("amplitudes", &RunConfig::amplitudes, "explicit spike amplitudes");
  f("seed", &RunConfig::seed, "instance generation seed");
  f("initial_grid_size", &RunConfig::initial_grid_size, "initial exchange set size");
  f("feasibility_tol", &RunConfig::feasibility_tol, "exchange feasibility tolerance on q - 1");
  f("max_outer_iterations", &RunConfig::max_outer_iterations, "exchange iteration budget");
  f("refinement", &RunConfig::refinement, "Newton-polish violation points");
  f("local_reduction", &RunConfig::local_reduction, "final local reduction of the dual");
  f("norm_penalty", &RunConfig::norm_penalty, "l1 weight in the restricted LPs, relative to max|y|");
  f("box", &RunConfig::box, "variable box of the restricted LPs (0 selects 1e6/sigma)");
  f("verification_grid", &RunConfig::verification_grid, "dense feasibility grid of the solver");
  f("spike_tol", &RunConfig::spike_tol, "tolerance on q(t) = 1 at spikes");
  f("strict_tol", &RunConfig::strict_tol, "required margin of q < 1 off the spikes");
  f("certificate_grid", &RunConfig::certificate_grid, "grid size of the certificate check");
  f("trials", &RunConfig::trials, "random trials per spike and fraction");
  f("fractions", &RunConfig::fractions, "perturbation radii as fractions of delta_lambda (location) or the admissible radius (amplitude)");
  f("study_seed", &RunConfig::study_seed, "seed of the study perturbations");
  f("series_order", &RunConfig::series_order, "Neumann series truncation order");
  f("m_values", &RunConfig::m_values, "sample counts of the scaling study");
  f("neumann_ratio", &RunConfig::neumann_ratio, "target ||E|| ||pinv(Phi)|| for verify-neumann");
  f("out", &RunConfig::out, "output directory");
  f("instance_file", &RunConfig::instance_file, "instance JSON (default <out>/instance.json)");
  f("dual_file", &RunConfig::dual_file, "dual JSON (default <out>/dual.json)");
  f("emit_plot_data", &RunConfig::emit_plot_data, "write plot_*.csv files with x,y,bound columns");
}

template <class T>
json encode(const T& value) {
  if constexpr (std::is_same_v<T, double>) {
    return io::number(value);
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    return io::to_json(value);
  } else {
    return value;
  }
}

template <class T>
T decode(const char* key, const json& value) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      return io::to_double(value);
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      return io::doubles_from_json(value);
    } else if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw InvalidArgument("expected a non-negative integer");
      }
      return value.get<T>();
    } else if constexpr (std::is_same_v<T, int>) {
      if (!value.is_number_integer()) throw InvalidArgument("expected an integer");
      return value.get<T>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw InvalidArgument("expected true or false");
      return value.get<T>();
    } else {
      return value.get<T>();
    }
  } catch (const std::exception& e) {
    throw InvalidArgument(std::string(key) + ": " + e.what());
  }
}

std::string flag_name(const char* key) {
  std::string name = "--";
  for (const char* c = key; *c; ++c) name += (*c == '_') ? '-' : *c;
  if (name == "--fractions") name += ",--fraction";
  return name;
}

}  // namespace

void RunConfig::validate() const {
  try {
    (void)sampling_mode_from_string(sampling);
  } catch (const InvalidArgument&) {
    throw InvalidArgument("sampling: expected uniform or random, got '" + sampling + "'");
  }
  if (locations.size() != amplitudes.size()) {
    throw InvalidArgument("locations/amplitudes: lengths differ");
  }
  if (!(spike_tol > 0.0)) throw InvalidArgument("spike_tol: must be positive");
  if (!(strict_tol >= 0.0)) throw InvalidArgument("strict_tol: must be non-negative");
  if (certificate_grid < 2) throw InvalidArgument("certificate_grid: must be >= 2");
  if (m_values.empty()) throw InvalidArgument("m_values: must not be empty");
  for (std::size_t v : m_values) {
    if (v == 0) throw InvalidArgument("m_values: entries must be positive");
  }
  if (!(neumann_ratio > 0.0 && neumann_ratio < 1.0)) {
    throw InvalidArgument("neumann_ratio: must lie in (0, 1)");
  }
  if (out.empty()) throw InvalidArgument("out: must not be empty");
  study_config().validate();
}

InstanceConfig RunConfig::instance_config() const {
  InstanceConfig c;
  c.k = k;
  c.m = m;
  c.sigma = sigma;
  c.min_spacing = min_spacing;
  c.amp_min = amp_min;
  c.amp_max = amp_max;
  c.sampling = sampling_mode_from_string(sampling);
  c.margin = margin;
  c.edge = edge;
  return c;
}

ExchangeOptions RunConfig::solver_options() const {
  ExchangeOptions o;
  o.initial_grid_size = initial_grid_size;
  o.feasibility_tol = feasibility_tol;
  o.max_outer_iterations = max_outer_iterations;
  o.refinement = refinement;
  o.local_reduction = local_reduction;
  o.norm_penalty = norm_penalty;
  o.box = box;
  o.verification_grid = verification_grid;
  return o;
}

StudyConfig RunConfig::study_config() const {
  StudyConfig s;
  s.instance = instance_config();
  s.instance_seed = seed;
  s.locations = locations;
  s.amplitudes = amplitudes;
  s.solver = solver_options();
  s.trial_count = trials;
  s.radius_fractions = fractions;
  s.seed = study_seed;
  s.series_order = series_order;
  return s;
}

json RunConfig::to_json() const {
  json j = json::object();
  for_each_field([&](const char* key, auto member, const char*) { j[key] = encode(this->*member); });
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  std::set<std::string> known;
  RunConfig c;
  for_each_field([&](const char* key, auto member, const char*) {
    known.insert(key);
    if (j.contains(key)) {
      using T = std::decay_t<decltype(c.*member)>;
      c.*member = decode<T>(key, j.at(key));
    }
  });
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw InvalidArgument(item.key() + ": unknown config key");
  }
  return c;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.to_json().dump())));
  return buf;
}

void FlagSet::bind(CLI::App& app, RunConfig& flags) {
  for_each_field([&](const char* key, auto member, const char* help) {
    using T = std::decay_t<decltype(flags.*member)>;
    CLI::Option* opt = nullptr;
    if constexpr (std::is_same_v<T, bool>) {
      const std::string text = std::string(help) + ((flags.*member) ? " [true; =false disables]" : " [false]");
      opt = app.add_flag(flag_name(key), flags.*member, text);
    } else {
      opt = app.add_option(flag_name(key), flags.*member, help)->capture_default_str();
      if constexpr (is_vector<T>::value) opt->delimiter(',');
    }
    bindings_.push_back({opt, [member](RunConfig& dst, const RunConfig& src) {
                           dst.*member = src.*member;
                         }});
  });
}

void FlagSet::apply_overrides(RunConfig& target, const RunConfig& flags) const {
  for (const Binding& b : bindings_) {
    if (b.option->count() > 0) b.copy(target, flags);
  }
}

}  // namespace dualsr::cli
