#include "dualsr/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "dualsr/errors.hpp"

namespace dualsr::io {
namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InvalidArgument(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double get_double(const json& j, const char* key) { return to_double(field(j, key)); }

Vector vector_from(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> std_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

LpStatus lp_status_from_string(const std::string& name) {
  for (LpStatus s : {LpStatus::optimal, LpStatus::infeasible, LpStatus::box_active}) {
    if (name == to_string(s)) return s;
  }
  throw InvalidArgument("unknown LP status '" + name + "'");
}

}  // namespace

json number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

double to_double(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InvalidArgument("expected a number, got " + value.dump());
}

json to_json(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

std::vector<double> doubles_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) out.push_back(to_double(v));
  return out;
}

json to_json(const SpikeTrain& signal) {
  const auto t = signal.locations();
  const auto a = signal.amplitudes();
  return {{"locations", to_json(std::vector<double>(t.begin(), t.end()))},
          {"amplitudes", to_json(std::vector<double>(a.begin(), a.end()))}};
}

SpikeTrain spike_train_from_json(const json& j) {
  return SpikeTrain(doubles_from_json(field(j, "locations")),
                    doubles_from_json(field(j, "amplitudes")));
}

json to_json(const Instance& instance) {
  const auto s = instance.design.samples();
  json out = to_json(instance.signal);
  out["sigma"] = number(instance.kernel.sigma());
  out["samples"] = to_json(std::vector<double>(s.begin(), s.end()));
  out["y"] = to_json(instance.y.y);
  return out;
}

Instance instance_from_json(const json& j) {
  Instance inst;
  inst.kernel = GaussianKernel(get_double(j, "sigma"));
  inst.design = SamplingDesign(doubles_from_json(field(j, "samples")));
  const json& t = field(j, "locations");
  if (!t.empty()) inst.signal = spike_train_from_json(j);
  inst.y.y = doubles_from_json(field(j, "y"));
  if (inst.y.size() != inst.design.size()) {
    throw InvalidArgument("instance: y and samples differ in length");
  }
  return inst;
}

json to_json(const ExchangeOptions& o) {
  return {{"initial_grid_size", o.initial_grid_size},
          {"feasibility_tol", number(o.feasibility_tol)},
          {"max_outer_iterations", o.max_outer_iterations},
          {"refinement", o.refinement},
          {"local_reduction", o.local_reduction},
          {"norm_penalty", number(o.norm_penalty)},
          {"box", number(o.box)},
          {"verification_grid", o.verification_grid}};
}

ExchangeOptions exchange_options_from_json(const json& j) {
  ExchangeOptions o;
  o.initial_grid_size = field(j, "initial_grid_size").get<std::size_t>();
  o.feasibility_tol = get_double(j, "feasibility_tol");
  o.max_outer_iterations = field(j, "max_outer_iterations").get<int>();
  o.refinement = field(j, "refinement").get<bool>();
  o.local_reduction = field(j, "local_reduction").get<bool>();
  o.norm_penalty = get_double(j, "norm_penalty");
  o.box = get_double(j, "box");
  o.verification_grid = field(j, "verification_grid").get<std::size_t>();
  return o;
}

json to_json(const DualSolution& d) {
  json trace = json::array();
  for (const TraceRecord& r : d.trace) {
    trace.push_back({{"iteration", r.iteration},
                     {"objective", number(r.objective)},
                     {"restricted_optimum", number(r.restricted_optimum)},
                     {"exchange_size", r.exchange_size},
                     {"max_violation", number(r.max_violation)}});
  }
  return {{"lambda", to_json(std_vector(d.lambda))},
          {"constraint_points", to_json(d.constraint_points)},
          {"objective", number(d.objective)},
          {"restricted_objective", number(d.restricted_objective)},
          {"max_violation", number(d.max_violation)},
          {"iterations", d.iterations},
          {"reduced", d.reduced},
          {"monotone", d.monotone},
          {"final_status", to_string(d.final_status)},
          {"trace", trace}};
}

DualSolution dual_from_json(const json& j) {
  DualSolution d;
  d.lambda = vector_from(doubles_from_json(field(j, "lambda")));
  d.constraint_points = doubles_from_json(field(j, "constraint_points"));
  d.objective = get_double(j, "objective");
  d.restricted_objective = get_double(j, "restricted_objective");
  d.max_violation = get_double(j, "max_violation");
  d.iterations = field(j, "iterations").get<int>();
  d.reduced = field(j, "reduced").get<bool>();
  d.monotone = field(j, "monotone").get<bool>();
  d.final_status = lp_status_from_string(field(j, "final_status").get<std::string>());
  for (const json& r : field(j, "trace")) {
    d.trace.push_back({field(r, "iteration").get<int>(), get_double(r, "objective"),
                       get_double(r, "restricted_optimum"),
                       field(r, "exchange_size").get<std::size_t>(),
                       get_double(r, "max_violation")});
  }
  return d;
}

json to_json(const Maximizer& m) {
  return {{"location", number(m.location)},
          {"q", number(m.q_value)},
          {"q1", number(m.q_first)},
          {"q2", number(m.q_second)},
          {"boundary", m.boundary}};
}

Maximizer maximizer_from_json(const json& j) {
  return {get_double(j, "location"), get_double(j, "q"), get_double(j, "q1"),
          get_double(j, "q2"), field(j, "boundary").get<bool>()};
}

json to_json(const CertificateReport& r) {
  json maxima = json::array();
  for (const Maximizer& m : r.maximizers) maxima.push_back(to_json(m));
  json spikes = json::array();
  for (const Maximizer& m : r.spikes) spikes.push_back(to_json(m));
  return {{"valid", r.valid},
          {"eq_violation", number(r.eq_violation)},
          {"strict_margin", number(r.strict_margin)},
          {"sup_q", number(r.sup_q)},
          {"neighborhood_radius", number(r.neighborhood_radius)},
          {"grid_size", r.grid_size},
          {"spike_tol", number(r.spike_tol)},
          {"strict_tol", number(r.strict_tol)},
          {"maximizers", maxima},
          {"spikes", spikes}};
}

CertificateReport certificate_report_from_json(const json& j) {
  CertificateReport r;
  r.valid = field(j, "valid").get<bool>();
  r.eq_violation = get_double(j, "eq_violation");
  r.strict_margin = get_double(j, "strict_margin");
  r.sup_q = get_double(j, "sup_q");
  r.neighborhood_radius = get_double(j, "neighborhood_radius");
  r.grid_size = field(j, "grid_size").get<std::size_t>();
  r.spike_tol = get_double(j, "spike_tol");
  r.strict_tol = get_double(j, "strict_tol");
  for (const json& m : field(j, "maximizers")) r.maximizers.push_back(maximizer_from_json(m));
  for (const json& m : field(j, "spikes")) r.spikes.push_back(maximizer_from_json(m));
  return r;
}

json to_json(const LocationBoundReport& r) {
  return {{"t_star", number(r.t_star)},
          {"q2", number(r.q2)},
          {"R", number(r.R)},
          {"delta0", number(r.delta0)},
          {"delta_lambda", number(r.delta_lambda)},
          {"C_tstar", number(r.C_tstar)},
          {"C_tstar_m_term", number(r.C_tstar_m_term)},
          {"M", r.M},
          {"sigma", number(r.sigma)},
          {"c", number(r.c_const)}};
}

LocationBoundReport location_report_from_json(const json& j) {
  LocationBoundReport r;
  r.t_star = get_double(j, "t_star");
  r.q2 = get_double(j, "q2");
  r.R = get_double(j, "R");
  r.delta0 = get_double(j, "delta0");
  r.delta_lambda = get_double(j, "delta_lambda");
  r.C_tstar = get_double(j, "C_tstar");
  r.C_tstar_m_term = get_double(j, "C_tstar_m_term");
  r.M = field(j, "M").get<std::size_t>();
  r.sigma = get_double(j, "sigma");
  r.c_const = get_double(j, "c");
  return r;
}

json to_json(const AmplitudeBoundReport& r) {
  return {{"sigma_min", number(r.sigma_min)},
          {"sigma_max", number(r.sigma_max)},
          {"admissible_radius", number(r.admissible_radius)},
          {"first_order_coeff", number(r.first_order_coeff)},
          {"E_frobenius_coeff", number(r.E_frobenius_coeff)},
          {"sigma", number(r.sigma)},
          {"M", r.M}};
}

AmplitudeBoundReport amplitude_report_from_json(const json& j) {
  AmplitudeBoundReport r;
  r.sigma_min = get_double(j, "sigma_min");
  r.sigma_max = get_double(j, "sigma_max");
  r.admissible_radius = get_double(j, "admissible_radius");
  r.first_order_coeff = get_double(j, "first_order_coeff");
  r.E_frobenius_coeff = get_double(j, "E_frobenius_coeff");
  r.sigma = get_double(j, "sigma");
  r.M = field(j, "M").get<std::size_t>();
  return r;
}

PerturbationSummary summarize(const PerturbationMatrices& p, double expansion_error) {
  PerturbationSummary s;
  s.rows = static_cast<std::size_t>(p.Phi.rows());
  s.cols = static_cast<std::size_t>(p.Phi.cols());
  s.D = p.D;
  s.pinv_norm = p.pinv_norm;
  s.rho = p.rho;
  s.series_order = p.series_order;
  s.tail_estimate = p.tail_estimate;
  s.S_Phi_norm = p.S_Phi_norm;
  s.S_Phi_bound = p.S_Phi_bound;
  s.F_norm = p.F_norm;
  s.F_bound = p.F_bound;
  s.expansion_error = expansion_error;
  return s;
}

json to_json(const PerturbationSummary& s) {
  return {{"rows", s.rows},
          {"cols", s.cols},
          {"D", number(s.D)},
          {"pinv_norm", number(s.pinv_norm)},
          {"rho", number(s.rho)},
          {"series_order", s.series_order},
          {"tail_estimate", number(s.tail_estimate)},
          {"S_Phi_norm", number(s.S_Phi_norm)},
          {"S_Phi_bound", number(s.S_Phi_bound)},
          {"F_norm", number(s.F_norm)},
          {"F_bound", number(s.F_bound)},
          {"expansion_error", number(s.expansion_error)}};
}

PerturbationSummary perturbation_summary_from_json(const json& j) {
  PerturbationSummary s;
  s.rows = field(j, "rows").get<std::size_t>();
  s.cols = field(j, "cols").get<std::size_t>();
  s.D = get_double(j, "D");
  s.pinv_norm = get_double(j, "pinv_norm");
  s.rho = get_double(j, "rho");
  s.series_order = field(j, "series_order").get<int>();
  s.tail_estimate = get_double(j, "tail_estimate");
  s.S_Phi_norm = get_double(j, "S_Phi_norm");
  s.S_Phi_bound = get_double(j, "S_Phi_bound");
  s.F_norm = get_double(j, "F_norm");
  s.F_bound = get_double(j, "F_bound");
  s.expansion_error = get_double(j, "expansion_error");
  return s;
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace dualsr::io
