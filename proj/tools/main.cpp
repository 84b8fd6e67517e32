#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dualsr/bounds.hpp"
#include "dualsr/certificate.hpp"
#include "dualsr/dual_solver.hpp"
#include "dualsr/errors.hpp"
#include "dualsr/io.hpp"
#include "dualsr/lab.hpp"
#include "dualsr/version.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using dualsr::io::json;

namespace {

enum ExitCode { kOk = 0, kInvalidConfig = 1, kNonConvergence = 2, kBoundViolation = 3 };

/// A study detected a violated bound or invariant; carries no C++ error state.
struct StudyFailure {
  std::string what;
};

class Run {
 public:
  Run(std::string command, dualsr::cli::RunConfig config)
      : command_(std::move(command)), cfg_(std::move(config)) {}

  int execute();

 private:
  fs::path out_path(const std::string& name) const { return fs::path(cfg_.out) / name; }
  void write_json(const std::string& name, const json& j);
  void write_csv(const std::string& name, const std::function<void(std::ostream&)>& body);
  void update_bounds(const std::string& section, const json& value);
  void write_plot(const std::string& name, const std::vector<std::array<double, 3>>& rows);
  void write_manifest(int exit_code);

  dualsr::Instance load_instance() const;
  dualsr::DualSolution load_dual() const;

  void generate();
  void solve();
  void certify();
  void extract();
  void bounds();
  void study_location();
  void study_amplitude();
  void study_scaling();
  void verify_neumann();

  std::string command_;
  dualsr::cli::RunConfig cfg_;
  std::vector<std::string> files_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Run::write_json(const std::string& name, const json& j) {
  dualsr::io::write_file(out_path(name).string(), j);
  files_.push_back(name);
}

void Run::write_csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(out_path(name));
  if (!out) throw dualsr::InvalidArgument("out: cannot write '" + out_path(name).string() + "'");
  body(out);
  files_.push_back(name);
}

void Run::update_bounds(const std::string& section, const json& value) {
  const fs::path path = out_path("bounds.json");
  json j = json::object();
  if (fs::exists(path)) {
    j = dualsr::io::read_file(path.string());
    if (!j.is_object()) j = json::object();
  }
  j[section] = value;
  write_json("bounds.json", j);
}

void Run::write_plot(const std::string& name, const std::vector<std::array<double, 3>>& rows) {
  if (!cfg_.emit_plot_data) return;
  write_csv(name, [&](std::ostream& out) {
    out.precision(17);
    out << "x,y,bound\n";
    for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << '\n';
  });
}

void Run::write_manifest(int exit_code) {
  json m;
  m["command"] = command_;
  m["exit_code"] = exit_code;
  m["version"] = dualsr::kVersion;
  m["config"] = cfg_.to_json();
  m["config_hash"] = dualsr::cli::config_hash(cfg_);
  m["seed"] = cfg_.seed;
  m["study_seed"] = cfg_.study_seed;
  m["files"] = files_;
  m["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                  std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"cli11", CLI11_VERSION}};
  m["timestamp"] = utc_timestamp();
  dualsr::io::write_file(out_path("manifest.json").string(), m);
}

dualsr::Instance Run::load_instance() const {
  const std::string path =
      cfg_.instance_file.empty() ? out_path("instance.json").string() : cfg_.instance_file;
  if (!fs::exists(path)) {
    throw dualsr::InvalidArgument("instance_file: '" + path + "' not found (run generate first)");
  }
  return dualsr::io::instance_from_json(dualsr::io::read_file(path));
}

dualsr::DualSolution Run::load_dual() const {
  const std::string path =
      cfg_.dual_file.empty() ? out_path("dual.json").string() : cfg_.dual_file;
  if (!fs::exists(path)) {
    throw dualsr::InvalidArgument("dual_file: '" + path + "' not found (run solve first)");
  }
  return dualsr::io::dual_from_json(dualsr::io::read_file(path));
}

void Run::generate() {
  const dualsr::Instance inst = dualsr::build_instance(cfg_.study_config());
  write_json("instance.json", dualsr::io::to_json(inst));
  std::cout << "instance: K=" << inst.signal.size() << " M=" << inst.design.size()
            << " sigma=" << inst.kernel.sigma() << '\n';
}

void Run::solve() {
  const dualsr::Instance inst = load_instance();
  const dualsr::DualSolution dual =
      dualsr::solve(inst.y, inst.design, inst.kernel, cfg_.solver_options());
  write_json("dual.json", dualsr::io::to_json(dual));
  std::cout.precision(17);
  std::cout << "objective " << dual.objective << " after " << dual.iterations
            << " iterations, max violation " << dual.max_violation << '\n';
  if (cfg_.emit_plot_data) {
    const dualsr::DualCertificate cert(dual.lambda, inst.design, inst.kernel);
    std::vector<std::array<double, 3>> rows;
    const int n = 2001;
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / (n - 1);
      rows.push_back({t, cert.q(t), 1.0});
    }
    write_plot("plot_certificate.csv", rows);
  }
}

void Run::certify() {
  const dualsr::Instance inst = load_instance();
  const dualsr::DualSolution dual = load_dual();
  const dualsr::DualCertificate cert(dual.lambda, inst.design, inst.kernel);
  const dualsr::CertificateReport report =
      dualsr::verify_conditions(cert, cfg_.spike_tol, cfg_.strict_tol, cfg_.certificate_grid);
  write_json("certificate.json", dualsr::io::to_json(report));
  std::cout << "certificate valid=" << (report.valid ? "true" : "false")
            << " spikes=" << report.spikes.size() << " eq_violation=" << report.eq_violation
            << " strict_margin=" << report.strict_margin << '\n';
  if (!report.valid) throw StudyFailure{"certificate conditions do not hold"};
}

void Run::extract() {
  const dualsr::Instance inst = load_instance();
  const dualsr::DualSolution dual = load_dual();
  const dualsr::DualCertificate cert(dual.lambda, inst.design, inst.kernel);
  const dualsr::SpikeTrain rec = dualsr::extract_spikes(cert, inst.y, cfg_.spike_tol);
  json j = dualsr::io::to_json(rec);
  if (!inst.signal.empty() && inst.signal.size() == rec.size()) {
    double dt = 0.0;
    double da = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      dt = std::max(dt, std::abs(rec.locations()[k] - inst.signal.locations()[k]));
      da = std::max(da, std::abs(rec.amplitudes()[k] - inst.signal.amplitudes()[k]));
    }
    j["max_location_error"] = dualsr::io::number(dt);
    j["max_amplitude_error"] = dualsr::io::number(da);
  }
  write_json("extracted.json", j);
  std::cout << "extracted " << rec.size() << " spikes\n";
}

void Run::bounds() {
  const dualsr::Instance inst = load_instance();
  const dualsr::DualSolution dual = load_dual();
  const dualsr::DualCertificate cert(dual.lambda, inst.design, inst.kernel);
  const dualsr::CertificateReport report =
      dualsr::verify_conditions(cert, cfg_.spike_tol, cfg_.strict_tol, cfg_.certificate_grid);
  if (report.spikes.empty()) throw StudyFailure{"certificate has no spikes"};
  json loc = json::array();
  std::vector<double> t;
  for (const dualsr::Maximizer& s : report.spikes) {
    loc.push_back(dualsr::io::to_json(dualsr::location_report(cert, s.location)));
    t.push_back(s.location);
  }
  const dualsr::AmplitudeBoundReport amp = dualsr::amplitude_report(
      dualsr::phi_matrix(t, inst.design, inst.kernel), inst.kernel.sigma(), inst.design.size());
  update_bounds("location", loc);
  update_bounds("amplitude", dualsr::io::to_json(amp));
  std::cout << "bounds for " << t.size() << " spikes, admissible amplitude radius "
            << amp.admissible_radius << '\n';
}

void Run::study_location() {
  const dualsr::LocationStudy study = dualsr::run_location_study(cfg_.study_config());
  write_csv("study_location.csv",
            [&](std::ostream& out) { dualsr::write_location_csv(out, study.records); });
  json loc = json::array();
  for (const auto& r : study.reports) loc.push_back(dualsr::io::to_json(r));
  update_bounds("location", loc);
  double worst = 0.0;
  std::vector<std::array<double, 3>> rows;
  for (const auto& r : study.records) {
    worst = std::max(worst, r.ratio);
    rows.push_back({r.perturbation_norm, r.measured_error, r.theoretical_bound});
  }
  write_plot("plot_location.csv", rows);
  std::cout << study.records.size() << " trials, max ratio " << worst << ", violations "
            << study.violations << ", basin escapes " << study.escapes << '\n';
  if (!study.passed()) throw StudyFailure{"location bound violated"};
}

void Run::study_amplitude() {
  const dualsr::AmplitudeStudy study = dualsr::run_amplitude_study(cfg_.study_config());
  write_csv("study_amplitude.csv",
            [&](std::ostream& out) { dualsr::write_amplitude_csv(out, study.records); });
  update_bounds("amplitude", dualsr::io::to_json(study.report));
  std::size_t failures = 0;
  std::vector<std::array<double, 3>> rows;
  for (const auto& r : study.records) {
    if (r.status != dualsr::TrialStatus::ok) ++failures;
    rows.push_back({r.perturbation_norm, r.measured_error, r.theoretical_bound});
  }
  write_plot("plot_amplitude.csv", rows);
  std::cout << study.records.size() << " trials, failing " << failures
            << ", worst expansion error " << study.worst_expansion_error << '\n';
  if (failures > 0) throw StudyFailure{"amplitude bound violated"};
}

void Run::study_scaling() {
  std::vector<dualsr::StudyConfig> configs;
  for (std::size_t m : cfg_.m_values) {
    dualsr::StudyConfig c = cfg_.study_config();
    c.instance.m = m;
    configs.push_back(c);
  }
  const dualsr::ScalingStudy study = dualsr::scaling_study(configs);
  write_csv("study_scaling.csv", [&](std::ostream& out) { dualsr::write_scaling_csv(out, study); });
  json fits = json::array();
  for (const auto& f : study.fits) {
    fits.push_back({{"spike", f.spike},
                    {"delta_lambda_slope", dualsr::io::number(f.delta_lambda_slope)},
                    {"c_term_slope", dualsr::io::number(f.c_term_slope)},
                    {"c_tstar_slope", dualsr::io::number(f.c_tstar_slope)}});
    std::cout << "spike " << f.spike << ": delta_lambda slope " << f.delta_lambda_slope
              << ", M-term slope " << f.c_term_slope << '\n';
  }
  update_bounds("scaling_fits", fits);
  double worst = 0.0;
  std::vector<std::array<double, 3>> rows;
  for (const auto& r : study.rows) {
    worst = std::max(worst, r.max_ratio);
    rows.push_back({static_cast<double>(r.M), r.max_ratio, 1.0});
  }
  write_plot("plot_scaling.csv", rows);
  if (worst > 1.0) throw StudyFailure{"location bound violated in the scaling runs"};
}

void Run::verify_neumann() {
  const dualsr::Instance inst = dualsr::build_instance(cfg_.study_config());
  const auto t = inst.signal.locations();
  const dualsr::Matrix phi = dualsr::phi_matrix(t, inst.design, inst.kernel);
  const dualsr::Matrix e = dualsr::scaled_perturbation(phi, cfg_.neumann_ratio, cfg_.study_seed);
  const dualsr::NeumannCheck check = dualsr::verify_neumann(phi, e, cfg_.series_order);
  update_bounds("neumann", dualsr::io::to_json(
                               dualsr::io::summarize(check.matrices, check.errors.back())));
  std::vector<std::array<double, 3>> rows;
  for (std::size_t n = 0; n < check.errors.size(); ++n) {
    rows.push_back({static_cast<double>(n + 1), check.errors[n], check.bounds[n]});
  }
  write_plot("plot_neumann.csv", rows);
  std::cout << "rho " << check.matrices.rho << ", expansion error at order " << cfg_.series_order
            << ": " << check.errors.back() << '\n';
  if (!check.within_bounds) throw StudyFailure{"series truncation error exceeds its bound"};
}

int Run::execute() {
  int code = kOk;
  try {
    cfg_.validate();
    fs::create_directories(cfg_.out);
    if (command_ == "generate") generate();
    else if (command_ == "solve") solve();
    else if (command_ == "certify") certify();
    else if (command_ == "extract") extract();
    else if (command_ == "bounds") bounds();
    else if (command_ == "study-location") study_location();
    else if (command_ == "study-amplitude") study_amplitude();
    else if (command_ == "study-scaling") study_scaling();
    else if (command_ == "verify-neumann") verify_neumann();
  } catch (const StudyFailure& f) {
    std::cerr << "bound violation: " << f.what << '\n';
    code = kBoundViolation;
  } catch (const dualsr::InvalidArgument& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const dualsr::NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << '\n';
    code = kNonConvergence;
  } catch (const dualsr::BoundViolation& e) {
    std::cerr << "bound violation: " << e.what() << '\n';
    code = kBoundViolation;
  } catch (const dualsr::IllPosed& e) {
    std::cerr << "ill-posed: " << e.what() << '\n';
    code = kBoundViolation;
  } catch (const dualsr::BasinEscape& e) {
    std::cerr << "basin escape: " << e.what() << '\n';
    code = kBoundViolation;
  }
  write_manifest(code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-certificate super-resolution: solve, certify and stress-test stability bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dualsr::kVersion);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config with flat keys (flags override it)");
  dualsr::cli::RunConfig flags;
  dualsr::cli::FlagSet flag_set;
  flag_set.bind(app, flags);

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"generate", "write instance.json"},
      {"solve", "solve the dual program, write dual.json"},
      {"certify", "check the certificate conditions, write certificate.json"},
      {"extract", "recover spikes from the certificate, write extracted.json"},
      {"bounds", "location and amplitude bound constants, write bounds.json"},
      {"study-location", "randomized location-bound study, write study_location.csv"},
      {"study-amplitude", "randomized amplitude-bound study, write study_amplitude.csv"},
      {"study-scaling", "bound constants over m_values, write study_scaling.csv"},
      {"verify-neumann", "series expansion of the perturbed pseudoinverse"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInvalidConfig;
  }

  dualsr::cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = dualsr::cli::RunConfig::from_json(dualsr::io::read_file(config_path));
    }
  } catch (const dualsr::InvalidArgument& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  }
  flag_set.apply_overrides(cfg, flags);

  Run run(app.get_subcommands().front()->get_name(), cfg);
  return run.execute();
}
