#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dualsr/bounds.hpp"
#include "dualsr/certificate.hpp"
#include "dualsr/dual_solver.hpp"
#include "dualsr/lab.hpp"
#include "dualsr/model.hpp"

namespace dualsr::io {

using json = nlohmann::json;

/// Doubles are written as JSON numbers; inf, -inf and nan as the strings
/// "inf", "-inf" and "nan".
json number(double value);
double to_double(const json& value);

json to_json(const SpikeTrain& signal);
SpikeTrain spike_train_from_json(const json& j);

/// {sigma, samples, locations, amplitudes, y}.
json to_json(const Instance& instance);
Instance instance_from_json(const json& j);

json to_json(const ExchangeOptions& options);
ExchangeOptions exchange_options_from_json(const json& j);

json to_json(const DualSolution& dual);
DualSolution dual_from_json(const json& j);

json to_json(const Maximizer& m);
Maximizer maximizer_from_json(const json& j);

json to_json(const CertificateReport& report);
CertificateReport certificate_report_from_json(const json& j);

json to_json(const LocationBoundReport& report);
LocationBoundReport location_report_from_json(const json& j);

json to_json(const AmplitudeBoundReport& report);
AmplitudeBoundReport amplitude_report_from_json(const json& j);

/// Scalar part of PerturbationMatrices (the matrices themselves are not stored).
struct PerturbationSummary {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double D = 0.0;
  double pinv_norm = 0.0;
  double rho = 0.0;
  int series_order = 0;
  double tail_estimate = 0.0;
  double S_Phi_norm = 0.0;
  double S_Phi_bound = 0.0;
  double F_norm = 0.0;
  double F_bound = 0.0;
  /// ||pinv(Phi + E) - (pinv(Phi) + F^T)||_2.
  double expansion_error = 0.0;
};

PerturbationSummary summarize(const PerturbationMatrices& p, double expansion_error);
json to_json(const PerturbationSummary& summary);
PerturbationSummary perturbation_summary_from_json(const json& j);

json to_json(const std::vector<double>& values);
std::vector<double> doubles_from_json(const json& j);

json read_file(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_file(const std::string& path, const json& j);

}  // namespace dualsr::io
