#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualsr/bounds.hpp"
#include "dualsr/certificate.hpp"
#include "dualsr/dual_solver.hpp"
#include "dualsr/errors.hpp"
#include "dualsr/io.hpp"
#include "dualsr/kernel.hpp"
#include "dualsr/lab.hpp"
#include "dualsr/model.hpp"
#include "dualsr/version.hpp"

namespace py = pybind11;
using namespace dualsr;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

PYBIND11_MODULE(_dualsr, m) {
  m.doc() = "Gaussian spike super-resolution by dual certificates";
  m.attr("__version__") = kVersion;

  // Translators are tried newest first, so the base class goes first.
  auto& error = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<IllPosed>(m, "IllPosed", error.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergence", error.ptr());
  py::register_exception<BoundViolation>(m, "BoundViolation", error.ptr());
  py::register_exception<BasinEscape>(m, "BasinEscape", error.ptr());

  // kernel
  py::class_<GaussianKernel>(m, "GaussianKernel")
      .def(py::init<double>(), py::arg("sigma"))
      .def_property_readonly("sigma", &GaussianKernel::sigma)
      .def("__call__", &GaussianKernel::eval, py::arg("t"))
      .def("deriv", &GaussianKernel::deriv, py::arg("t"), py::arg("order"))
      .def("sup_abs_deriv", &GaussianKernel::sup_abs_deriv, py::arg("order"));
  m.attr("UNIVERSAL_CONSTANT") = kUniversalConstant;

  // model
  py::class_<SpikeTrain>(m, "SpikeTrain")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("locations"),
           py::arg("amplitudes"))
      .def_property_readonly("locations", [](const SpikeTrain& s) { return to_vector(s.locations()); })
      .def_property_readonly("amplitudes", [](const SpikeTrain& s) { return to_vector(s.amplitudes()); })
      .def("__len__", &SpikeTrain::size);

  py::class_<SamplingDesign>(m, "SamplingDesign")
      .def(py::init<std::vector<double>>(), py::arg("samples"))
      .def_static("uniform", &SamplingDesign::uniform, py::arg("m"), py::arg("lo") = 0.0,
                  py::arg("hi") = 1.0)
      .def_property_readonly("samples", [](const SamplingDesign& d) { return to_vector(d.samples()); })
      .def("__len__", &SamplingDesign::size);

  py::class_<Instance>(m, "Instance")
      .def_readonly("kernel", &Instance::kernel)
      .def_readonly("signal", &Instance::signal)
      .def_readonly("design", &Instance::design)
      .def_property_readonly("y", [](const Instance& i) { return i.y.as_vector(); })
      .def("to_json", [](const Instance& i) { return io::to_json(i).dump(); })
      .def_static("from_json", [](const std::string& s) { return io::instance_from_json(io::json::parse(s)); });

  m.def("make_instance",
        [](std::vector<double> t, std::vector<double> a, std::vector<double> samples, double sigma) {
          return make_instance(SpikeTrain(std::move(t), std::move(a)), SamplingDesign(std::move(samples)),
                               GaussianKernel(sigma));
        },
        py::arg("locations"), py::arg("amplitudes"), py::arg("samples"), py::arg("sigma"),
        "Exact measurements of a spike train.");

  m.def("generate_instance",
        [](std::size_t k, std::size_t m_, double sigma, double min_spacing, double amp_min,
           double amp_max, const std::string& sampling, double margin, double edge,
           std::uint64_t seed) {
          InstanceConfig c;
          c.k = k;
          c.m = m_;
          c.sigma = sigma;
          c.min_spacing = min_spacing;
          c.amp_min = amp_min;
          c.amp_max = amp_max;
          c.sampling = sampling_mode_from_string(sampling);
          c.margin = margin;
          c.edge = edge;
          return generate_instance(c, seed);
        },
        py::arg("k") = 3, py::arg("m") = 30, py::arg("sigma") = 0.08, py::arg("min_spacing") = 0.2,
        py::arg("amp_min") = 0.5, py::arg("amp_max") = 2.0, py::arg("sampling") = "uniform",
        py::arg("margin") = 0.0, py::arg("edge") = 0.05, py::arg("seed") = 7);

  m.def("phi_matrix",
        [](std::vector<double> t, const SamplingDesign& d, const GaussianKernel& k) {
          return phi_matrix(t, d, k);
        },
        py::arg("locations"), py::arg("design"), py::arg("kernel"));

  // dual solver
  py::class_<ExchangeOptions>(m, "ExchangeOptions")
      .def(py::init<>())
      .def_readwrite("initial_grid_size", &ExchangeOptions::initial_grid_size)
      .def_readwrite("feasibility_tol", &ExchangeOptions::feasibility_tol)
      .def_readwrite("max_outer_iterations", &ExchangeOptions::max_outer_iterations)
      .def_readwrite("refinement", &ExchangeOptions::refinement)
      .def_readwrite("local_reduction", &ExchangeOptions::local_reduction)
      .def_readwrite("norm_penalty", &ExchangeOptions::norm_penalty)
      .def_readwrite("box", &ExchangeOptions::box)
      .def_readwrite("verification_grid", &ExchangeOptions::verification_grid);

  py::class_<TraceRecord>(m, "TraceRecord")
      .def_readonly("iteration", &TraceRecord::iteration)
      .def_readonly("objective", &TraceRecord::objective)
      .def_readonly("restricted_optimum", &TraceRecord::restricted_optimum)
      .def_readonly("exchange_size", &TraceRecord::exchange_size)
      .def_readonly("max_violation", &TraceRecord::max_violation);

  py::class_<DualSolution>(m, "DualSolution")
      .def_readonly("lambda_", &DualSolution::lambda)
      .def_readonly("constraint_points", &DualSolution::constraint_points)
      .def_readonly("objective", &DualSolution::objective)
      .def_readonly("restricted_objective", &DualSolution::restricted_objective)
      .def_readonly("max_violation", &DualSolution::max_violation)
      .def_readonly("iterations", &DualSolution::iterations)
      .def_readonly("reduced", &DualSolution::reduced)
      .def_readonly("monotone", &DualSolution::monotone)
      .def_property_readonly("final_status", [](const DualSolution& d) { return to_string(d.final_status); })
      .def_readonly("trace", &DualSolution::trace)
      .def("to_json", [](const DualSolution& d) { return io::to_json(d).dump(); });

  m.def("solve",
        [](const Instance& inst, const ExchangeOptions& o) {
          py::gil_scoped_release release;
          return solve(inst.y, inst.design, inst.kernel, o);
        },
        py::arg("instance"), py::arg("options") = ExchangeOptions{},
        "Exchange-method solution of the dual program.");

  py::class_<Violation>(m, "Violation")
      .def_readonly("point", &Violation::point)
      .def_readonly("excess", &Violation::excess);
  m.def("find_violations", &find_violations, py::arg("lambda_"), py::arg("design"), py::arg("kernel"),
        py::arg("tol"), py::arg("polish") = true, py::arg("grid_size") = 0);

  // certificate
  py::class_<DualCertificate>(m, "DualCertificate")
      .def(py::init<Vector, SamplingDesign, GaussianKernel>(), py::arg("lambda_"), py::arg("design"),
           py::arg("kernel"))
      .def("q", &q_eval, py::arg("s"), py::arg("order") = 0)
      .def_property_readonly("lambda_", &DualCertificate::lambda);

  py::class_<Maximizer>(m, "Maximizer")
      .def_readonly("location", &Maximizer::location)
      .def_readonly("q", &Maximizer::q_value)
      .def_readonly("q1", &Maximizer::q_first)
      .def_readonly("q2", &Maximizer::q_second)
      .def_readonly("boundary", &Maximizer::boundary);

  py::class_<CertificateReport>(m, "CertificateReport")
      .def_readonly("maximizers", &CertificateReport::maximizers)
      .def_readonly("spikes", &CertificateReport::spikes)
      .def_readonly("eq_violation", &CertificateReport::eq_violation)
      .def_readonly("strict_margin", &CertificateReport::strict_margin)
      .def_readonly("sup_q", &CertificateReport::sup_q)
      .def_readonly("valid", &CertificateReport::valid);

  m.def("local_maximizers", &local_maximizers, py::arg("certificate"), py::arg("seed_grid_size") = 10000);
  m.def("verify_conditions", &verify_conditions, py::arg("certificate"), py::arg("spike_tol") = 1e-6,
        py::arg("strict_tol") = 0.0, py::arg("grid_size") = kDefaultVerificationGrid);
  m.def("extract_spikes",
        [](const DualCertificate& c, const Instance& inst, double tol) { return extract_spikes(c, inst.y, tol); },
        py::arg("certificate"), py::arg("instance"), py::arg("spike_tol") = 1e-6);

  // bounds
  py::class_<LocationBoundReport>(m, "LocationBoundReport")
      .def_readonly("t_star", &LocationBoundReport::t_star)
      .def_readonly("q2", &LocationBoundReport::q2)
      .def_readonly("R", &LocationBoundReport::R)
      .def_readonly("delta0", &LocationBoundReport::delta0)
      .def_readonly("delta_lambda", &LocationBoundReport::delta_lambda)
      .def_readonly("C_tstar", &LocationBoundReport::C_tstar)
      .def_readonly("C_tstar_m_term", &LocationBoundReport::C_tstar_m_term)
      .def_readonly("M", &LocationBoundReport::M)
      .def_readonly("sigma", &LocationBoundReport::sigma);
  m.def("location_constants", &location_constants, py::arg("q2"), py::arg("lambda_norm"), py::arg("sigma"),
        py::arg("M"));
  m.def("location_report", &location_report, py::arg("certificate"), py::arg("t_star"));
  m.def("delta_lambda_product", &delta_lambda_product);
  m.def("delta_lambda_closed", &delta_lambda_closed);

  py::class_<AmplitudeBoundReport>(m, "AmplitudeBoundReport")
      .def_readonly("sigma_min", &AmplitudeBoundReport::sigma_min)
      .def_readonly("sigma_max", &AmplitudeBoundReport::sigma_max)
      .def_readonly("admissible_radius", &AmplitudeBoundReport::admissible_radius)
      .def_readonly("first_order_coeff", &AmplitudeBoundReport::first_order_coeff)
      .def_readonly("E_frobenius_coeff", &AmplitudeBoundReport::E_frobenius_coeff);
  m.def("amplitude_report", &amplitude_report, py::arg("phi"), py::arg("sigma"), py::arg("M"));

  py::class_<PerturbationMatrices>(m, "PerturbationMatrices")
      .def_readonly("Delta", &PerturbationMatrices::Delta)
      .def_readonly("D", &PerturbationMatrices::D)
      .def_readonly("S_Phi", &PerturbationMatrices::S_Phi)
      .def_readonly("F_transpose", &PerturbationMatrices::F_transpose)
      .def_readonly("pinv_norm", &PerturbationMatrices::pinv_norm)
      .def_readonly("rho", &PerturbationMatrices::rho)
      .def_readonly("tail_estimate", &PerturbationMatrices::tail_estimate);
  m.def("matrix_perturbation", &matrix_perturbation, py::arg("phi"), py::arg("e"), py::arg("series_order") = 30);

  // lab
  py::class_<NeumannCheck>(m, "NeumannCheck")
      .def_readonly("matrices", &NeumannCheck::matrices)
      .def_readonly("errors", &NeumannCheck::errors)
      .def_readonly("bounds", &NeumannCheck::bounds)
      .def_readonly("within_bounds", &NeumannCheck::within_bounds);
  m.def("scaled_perturbation", &scaled_perturbation, py::arg("phi"), py::arg("ratio"), py::arg("seed"));
  m.def("verify_neumann", &verify_neumann, py::arg("phi"), py::arg("e"), py::arg("series_order") = 30);
  m.def("track_maximizer", &track_maximizer, py::arg("lambda_"), py::arg("design"), py::arg("kernel"),
        py::arg("t_init"));
  m.def("implicit_derivative", &implicit_derivative, py::arg("lambda_"), py::arg("t"), py::arg("design"),
        py::arg("kernel"));
  m.def("loglog_slope", &loglog_slope, py::arg("x"), py::arg("y"));

  py::class_<TrialRecord>(m, "TrialRecord")
      .def_readonly("trial", &TrialRecord::trial)
      .def_readonly("spike", &TrialRecord::spike)
      .def_readonly("fraction", &TrialRecord::fraction)
      .def_readonly("perturbation_norm", &TrialRecord::perturbation_norm)
      .def_readonly("measured_error", &TrialRecord::measured_error)
      .def_readonly("theoretical_bound", &TrialRecord::theoretical_bound)
      .def_readonly("ratio", &TrialRecord::ratio)
      .def_readonly("admissible", &TrialRecord::admissible)
      .def_property_readonly("status", [](const TrialRecord& r) { return to_string(r.status); });

  py::class_<LocationStudy>(m, "LocationStudy")
      .def_readonly("reports", &LocationStudy::reports)
      .def_readonly("records", &LocationStudy::records)
      .def_readonly("violations", &LocationStudy::violations)
      .def_readonly("escapes", &LocationStudy::escapes)
      .def("passed", &LocationStudy::passed);

  m.def("run_location_study",
        [](const Instance& inst, std::size_t trials, std::vector<double> fractions, std::uint64_t seed,
           const ExchangeOptions& o) {
          py::gil_scoped_release release;
          StudyConfig c;
          c.trial_count = trials;
          c.radius_fractions = std::move(fractions);
          c.seed = seed;
          c.solver = o;
          return run_location_study(solve_reference(inst, o), c);
        },
        py::arg("instance"), py::arg("trials") = 1000, py::arg("fractions") = std::vector<double>{0.5},
        py::arg("seed") = 1, py::arg("options") = ExchangeOptions{},
        "Perturb the solved dual and compare spike displacement with the location bound.");
}
