#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "dualsr/errors.hpp"
#include "dualsr/io.hpp"
#include "helpers.hpp"

using namespace dualsr;
namespace fs = std::filesystem;

namespace {

/// Serialize, print and parse back, as a file round trip would.
io::json reparse(const io::json& j) { return io::json::parse(j.dump()); }

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("non-finite numbers") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(io::number(inf) == "inf");
    CHECK(io::number(-inf) == "-inf");
    CHECK(io::number(std::nan("")) == "nan");
    CHECK(io::to_double(io::number(inf)) == inf);
    CHECK(io::to_double(io::number(-inf)) == -inf);
    CHECK(std::isnan(io::to_double(io::number(std::nan("")))));
    CHECK(io::to_double(io::json(0.1)) == 0.1);
    CHECK_THROWS_AS(io::to_double(io::json("x")), InvalidArgument);
    const std::vector<double> v{1.0, inf, -2.5};
    CHECK(io::doubles_from_json(reparse(io::to_json(v))) == v);
  }

  TEST_CASE("instance round trip is bit exact") {
    const Instance a = testutil::desk_instance();
    const Instance b = io::instance_from_json(reparse(io::to_json(a)));
    CHECK(b.kernel.sigma() == a.kernel.sigma());
    CHECK(std::equal(a.design.samples().begin(), a.design.samples().end(), b.design.samples().begin()));
    CHECK(std::equal(a.signal.locations().begin(), a.signal.locations().end(), b.signal.locations().begin()));
    CHECK(std::equal(a.signal.amplitudes().begin(), a.signal.amplitudes().end(), b.signal.amplitudes().begin()));
    CHECK(a.y.y == b.y.y);

    io::json missing = io::to_json(a);
    missing.erase("sigma");
    try {
      (void)io::instance_from_json(missing);
      FAIL("expected a missing field error");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("sigma") != std::string::npos);
    }
  }

  TEST_CASE("dual solution and reports round trip") {
    const auto& ref = testutil::desk_reference();
    const DualSolution& d = ref.dual;
    const DualSolution e = io::dual_from_json(reparse(io::to_json(d)));
    CHECK((e.lambda - d.lambda).norm() == 0.0);
    CHECK(e.constraint_points == d.constraint_points);
    CHECK(e.objective == d.objective);
    CHECK(e.iterations == d.iterations);
    CHECK(e.final_status == d.final_status);
    REQUIRE(e.trace.size() == d.trace.size());
    CHECK(e.trace.back().restricted_optimum == d.trace.back().restricted_optimum);

    const DualCertificate cert(d.lambda, ref.instance.design, ref.instance.kernel);
    const CertificateReport cr = verify_conditions(cert);
    const CertificateReport cr2 = io::certificate_report_from_json(reparse(io::to_json(cr)));
    CHECK(cr2.valid == cr.valid);
    CHECK(cr2.spikes.size() == cr.spikes.size());
    CHECK(cr2.strict_margin == cr.strict_margin);
    CHECK(cr2.maximizers.back().boundary == cr.maximizers.back().boundary);

    const LocationBoundReport lr = location_report(cert, cr.spikes[1].location);
    const LocationBoundReport lr2 = io::location_report_from_json(reparse(io::to_json(lr)));
    CHECK(lr2.delta_lambda == lr.delta_lambda);
    CHECK(lr2.C_tstar == lr.C_tstar);
    CHECK(lr2.M == lr.M);

    const Matrix phi = phi_matrix(ref.instance.signal.locations(), ref.instance.design, ref.instance.kernel);
    const AmplitudeBoundReport ar = amplitude_report(phi, 0.05, 30);
    const AmplitudeBoundReport ar2 = io::amplitude_report_from_json(reparse(io::to_json(ar)));
    CHECK(std::isinf(ar2.E_frobenius_coeff));
    CHECK(ar2.sigma_min == ar.sigma_min);

    const PerturbationMatrices p = matrix_perturbation(phi, 1e-3 * Matrix::Ones(30, 3), 10);
    const io::PerturbationSummary s = io::summarize(p, 1e-15);
    const io::PerturbationSummary s2 = io::perturbation_summary_from_json(reparse(io::to_json(s)));
    CHECK(s2.rho == s.rho);
    CHECK(s2.rows == 30);
    CHECK(s2.series_order == 10);
  }

  TEST_CASE("options round trip and files") {
    ExchangeOptions o;
    o.box = 3.0;
    o.refinement = false;
    const ExchangeOptions o2 = io::exchange_options_from_json(reparse(io::to_json(o)));
    CHECK(o2.box == 3.0);
    CHECK_FALSE(o2.refinement);
    CHECK(o2.verification_grid == o.verification_grid);

    const fs::path dir = fs::temp_directory_path() / "dualsr_io_test";
    fs::create_directories(dir);
    const std::string path = (dir / "x.json").string();
    io::write_file(path, io::to_json(testutil::desk_instance()));
    const Instance back = io::instance_from_json(io::read_file(path));
    CHECK(back.y.y == testutil::desk_instance().y.y);
    CHECK_THROWS_AS(io::read_file((dir / "missing.json").string()), InvalidArgument);
    fs::remove_all(dir);
  }
}
