// End-to-end tests of the command-line tool: spawns the real binary and
// checks files, manifests and exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using json = nlohmann::json;

namespace {

const std::string kBin = GENDYNE_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json slurp_json(const std::string& path) { return json::parse(slurp(path)); }

}  // namespace

TEST_CASE("trajectory: fixed seed gives byte-identical CSV") {
    REQUIRE(run("trajectory --upsilon 0.3 --n-bath 1 --dt 1e-3 --t-final 0.1 --dim 36 "
                "--seed 7 --init thermal --init-n 1 --out /tmp/gendyne_det_a.csv") == 0);
    REQUIRE(run("trajectory --upsilon 0.3 --n-bath 1 --dt 1e-3 --t-final 0.1 --dim 36 "
                "--seed 7 --init thermal --init-n 1 --out /tmp/gendyne_det_b.csv") == 0);
    CHECK(slurp("/tmp/gendyne_det_a.csv") == slurp("/tmp/gendyne_det_b.csv"));

    const json manifest = slurp_json("/tmp/gendyne_det_a.csv.manifest.json");
    CHECK(manifest["command"] == "trajectory");
    CHECK(manifest["parameters"]["seed"] == 7);
    CHECK(manifest["parameters"]["upsilon"] == 0.3);
}

TEST_CASE("trajectory: homodyne upsilon=1 leaves the theta2 column empty") {
    REQUIRE(run("trajectory --upsilon 1 --n-bath 0.5 --dt 1e-3 --t-final 0.02 --dim 30 "
                "--seed 3 --out /tmp/gendyne_hom.csv") == 0);
    std::ifstream in("/tmp/gendyne_hom.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header ==
          "t,dw1,dw2,theta1,theta2,mean_q,mean_p,var_q,var_p,cov_qp,trace_err");
    // columns: t,dw1,dw2,theta1,theta2 -> dw2 and theta2 empty
    std::stringstream ss(row);
    std::string cell;
    std::getline(ss, cell, ',');  // t
    std::getline(ss, cell, ',');  // dw1
    CHECK(!cell.empty());
    std::getline(ss, cell, ',');  // dw2
    CHECK(cell.empty());
    std::getline(ss, cell, ',');  // theta1
    CHECK(!cell.empty());
    std::getline(ss, cell, ',');  // theta2
    CHECK(cell.empty());

    const json manifest = slurp_json("/tmp/gendyne_hom.csv.manifest.json");
    CHECK(manifest["summary"]["theta2_degenerate"] == true);

    // mirror case: upsilon = -1 leaves dw1/theta1 empty instead
    REQUIRE(run("trajectory --upsilon -1 --n-bath 0.5 --dt 1e-3 --t-final 0.02 --dim 30 "
                "--seed 3 --out /tmp/gendyne_hom_m.csv") == 0);
    const json mm = slurp_json("/tmp/gendyne_hom_m.csv.manifest.json");
    CHECK(mm["summary"]["theta1_degenerate"] == true);
    CHECK(mm["summary"]["theta2_degenerate"] == false);
}

TEST_CASE("trajectory: engine=both writes aligned CSVs and a diff summary") {
    REQUIRE(run("trajectory --upsilon 0.5 --n-bath 1 --dt 1e-3 --t-final 0.05 --dim 24 "
                "--seed 5 --engine both --out /tmp/gendyne_both.csv") == 0);
    const std::string fock = slurp("/tmp/gendyne_both.fock.csv");
    const std::string gauss = slurp("/tmp/gendyne_both.gaussian.csv");
    CHECK(std::count(fock.begin(), fock.end(), '\n') ==
          std::count(gauss.begin(), gauss.end(), '\n'));
    const json manifest = slurp_json("/tmp/gendyne_both.csv.manifest.json");
    CHECK(manifest["summary"]["engine_diff"].contains("max_abs_diff_mean_q"));
    CHECK(manifest["summary"]["engine_diff"]["max_abs_diff_mean_q"].get<double>() < 0.1);
}

TEST_CASE("ensemble: writes checkpoint statistics") {
    REQUIRE(run("ensemble --upsilon 0 --n-bath 0 --dt 1e-3 --t-final 0.1 --dim 12 --seed 2 "
                "--engine gaussian --n-traj 20 --stride 20 --out /tmp/gendyne_ens.csv") == 0);
    const std::string data = slurp("/tmp/gendyne_ens.csv");
    CHECK(data.rfind("t,mean_n,se_n,", 0) == 0);
    CHECK(std::count(data.begin(), data.end(), '\n') == 6);  // header + 5 checkpoints
}

TEST_CASE("povm-audit: passes for admissible parameters, rejects out-of-range upsilon") {
    REQUIRE(run("povm-audit --upsilon 0.5 --n-bath 1 --dim 12 --grid-radius 11 "
                "--grid-points 120 --residual-dim 150 --out /tmp/gendyne_audit.json") == 0);
    const json report = slurp_json("/tmp/gendyne_audit.json");
    CHECK(report["pass"] == true);
    CHECK(report["audits"]["completeness"]["pass"] == true);
    CHECK(report["audits"]["eigen_residual"]["worst"].get<double>() < 1e-6);
    CHECK(report["audits"]["outcome_covariance"]["pass"] == true);

    CHECK(run("povm-audit --upsilon 1.5 --n-bath 1") == 1);   // domain guard
    CHECK(run("povm-audit --upsilon 0.9999999 --n-bath 1") == 1);  // homodyne branch
}

TEST_CASE("scheme-check: full verdict set") {
    REQUIRE(run("scheme-check --upsilon 0.5 --dim 150 --out /tmp/gendyne_scheme.json") == 0);
    const json report = slurp_json("/tmp/gendyne_scheme.json");
    CHECK(report["pass"] == true);
    CHECK(report["audits"]["transmissivity"]["value"].get<double>() == doctest::Approx(0.75));
    CHECK(report["audits"]["crosscheck"]["pass"] == true);
}

TEST_CASE("scheme-sample: empirical covariance lands near (L1, L2)") {
    REQUIRE(run("scheme-sample --upsilon 0.5 --n-bath 1 --n-samples 40000 --seed 9 "
                "--out /tmp/gendyne_samples.csv") == 0);
    const json manifest = slurp_json("/tmp/gendyne_samples.csv.manifest.json");
    CHECK(manifest["summary"]["empirical_var_theta1"].get<double>() ==
          doctest::Approx(1.875).epsilon(0.05));
    CHECK(manifest["summary"]["empirical_var_theta2"].get<double>() ==
          doctest::Approx(0.375).epsilon(0.05));
}

TEST_CASE("steady-scan: sorted, reproducible, correct verdict") {
    const std::string args =
        "steady-scan --n-bath 0 --upsilons 0.5,-0.5,0 --dt 1e-3 --t-final 2 --dim 12 "
        "--seed 4 --engine gaussian --n-traj 10 --out /tmp/gendyne_scan.csv";
    REQUIRE(run(args) == 0);
    const std::string first = slurp("/tmp/gendyne_scan.csv");
    REQUIRE(run(args) == 0);
    CHECK(first == slurp("/tmp/gendyne_scan.csv"));  // stable across runs

    std::istringstream in(first);
    std::string line;
    std::getline(in, line);  // header
    double prev = -2.0;
    int rows = 0;
    while (std::getline(in, line)) {
        const double u = std::stod(line.substr(0, line.find(',')));
        CHECK(u > prev);  // sorted by upsilon
        prev = u;
        ++rows;
    }
    CHECK(rows == 3);

    // N=0 heterodyne steady state is the vacuum: variance 1, which *does*
    // saturate the zero-temperature bound 1/(2N+1) = 1 (saturation only fails
    // for a genuinely mixed bath).
    const json manifest = slurp_json("/tmp/gendyne_scan.csv.manifest.json");
    CHECK(manifest["summary"]["verdict"] == "SATURATED");
    CHECK(manifest["summary"]["min_over_scan"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("steady-scan: mixed bath cannot saturate the squeezing bound") {
    // start at the conditional fixed point so the tail average is converged
    REQUIRE(run("steady-scan --n-bath 1 --upsilons -0.5,0,0.5 --dt 1e-3 --t-final 2 --dim 12 "
                "--seed 8 --engine gaussian --n-traj 5 --init thermal --init-n 1 "
                "--out /tmp/gendyne_scan_hot.csv") == 0);
    const json manifest = slurp_json("/tmp/gendyne_scan_hot.csv.manifest.json");
    CHECK(manifest["summary"]["verdict"] == "NOT_SATURATED");
    CHECK(manifest["summary"]["min_over_scan"].get<double>() == doctest::Approx(3.0).epsilon(0.02));
    CHECK(manifest["summary"]["bound"].get<double>() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ensemble: fock engine end to end") {
    REQUIRE(run("ensemble --upsilon 0.5 --n-bath 1 --dt 1e-3 --t-final 0.2 --dim 16 --seed 6 "
                "--engine fock --n-traj 8 --stride 50 --out /tmp/gendyne_ens_fock.csv") == 0);
    const std::string data = slurp("/tmp/gendyne_ens_fock.csv");
    CHECK(std::count(data.begin(), data.end(), '\n') == 5);  // header + 4 checkpoints
}

TEST_CASE("povm-audit: genuine audit failure exits with code 2") {
    // a grid radius of 2 cannot carry the completeness integral for dim 12
    CHECK(run("povm-audit --upsilon 0.5 --n-bath 1 --dim 12 --grid-radius 2 "
              "--grid-points 60 --residual-dim 150") == 2);
}

TEST_CASE("scheme-sample: json format") {
    REQUIRE(run("scheme-sample --upsilon 0 --n-bath 0 --n-samples 50 --seed 1 "
                "--format json --out /tmp/gendyne_samples.json") == 0);
    const json rows = slurp_json("/tmp/gendyne_samples.json");
    CHECK(rows.size() == 50);
    CHECK(rows[0].contains("theta1"));
}

TEST_CASE("exit codes: config and io errors") {
    CHECK(run("trajectory --upsilon 0.3") == 1);                       // missing --out
    CHECK(run("trajectory --upsilon 2 --out /tmp/x.csv") == 1);        // range check
    CHECK(run("nonsense") == 1);                                       // unknown command
    CHECK(run("trajectory --upsilon 0.3 --dt 0.5 --t-final 1 --out /tmp/x.csv") == 1);  // dt cap
    CHECK(run("trajectory --upsilon 0.3 --dt 1e-3 --t-final 0.01 "
              "--out /nonexistent_dir/x.csv") == 3);                   // unwritable path
    CHECK(run("--version") == 0);
}
