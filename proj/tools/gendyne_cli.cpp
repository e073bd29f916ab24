// Command-line front end: reproducible trajectory/ensemble runs, POVM and
// measurement-scheme audits, steady-state scans, CSV/JSON export.
//
// Exit codes: 0 success, 1 config error, 2 numerical/audit failure, 3 IO error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "gendyne/gendyne.hpp"

using gendyne::Complex;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), f_(std::fopen(path.c_str(), "w")) {
        if (!f_) throw IoError("cannot open " + path + " for writing");
    }
    ~CsvWriter() {
        if (f_) std::fclose(f_);
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i)
            std::fprintf(f_, "%s%s", cells[i].c_str(), i + 1 < cells.size() ? "," : "\n");
    }
    void close() {
        if (f_ && std::fclose(f_) != 0) {
            f_ = nullptr;
            throw IoError("write failure on " + path_);
        }
        f_ = nullptr;
    }

private:
    std::string path_;
    FILE* f_ = nullptr;
};

void write_text(const std::string& path, const std::string& text) {
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open " + path + " for writing");
    const size_t n = std::fwrite(text.data(), 1, text.size(), f);
    if (std::fclose(f) != 0 || n != text.size()) throw IoError("write failure on " + path);
}

void write_manifest(const std::string& out_path, const json& manifest) {
    write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

std::string stem_of(const std::string& path) {
    const size_t dot = path.rfind('.');
    const size_t slash = path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

gendyne::Engine parse_engine(const std::string& name) {
    if (name == "fock") return gendyne::Engine::fock;
    if (name == "gaussian") return gendyne::Engine::gaussian;
    if (name == "both") return gendyne::Engine::both;
    throw std::invalid_argument("engine must be fock, gaussian or both");
}

struct CommonOpts {
    double upsilon = 0.0;
    double n_bath = 0.0;
    double dt = 1e-3;
    double t_final = 1.0;
    int n_traj = 100;
    int dim = 40;
    std::uint64_t seed = 0;
    std::string engine = "fock";
    std::string out;
    std::string format = "csv";
    std::string init = "vacuum";
    double alpha_re = 0.0, alpha_im = 0.0;
    double init_n = 0.0;
};

void add_physics_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--upsilon", o.upsilon, "general-dyne parameter in [-1,1]")
        ->check(CLI::Range(-1.0, 1.0));
    cmd->add_option("--n-bath", o.n_bath, "bath thermal occupation N >= 0")
        ->check(CLI::NonNegativeNumber);
}

void add_run_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--dt", o.dt, "time step (inverse damping-rate units)");
    cmd->add_option("--t-final", o.t_final, "total evolution time");
    cmd->add_option("--dim", o.dim, "Fock truncation dimension");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--init", o.init, "initial state: vacuum|coherent|thermal|fock");
    cmd->add_option("--alpha-re", o.alpha_re, "coherent amplitude, real part");
    cmd->add_option("--alpha-im", o.alpha_im, "coherent amplitude, imaginary part");
    cmd->add_option("--init-n", o.init_n, "thermal occupation or Fock level of the initial state");
}

gendyne::InitialState parse_init(const CommonOpts& o) {
    if (o.init == "vacuum") return gendyne::InitialState::vacuum();
    if (o.init == "coherent") return gendyne::InitialState::coherent({o.alpha_re, o.alpha_im});
    if (o.init == "thermal") return gendyne::InitialState::thermal(o.init_n);
    if (o.init == "fock") return gendyne::InitialState::fock(static_cast<int>(o.init_n));
    throw std::invalid_argument("init must be vacuum, coherent, thermal or fock");
}

json parameters_json(const CommonOpts& o, int n_steps) {
    json p;
    p["upsilon"] = o.upsilon;
    p["n_bath"] = o.n_bath;
    p["dt"] = o.dt;
    p["t_final"] = o.t_final;
    p["n_steps"] = n_steps;
    p["n_traj"] = o.n_traj;
    p["dim"] = o.dim;
    p["seed"] = o.seed;
    p["engine"] = o.engine;
    p["init"] = o.init;
    p["alpha_re"] = o.alpha_re;
    p["alpha_im"] = o.alpha_im;
    p["init_n"] = o.init_n;
    p["format"] = o.format;
    return p;
}

void write_trajectory_csv(const std::string& path, const gendyne::TrajectoryRecord& rec) {
    CsvWriter csv(path);
    csv.row({"t", "dw1", "dw2", "theta1", "theta2", "mean_q", "mean_p", "var_q", "var_p",
             "cov_qp", "trace_err"});
    for (size_t k = 0; k < rec.times.size(); ++k) {
        // a degenerate channel's columns stay empty rather than printing zeros
        const std::string dw1 = rec.theta1_degenerate ? "" : fmt(rec.dw1[k]);
        const std::string th1 = rec.theta1_degenerate ? "" : fmt(rec.theta1[k]);
        const std::string dw2 = rec.theta2_degenerate ? "" : fmt(rec.dw2[k]);
        const std::string th2 = rec.theta2_degenerate ? "" : fmt(rec.theta2[k]);
        csv.row({fmt(rec.times[k]), dw1, dw2, th1, th2, fmt(rec.mean_q[k]), fmt(rec.mean_p[k]),
                 fmt(rec.var_q[k]), fmt(rec.var_p[k]), fmt(rec.cov_qp[k]), fmt(rec.trace_err[k])});
    }
    csv.close();
}

json trajectory_json_rows(const gendyne::TrajectoryRecord& rec) {
    json rows = json::array();
    for (size_t k = 0; k < rec.times.size(); ++k) {
        json r;
        r["t"] = rec.times[k];
        if (!rec.theta1_degenerate) {
            r["dw1"] = rec.dw1[k];
            r["theta1"] = rec.theta1[k];
        }
        if (!rec.theta2_degenerate) {
            r["dw2"] = rec.dw2[k];
            r["theta2"] = rec.theta2[k];
        }
        r["mean_q"] = rec.mean_q[k];
        r["mean_p"] = rec.mean_p[k];
        r["var_q"] = rec.var_q[k];
        r["var_p"] = rec.var_p[k];
        r["cov_qp"] = rec.cov_qp[k];
        r["trace_err"] = rec.trace_err[k];
        rows.push_back(std::move(r));
    }
    return rows;
}

int cmd_trajectory(const CommonOpts& o) {
    const int n_steps = static_cast<int>(std::llround(o.t_final / o.dt));
    gendyne::SmeConfig cfg;
    cfg.unravelling = gendyne::Unravelling(o.upsilon, o.n_bath);
    cfg.dt = o.dt;
    cfg.n_steps = n_steps;
    cfg.dim = o.dim;
    cfg.seed = o.seed;
    cfg.init = parse_init(o);
    cfg.validate();
    const gendyne::Engine engine = parse_engine(o.engine);

    json manifest;
    manifest["command"] = "trajectory";
    manifest["version"] = gendyne::kVersion;
    manifest["parameters"] = parameters_json(o, n_steps);
    json outputs = json::array();

    auto emit = [&](const gendyne::TrajectoryRecord& rec, const std::string& path) {
        if (o.format == "json")
            write_text(path, trajectory_json_rows(rec).dump(2) + "\n");
        else
            write_trajectory_csv(path, rec);
        outputs.push_back(path);
    };

    if (engine == gendyne::Engine::both) {
        cfg.engine = gendyne::Engine::fock;
        const gendyne::TrajectoryRecord fock = gendyne::run_trajectory(cfg);
        cfg.engine = gendyne::Engine::gaussian;
        const gendyne::TrajectoryRecord gauss = gendyne::run_trajectory(cfg);
        const std::string stem = stem_of(o.out);
        const std::string ext = o.format == "json" ? ".json" : ".csv";
        emit(fock, stem + ".fock" + ext);
        emit(gauss, stem + ".gaussian" + ext);
        double dmq = 0, dmp = 0, dvq = 0, dvp = 0;
        for (size_t k = 0; k < fock.times.size(); ++k) {
            dmq = std::max(dmq, std::abs(fock.mean_q[k] - gauss.mean_q[k]));
            dmp = std::max(dmp, std::abs(fock.mean_p[k] - gauss.mean_p[k]));
            dvq = std::max(dvq, std::abs(fock.var_q[k] - gauss.var_q[k]));
            dvp = std::max(dvp, std::abs(fock.var_p[k] - gauss.var_p[k]));
        }
        json diff;
        diff["max_abs_diff_mean_q"] = dmq;
        diff["max_abs_diff_mean_p"] = dmp;
        diff["max_abs_diff_var_q"] = dvq;
        diff["max_abs_diff_var_p"] = dvp;
        manifest["summary"] = {{"engine_diff", diff}};
        manifest["outputs"] = outputs;
        write_manifest(o.out, manifest);
        return kExitOk;
    }

    cfg.engine = engine;
    const gendyne::TrajectoryRecord rec = gendyne::run_trajectory(cfg);
    emit(rec, o.out);
    manifest["outputs"] = outputs;
    json summary;
    summary["theta1_degenerate"] = rec.theta1_degenerate;
    summary["theta2_degenerate"] = rec.theta2_degenerate;
    summary["final_mean_n"] = rec.mean_n.back();
    manifest["summary"] = summary;
    write_manifest(o.out, manifest);
    return kExitOk;
}

int cmd_ensemble(const CommonOpts& o, int stride) {
    const int n_steps = static_cast<int>(std::llround(o.t_final / o.dt));
    gendyne::SmeConfig cfg;
    cfg.unravelling = gendyne::Unravelling(o.upsilon, o.n_bath);
    cfg.dt = o.dt;
    cfg.n_steps = n_steps;
    cfg.dim = o.dim;
    cfg.seed = o.seed;
    cfg.init = parse_init(o);
    cfg.engine = parse_engine(o.engine);
    cfg.validate();
    if (cfg.engine == gendyne::Engine::both)
        throw std::invalid_argument("ensemble: engine must be fock or gaussian");

    const gendyne::EnsembleStats stats = gendyne::run_ensemble(cfg, o.n_traj, stride);

    if (o.format == "json") {
        json rows = json::array();
        for (size_t c = 0; c < stats.times.size(); ++c)
            rows.push_back({{"t", stats.times[c]},
                            {"mean_n", stats.mean_n[c]},
                            {"se_n", stats.se_n[c]},
                            {"mean_q", stats.mean_q[c]},
                            {"se_q", stats.se_q[c]},
                            {"mean_p", stats.mean_p[c]},
                            {"se_p", stats.se_p[c]},
                            {"mean_var_q", stats.mean_var_q[c]},
                            {"mean_var_p", stats.mean_var_p[c]},
                            {"mean_cov_qp", stats.mean_cov_qp[c]}});
        write_text(o.out, rows.dump(2) + "\n");
    } else {
        CsvWriter csv(o.out);
        csv.row({"t", "mean_n", "se_n", "mean_q", "se_q", "mean_p", "se_p", "mean_var_q",
                 "mean_var_p", "mean_cov_qp"});
        for (size_t c = 0; c < stats.times.size(); ++c)
            csv.row({fmt(stats.times[c]), fmt(stats.mean_n[c]), fmt(stats.se_n[c]),
                     fmt(stats.mean_q[c]), fmt(stats.se_q[c]), fmt(stats.mean_p[c]),
                     fmt(stats.se_p[c]), fmt(stats.mean_var_q[c]), fmt(stats.mean_var_p[c]),
                     fmt(stats.mean_cov_qp[c])});
        csv.close();
    }

    json manifest;
    manifest["command"] = "ensemble";
    manifest["version"] = gendyne::kVersion;
    manifest["parameters"] = parameters_json(o, n_steps);
    manifest["parameters"]["checkpoint_stride"] = stride;
    manifest["outputs"] = json::array({o.out});
    write_manifest(o.out, manifest);
    return kExitOk;
}

int cmd_povm_audit(const CommonOpts& o, double radius, int grid_points, int residual_dim) {
    if (std::abs(o.upsilon) > 1.0 - gendyne::kHomodyneEps)
        throw std::invalid_argument("povm-audit: |upsilon| too close to 1 (homodyne branch)");

    json audits;
    bool pass = true;

    {  // completeness of the POVM on the truncated space
        const gendyne::CompletenessAudit audit =
            gendyne::povm_completeness(o.upsilon, o.dim, radius, grid_points);
        const bool ok = audit.max_deviation < 1e-3;
        pass = pass && ok;
        audits["completeness"] = {{"max_deviation", audit.max_deviation},
                                  {"tolerance", 1e-3},
                                  {"grid_radius", radius},
                                  {"grid_points", grid_points},
                                  {"pass", ok}};
    }

    {  // eigen-relation residuals
        const int dim = residual_dim > 0 ? residual_dim : (std::abs(o.upsilon) > 0.6 ? 768 : 150);
        json residuals = json::array();
        double worst = 0.0;
        for (const auto& th :
             {gendyne::GendyneOutcome{0, 0}, gendyne::GendyneOutcome{1, 0}, gendyne::GendyneOutcome{1, 1}}) {
            const gendyne::CVec v = gendyne::povm_eigenvector(th, o.upsilon, dim);
            const double res = gendyne::eigen_residual(v, th.value(), o.upsilon);
            worst = std::max(worst, res);
            residuals.push_back({{"theta1", th.theta1}, {"theta2", th.theta2}, {"residual", res}});
        }
        const bool ok = worst < 1e-6;
        pass = pass && ok;
        audits["eigen_residual"] = {{"dim", dim},
                                    {"worst", worst},
                                    {"tolerance", 1e-6},
                                    {"grid", residuals},
                                    {"pass", ok}};
    }

    {  // outcome covariance against the closed forms
        const gendyne::Unravelling unr(o.upsilon, o.n_bath);
        const Eigen::Matrix2d cov = gendyne::thermal_outcome_covariance(unr);
        const double dev =
            std::max(std::abs(cov(0, 0) - unr.l1()), std::abs(cov(1, 1) - unr.l2()));
        const bool ok = dev < 1e-8;
        pass = pass && ok;
        audits["outcome_covariance"] = {{"var_theta1", cov(0, 0)},
                                        {"var_theta2", cov(1, 1)},
                                        {"l1", unr.l1()},
                                        {"l2", unr.l2()},
                                        {"max_deviation", dev},
                                        {"tolerance", 1e-8},
                                        {"pass", ok}};
    }

    json report;
    report["command"] = "povm-audit";
    report["version"] = gendyne::kVersion;
    report["parameters"] = {{"upsilon", o.upsilon}, {"n_bath", o.n_bath}, {"dim", o.dim},
                            {"seed", o.seed}};
    report["audits"] = audits;
    report["pass"] = pass;

    const std::string text = report.dump(2) + "\n";
    if (!o.out.empty()) {
        write_text(o.out, text);
        write_manifest(o.out, report);
    }
    std::fputs(text.c_str(), stdout);
    return pass ? kExitOk : kExitNumerical;
}

int cmd_scheme_check(const CommonOpts& o) {
    if (std::abs(o.upsilon) > 1.0 - gendyne::kHomodyneEps)
        throw std::invalid_argument("scheme-check: |upsilon| too close to 1 (homodyne branch)");

    json audits;
    bool pass = true;

    const double t = gendyne::transmissivity_for(o.upsilon);
    audits["transmissivity"] = {{"value", t}, {"formula", "(1+upsilon)/2"}};

    {  // eigen-residual of D(beta)S(r)|0> across the raw-outcome grid
        json rows = json::array();
        double worst = 0.0;
        for (const Complex z : {Complex{0, 0}, Complex{1, 0}, Complex{1, 1}}) {
            const gendyne::SchemeEigenstate p = gendyne::eigenstate_params(z, t);
            gendyne::CVec v = gendyne::displaced_squeezed_vector(p.beta, p.r, o.dim);
            v /= v.norm();
            const double res = gendyne::eigen_residual(v, p.theta(), o.upsilon);
            worst = std::max(worst, res);
            rows.push_back({{"z1", z.real()}, {"z2", z.imag()}, {"residual", res}});
        }
        const bool ok = worst < 1e-6;
        pass = pass && ok;
        audits["eigen_residual"] = {{"dim", o.dim},
                                    {"worst", worst},
                                    {"tolerance", 1e-6},
                                    {"grid", rows},
                                    {"pass", ok}};
    }

    {  // finite-squeezing pipeline versus direct and POVM constructions
        const gendyne::SchemeCrosscheck cc =
            gendyne::scheme_povm_crosscheck(o.upsilon, {1.0, 0.0}, std::max(o.dim, 120));
        json curve = json::array();
        for (size_t i = 0; i < cc.s_grid.size(); ++i)
            curve.push_back({{"s", cc.s_grid[i]}, {"overlap", cc.pipeline_overlaps[i]}});
        const bool ok = cc.min_overlap() > 1.0 - 1e-5;
        pass = pass && ok;
        audits["crosscheck"] = {{"overlap_pipeline_direct", cc.overlap_pipeline_direct},
                                {"overlap_direct_povm", cc.overlap_direct_povm},
                                {"overlap_pipeline_povm", cc.overlap_pipeline_povm},
                                {"s_curve", curve},
                                {"tolerance", 1e-5},
                                {"pass", ok}};
    }

    json report;
    report["command"] = "scheme-check";
    report["version"] = gendyne::kVersion;
    report["parameters"] = {{"upsilon", o.upsilon}, {"dim", o.dim}};
    report["audits"] = audits;
    report["pass"] = pass;

    const std::string text = report.dump(2) + "\n";
    if (!o.out.empty()) {
        write_text(o.out, text);
        write_manifest(o.out, report);
    }
    std::fputs(text.c_str(), stdout);
    return pass ? kExitOk : kExitNumerical;
}

int cmd_scheme_sample(const CommonOpts& o, int n_samples) {
    const gendyne::Unravelling unr(o.upsilon, o.n_bath);
    gendyne::RngStream rng(o.seed);
    const gendyne::GaussianState bath = gendyne::make_thermal(o.n_bath);

    double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
    std::vector<gendyne::GendyneOutcome> outcomes;
    outcomes.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const gendyne::GendyneOutcome out = gendyne::scheme_outcome_sample(bath, o.upsilon, rng);
        outcomes.push_back(out);
        s1 += out.theta1;
        s2 += out.theta2;
        s11 += out.theta1 * out.theta1;
        s22 += out.theta2 * out.theta2;
        s12 += out.theta1 * out.theta2;
    }
    if (o.format == "json") {
        json rows = json::array();
        for (const auto& out : outcomes)
            rows.push_back({{"theta1", out.theta1}, {"theta2", out.theta2}});
        write_text(o.out, rows.dump() + "\n");
    } else {
        CsvWriter csv(o.out);
        csv.row({"theta1", "theta2"});
        for (const auto& out : outcomes) csv.row({fmt(out.theta1), fmt(out.theta2)});
        csv.close();
    }

    json manifest;
    manifest["command"] = "scheme-sample";
    manifest["version"] = gendyne::kVersion;
    manifest["parameters"] = {{"upsilon", o.upsilon}, {"n_bath", o.n_bath},
                              {"n_samples", n_samples}, {"seed", o.seed}};
    manifest["outputs"] = json::array({o.out});
    json summary;
    summary["empirical_mean_theta1"] = s1 / n_samples;
    summary["empirical_mean_theta2"] = s2 / n_samples;
    summary["empirical_var_theta1"] = s11 / n_samples - (s1 / n_samples) * (s1 / n_samples);
    summary["empirical_var_theta2"] = s22 / n_samples - (s2 / n_samples) * (s2 / n_samples);
    summary["empirical_cov"] = s12 / n_samples - (s1 / n_samples) * (s2 / n_samples);
    summary["expected_var_theta1"] = unr.l1();
    summary["expected_var_theta2"] = unr.l2();
    manifest["summary"] = summary;
    write_manifest(o.out, manifest);
    return kExitOk;
}

int cmd_steady_scan(const CommonOpts& o, std::vector<double> upsilons, int stride) {
    if (upsilons.empty()) throw std::invalid_argument("steady-scan: need at least one upsilon");
    std::sort(upsilons.begin(), upsilons.end());
    const gendyne::Engine engine = parse_engine(o.engine);
    if (engine == gendyne::Engine::both)
        throw std::invalid_argument("steady-scan: engine must be fock or gaussian");

    const double bound = 1.0 / (2.0 * o.n_bath + 1.0);
    const double expected = 2.0 * o.n_bath + 1.0;
    const int n_steps = static_cast<int>(std::llround(o.t_final / o.dt));

    struct Row {
        double upsilon, var_q, var_q_se, var_p, var_p_se, min_var;
        bool saturated;
    };
    std::vector<Row> rows;
    for (double u : upsilons) {
        gendyne::SmeConfig cfg;
        cfg.unravelling = gendyne::Unravelling(u, o.n_bath);
        cfg.dt = o.dt;
        cfg.n_steps = n_steps;
        cfg.dim = o.dim;
        cfg.seed = o.seed;
        cfg.engine = engine;
        cfg.init = parse_init(o);
        cfg.validate();
        const gendyne::EnsembleStats stats = gendyne::run_ensemble(cfg, o.n_traj, stride);
        double mq = 0, mp = 0, vq = 0, vp = 0;
        const int n = stats.n_traj;
        for (double v : stats.steady_var_q) mq += v;
        for (double v : stats.steady_var_p) mp += v;
        mq /= n;
        mp /= n;
        for (double v : stats.steady_var_q) vq += (v - mq) * (v - mq);
        for (double v : stats.steady_var_p) vp += (v - mp) * (v - mp);
        const double se_q = n > 1 ? std::sqrt(vq / (n - 1.0) / n) : 0.0;
        const double se_p = n > 1 ? std::sqrt(vp / (n - 1.0) / n) : 0.0;
        const double min_var = std::min(mq, mp);
        rows.push_back({u, mq, se_q, mp, se_p, min_var, min_var <= bound * 1.05});
    }

    double scan_min = rows.front().min_var;
    for (const Row& r : rows) scan_min = std::min(scan_min, r.min_var);
    const bool saturated = scan_min <= bound * 1.05;

    if (o.format == "json") {
        json jrows = json::array();
        for (const Row& r : rows)
            jrows.push_back({{"upsilon", r.upsilon},
                             {"var_q", r.var_q},
                             {"var_q_se", r.var_q_se},
                             {"var_p", r.var_p},
                             {"var_p_se", r.var_p_se},
                             {"min_quad_var", r.min_var},
                             {"bound", bound},
                             {"saturated", r.saturated}});
        json doc;
        doc["rows"] = jrows;
        doc["bound"] = bound;
        doc["expected_thermal_var"] = expected;
        doc["verdict"] = saturated ? "SATURATED" : "NOT_SATURATED";
        write_text(o.out, doc.dump(2) + "\n");
    } else {
        CsvWriter csv(o.out);
        csv.row({"upsilon", "var_q", "var_q_se", "var_p", "var_p_se", "min_quad_var", "bound",
                 "saturated"});
        for (const Row& r : rows)
            csv.row({fmt(r.upsilon), fmt(r.var_q), fmt(r.var_q_se), fmt(r.var_p), fmt(r.var_p_se),
                     fmt(r.min_var), fmt(bound), r.saturated ? "1" : "0"});
        csv.close();
    }

    json manifest;
    manifest["command"] = "steady-scan";
    manifest["version"] = gendyne::kVersion;
    manifest["parameters"] = parameters_json(o, n_steps);
    manifest["parameters"]["upsilons"] = upsilons;
    manifest["parameters"]["checkpoint_stride"] = stride;
    manifest["outputs"] = json::array({o.out});
    manifest["summary"] = {{"bound", bound},
                           {"expected_thermal_var", expected},
                           {"min_over_scan", scan_min},
                           {"verdict", saturated ? "SATURATED" : "NOT_SATURATED"}};
    write_manifest(o.out, manifest);
    std::printf("steady-scan: min quadrature variance %.6g, bound %.6g -> %s\n", scan_min, bound,
                saturated ? "SATURATED" : "NOT_SATURATED");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"general-dyne unravelling simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gendyne::kVersion);

    CommonOpts o;
    int stride = 10;
    int n_samples = 100000;
    double radius = 12.0;
    int grid_points = 160;
    int residual_dim = 0;
    std::string upsilon_list;

    CLI::App* traj = app.add_subcommand("trajectory", "run one conditional trajectory");
    add_physics_flags(traj, o);
    add_run_flags(traj, o);
    traj->add_option("--engine", o.engine, "fock|gaussian|both");
    traj->add_option("--out", o.out, "output file")->required();
    traj->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* ens = app.add_subcommand("ensemble", "run a trajectory ensemble");
    add_physics_flags(ens, o);
    add_run_flags(ens, o);
    ens->add_option("--engine", o.engine, "fock|gaussian");
    ens->add_option("--n-traj", o.n_traj, "number of trajectories");
    ens->add_option("--stride", stride, "checkpoint stride in steps");
    ens->add_option("--out", o.out, "output file")->required();
    ens->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* audit = app.add_subcommand("povm-audit", "POVM completeness/residual/covariance audits");
    add_physics_flags(audit, o);
    audit->add_option("--dim", o.dim, "completeness truncation dimension");
    audit->add_option("--grid-radius", radius, "outcome-grid radius");
    audit->add_option("--grid-points", grid_points, "outcome-grid points per axis");
    audit->add_option("--residual-dim", residual_dim, "truncation for residual checks (0 = auto)");
    audit->add_option("--out", o.out, "report file (also printed to stdout)");
    audit->add_option("--format", o.format, "reports are always json")
        ->check(CLI::IsMember({"json"}));

    CLI::App* scheck = app.add_subcommand("scheme-check", "double-homodyne realisation audits");
    add_physics_flags(scheck, o);
    scheck->add_option("--dim", o.dim, "Fock truncation for the residual checks");
    scheck->add_option("--out", o.out, "report file (also printed to stdout)");
    scheck->add_option("--format", o.format, "reports are always json")
        ->check(CLI::IsMember({"json"}));

    CLI::App* ssample = app.add_subcommand("scheme-sample", "Monte-Carlo outcomes of the scheme");
    add_physics_flags(ssample, o);
    ssample->add_option("--n-samples", n_samples, "number of outcome samples");
    ssample->add_option("--seed", o.seed, "RNG seed");
    ssample->add_option("--out", o.out, "output file")->required();
    ssample->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* scan = app.add_subcommand("steady-scan", "steady conditional variance over upsilon");
    scan->add_option("--n-bath", o.n_bath, "bath occupation")->check(CLI::NonNegativeNumber);
    scan->add_option("--upsilons", upsilon_list, "comma-separated upsilon list")->required();
    add_run_flags(scan, o);
    scan->add_option("--engine", o.engine, "fock|gaussian");
    scan->add_option("--n-traj", o.n_traj, "trajectories per upsilon");
    scan->add_option("--stride", stride, "checkpoint stride in steps");
    scan->add_option("--out", o.out, "output file")->required();
    scan->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (traj->parsed()) return cmd_trajectory(o);
        if (ens->parsed()) return cmd_ensemble(o, stride);
        if (audit->parsed()) return cmd_povm_audit(o, radius, grid_points, residual_dim);
        if (scheck->parsed()) return cmd_scheme_check(o);
        if (ssample->parsed()) return cmd_scheme_sample(o, n_samples);
        if (scan->parsed()) {
            std::vector<double> upsilons;
            std::stringstream ss(upsilon_list);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (item.empty()) continue;
                const double u = std::stod(item);
                if (u < -1.0 || u > 1.0)
                    throw std::invalid_argument("steady-scan: upsilon out of [-1,1]");
                upsilons.push_back(u);
            }
            return cmd_steady_scan(o, upsilons, stride);
        }
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const gendyne::TruncationError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const gendyne::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
}
