// pcpfit: fit Poisson CP tensor models, assemble Fisher information
// matrices, and reproduce the Monte Carlo and rank experiments.
//
// Exit codes: 0 ok, 1 input error, 2 non-convergence, 3 resource cap,
// 64 usage error.

#include "pcp/em.hpp"
#include "pcp/experiments.hpp"
#include "pcp/fisher.hpp"
#include "pcp/io.hpp"
#include "pcp/montecarlo.hpp"
#include "pcp/rank_one.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNoConverge = 2;
constexpr int kExitResourceCap = 3;
constexpr int kExitUsage = 64;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

struct FitArgs {
    std::string tensor_file;
    std::string out_dir = ".";
    int rank = 1;
    std::string schedule = "mcecm";
    int inner = 10;
    double tol = 1e-8;
    int max_iter = 500;
    std::uint64_t seed = 0;
};

int run_fit(const FitArgs& a) {
    Timer timer;
    const pcp::DenseTensor x = pcp::read_tensor_json(a.tensor_file, /*require_counts=*/true);
    pcp::FitConfig cfg;
    cfg.schedule = a.schedule == "ecm" ? pcp::Schedule::ecm : pcp::Schedule::mcecm;
    cfg.inner_iters = a.inner;
    cfg.tol = a.tol;
    cfg.max_outer = a.max_iter;
    cfg.seed = a.seed;
    const pcp::KruskalModel init = pcp::random_init(x.dims(), a.rank, x.sum(), a.seed);
    auto [model, trace] = pcp::fit(x, init, cfg);
    if (trace.zero_marginal_warning)
        std::cerr << "pcpfit fit: warning: some mode marginal has a zero entry; "
                     "the rank-one closed form requires positive marginals\n";
    if (!trace.abort_reason.empty())
        std::cerr << "pcpfit fit: aborted: " << trace.abort_reason << "\n";

    const std::string model_path = out_path(a.out_dir, "model.json");
    const std::string trace_path = out_path(a.out_dir, "trace.csv");
    pcp::write_model_json(model_path, model);
    pcp::write_trace_csv(trace_path, trace);
    pcp::RunManifest manifest;
    manifest.command = "fit";
    manifest.config = {{"rank", a.rank},       {"schedule", a.schedule},
                       {"inner", a.inner},     {"tol", a.tol},
                       {"max_iter", a.max_iter}};
    manifest.seed = a.seed;
    manifest.inputs = {a.tensor_file};
    manifest.outputs = {model_path, trace_path};
    manifest.wall_seconds = timer.seconds();
    pcp::write_manifest(out_path(a.out_dir, "manifest.json"), manifest);

    if (!trace.abort_reason.empty()) return kExitInput;
    return trace.converged ? kExitOk : kExitNoConverge;
}

struct FimArgs {
    std::string model_file;
    std::string tensor_file;
    std::string out_dir = ".";
    bool observed = false;
    bool expected = false;
    bool rank_verdict = false;
    bool write_matrix = false;
    Eigen::Index order_cap = pcp::kDefaultFimOrderCap;
};

int run_fim(const FimArgs& a) {
    Timer timer;
    const pcp::KruskalModel model = pcp::read_model_json(a.model_file);
    pcp::FisherMatrix f;
    if (a.observed) {
        const pcp::DenseTensor x = pcp::read_tensor_json(a.tensor_file, /*require_counts=*/true);
        f = pcp::fim(model, x, a.order_cap);
    } else {
        f = pcp::fim(model, a.order_cap);
    }

    pcp::RunManifest manifest;
    manifest.command = "fim";
    manifest.config = {{"kind", a.observed ? "observed" : "expected"},
                       {"rank_verdict", a.rank_verdict},
                       {"write_matrix", a.write_matrix},
                       {"order_cap", a.order_cap}};
    manifest.inputs = {a.model_file};
    if (a.observed) manifest.inputs.push_back(a.tensor_file);

    if (a.write_matrix) {
        const std::string p = out_path(a.out_dir, "fim.json");
        pcp::write_fim_json(p, f);
        manifest.outputs.push_back(p);
    }
    const pcp::RankVerdict v = pcp::numerical_rank(f);
    const std::string eig_path = out_path(a.out_dir, "eigenvalues.csv");
    pcp::write_eigenvalues_csv(eig_path, v.eigenvalues);
    manifest.outputs.push_back(eig_path);
    if (a.rank_verdict) {
        const std::string p = out_path(a.out_dir, "rank_verdict.json");
        pcp::detail::save_json(p, pcp::rank_verdict_json(v, f.kind));
        manifest.outputs.push_back(p);
        std::cout << "numerical rank " << v.numerical_rank << ", conjectured "
                  << v.conjectured_rank << "\n";
    }
    manifest.wall_seconds = timer.seconds();
    pcp::write_manifest(out_path(a.out_dir, "manifest.json"), manifest);
    return kExitOk;
}

struct McArgs {
    std::string out_dir = ".";
    int n = 10;
    int p = 3;
    double s = 1.0;
    std::vector<int> r_values{1, 2};
    std::vector<int> k_values{4, 16, 64, 256, 1024};
    int reps = 100;
    std::uint64_t seed = 0;
};

int run_mc_validate(const McArgs& a) {
    Timer timer;
    pcp::McGrid grid;
    grid.n_values = {a.n};
    grid.s_values = {a.s};
    grid.r_values = a.r_values;
    grid.k_values = a.k_values;
    grid.p = a.p;
    const auto rows = pcp::run_experiment_mc_fim(grid, a.reps, a.seed);
    const std::string csv = out_path(a.out_dir, "mc_fim.csv");
    pcp::write_experiment_csv(csv, rows);

    pcp::RunManifest manifest;
    manifest.command = "mc-validate";
    manifest.config = {{"N", a.n}, {"P", a.p}, {"S", a.s},      {"R", a.r_values},
                       {"K", a.k_values},      {"reps", a.reps}};
    manifest.seed = a.seed;
    manifest.outputs = {csv};
    manifest.wall_seconds = timer.seconds();
    pcp::write_manifest(out_path(a.out_dir, "manifest.json"), manifest);
    return kExitOk;
}

struct RankSweepArgs {
    std::string out_dir = ".";
    std::vector<int> p_values{2, 3};
    std::vector<int> n_values{10, 25};
    std::vector<int> r_values{1, 2, 3, 4};
    double s = 4.0;
    int reps = 10;
    std::uint64_t seed = 0;
    Eigen::Index order_cap = pcp::kDefaultFimOrderCap;
};

int run_rank_sweep(const RankSweepArgs& a) {
    Timer timer;
    pcp::RankGrid grid;
    grid.p_values = a.p_values;
    grid.n_values = a.n_values;
    grid.r_values = a.r_values;
    grid.s = a.s;
    const auto rows = pcp::run_experiment_rank(grid, a.reps, a.seed, a.order_cap);
    const std::string csv = out_path(a.out_dir, "rank_sweep.csv");
    pcp::write_experiment_csv(csv, rows);

    pcp::RunManifest manifest;
    manifest.command = "rank-sweep";
    manifest.config = {{"P", a.p_values}, {"N", a.n_values}, {"R", a.r_values},
                       {"S", a.s},        {"reps", a.reps},  {"order_cap", a.order_cap}};
    manifest.seed = a.seed;
    manifest.outputs = {csv};
    manifest.wall_seconds = timer.seconds();
    pcp::write_manifest(out_path(a.out_dir, "manifest.json"), manifest);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson CP tensor fitting and Fisher information diagnostics"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "Fit a PCP model by EM");
    fit->add_option("tensor", fit_args.tensor_file, "count tensor JSON file")->required();
    fit->add_option("--rank", fit_args.rank, "CP rank (>= 1)")->check(CLI::PositiveNumber);
    fit->add_option("--schedule", fit_args.schedule, "ecm|mcecm")
        ->check(CLI::IsMember({"ecm", "mcecm"}));
    fit->add_option("--inner", fit_args.inner, "CM repeats per cycle (mcecm)")
        ->check(CLI::PositiveNumber);
    fit->add_option("--tol", fit_args.tol, "relative loglikelihood tolerance");
    fit->add_option("--max-iter", fit_args.max_iter, "max outer iterations")
        ->check(CLI::PositiveNumber);
    fit->add_option("--seed", fit_args.seed, "initialization seed");
    fit->add_option("--out", fit_args.out_dir, "output directory");

    FimArgs fim_args;
    CLI::App* fimc = app.add_subcommand("fim", "Assemble a Fisher information matrix");
    fimc->add_option("model", fim_args.model_file, "model JSON file")->required();
    fimc->add_option("tensor", fim_args.tensor_file, "count tensor JSON (observed only)");
    fimc->add_flag("--observed", fim_args.observed, "observed information (needs tensor)");
    fimc->add_flag("--expected", fim_args.expected, "expected information (default)");
    fimc->add_flag("--rank-verdict", fim_args.rank_verdict, "write the rank verdict JSON");
    fimc->add_flag("--write-matrix", fim_args.write_matrix, "write the dense matrix JSON");
    fimc->add_option("--order-cap", fim_args.order_cap, "dense order limit");
    fimc->add_option("--out", fim_args.out_dir, "output directory");

    McArgs mc_args;
    CLI::App* mc = app.add_subcommand("mc-validate",
                                      "Monte Carlo validation of the expected information");
    mc->add_option("--n", mc_args.n, "mode size N")->check(CLI::PositiveNumber);
    mc->add_option("--p", mc_args.p, "tensor order P")->check(CLI::Range(2, 8));
    mc->add_option("--s", mc_args.s, "target mean entry S");
    mc->add_option("--r", mc_args.r_values, "ranks to test");
    mc->add_option("--k", mc_args.k_values, "Monte Carlo sample counts");
    mc->add_option("--reps", mc_args.reps, "repetitions per cell")->check(CLI::PositiveNumber);
    mc->add_option("--seed", mc_args.seed, "seed");
    mc->add_option("--out-dir", mc_args.out_dir, "output directory");

    RankSweepArgs rs_args;
    CLI::App* rs = app.add_subcommand("rank-sweep", "Numerical vs conjectured FIM rank");
    rs->add_option("--p", rs_args.p_values, "tensor orders");
    rs->add_option("--n", rs_args.n_values, "mode sizes");
    rs->add_option("--r", rs_args.r_values, "ranks");
    rs->add_option("--s", rs_args.s, "target mean entry S");
    rs->add_option("--reps", rs_args.reps, "models per cell")->check(CLI::PositiveNumber);
    rs->add_option("--seed", rs_args.seed, "seed");
    rs->add_option("--order-cap", rs_args.order_cap, "dense order limit");
    rs->add_option("--out-dir", rs_args.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (fit->parsed()) return run_fit(fit_args);
        if (fimc->parsed()) {
            if (fim_args.observed && fim_args.expected) {
                std::cerr << "pcpfit fim: choose one of --observed / --expected\n";
                return kExitUsage;
            }
            if (fim_args.observed && fim_args.tensor_file.empty()) {
                std::cerr << "pcpfit fim: --observed requires a tensor file\n";
                return kExitUsage;
            }
            return run_fim(fim_args);
        }
        if (mc->parsed()) {
            if (mc_args.r_values.empty() || mc_args.k_values.empty()) {
                std::cerr << "pcpfit mc-validate: empty grid\n";
                return kExitUsage;
            }
            return run_mc_validate(mc_args);
        }
        if (rs->parsed()) {
            if (rs_args.p_values.empty() || rs_args.n_values.empty() ||
                rs_args.r_values.empty()) {
                std::cerr << "pcpfit rank-sweep: empty grid\n";
                return kExitUsage;
            }
            return run_rank_sweep(rs_args);
        }
    } catch (const pcp::FimOrderError& e) {
        std::cerr << "pcpfit: " << e.what() << "\n";
        return kExitResourceCap;
    } catch (const pcp::IoError& e) {
        std::cerr << "pcpfit: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "pcpfit: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;
}
