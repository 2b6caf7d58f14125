// Command-line front end for the KdV tracking experiment and the box-QP solver.
//
// Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure,
// 4 plant instability.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kmpc/boxqp.hpp"
#include "kmpc/condensed_mpc.hpp"
#include "kmpc/errors.hpp"
#include "kmpc/harness.hpp"
#include "kmpc/svg_report.hpp"
#include "kmpc/text_io.hpp"

namespace fs = std::filesystem;
using namespace kmpc;

namespace {

struct Paths {
    std::string config;
    std::string out;
};

harness::ExperimentConfig load(const Paths& p) {
    auto cfg = p.config.empty() ? harness::ExperimentConfig{} : harness::ExperimentConfig::load(p.config);
    if (!p.out.empty()) {
        cfg.output_dir = p.out;
    }
    return cfg;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    return out;
}

koopman::SnapshotDataset load_dataset(const fs::path& path) {
    auto in = open_in(path);
    return io::read_dataset_csv(in);
}

koopman::LiftedPredictor load_predictor(const fs::path& path) {
    auto in = open_in(path);
    return io::read_predictor(in);
}

int generate_data(const Paths& p) {
    const auto cfg = load(p);
    const auto start = std::chrono::steady_clock::now();
    harness::GenerationStats stats;
    const auto data = harness::generate_dataset(cfg, &stats);
    const fs::path path = cfg.output_dir / "dataset.csv";
    auto out = open_out(path);
    io::write_dataset_csv(out, data);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "wrote " << data.size() << " transitions to " << path.string() << " ("
              << stats.discarded_trajectories << " trajectories redrawn, " << secs << " s)\n";
    return 0;
}

int fit(const Paths& p, const std::string& dataset) {
    const auto cfg = load(p);
    const fs::path data_path = dataset.empty() ? cfg.output_dir / "dataset.csv" : fs::path(dataset);
    const auto data = load_dataset(data_path);
    const auto predictor = harness::fit_experiment_predictor(data);

    const Eigen::MatrixXd psi = predictor.observable.lift_columns(data.X);
    const Eigen::MatrixXd psi_next = predictor.observable.lift_columns(data.X_plus);
    const double residual = (psi_next - predictor.A * psi - predictor.B * data.U).norm() /
                            std::max(psi_next.norm(), 1e-300);

    const fs::path path = cfg.output_dir / "predictor.txt";
    auto out = open_out(path);
    io::write_predictor(out, predictor);
    std::cout << "fitted n_psi = " << predictor.n_psi() << " from " << data.size()
              << " transitions, relative one-step residual " << residual << "\nwrote "
              << path.string() << '\n';
    return 0;
}

int certify(const Paths& p) {
    const auto cfg = load(p);
    const auto cert = mpc::certificate(harness::experiment_dims(cfg), cfg.epsilon, cfg.flop_rate);
    const std::string report = cert.report();
    io::write_file(cfg.output_dir / "certificate.txt", report);
    std::cout << report;
    return 0;
}

int simulate(const Paths& p, const std::string& predictor_file, bool dump_condensed) {
    const auto cfg = load(p);
    const fs::path pred_path =
        predictor_file.empty() ? cfg.output_dir / "predictor.txt" : fs::path(predictor_file);
    const auto predictor = load_predictor(pred_path);
    const auto condensed = mpc::build_condensed(predictor, harness::experiment_weights(cfg),
                                                harness::experiment_scaling(cfg));
    if (dump_condensed) {
        auto out = open_out(cfg.output_dir / "condensed.txt");
        io::write_condensed(out, condensed);
    }

    auto traj = open_out(cfg.output_dir / "closed_loop.csv");
    auto diag = open_out(cfg.output_dir / "diagnostics.csv");
    harness::ClosedLoopWriter writer(traj, diag, cfg.plant.nodes, cfg.n_inputs());
    const auto start = std::chrono::steady_clock::now();
    const auto log = harness::run_closed_loop(cfg, predictor, condensed,
                                              [&](const harness::StepRecord& r) { writer.write(r); });
    writer.finish(static_cast<double>(log.steps.size()) * log.dt, log.final_state);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto m = harness::compute_metrics(log);
    std::cout << "simulated " << log.steps.size() << " steps in " << secs << " s, max_step_flops "
              << m.max_step_flops << '\n';
    return 0;
}

int metrics(const Paths& p, bool svg) {
    const auto cfg = load(p);
    auto traj = open_in(cfg.output_dir / "closed_loop.csv");
    auto diag = open_in(cfg.output_dir / "diagnostics.csv");
    const auto log =
        harness::read_closed_loop(traj, diag, static_cast<int>(cfg.reference_values.size()));
    const auto m = harness::compute_metrics(log);
    const std::string report = m.report();
    io::write_file(cfg.output_dir / "metrics.txt", report);
    std::cout << report;
    if (svg) {
        const fs::path path = cfg.output_dir / "closed_loop.svg";
        io::write_file(path, report::closed_loop_svg(log));
        std::cout << "wrote " << path.string() << '\n';
    }
    return 0;
}

int solve_qp(const std::string& problem, double epsilon, bool early_exit, const std::string& out_file) {
    boxqp::BoxQP qp;
    if (problem == "-") {
        qp = io::read_box_qp(std::cin);
    } else {
        auto in = open_in(problem);
        qp = io::read_box_qp(in);
    }
    boxqp::SolverConfig cfg;
    cfg.epsilon = epsilon;
    cfg.early_exit = early_exit;
    const auto sol = boxqp::solve(qp, cfg);
    std::ostringstream text;
    io::write_solution(text, sol);
    if (out_file.empty()) {
        std::cout << text.str();
    } else {
        io::write_file(out_file, text.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified Koopman MPC for the controlled KdV equation"};
    app.require_subcommand(1);

    Paths paths;
    auto add_paths = [&](CLI::App* sub) {
        sub->add_option("-c,--config", paths.config, "experiment config (# kmpc-config v1)")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", paths.out, "output directory, overrides output_dir");
    };

    auto* gen = app.add_subcommand("generate-data", "simulate open-loop trajectories to dataset.csv");
    add_paths(gen);

    std::string dataset;
    auto* fit_cmd = app.add_subcommand("fit", "identify the lifted predictor to predictor.txt");
    add_paths(fit_cmd);
    fit_cmd->add_option("--dataset", dataset, "dataset CSV, default <out>/dataset.csv");

    auto* cert_cmd = app.add_subcommand("certify", "write the per-step FLOP certificate");
    add_paths(cert_cmd);

    std::string predictor_file;
    bool dump_condensed = false;
    auto* sim = app.add_subcommand("simulate", "run the closed loop and log it as CSV");
    add_paths(sim);
    sim->add_option("--predictor", predictor_file, "predictor file, default <out>/predictor.txt");
    sim->add_flag("--dump-condensed", dump_condensed, "also write condensed.txt with H and S");

    bool svg = false;
    auto* met = app.add_subcommand("metrics", "tracking metrics from a logged closed loop");
    add_paths(met);
    met->add_flag("--svg", svg, "also render closed_loop.svg");

    std::string problem;
    double epsilon = 1e-6;
    bool early_exit = false;
    std::string solution_out;
    auto* qp = app.add_subcommand("solve-qp", "solve one box QP read from a file or '-'");
    qp->add_option("problem", problem, "problem file: n, then H row by row, then h")->required();
    qp->add_option("--epsilon", epsilon, "duality-gap tolerance");
    qp->add_flag("--early-exit", early_exit, "stop once the gap bound is met");
    qp->add_option("--out", solution_out, "write the solution here instead of stdout");

    auto* run = app.add_subcommand("run", "generate-data, fit, certify, simulate and metrics");
    add_paths(run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            return generate_data(paths);
        }
        if (fit_cmd->parsed()) {
            return fit(paths, dataset);
        }
        if (cert_cmd->parsed()) {
            return certify(paths);
        }
        if (sim->parsed()) {
            return simulate(paths, predictor_file, dump_condensed);
        }
        if (met->parsed()) {
            return metrics(paths, svg);
        }
        if (qp->parsed()) {
            return solve_qp(problem, epsilon, early_exit, solution_out);
        }
        if (run->parsed()) {
            generate_data(paths);
            fit(paths, {});
            certify(paths);
            simulate(paths, {}, false);
            return metrics(paths, true);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
