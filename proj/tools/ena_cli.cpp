// ena: command-line front end for training, fixed points, ENA extraction and the design toolbox.

#include "ena/ena_export.hpp"
#include "ena/experiments.hpp"
#include "ena/lowdim.hpp"
#include "ena/pipeline.hpp"
#include "ena/trajectory_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include <cstring>
#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace ena;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string config;
};

fs::path resolve(const Globals& g, const std::string& file)
{
    fs::path p{file};
    if (p.is_relative() && !g.out_dir.empty()) p = fs::path{g.out_dir} / p;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
}

// --config has to be known before the other options get their defaults.
RunConfig preload_config(int argc, char** argv)
{
    for (int i = 1; i < argc; ++i) {
        std::string_view a{argv[i]};
        std::string path;
        if (a == "--config" && i + 1 < argc) path = argv[i + 1];
        else if (a.starts_with("--config=")) path = std::string{a.substr(9)};
        if (!path.empty()) return config_from_json(read_json(path));
    }
    return RunConfig{};
}

std::vector<FixedPoint> stable_only(const std::vector<FixedPoint>& fps)
{
    std::vector<FixedPoint> out;
    for (const auto& fp : fps)
        if (fp.stability == Stability::stable) out.push_back(fp);
    return out;
}

void print_census(const std::vector<FixedPoint>& fps)
{
    std::map<std::string, int> census;
    for (const auto& fp : fps) ++census[stability_name(fp)];
    fmt::print("{} fixed points:", fps.size());
    for (const auto& [k, v] : census) fmt::print(" {} {}", v, k);
    fmt::print("\n");
}

}  // namespace

int main(int argc, char** argv)
{
    RunConfig rc;
    try {
        rc = preload_config(argc, argv);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return static_cast<int>(Stage::config);
    }

    CLI::App app{"Echo state networks on flip-flop tasks: training, fixed points and excitable network attractors"};
    app.require_subcommand(1);
    Globals g;
    g.seed = rc.seed;
    app.add_option("--seed", g.seed, "Base random seed");
    app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");
    app.add_option("--config", g.config, "Run configuration JSON");

    // task
    TaskConfig task = rc.task;
    std::string task_out = "task.csv";
    auto* task_cmd = app.add_subcommand("task", "Generate a flip-flop input/target sequence as CSV");
    task_cmd->add_option("--bits", task.bits);
    task_cmd->add_option("--pulse-prob", task.pulse_prob);
    task_cmd->add_option("--length", task.length);
    task_cmd->add_option("--out", task_out);

    // train
    EsnBuildParams esn = rc.esn;
    TrainConfig tc = rc.train;
    std::string model_out = "model.json", metrics_out = "metrics.json", train_traj_out;
    auto* train_cmd = app.add_subcommand("train", "Build a random ESN and fit its read-out by ridge regression");
    train_cmd->add_option("--neurons", esn.n_r);
    train_cmd->add_option("--sparsity", esn.sparsity);
    train_cmd->add_option("--rho", esn.spectral_radius);
    train_cmd->add_option("--lambda", tc.ridge_lambda)->required();
    train_cmd->add_option("--length", tc.train_length, "Training steps");
    train_cmd->add_option("--washout", tc.washout);
    train_cmd->add_option("--noise", tc.noise_std);
    train_cmd->add_option("--test-length", tc.test_length);
    train_cmd->add_option("--bits", task.bits);
    train_cmd->add_option("--pulse-prob", task.pulse_prob);
    train_cmd->add_option("--out", model_out);
    train_cmd->add_option("--metrics", metrics_out);
    train_cmd->add_option("--traj", train_traj_out, "Also write the closed-loop test trajectory");

    // simulate
    std::string model_in, traj_out = "traj.csv";
    Index sim_length = rc.sim_length;
    double sim_noise = rc.sim_noise;
    auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop run of a trained model on a fresh task");
    sim_cmd->add_option("--model", model_in)->required();
    sim_cmd->add_option("--length", sim_length);
    sim_cmd->add_option("--pulse-prob", task.pulse_prob);
    sim_cmd->add_option("--noise", sim_noise);
    sim_cmd->add_option("--out", traj_out);

    // fixed-points
    std::string traj_in, fp_out = "fixed_points.json";
    FinderConfig fc = rc.finder;
    auto* fp_cmd = app.add_subcommand("fixed-points", "Locate and classify fixed points by kinetic-energy minimization");
    fp_cmd->add_option("--model", model_in)->required();
    fp_cmd->add_option("--traj", traj_in)->required();
    fp_cmd->add_option("--starts", fc.n_starts);
    fp_cmd->add_option("--tol", fc.tol);
    fp_cmd->add_option("--jitter", fc.start_jitter, "Std of Gaussian noise added to sampled starts");
    fp_cmd->add_option("--out", fp_out);

    // extract
    ExtractConfig xc = rc.extraction;
    std::string fp_in, graph_prefix = "ena";
    auto* ex_cmd = app.add_subcommand("extract", "Extract the excitable network attractor graph");
    ex_cmd->add_option("--model", model_in)->required();
    ex_cmd->add_option("--traj", traj_in)->required();
    ex_cmd->add_option("--fixed-points", fp_in, "Fixed-point report; searched afresh when omitted");
    ex_cmd->add_option("--grid-dim", xc.grid.dim, "0 uses the LSS dimension");
    ex_cmd->add_option("--grid-edge", xc.grid.edge_length);
    ex_cmd->add_option("--grid-points", xc.grid.points_per_edge);
    ex_cmd->add_option("--lss-radius", xc.lss.radius);
    ex_cmd->add_option("--variance", xc.lss.variance_target);
    ex_cmd->add_option("--starts", fc.n_starts);
    ex_cmd->add_option("--jitter", fc.start_jitter);
    ex_cmd->add_option("--out", graph_prefix, "Prefix for .json and .dot outputs");

    // design
    auto* design_cmd = app.add_subcommand("design", "Hand-designed flip-flop reservoirs");
    design_cmd->require_subcommand(1);
    double b = rc.model.b, s = rc.model.s, omega_in = 0.0, coupling = 0.0;
    Index bits = rc.task.bits;
    auto* d2 = design_cmd->add_subcommand("2d", "Two-neuron model for the 2-bit task");
    d2->add_option("--b", b);
    d2->add_option("--omega-in", omega_in);
    d2->add_option("--out", model_out);
    auto* d2k = design_cmd->add_subcommand("2k", "2k-neuron block model for the k-bit task");
    d2k->add_option("--bits", bits);
    d2k->add_option("--s", s);
    d2k->add_option("--omega-in", omega_in);
    d2k->add_option("--coupling", coupling);
    d2k->add_option("--out", model_out);

    // bifurcation
    auto* bif_cmd = app.add_subcommand("bifurcation", "Fold curve and nullclines of low-dimensional tanh maps");
    bif_cmd->require_subcommand(1);
    double m_min = 1.0, m_max = 5.0, na = 3.0, nb = 0.6, nc = 0.6, nd = 3.0;
    Index samples = 200;
    std::string csv_out = "bifurcation.csv";
    auto* fold_cmd = bif_cmd->add_subcommand("fold-curve", "Sample w+(m) and w-(m)");
    fold_cmd->add_option("--m-min", m_min);
    fold_cmd->add_option("--m-max", m_max);
    fold_cmd->add_option("--samples", samples);
    fold_cmd->add_option("--out", csv_out);
    auto* null_cmd = bif_cmd->add_subcommand("nullclines", "Nullcline polylines and fixed points of a 2D map");
    null_cmd->add_option("--a", na);
    null_cmd->add_option("--b", nb);
    null_cmd->add_option("--c", nc);
    null_cmd->add_option("--d", nd);
    null_cmd->add_option("--samples", samples);
    null_cmd->add_option("--out", csv_out);

    // sweep-noise
    SweepConfig sc;
    Index sweep_length = 100000;
    std::string report_out = "report.json";
    auto* sweep_cmd = app.add_subcommand("sweep-noise", "Closed-loop MSE across noise levels");
    sweep_cmd->add_option("--model", model_in)->required();
    sweep_cmd->add_option("--levels", sc.levels);
    sweep_cmd->add_option("--length", sweep_length);
    sweep_cmd->add_option("--seeds", sc.seeds);
    sweep_cmd->add_option("--failure-mse", sc.failure_mse);
    sweep_cmd->add_option("--out", report_out);

    // diagnose
    std::string graph_in;
    double diag_threshold = 0.25;
    auto* diag_cmd = app.add_subcommand("diagnose", "Attribute output errors to graph nodes and edges");
    diag_cmd->add_option("--model", model_in)->required();
    diag_cmd->add_option("--graph", graph_in)->required();
    diag_cmd->add_option("--traj", traj_in)->required();
    diag_cmd->add_option("--threshold", diag_threshold);
    diag_cmd->add_option("--out", report_out);

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage from a configuration file");

    CLI11_PARSE(app, argc, argv);

    try {
        task.seed = g.seed;
        if (*task_cmd) {
            const auto data = generate(task);
            const auto path = resolve(g, task_out);
            write_task_csv(data, path);
            fmt::print("wrote {} steps to {}\n", data.length(), path.string());
        } else if (*train_cmd) {
            esn.seed = g.seed;
            esn.n_i = esn.n_o = task.bits;
            tc.seed = g.seed;
            const TrainResult r = train(build_random_esn(esn), task, tc);
            save_model(r.model, resolve(g, model_out));
            nlohmann::json metrics{{"format", "ena-train-metrics"},
                                   {"train_mse", r.train_mse},
                                   {"test_mse", r.test.mse},
                                   {"seed", g.seed},
                                   {"config",
                                    {{"neurons", esn.n_r},
                                     {"sparsity", esn.sparsity},
                                     {"rho", esn.spectral_radius},
                                     {"lambda", tc.ridge_lambda},
                                     {"train_length", tc.train_length},
                                     {"washout", tc.washout},
                                     {"noise_std", tc.noise_std},
                                     {"test_length", tc.test_length},
                                     {"bits", task.bits},
                                     {"pulse_prob", task.pulse_prob}}}};
            write_json(resolve(g, metrics_out), metrics);
            if (!train_traj_out.empty()) write_trajectory_csv(r.test.trajectory, resolve(g, train_traj_out));
            fmt::print("train MSE {:.3e}, test MSE {:.3e}\n", r.train_mse, r.test.mse);
        } else if (*sim_cmd) {
            const EsnModel model = load_model(model_in);
            task.bits = model.n_o();
            task.length = sim_length;
            const Evaluation ev = evaluate(model, task, std::min<Index>(100, sim_length - 1), sim_noise,
                                           derive_seed(g.seed, 3));
            write_trajectory_csv(ev.trajectory, resolve(g, traj_out));
            fmt::print("closed-loop MSE {:.3e}\n", ev.mse);
        } else if (*fp_cmd) {
            fc.seed = g.seed;
            const EsnModel model = load_model(model_in);
            const VelocityField field{model};
            const FinderResult search = find_fixed_points(field, read_trajectory_csv(traj_in), fc);
            AggregateConfig ac = rc.aggregate;
            ac.seed = g.seed;
            const auto fps = aggregate(field, search.candidates, ac);
            write_json(resolve(g, fp_out), fixed_points_to_json(fps, &search));
            print_census(fps);
        } else if (*ex_cmd) {
            fc.seed = g.seed;
            const EsnModel model = load_model(model_in);
            const VelocityField field{model};
            const Trajectory traj = read_trajectory_csv(traj_in);
            std::vector<FixedPoint> fps;
            if (!fp_in.empty()) {
                fps = fixed_points_from_json(read_json(fp_in));
                for (auto& fp : fps) fp = classify(field, fp.location);
            } else {
                AggregateConfig ac = rc.aggregate;
                ac.seed = g.seed;
                fps = aggregate(field, find_fixed_points(field, traj, fc).candidates, ac);
            }
            xc.lss.max_dim = xc.grid.dim;
            EnaGraph graph = extract_ena(field, stable_only(fps), collect_pdvs(traj), xc);
            label_edges(graph, model.n_o());
            ThresholdProbeConfig probe = rc.probe;
            probe.seed = g.seed;
            estimate_plain_thresholds(field, graph, xc.omega, probe);
            write_json(resolve(g, graph_prefix + ".json"), graph_to_json(graph));
            write_text(resolve(g, graph_prefix + ".dot"), to_dot(graph));
            fmt::print("{} nodes, {} edges\n", graph.nodes.size(), graph.edges.size());
            for (const auto& w : graph.warnings) fmt::print(stderr, "warning: {}\n", w);
        } else if (*d2) {
            const EsnModel m = make_design_2d(b, 3.0, omega_in > 0 ? omega_in : 6.0);
            save_model(m, resolve(g, model_out));
        } else if (*d2k) {
            const EsnModel m = make_design_2k(bits, s, omega_in > 0 ? omega_in : 1.0, coupling);
            save_model(m, resolve(g, model_out));
        } else if (*fold_cmd) {
            if (samples < 2) throw Error{ErrorKind::invalid_argument, "need at least 2 samples"};
            auto out = fmt::output_file(resolve(g, csv_out).string());
            out.print("m,w_plus,w_minus\n");
            for (Index i = 0; i < samples; ++i) {
                const double m = m_min + (m_max - m_min) * static_cast<double>(i) / static_cast<double>(samples - 1);
                const auto f = fold_curve(m);
                out.print("{},{},{}\n", m, f.w_plus, f.w_minus);
            }
        } else if (*null_cmd) {
            const auto res = nullclines_2d(na, nb, nc, nd);
            const auto lines = nullcline_polylines(na, nb, nc, nd, samples);
            auto out = fmt::output_file(resolve(g, csv_out).string());
            out.print("kind,x,y,stability\n");
            for (auto [x, y] : lines.x_nullcline) out.print("x_nullcline,{},{},\n", x, y);
            for (auto [x, y] : lines.y_nullcline) out.print("y_nullcline,{},{},\n", x, y);
            for (const auto& p : res.points) out.print("fixed_point,{},{},{}\n", p.x, p.y, p.stability);
            const auto verdict = count_conditions(na, nb, nc, nd);
            fmt::print("{} fixed points", res.count());
            if (verdict.kind == ConditionVerdict::Kind::count)
                fmt::print(" (sufficient condition '{}' predicts {})", verdict.rule, verdict.count);
            fmt::print("\n");
        } else if (*sweep_cmd) {
            const EsnModel model = load_model(model_in);
            task.bits = model.n_o();
            task.length = sweep_length;
            sc.noise_seed = g.seed;
            const SweepResult r = run_noise_sweep(model, task, sc);
            write_json(resolve(g, report_out), sweep_to_json(r));
            for (std::size_t i = 0; i < r.noise_levels.size(); ++i)
                fmt::print("noise {:<8g} MSE {:.3e}\n", r.noise_levels[i], r.mse_per_level[i]);
            if (r.breakdown_level) fmt::print("breakdown at {}\n", *r.breakdown_level);
        } else if (*diag_cmd) {
            const EsnModel model = load_model(model_in);
            (void)model;
            const EnaGraph graph = graph_from_json(read_json(graph_in));
            const ErrorReport report = diagnose_errors(graph, read_trajectory_csv(traj_in), diag_threshold);
            write_json(resolve(g, report_out), report_to_json(report, graph));
            fmt::print("{} error intervals\n", report.intervals.size());
        } else if (*pipe_cmd) {
            if (g.config.empty()) throw PipelineError{Stage::config, ErrorKind::usage, "pipeline needs --config"};
            const fs::path dir = g.out_dir.empty() ? fs::path{"."} : fs::path{g.out_dir};
            const PipelineSummary summary = run_pipeline(rc, dir);
            print_census(summary.fixed_points);
            fmt::print("{} nodes, {} edges; artifacts in {}\n", summary.graph.nodes.size(), summary.graph.edges.size(),
                       dir.string());
        }
    } catch (const PipelineError& e) {
        fmt::print(stderr, "error in stage {}\n", e.what());
        return e.exit_code();
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
