#include "ena/pipeline.hpp"

#include "ena/ena_export.hpp"
#include "ena/lowdim.hpp"
#include "ena/trajectory_io.hpp"

#include <fmt/format.h>

#include <map>

namespace ena {

const char* stage_name(Stage s)
{
    switch (s) {
    case Stage::config: return "config";
    case Stage::load: return "load";
    case Stage::train: return "train";
    case Stage::simulate: return "simulate";
    case Stage::fixed_points: return "fixed_points";
    case Stage::extract: return "extract";
    case Stage::write: return "write";
    }
    return "unknown";
}

nlohmann::json config_to_json(const RunConfig& c)
{
    return {
        {"seed", c.seed},
        {"model",
         {{"kind", c.model.kind},
          {"b", c.model.b},
          {"s", c.model.s},
          {"omega_in", c.model.omega_in},
          {"coupling", c.model.coupling},
          {"path", c.model.path}}},
        {"task",
         {{"bits", c.task.bits}, {"pulse_prob", c.task.pulse_prob}, {"length", c.task.length}, {"seed", c.task.seed}}},
        {"esn",
         {{"n_r", c.esn.n_r},
          {"sparsity", c.esn.sparsity},
          {"spectral_radius", c.esn.spectral_radius},
          {"seed", c.esn.seed}}},
        {"train",
         {{"ridge_lambda", c.train.ridge_lambda},
          {"washout", c.train.washout},
          {"train_length", c.train.train_length},
          {"noise_std", c.train.noise_std},
          {"seed", c.train.seed},
          {"test_length", c.train.test_length},
          {"test_washout", c.train.test_washout}}},
        {"simulation", {{"length", c.sim_length}, {"noise_std", c.sim_noise}}},
        {"fixed_points",
         {{"n_starts", c.finder.n_starts},
          {"tol", c.finder.tol},
          {"seed", c.finder.seed},
          {"start_jitter", c.finder.start_jitter},
          {"max_iterations", c.finder.bfgs.max_iterations},
          {"grad_tol", c.finder.bfgs.grad_tol},
          {"k_max", c.aggregate.k_max},
          {"merge_tol", c.aggregate.merge_tol}}},
        {"extraction",
         {{"grid_dim", c.extraction.grid.dim},
          {"grid_edge", c.extraction.grid.edge_length},
          {"grid_points", c.extraction.grid.points_per_edge},
          {"lss_radius", c.extraction.lss.radius},
          {"variance_target", c.extraction.lss.variance_target},
          {"max_iterations", c.extraction.omega.max_iterations},
          {"match_eps", c.extraction.omega.match_eps},
          {"probe_rays", c.probe.random_rays},
          {"probe_seed", c.probe.seed}}},
    };
}

RunConfig config_from_json(const nlohmann::json& doc)
{
    RunConfig c;
    try {
        auto get = [](const nlohmann::json& j, const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        auto section = [&](const char* key) { return doc.contains(key) ? doc.at(key) : nlohmann::json::object(); };
        get(doc, "seed", c.seed);
        const auto m = section("model");
        get(m, "kind", c.model.kind);
        get(m, "b", c.model.b);
        get(m, "s", c.model.s);
        get(m, "omega_in", c.model.omega_in);
        get(m, "coupling", c.model.coupling);
        get(m, "path", c.model.path);
        const auto t = section("task");
        get(t, "bits", c.task.bits);
        get(t, "pulse_prob", c.task.pulse_prob);
        get(t, "length", c.task.length);
        get(t, "seed", c.task.seed);
        const auto e = section("esn");
        get(e, "n_r", c.esn.n_r);
        get(e, "sparsity", c.esn.sparsity);
        get(e, "spectral_radius", c.esn.spectral_radius);
        get(e, "seed", c.esn.seed);
        const auto tr = section("train");
        get(tr, "ridge_lambda", c.train.ridge_lambda);
        get(tr, "washout", c.train.washout);
        get(tr, "train_length", c.train.train_length);
        get(tr, "noise_std", c.train.noise_std);
        get(tr, "seed", c.train.seed);
        get(tr, "test_length", c.train.test_length);
        get(tr, "test_washout", c.train.test_washout);
        const auto sim = section("simulation");
        get(sim, "length", c.sim_length);
        get(sim, "noise_std", c.sim_noise);
        const auto f = section("fixed_points");
        get(f, "n_starts", c.finder.n_starts);
        get(f, "tol", c.finder.tol);
        get(f, "seed", c.finder.seed);
        get(f, "start_jitter", c.finder.start_jitter);
        get(f, "max_iterations", c.finder.bfgs.max_iterations);
        get(f, "grad_tol", c.finder.bfgs.grad_tol);
        get(f, "k_max", c.aggregate.k_max);
        get(f, "merge_tol", c.aggregate.merge_tol);
        const auto x = section("extraction");
        get(x, "grid_dim", c.extraction.grid.dim);
        get(x, "grid_edge", c.extraction.grid.edge_length);
        get(x, "grid_points", c.extraction.grid.points_per_edge);
        get(x, "lss_radius", c.extraction.lss.radius);
        get(x, "variance_target", c.extraction.lss.variance_target);
        get(x, "max_iterations", c.extraction.omega.max_iterations);
        get(x, "match_eps", c.extraction.omega.match_eps);
        get(x, "probe_rays", c.probe.random_rays);
        get(x, "probe_seed", c.probe.seed);
    } catch (const nlohmann::json::exception& ex) {
        throw PipelineError{Stage::config, ErrorKind::io, ex.what()};
    }
    c.aggregate.seed = c.finder.seed;
    c.extraction.lss.max_dim = c.extraction.grid.dim;
    return c;
}

namespace {

template <class F>
auto in_stage(Stage stage, F&& f)
{
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError{stage, e.kind(), e.what()};
    } catch (const std::exception& e) {
        throw PipelineError{stage, ErrorKind::io, e.what()};
    }
}

}  // namespace

PipelineSummary run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir)
{
    PipelineSummary out;
    nlohmann::json metrics;
    metrics["format"] = "ena-metrics";
    metrics["config"] = config_to_json(config);

    in_stage(Stage::config, [&] {
        config.task.validate();
        if (config.model.kind != "random" && config.model.kind != "design2d" && config.model.kind != "design2k" &&
            config.model.kind != "file")
            throw Error{ErrorKind::invalid_argument, fmt::format("unknown model kind '{}'", config.model.kind)};
        return 0;
    });

    out.model = in_stage(Stage::load, [&] {
        if (config.model.kind == "design2d")
            return make_design_2d(config.model.b, 3.0, config.model.omega_in > 0 ? config.model.omega_in : 6.0);
        if (config.model.kind == "design2k")
            return make_design_2k(config.task.bits, config.model.s,
                                  config.model.omega_in > 0 ? config.model.omega_in : 1.0, config.model.coupling);
        if (config.model.kind == "file") return load_model(config.model.path);
        EsnBuildParams p = config.esn;
        p.n_i = p.n_o = config.task.bits;
        return build_random_esn(p);
    });

    const bool needs_training = config.model.kind == "random" || (config.model.kind == "file" && !out.model.trained());
    if (needs_training) {
        in_stage(Stage::train, [&] {
            TrainResult r = train(out.model, config.task, config.train);
            metrics["train_mse"] = r.train_mse;
            metrics["test_mse"] = r.test.mse;
            out.model = std::move(r.model);
            out.trajectory = std::move(r.test.trajectory);
            return 0;
        });
    } else {
        in_stage(Stage::simulate, [&] {
            TaskConfig t = config.task;
            t.seed = config.task.seed + 1;
            t.length = config.sim_length;
            Evaluation ev = evaluate(out.model, t, std::min<Index>(config.train.test_washout, t.length - 1),
                                     config.sim_noise, derive_seed(config.seed, 3));
            metrics["test_mse"] = ev.mse;
            out.trajectory = std::move(ev.trajectory);
            return 0;
        });
    }
    in_stage(Stage::simulate, [&] {
        const SwitchCheck sc = count_switch_errors(out.trajectory.outputs, out.trajectory.targets, out.trajectory.inputs);
        metrics["switch_errors"] = sc.errors;
        metrics["switch_checked_steps"] = sc.checked_steps;
        metrics["trajectory_length"] = out.trajectory.length();
        return 0;
    });

    const auto field = std::make_shared<const ClosedLoop>(out.model);
    const VelocityField velocity{field};
    FinderResult search;
    out.fixed_points = in_stage(Stage::fixed_points, [&] {
        search = find_fixed_points(velocity, out.trajectory, config.finder);
        return aggregate(velocity, search.candidates, config.aggregate);
    });
    std::map<std::string, Index> census;
    for (const auto& fp : out.fixed_points) ++census[stability_name(fp)];
    metrics["fixed_points"] = {{"count", out.fixed_points.size()},
                               {"census", census},
                               {"candidates", search.candidates.size()},
                               {"ghosts", search.ghosts.size()},
                               {"dropped", search.dropped}};

    out.graph = in_stage(Stage::extract, [&] {
        std::vector<FixedPoint> stable;
        for (const auto& fp : out.fixed_points)
            if (fp.stability == Stability::stable) stable.push_back(fp);
        EnaGraph g = extract_ena(velocity, stable, collect_pdvs(out.trajectory), config.extraction);
        label_edges(g, config.task.bits);
        estimate_plain_thresholds(velocity, g, config.extraction.omega, config.probe);
        return g;
    });
    {
        Index desired = 0, undesired = 0, spurious = 0;
        std::vector<Index> lss_dims;
        for (const auto& e : out.graph.edges) {
            desired += e.classification == EdgeClass::desired ? 1 : 0;
            undesired += e.classification == EdgeClass::undesired ? 1 : 0;
        }
        for (const auto& n : out.graph.nodes) {
            spurious += n.spurious ? 1 : 0;
            lss_dims.push_back(n.lss_dim);
        }
        metrics["ena"] = {{"nodes", out.graph.nodes.size()},
                          {"edges", out.graph.edges.size()},
                          {"desired_edges", desired},
                          {"undesired_edges", undesired},
                          {"spurious_nodes", spurious},
                          {"lss_dims", lss_dims},
                          {"warnings", out.graph.warnings.size()}};
    }
    out.metrics = metrics;

    in_stage(Stage::write, [&] {
        std::filesystem::create_directories(out_dir);
        save_model(out.model, out_dir / "model.json");
        write_trajectory_csv(out.trajectory, out_dir / "traj.csv");
        write_json(out_dir / "fixed_points.json", fixed_points_to_json(out.fixed_points, &search));
        write_text(out_dir / "ena.dot", to_dot(out.graph));
        write_json(out_dir / "ena.json", graph_to_json(out.graph));
        write_json(out_dir / "metrics.json", metrics);
        return 0;
    });
    return out;
}

}  // namespace ena
