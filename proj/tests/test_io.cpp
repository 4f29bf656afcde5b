#include "ena/ena_export.hpp"
#include "ena/flipflop.hpp"
#include "ena/lowdim.hpp"
#include "ena/pipeline.hpp"
#include "ena/trajectory_io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ena;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "ena_unit_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in{p, std::ios::binary};
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_design_config()
{
    RunConfig c;
    c.model.kind = "design2d";
    c.task = {.bits = 2, .length = 1000, .seed = 7};
    c.sim_length = 1000;
    c.finder.n_starts = 300;
    c.finder.start_jitter = 0.75;
    c.extraction.grid = {.dim = 2, .edge_length = 4.0, .points_per_edge = 41};
    c.extraction.lss.max_dim = 2;
    return c;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("trajectory csv round trip is exact")
{
    Rng rng{1};
    const EsnModel m = build_random_esn({.n_r = 12, .seed = 3});
    EsnModel t = m;
    t.readout = Matrix::Random(2, 12) * (1.0 / 3.0);
    const TaskData d = generate({.bits = 2, .length = 300, .seed = 2});
    const Trajectory tr = run_closed_loop(t, d.inputs, d.targets, gaussian_vector(12, 0.1, rng), 1e-3, rng);
    write_trajectory_csv(tr, scratch("t.csv"));
    const Trajectory back = read_trajectory_csv(scratch("t.csv"));
    CHECK(back.initial_state == tr.initial_state);
    CHECK(back.states == tr.states);
    CHECK(back.inputs == tr.inputs);
    CHECK(back.outputs == tr.outputs);
    CHECK(back.targets == tr.targets);
}

TEST_CASE("missing trajectory is an io error")
{
    try {
        read_trajectory_csv(scratch("nope.csv"));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

TEST_CASE("unwritable task csv is an io error")
{
    const TaskData d = generate({.length = 10});
    try {
        write_task_csv(d, "/nonexistent-dir/task.csv");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

TEST_CASE("run config json round trip")
{
    RunConfig c = small_design_config();
    c.train.ridge_lambda = 3.0;
    c.esn.spectral_radius = 0.85;
    c.probe.random_rays = 5;
    const RunConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    const RunConfig defaults = config_from_json(nlohmann::json::object());
    CHECK(defaults.finder.n_starts == RunConfig{}.finder.n_starts);
}

TEST_CASE("small designed pipeline writes a reproducible bundle")
{
    const RunConfig c = small_design_config();
    const fs::path a = scratch("run_a"), b = scratch("run_b");
    const PipelineSummary s = run_pipeline(c, a);
    run_pipeline(c, b);
    CHECK(s.fixed_points.size() == 9);
    CHECK(s.graph.nodes.size() == 4);
    for (const char* f : {"model.json", "traj.csv", "fixed_points.json", "ena.dot", "ena.json", "metrics.json"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    const EnaGraph g = graph_from_json(read_json(a / "ena.json"));
    REQUIRE(g.edges.size() == s.graph.edges.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        CHECK(g.edges[i].threshold == s.graph.edges[i].threshold);
        CHECK(g.edges[i].beta == s.graph.edges[i].beta);
        CHECK(g.edges[i].classification == s.graph.edges[i].classification);
    }
    CHECK(to_dot(g).find("digraph") != std::string::npos);
}

TEST_CASE("pipeline errors carry their stage")
{
    RunConfig c = small_design_config();
    c.model.kind = "file";
    c.model.path = scratch("missing-model.json").string();
    try {
        run_pipeline(c, scratch("run_fail"));
        FAIL("expected an error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == Stage::load);
        CHECK(e.exit_code() == 3);
    }
    c.model.kind = "banana";
    try {
        run_pipeline(c, scratch("run_fail"));
        FAIL("expected an error");
    } catch (const PipelineError& e) {
        CHECK(e.exit_code() == 2);
    }
}

}
