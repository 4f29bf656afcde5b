#include "ena/experiments.hpp"

#include <algorithm>

namespace ena {

std::vector<double> reference_noise_levels()
{
    return {1e-4, 2e-2, 5e-2, 8e-2, 1e-1, 1.2e-1, 1.4e-1, 1.6e-1};
}

SweepResult run_noise_sweep(const EsnModel& model, const TaskConfig& task, const SweepConfig& config)
{
    if (config.seeds < 1) throw Error{ErrorKind::invalid_argument, "sweep needs at least one seed"};
    for (std::size_t i = 0; i < config.levels.size(); ++i) {
        if (!(config.levels[i] >= 0.0)) throw Error{ErrorKind::invalid_argument, "noise levels must be nonnegative"};
        if (i > 0 && !(config.levels[i] > config.levels[i - 1]))
            throw Error{ErrorKind::invalid_argument, "noise levels must be strictly increasing"};
    }
    const TaskData data = generate(task);
    const Vector start = prime_state(model, data.initial_target);
    const Index levels = static_cast<Index>(config.levels.size());

    SweepResult res;
    res.noise_levels = config.levels;
    res.mse_per_seed.assign(config.levels.size(), std::vector<double>(static_cast<std::size_t>(config.seeds)));
    parallel_for(levels * config.seeds, [&](Index job) {
        const Index level = job / config.seeds;
        const Index seed = job % config.seeds;
        Rng rng{derive_seed(config.noise_seed, static_cast<std::uint64_t>(seed))};
        const Trajectory t = run_closed_loop(model, data.inputs, data.targets, start,
                                             config.levels[static_cast<std::size_t>(level)], rng);
        res.mse_per_seed[static_cast<std::size_t>(level)][static_cast<std::size_t>(seed)] =
            mse(t.outputs, data.targets, config.washout);
    });
    for (const auto& per_seed : res.mse_per_seed) {
        double sum = 0.0;
        for (double v : per_seed) sum += v;
        res.mse_per_level.push_back(sum / static_cast<double>(per_seed.size()));
    }
    for (std::size_t i = 0; i < res.mse_per_level.size(); ++i) {
        if (res.mse_per_level[i] > config.failure_mse) {
            res.breakdown_level = res.noise_levels[i];
            break;
        }
    }
    return res;
}

namespace {

Index nearest_node(const EnaGraph& g, const Vector& x)
{
    Index best = -1;
    double best_d = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (g.nodes[i].point.location.size() != x.size()) continue;
        const double d = (g.nodes[i].point.location - x).squaredNorm();
        if (best < 0 || d < best_d) {
            best = static_cast<Index>(i);
            best_d = d;
        }
    }
    return best;
}

bool undesired(const EnaGraph& g, Index from, Index to)
{
    for (const auto& e : g.edges)
        if (e.from == from && e.to == to) return e.classification == EdgeClass::undesired;
    const auto& a = g.nodes[static_cast<std::size_t>(from)];
    const auto& b = g.nodes[static_cast<std::size_t>(to)];
    if (!a.labelable || !b.labelable || a.pattern.size() != b.pattern.size()) return true;
    return (a.pattern.array() != b.pattern.array()).count() != 1;
}

}  // namespace

ErrorReport diagnose_errors(const EnaGraph& graph, const Trajectory& trajectory, double threshold)
{
    if (!trajectory.has_targets()) throw Error{ErrorKind::invalid_argument, "diagnosis needs a trajectory with targets"};
    ErrorReport report;
    report.threshold = threshold;
    const Index steps = trajectory.length();
    Index k = 0;
    while (k < steps) {
        double err = (trajectory.outputs.row(k) - trajectory.targets.row(k)).cwiseAbs().maxCoeff();
        if (err <= threshold) {
            ++k;
            continue;
        }
        ErrorInterval iv;
        iv.begin = k;
        iv.node_before = nearest_node(graph, trajectory.state_before(k));
        Index prev = iv.node_before;
        while (k < steps) {
            err = (trajectory.outputs.row(k) - trajectory.targets.row(k)).cwiseAbs().maxCoeff();
            if (err <= threshold) break;
            iv.peak = std::max(iv.peak, err);
            const Index n = nearest_node(graph, trajectory.states.row(k).transpose());
            if (n >= 0 && (iv.nodes.empty() || iv.nodes.back() != n)) {
                iv.nodes.push_back(n);
                if (graph.nodes[static_cast<std::size_t>(n)].spurious &&
                    std::find(iv.spurious_visits.begin(), iv.spurious_visits.end(), n) == iv.spurious_visits.end())
                    iv.spurious_visits.push_back(n);
                if (prev >= 0 && prev != n && undesired(graph, prev, n)) iv.undesired_traversals.emplace_back(prev, n);
                prev = n;
            }
            ++k;
        }
        iv.end = k;
        report.intervals.push_back(std::move(iv));
    }
    return report;
}

nlohmann::json sweep_to_json(const SweepResult& r)
{
    nlohmann::json doc{{"format", "ena-noise-sweep"},
                       {"noise_levels", r.noise_levels},
                       {"mse_per_level", r.mse_per_level},
                       {"mse_per_seed", r.mse_per_seed}};
    doc["breakdown_level"] = r.breakdown_level ? nlohmann::json(*r.breakdown_level) : nlohmann::json(nullptr);
    return doc;
}

nlohmann::json report_to_json(const ErrorReport& r, const EnaGraph& graph)
{
    auto output = [&](Index n) {
        const auto& o = graph.nodes[static_cast<std::size_t>(n)].output;
        return std::vector<double>(o.data(), o.data() + o.size());
    };
    nlohmann::json doc{{"format", "ena-error-report"}, {"threshold", r.threshold}};
    auto& list = doc["intervals"] = nlohmann::json::array();
    for (const auto& iv : r.intervals) {
        nlohmann::json nodes = nlohmann::json::array();
        for (Index n : iv.nodes)
            nodes.push_back({{"id", n}, {"output", output(n)}, {"spurious", graph.nodes[static_cast<std::size_t>(n)].spurious}});
        nlohmann::json trav = nlohmann::json::array();
        for (auto [a, b] : iv.undesired_traversals) trav.push_back({a, b});
        list.push_back({{"begin", iv.begin},
                        {"end", iv.end},
                        {"peak_error", iv.peak},
                        {"node_before", iv.node_before},
                        {"nodes", std::move(nodes)},
                        {"spurious_visits", iv.spurious_visits},
                        {"undesired_traversals", std::move(trav)}});
    }
    return doc;
}

double max_undesired_beta(const EnaGraph& graph)
{
    double best = 0.0;
    for (const auto& e : graph.edges)
        if (e.classification == EdgeClass::undesired) best = std::max(best, e.beta);
    return best;
}

}  // namespace ena
