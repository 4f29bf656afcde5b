#pragma once

// Noise-robustness sweep and error diagnosis against an extracted graph.

#include "ena/ena_extract.hpp"
#include "ena/flipflop.hpp"

#include <optional>
#include <vector>

namespace ena {

/// Noise levels of the reference robustness study.
std::vector<double> reference_noise_levels();

struct SweepConfig {
    std::vector<double> levels = reference_noise_levels();
    Index seeds = 5;
    Index washout = 100;
    double failure_mse = 0.1;
    std::uint64_t noise_seed = 0;
};

struct SweepResult {
    std::vector<double> noise_levels;
    std::vector<double> mse_per_level;              ///< mean over seeds
    std::vector<std::vector<double>> mse_per_seed;  ///< [level][seed]
    std::optional<double> breakdown_level;          ///< first level whose mean MSE exceeds failure_mse
};

/// Every level and seed sees the same input series (generated from `task`); seed i uses the same
/// noise stream at every level.
SweepResult run_noise_sweep(const EsnModel& model, const TaskConfig& task, const SweepConfig& config);

struct ErrorInterval {
    Index begin = 0;  ///< first step with error above threshold
    Index end = 0;    ///< one past the last
    double peak = 0.0;
    Index node_before = -1;              ///< nearest node just before the interval
    std::vector<Index> nodes;            ///< distinct nearest nodes inside, in order of visit
    std::vector<Index> spurious_visits;  ///< spurious nodes among them
    std::vector<std::pair<Index, Index>> undesired_traversals;
};

struct ErrorReport {
    double threshold = 0.25;
    std::vector<ErrorInterval> intervals;
};

/// Intervals where |output - target|_inf exceeds `threshold`, attributed to graph nodes by nearest
/// state (Euclidean).
ErrorReport diagnose_errors(const EnaGraph& graph, const Trajectory& trajectory, double threshold = 0.25);

nlohmann::json sweep_to_json(const SweepResult& r);
nlohmann::json report_to_json(const ErrorReport& r, const EnaGraph& graph);

/// Largest beta over undesired edges (0 when there are none).
double max_undesired_beta(const EnaGraph& graph);

}  // namespace ena
