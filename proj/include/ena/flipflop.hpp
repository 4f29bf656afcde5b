#pragma once

// k-bit flip-flop task generation and scoring.

#include "ena/common.hpp"

#include <filesystem>
#include <vector>

namespace ena {

struct TaskConfig {
    Index bits = 2;
    double pulse_prob = 0.1;
    Index length = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Inputs are T x k over {-1, 0, +1}; targets are T x k over {-1, +1}.
struct TaskData {
    Matrix inputs;
    Matrix targets;
    Vector initial_target;  ///< memory before step 0, all +1

    Index length() const { return inputs.rows(); }
    Index bits() const { return inputs.cols(); }
};

/// Per step: zero input with probability 1 - p, else one channel with a uniformly drawn sign.
/// target[k] already reflects u[k].
TaskData generate(const TaskConfig& config);

/// Mean over steps and channels of squared error.
double mse(const Matrix& outputs, const Matrix& targets);

/// As above but skipping the first `washout` rows.
double mse(const Matrix& outputs, const Matrix& targets, Index washout);

struct SwitchCheck {
    Index checked_steps = 0;
    Index errors = 0;
    Index pulses = 0;
    std::vector<Index> error_steps;
};

/// Compares output signs with targets on steps at least `settle` steps after the last pulse
/// (and after the first `settle` steps).
SwitchCheck count_switch_errors(const Matrix& outputs, const Matrix& targets, const Matrix& inputs,
                                Index settle = 10);

/// How many of the 2^k (2k + 1) (memory pattern, input) pairs occur in the task.
struct ActionCoverage {
    Index seen = 0;
    Index total = 0;
};
ActionCoverage action_coverage(const TaskData& task);

void write_task_csv(const TaskData& task, const std::filesystem::path& path);

}  // namespace ena
