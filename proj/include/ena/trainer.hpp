#pragma once

// Ridge-regression read-out training with teacher-forced feedback.

#include "ena/esn.hpp"
#include "ena/flipflop.hpp"

namespace ena {

struct TrainConfig {
    double ridge_lambda = 1.0;  ///< enters the normal equations squared
    Index washout = 100;
    Index train_length = 50000;
    double noise_std = 1e-4;
    std::uint64_t seed = 0;  ///< noise stream during harvesting and testing
    Index test_length = 10000;
    Index test_washout = 100;

    void validate() const;
};

/// Open-loop states after the washout, one row per step. y_prev at step 0 is the initial target.
Matrix harvest_states(const EsnModel& model, const TaskData& task, const TrainConfig& config);

/// W_o = ((X^T X + lambda^2 I)^-1 X^T Y)^T.
Matrix fit_readout(const Matrix& x, const Matrix& y, double lambda);

/// Same solution from accumulated X^T X and X^T Y.
Matrix fit_readout_normal(const Matrix& xtx, const Matrix& xty, double lambda);

struct Evaluation {
    TaskData task;
    Trajectory trajectory;
    double mse = 0.0;  ///< closed loop, after the test washout
};

/// Closed-loop test on a fresh task. The run starts from prime_state(initial target).
Evaluation evaluate(const EsnModel& model, const TaskConfig& task_config, Index washout, double noise_std,
                    std::uint64_t noise_seed);

struct TrainResult {
    EsnModel model;  ///< with read-out installed
    double train_mse = 0.0;
    Evaluation test;
};

/// Trains on generate(task) for config.train_length steps and tests on a fresh task whose
/// seed is task.seed + 1.
TrainResult train(const EsnModel& untrained, const TaskConfig& task, const TrainConfig& config);

}  // namespace ena
