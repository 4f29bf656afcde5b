#include "ena/trainer.hpp"

#include <fmt/format.h>

namespace ena {

namespace {

// Teacher-forced run; calls sink(k, x) for every step k >= washout.
template <class Sink>
void drive_open_loop(const EsnModel& model, const TaskData& task, const TrainConfig& config, Sink&& sink)
{
    if (task.bits() != model.n_i() || task.bits() != model.n_o())
        throw Error{ErrorKind::dimension, fmt::format("task has {} bits, model has {} inputs and {} outputs",
                                                      task.bits(), model.n_i(), model.n_o())};
    if (task.length() < config.train_length)
        throw Error{ErrorKind::dimension, "task shorter than the training length"};

    Eigen::SparseMatrix<double> reservoir = model.reservoir.sparseView();
    Rng rng{derive_seed(config.seed, 1)};
    const double leak = model.leak_rate;
    Vector x = Vector::Zero(model.n_r());
    Vector pre(model.n_r());
    for (Index k = 0; k < config.train_length; ++k) {
        const Vector y_prev = k == 0 ? task.initial_target : Vector(task.targets.row(k - 1).transpose());
        pre.noalias() = reservoir * x;
        pre.noalias() += model.input_weights * task.inputs.row(k).transpose();
        pre.noalias() += model.feedback_weights * y_prev;
        if (config.noise_std > 0.0) pre += gaussian_vector(model.n_r(), config.noise_std, rng);
        if (leak == 1.0) x = pre.array().tanh().matrix();
        else x = (1.0 - leak) * x + leak * pre.array().tanh().matrix();
        if (k >= config.washout) sink(k, x);
    }
}

}  // namespace

void TrainConfig::validate() const
{
    if (!(ridge_lambda >= 0.0)) throw Error{ErrorKind::invalid_argument, "ridge lambda must be nonnegative"};
    if (washout < 0 || washout >= train_length)
        throw Error{ErrorKind::invalid_argument,
                    fmt::format("washout {} must lie in [0, train length {})", washout, train_length)};
    if (!(noise_std >= 0.0)) throw Error{ErrorKind::invalid_argument, "noise std must be nonnegative"};
    if (test_washout < 0 || test_washout >= test_length)
        throw Error{ErrorKind::invalid_argument, "test washout must be shorter than the test length"};
}

Matrix harvest_states(const EsnModel& model, const TaskData& task, const TrainConfig& config)
{
    config.validate();
    model.validate();
    Matrix x(config.train_length - config.washout, model.n_r());
    drive_open_loop(model, task, config, [&](Index k, const Vector& state) {
        x.row(k - config.washout) = state.transpose();
    });
    return x;
}

Matrix fit_readout_normal(const Matrix& xtx, const Matrix& xty, double lambda)
{
    if (xtx.rows() != xtx.cols() || xty.rows() != xtx.rows())
        throw Error{ErrorKind::dimension, "normal equations have inconsistent shapes"};
    if (!(lambda >= 0.0)) throw Error{ErrorKind::invalid_argument, "ridge lambda must be nonnegative"};
    Matrix a = xtx;
    a.diagonal().array() += lambda * lambda;
    Eigen::LDLT<Matrix> ldlt{a};
    const Vector d = ldlt.vectorD().cwiseAbs();
    const double scale = d.size() > 0 ? d.maxCoeff() : 0.0;
    const double floor = scale * 1e-13 * static_cast<double>(a.rows());
    if (ldlt.info() != Eigen::Success || d.size() == 0 || d.minCoeff() <= floor)
        throw Error{ErrorKind::solver, lambda == 0.0
                                           ? "normal matrix is singular; use a ridge lambda > 0"
                                           : "normal matrix is numerically singular; increase the ridge lambda"};
    return ldlt.solve(xty).transpose();
}

Matrix fit_readout(const Matrix& x, const Matrix& y, double lambda)
{
    if (x.rows() != y.rows())
        throw Error{ErrorKind::dimension, fmt::format("X has {} rows, Y has {}", x.rows(), y.rows())};
    Matrix xtx = Matrix::Zero(x.cols(), x.cols());
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    xtx.triangularView<Eigen::StrictlyUpper>() = xtx.transpose();
    return fit_readout_normal(xtx, x.transpose() * y, lambda);
}

Evaluation evaluate(const EsnModel& model, const TaskConfig& task_config, Index washout, double noise_std,
                    std::uint64_t noise_seed)
{
    Evaluation eval;
    eval.task = generate(task_config);
    Rng rng{noise_seed};
    const Vector start = prime_state(model, eval.task.initial_target);
    eval.trajectory = run_closed_loop(model, eval.task.inputs, eval.task.targets, start, noise_std, rng);
    eval.mse = mse(eval.trajectory.outputs, eval.task.targets, washout);
    return eval;
}

TrainResult train(const EsnModel& untrained, const TaskConfig& task_config, const TrainConfig& config)
{
    config.validate();
    untrained.validate();
    TaskConfig train_task = task_config;
    train_task.length = config.train_length;
    const TaskData task = generate(train_task);

    const Index n = untrained.n_r();
    const Index n_o = untrained.n_o();
    constexpr Index block = 256;
    Matrix xtx = Matrix::Zero(n, n);
    Matrix xty = Matrix::Zero(n, n_o);
    double yty = 0.0;
    Matrix xb(block, n);
    Matrix yb(block, n_o);
    Index filled = 0;
    auto flush = [&] {
        if (filled == 0) return;
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(xb.topRows(filled).transpose());
        xty.noalias() += xb.topRows(filled).transpose() * yb.topRows(filled);
        yty += yb.topRows(filled).squaredNorm();
        filled = 0;
    };
    drive_open_loop(untrained, task, config, [&](Index k, const Vector& x) {
        xb.row(filled) = x.transpose();
        yb.row(filled) = task.targets.row(k);
        if (++filled == block) flush();
    });
    flush();
    xtx.triangularView<Eigen::StrictlyUpper>() = xtx.transpose();

    TrainResult result;
    result.model = untrained;
    result.model.readout = fit_readout_normal(xtx, xty, config.ridge_lambda);
    result.model.noise_std = config.noise_std;
    result.model.provenance += fmt::format("; ridge lambda={} washout={} train_length={} noise={}",
                                           config.ridge_lambda, config.washout, config.train_length,
                                           config.noise_std);

    // Sum of squared residuals from the accumulated moments.
    const Matrix& wo = *result.model.readout;
    const double sse = yty - 2.0 * (wo * xty).trace() + (wo * xtx * wo.transpose()).trace();
    const Index rows = config.train_length - config.washout;
    result.train_mse = std::max(0.0, sse) / static_cast<double>(rows * n_o);

    TaskConfig test_task = task_config;
    test_task.seed = task_config.seed + 1;
    test_task.length = config.test_length;
    result.test = evaluate(result.model, test_task, config.test_washout, config.noise_std,
                           derive_seed(config.seed, 2));
    return result;
}

}  // namespace ena
