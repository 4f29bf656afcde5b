#include "ena/flipflop.hpp"

#include <system_error>

#include <fmt/format.h>
#include <fmt/os.h>

#include <set>

namespace ena {

void TaskConfig::validate() const
{
    if (bits < 1) throw Error{ErrorKind::invalid_argument, "task needs at least one bit"};
    if (!(pulse_prob > 0.0 && pulse_prob < 1.0))
        throw Error{ErrorKind::invalid_argument, fmt::format("pulse probability {} outside (0, 1)", pulse_prob)};
    if (length < 1) throw Error{ErrorKind::invalid_argument, "task length must be positive"};
}

TaskData generate(const TaskConfig& config)
{
    config.validate();
    Rng rng{config.seed};
    std::bernoulli_distribution pulse{config.pulse_prob};
    std::uniform_int_distribution<Index> channel{0, config.bits - 1};
    std::bernoulli_distribution positive{0.5};

    TaskData task;
    task.inputs = Matrix::Zero(config.length, config.bits);
    task.targets.resize(config.length, config.bits);
    task.initial_target = Vector::Ones(config.bits);

    Vector memory = task.initial_target;
    for (Index k = 0; k < config.length; ++k) {
        if (pulse(rng)) {
            const Index j = channel(rng);
            const double sign = positive(rng) ? 1.0 : -1.0;
            task.inputs(k, j) = sign;
            memory(j) = sign;
        }
        task.targets.row(k) = memory.transpose();
    }
    return task;
}

double mse(const Matrix& outputs, const Matrix& targets)
{
    return mse(outputs, targets, 0);
}

double mse(const Matrix& outputs, const Matrix& targets, Index washout)
{
    if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
        throw Error{ErrorKind::dimension, fmt::format("mse: outputs {}x{} vs targets {}x{}", outputs.rows(),
                                                      outputs.cols(), targets.rows(), targets.cols())};
    const Index n = outputs.rows() - washout;
    if (n <= 0 || outputs.cols() == 0) throw Error{ErrorKind::invalid_argument, "mse of an empty sequence"};
    return (outputs.bottomRows(n) - targets.bottomRows(n)).squaredNorm() / static_cast<double>(n * outputs.cols());
}

SwitchCheck count_switch_errors(const Matrix& outputs, const Matrix& targets, const Matrix& inputs, Index settle)
{
    if (outputs.rows() != targets.rows() || inputs.rows() != targets.rows() || outputs.cols() != targets.cols())
        throw Error{ErrorKind::dimension, "switch check: sequence shapes differ"};
    SwitchCheck check;
    Index since_pulse = 0;
    for (Index k = 0; k < outputs.rows(); ++k) {
        if (!inputs.row(k).isZero(0.0)) {
            ++check.pulses;
            since_pulse = 0;
        } else {
            ++since_pulse;
        }
        if (k < settle || since_pulse < settle) continue;
        ++check.checked_steps;
        bool ok = true;
        for (Index j = 0; j < outputs.cols(); ++j)
            if ((outputs(k, j) >= 0.0) != (targets(k, j) >= 0.0)) ok = false;
        if (!ok) {
            ++check.errors;
            check.error_steps.push_back(k);
        }
    }
    return check;
}

ActionCoverage action_coverage(const TaskData& task)
{
    const Index k = task.bits();
    std::set<std::pair<long long, long long>> seen;
    for (Index t = 0; t < task.length(); ++t) {
        Vector before = t == 0 ? task.initial_target : Vector(task.targets.row(t - 1).transpose());
        long long pattern = 0;
        for (Index j = 0; j < k; ++j)
            if (before(j) > 0) pattern |= 1LL << j;
        long long action = 0;
        for (Index j = 0; j < k; ++j)
            if (task.inputs(t, j) != 0.0) action = 1 + 2 * j + (task.inputs(t, j) > 0 ? 1 : 0);
        seen.emplace(pattern, action);
    }
    return {static_cast<Index>(seen.size()), (Index{1} << k) * (2 * k + 1)};
}

void write_task_csv(const TaskData& task, const std::filesystem::path& path)
{
    try {
        auto out = fmt::output_file(path.string());
        out.print("step");
        for (Index j = 1; j <= task.bits(); ++j) out.print(",u_{}", j);
        for (Index j = 1; j <= task.bits(); ++j) out.print(",y_{}", j);
        out.print("\n");
        for (Index t = 0; t < task.length(); ++t) {
            out.print("{}", t);
            for (Index j = 0; j < task.bits(); ++j) out.print(",{}", task.inputs(t, j));
            for (Index j = 0; j < task.bits(); ++j) out.print(",{}", task.targets(t, j));
            out.print("\n");
        }
    } catch (const std::system_error& e) {
        throw Error{ErrorKind::io, fmt::format("cannot write {}: {}", path.string(), e.what())};
    }
}

}  // namespace ena
