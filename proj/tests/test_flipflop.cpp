#include "ena/flipflop.hpp"
#include "ena/lowdim.hpp"
#include "ena/trainer.hpp"

#include <doctest.h>

#include <cmath>

using namespace ena;

TEST_SUITE("flipflop") {

TEST_CASE("targets follow the pulses on the same step")
{
    const TaskData d = generate({.bits = 2, .pulse_prob = 0.3, .length = 2000, .seed = 3});
    Vector memory = d.initial_target;
    for (Index t = 0; t < d.length(); ++t) {
        Index active = 0;
        for (Index j = 0; j < 2; ++j)
            if (d.inputs(t, j) != 0.0) {
                memory(j) = d.inputs(t, j);
                ++active;
            }
        CHECK(active <= 1);
        CHECK(d.targets.row(t).transpose() == memory);
    }
}

TEST_CASE("no pulses as p goes to 0")
{
    const TaskData d = generate({.bits = 3, .pulse_prob = 1e-12, .length = 500, .seed = 1});
    CHECK(d.inputs.isZero(0.0));
    CHECK((d.targets.array() == 1.0).all());
}

TEST_CASE("pulse count is binomial")
{
    const TaskData d = generate({.bits = 2, .pulse_prob = 0.1, .length = 10000, .seed = 8});
    const double pulses = static_cast<double>((d.inputs.array() != 0.0).count());
    CHECK(std::abs(pulses - 1000.0) < 3.0 * std::sqrt(10000 * 0.1 * 0.9));
}

TEST_CASE("mse closed forms")
{
    const Matrix t = Matrix::Ones(50, 2);
    CHECK(mse(t, t) == 0.0);
    Matrix o = t;
    o.col(1).array() += 0.1;
    CHECK(mse(o, t) == doctest::Approx(0.005).epsilon(1e-12));
    o.topRows(10).array() += 5.0;
    CHECK(mse(o, t, 10) == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("action coverage over 10 000 steps reaches every (memory, input) pair")
{
    const TaskData d = generate({.bits = 2, .pulse_prob = 0.1, .length = 10000, .seed = 21});
    const ActionCoverage c = action_coverage(d);
    CHECK(c.total == 20);
    CHECK(c.seen == 20);
}

TEST_CASE("switch errors count wrong signs after settling")
{
    const TaskData d = generate({.bits = 2, .pulse_prob = 0.05, .length = 400, .seed = 5});
    CHECK(count_switch_errors(d.targets, d.targets, d.inputs).errors == 0);
    const Matrix flipped = -d.targets;
    const SwitchCheck sc = count_switch_errors(flipped, d.targets, d.inputs);
    CHECK(sc.checked_steps > 0);
    CHECK(sc.errors == sc.checked_steps);
    // a wrong sign right after a pulse is inside the settle window
    Matrix late = d.targets;
    Index pulse = 0;
    while ((d.inputs.row(pulse).array() == 0.0).all()) ++pulse;
    late(pulse, 0) = -late(pulse, 0);
    CHECK(count_switch_errors(late, d.targets, d.inputs).errors == 0);
}

TEST_CASE("designed 2D model solves a 1000-step task with low MSE")
{
    const Evaluation ev = evaluate(make_design_2d(0.2), {.bits = 2, .length = 1000, .seed = 2}, 100, 0.0, 0);
    CHECK(ev.mse < 1e-2);
    CHECK(count_switch_errors(ev.trajectory.outputs, ev.trajectory.targets, ev.trajectory.inputs).errors == 0);
}

TEST_CASE("invalid configs")
{
    CHECK_THROWS_AS(generate({.bits = 0}), Error);
    CHECK_THROWS_AS(generate({.pulse_prob = 1.5}), Error);
    CHECK_THROWS_AS(generate({.pulse_prob = 0.0}), Error);
}

}
