#include "ena/fixed_points.hpp"
#include "ena/lowdim.hpp"
#include "ena/trainer.hpp"

#include <doctest.h>

#include <map>

using namespace ena;

namespace {

EsnModel random_trained(Index n, double leak, std::uint64_t seed)
{
    EsnModel m = build_random_esn({.n_r = n, .seed = seed});
    Rng rng{seed + 1};
    std::normal_distribution<double> d{0.0, 0.2};
    m.readout = Matrix::NullaryExpr(2, n, [&] { return d(rng); });
    m.leak_rate = leak;
    return m;
}

Vector fd_gradient(const VelocityField& f, const Vector& x, double h)
{
    Vector g(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        Vector a = x, b = x;
        a(i) += h;
        b(i) -= h;
        g(i) = (f.energy(a) - f.energy(b)) / (2.0 * h);
    }
    return g;
}

std::map<std::string, int> census(const std::vector<FixedPoint>& fps)
{
    std::map<std::string, int> c;
    for (const auto& fp : fps) ++c[stability_name(fp)];
    return c;
}

}  // namespace

TEST_SUITE("fixed_points") {

TEST_CASE("energy matches half the squared map displacement")
{
    const EsnModel m = make_design_2d(0.2);
    const VelocityField f{m};
    Rng rng{4};
    for (int i = 0; i < 20; ++i) {
        const Vector x = gaussian_vector(2, 0.7, rng);
        const Vector d = autonomous_map(m, x) - x;
        CHECK(f.energy(x) == doctest::Approx(0.5 * d.squaredNorm()).epsilon(1e-13));
        CHECK(max_abs_diff(f.velocity(x), d) < 1e-15);
    }
    CHECK(f.energy(Vector::Zero(2)) == 0.0);
}

TEST_CASE("velocity is a (F(x) - x) for a leaky model")
{
    const EsnModel m = random_trained(30, 0.4, 2);
    const VelocityField f{m};
    Rng rng{1};
    const Vector x = gaussian_vector(30, 0.5, rng);
    CHECK(max_abs_diff(f.velocity(x), autonomous_map(m, x) - x) < 1e-14);
}

TEST_CASE("analytic gradient against central differences")
{
    for (double leak : {1.0, 0.3}) {
        const EsnModel m = random_trained(60, leak, 7);
        const VelocityField f{m};
        Rng rng{8};
        for (int i = 0; i < 10; ++i) {
            const Vector x = gaussian_vector(60, 0.4, rng);
            const Vector g = f.gradient(x);
            const Vector fd = fd_gradient(f, x, 1e-6);
            CHECK((g - fd).norm() / g.norm() < 1e-6);
            Vector g2;
            CHECK(f.energy_and_gradient(x, g2) == doctest::Approx(f.energy(x)));
            CHECK(max_abs_diff(g, g2) == 0.0);
        }
    }
}

TEST_CASE("gradient carries alpha squared")
{
    EsnModel m = random_trained(25, 1.0, 3);
    Rng rng{2};
    const Vector x = gaussian_vector(25, 0.5, rng);
    const Vector g1 = VelocityField{m}.gradient(x);
    m.leak_rate = 0.5;
    const Vector g05 = VelocityField{m}.gradient(x);
    CHECK(max_abs_diff(g05, 0.25 * g1) < 1e-14);
}

TEST_CASE("gradient vanishes at a fixed point")
{
    const VelocityField f{make_design_2d(0.2)};
    Vector p{{1.0, 1.0}};
    for (int i = 0; i < 200; ++i) p = f.loop().map(p);
    CHECK(f.gradient(p).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("jacobian against finite differences of the map")
{
    const EsnModel m = random_trained(20, 0.6, 5);
    const VelocityField f{m};
    Rng rng{6};
    const Vector x = gaussian_vector(20, 0.5, rng);
    const Matrix j = f.jacobian(x);
    for (Index c = 0; c < 20; ++c) {
        Vector a = x, b = x;
        a(c) += 1e-6;
        b(c) -= 1e-6;
        const Vector col = (f.loop().map(a) - f.loop().map(b)) / 2e-6;
        CHECK(max_abs_diff(j.col(c), col) < 1e-8);
    }
}

TEST_CASE("origin of the 2D design is a repeller with eigenvalues 3.6 and 2.4")
{
    const FixedPoint fp = classify(VelocityField{make_design_2d(0.2)}, Vector::Zero(2));
    CHECK(fp.stability == Stability::repeller);
    CHECK(fp.unstable_count == 2);
    CHECK(std::abs(fp.spectrum[0]) == doctest::Approx(3.6).epsilon(1e-12));
    CHECK(std::abs(fp.spectrum[1]) == doctest::Approx(2.4).epsilon(1e-12));
    CHECK(stability_name(fp) == "repeller");
}

TEST_CASE("2D design: jittered starts find all 9 fixed points")
{
    const EsnModel m = make_design_2d(0.2);
    const VelocityField f{m};
    const Evaluation ev = evaluate(m, {.bits = 2, .length = 1000, .seed = 3}, 100, 0.0, 0);
    const FinderConfig cfg{.n_starts = 1000, .seed = 1, .start_jitter = 0.75};
    const FinderResult r = find_fixed_points(f, ev.trajectory, cfg);
    const auto fps = aggregate(f, r.candidates, {.seed = 1});
    const auto c = census(fps);
    CHECK(fps.size() == 9);
    CHECK(c.at("stable") == 4);
    CHECK(c.at("saddle(1)") == 4);
    CHECK(c.at("repeller") == 1);
    for (const auto& fp : fps) {
        CHECK(fp.energy < 1e-20);
        if (fp.stability == Stability::stable) CHECK(fp.location.cwiseAbs().minCoeff() > 0.9);
    }
}

TEST_CASE("near-duplicates aggregate to one point")
{
    const VelocityField f{make_design_2d(0.2)};
    Vector p{{1.0, 1.0}};
    for (int i = 0; i < 200; ++i) p = f.loop().map(p);
    Rng rng{2};
    std::vector<Candidate> cands;
    for (int i = 0; i < 100; ++i) cands.push_back({.location = p + gaussian_vector(2, 1e-9, rng)});
    const auto fps = aggregate(f, cands);
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].cluster_size == 100);
    CHECK(fps[0].stability == Stability::stable);
}

TEST_CASE("no starts, no candidates")
{
    const VelocityField f{make_design_2d(0.2)};
    const FinderResult r = find_fixed_points(f, Matrix(0, 2), FinderConfig{});
    CHECK(r.candidates.empty());
    CHECK(aggregate(f, r.candidates).empty());
}

TEST_CASE("finder output does not depend on the thread count")
{
    const EsnModel m = make_design_2k(2, 2.0);
    const VelocityField f{m};
    const Evaluation ev = evaluate(m, {.bits = 2, .length = 500, .seed = 3}, 100, 0.0, 0);
    const FinderConfig cfg{.n_starts = 64, .seed = 4, .start_jitter = 0.5};
    setenv("ENA_THREADS", "1", 1);
    const FinderResult a = find_fixed_points(f, ev.trajectory, cfg);
    setenv("ENA_THREADS", "3", 1);
    const FinderResult b = find_fixed_points(f, ev.trajectory, cfg);
    unsetenv("ENA_THREADS");
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) CHECK(a.candidates[i].location == b.candidates[i].location);
}

TEST_CASE("fixed point json round trip")
{
    const VelocityField f{make_design_2d(0.2)};
    const std::vector<FixedPoint> fps{classify(f, Vector::Zero(2))};
    const auto back = fixed_points_from_json(fixed_points_to_json(fps));
    REQUIRE(back.size() == 1);
    CHECK(back[0].location == fps[0].location);
    CHECK(back[0].unstable_count == 2);
}

}
