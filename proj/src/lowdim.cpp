#include "ena/lowdim.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ena {

namespace {

double w_plus_raw(double m)
{
    const double c = std::sqrt((m - 1.0) / m);
    return m * c - std::atanh(c);
}

// Bisection for a sign change of f on [lo, hi]; f(lo) and f(hi) have opposite strict signs.
template <class F>
double bisect(F&& f, double lo, double hi, double flo, double tol = 1e-12)
{
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::string classify_2d(FixedPoint2d& p, double a, double b, double c, double d)
{
    Eigen::Matrix2d j;
    const double dx = 1.0 - p.x * p.x;
    const double dy = 1.0 - p.y * p.y;
    j << dx * a, dx * b, dy * c, dy * d;
    Eigen::EigenSolver<Eigen::Matrix2d> es{j, false};
    p.lambda1 = es.eigenvalues()(0);
    p.lambda2 = es.eigenvalues()(1);
    p.unstable_count = 0;
    bool neutral = false;
    for (auto l : {p.lambda1, p.lambda2}) {
        if (std::abs(l) > 1.0) ++p.unstable_count;
        if (std::abs(std::abs(l) - 1.0) < 1e-9) neutral = true;
    }
    if (neutral) return "fold";
    return p.unstable_count == 0 ? "stable" : p.unstable_count == 2 ? "repeller" : "saddle";
}

}  // namespace

EsnModel make_design_2d(double b, double omega_r, double omega_in)
{
    if (!(b >= 0.0 && b < 0.47))
        throw Error{ErrorKind::invalid_argument,
                    fmt::format("coupling b = {} outside [0, 0.47); near b = 0.47 a fold bifurcation removes "
                                "two of the four attractors",
                                b)};
    EsnModel m;
    m.reservoir.resize(2, 2);
    m.reservoir << 1.0, b, b, 1.0;
    m.reservoir *= omega_r;
    m.input_weights = omega_in * Matrix::Identity(2, 2);
    m.feedback_weights = Matrix::Zero(2, 2);
    m.readout = Matrix::Identity(2, 2);
    m.provenance = fmt::format("design 2d b={} omega_r={} omega_in={}", b, omega_r, omega_in);
    return m;
}

Matrix design_block(double s)
{
    Matrix b(2, 2);
    b << 1.1, 4.0, -s, 4.0;
    return b;
}

double max_design_coupling(Index bits)
{
    if (bits < 2) return 0.0;
    return w_plus_raw(1.1) / static_cast<double>(2 * bits - 2);
}

EsnModel make_design_2k(Index bits, double s, double omega_in, double coupling)
{
    if (bits < 1) throw Error{ErrorKind::invalid_argument, "design needs at least one bit"};
    if (!(s >= 0.0 && s < 2.15))
        throw Error{ErrorKind::invalid_argument,
                    fmt::format("saddle parameter s = {} outside [0, 2.15); near s = 2.15 a saddle-node "
                                "bifurcation annihilates the attractors",
                                s)};
    if (!(omega_in > 0.0)) throw Error{ErrorKind::invalid_argument, "input scaling must be positive"};
    if (!(std::abs(coupling) < max_design_coupling(bits)) && coupling != 0.0)
        throw Error{ErrorKind::invalid_argument,
                    fmt::format("|coupling| = {} must stay below {} to keep the product structure",
                                std::abs(coupling), max_design_coupling(bits))};
    const Index n = 2 * bits;
    EsnModel m;
    m.reservoir = Matrix::Constant(n, n, coupling);
    for (Index j = 0; j < bits; ++j) m.reservoir.block(2 * j, 2 * j, 2, 2) = design_block(s);
    m.input_weights = Matrix::Zero(n, bits);
    m.readout = Matrix::Zero(bits, n);
    for (Index j = 0; j < bits; ++j) {
        m.input_weights(2 * j + 1, j) = omega_in;
        (*m.readout)(j, 2 * j) = 1.0;
    }
    m.feedback_weights = Matrix::Zero(n, bits);
    m.provenance = fmt::format("design 2k bits={} s={} omega_in={} coupling={}", bits, s, omega_in, coupling);
    return m;
}

FoldBranches fold_curve(double m)
{
    if (!(m >= 1.0)) throw Error{ErrorKind::invalid_argument, fmt::format("fold curve needs m >= 1, got {}", m)};
    const double w = w_plus_raw(m);
    return {w, -w};
}

std::vector<double> critical_points_1d(double m, double w)
{
    if (!(m > 1.0)) return {};
    const double t = std::atanh(std::sqrt((m - 1.0) / m));
    return {(-t - w) / m, (t - w) / m};
}

std::vector<FixedPoint1d> fixed_points_1d(double m, double w)
{
    auto h = [&](double x) { return std::tanh(m * x + w) - x; };
    std::vector<double> knots{-1.0};
    std::vector<double> folds;
    for (double xc : critical_points_1d(m, w)) {
        if (!(xc > -1.0 && xc < 1.0)) continue;
        knots.push_back(xc);
        if (std::abs(h(xc)) <= 1e-13) folds.push_back(xc);
    }
    knots.push_back(1.0);

    std::vector<double> roots;
    auto value = [&](double x) {
        return std::find(folds.begin(), folds.end(), x) != folds.end() ? 0.0 : h(x);
    };
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = knots[i], hi = knots[i + 1];
        const double flo = value(lo), fhi = value(hi);
        if (flo * fhi < 0.0) roots.push_back(bisect(h, lo, hi, flo, 1e-15));
    }
    for (double f : folds) roots.push_back(f);
    std::sort(roots.begin(), roots.end());

    std::vector<FixedPoint1d> out;
    for (double x : roots) {
        FixedPoint1d p;
        p.x = x;
        p.slope = m * (1.0 - x * x);
        const bool is_fold = std::find(folds.begin(), folds.end(), x) != folds.end();
        p.stability = is_fold ? Stability1d::fold : std::abs(p.slope) < 1.0 ? Stability1d::stable : Stability1d::unstable;
        out.push_back(p);
    }
    return out;
}

Index predicted_count_1d(double m, double w, double on_curve_tol)
{
    if (m <= 1.0) return 1;
    const double wp = fold_curve(m).w_plus;
    const double gap = std::abs(w) - wp;
    if (std::abs(gap) <= on_curve_tol) return 2;
    return gap > 0.0 ? 1 : 3;
}

double nullcline_fn(double alpha, double beta, double eta)
{
    return (std::atanh(eta) - alpha * eta) / beta;
}

NullclineResult nullclines_2d(double a, double b, double c, double d)
{
    NullclineResult res;
    if (b == 0.0 || c == 0.0) {
        // One coordinate evolves on its own; the other sees it as a constant drive.
        res.decoupled = true;
        const bool x_free = b == 0.0;
        const auto outer = x_free ? fixed_points_1d(a, 0.0) : fixed_points_1d(d, 0.0);
        for (const auto& o : outer) {
            const auto inner = x_free ? fixed_points_1d(d, c * o.x) : fixed_points_1d(a, b * o.x);
            for (const auto& i : inner) {
                FixedPoint2d p;
                p.x = x_free ? o.x : i.x;
                p.y = x_free ? i.x : o.x;
                p.stability = classify_2d(p, a, b, c, d);
                res.points.push_back(p);
            }
        }
    } else {
        // Walk the x-nullcline through the pre-activation u: x = tanh(u), y = phi(u) = (u - a x) / b.
        auto phi = [&](double u) { return (u - a * std::tanh(u)) / b; };
        auto resid = [&](double u) {
            const double y = phi(u);
            return c * std::tanh(u) + d * y - std::atanh(y);
        };
        const double span = std::abs(a) + std::abs(b) + 1.0;
        constexpr Index coarse = 8193;
        auto admissible = [&](double u) { return std::abs(phi(u)) < 1.0; };
        auto edge = [&](double in, double out) {
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (in + out);
                if (admissible(mid)) in = mid;
                else out = mid;
                if (std::abs(in - out) < 1e-15 * std::max(1.0, std::abs(in))) break;
            }
            return in;
        };
        std::vector<std::pair<double, double>> intervals;
        double start = 0.0;
        bool inside = false;
        double prev_u = -span;
        for (Index i = 0; i < coarse; ++i) {
            const double u = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(coarse - 1);
            const bool ok = admissible(u);
            if (ok && !inside) start = i == 0 ? u : edge(u, prev_u);
            if (!ok && inside) intervals.emplace_back(start, edge(prev_u, u));
            inside = ok;
            prev_u = u;
        }
        if (inside) intervals.emplace_back(start, span);

        auto scan = [&](Index samples) {
            std::vector<double> roots;
            for (auto [lo, hi] : intervals) {
                auto at = [&](double s) { return lo + (hi - lo) * 0.5 * (1.0 + std::tanh(s)); };
                auto f = [&](double s) { return resid(at(s)); };
                double s_prev = -18.0;
                double f_prev = f(s_prev);
                for (Index i = 1; i < samples; ++i) {
                    const double s = -18.0 + 36.0 * static_cast<double>(i) / static_cast<double>(samples - 1);
                    const double fs = f(s);
                    if (f_prev == 0.0) {
                        roots.push_back(at(s_prev));
                    } else if (f_prev * fs < 0.0) {
                        const double sr = bisect(f, s_prev, s, f_prev, 1e-13);
                        double ulo = at(std::max(s_prev, sr - 1e-9)), uhi = at(std::min(s, sr + 1e-9));
                        double flo = resid(ulo);
                        roots.push_back(flo * resid(uhi) < 0.0 ? bisect(resid, ulo, uhi, flo, 1e-14) : at(sr));
                    }
                    s_prev = s;
                    f_prev = fs;
                }
            }
            return roots;
        };
        Index samples = 2048;
        std::vector<double> roots = scan(samples);
        for (int rounds = 0; rounds < 5; ++rounds) {
            auto finer = scan(2 * samples - 1);
            samples = 2 * samples - 1;
            const bool same = finer.size() == roots.size();
            roots = std::move(finer);
            if (same) break;
        }
        res.samples = samples;
        for (double u : roots) {
            FixedPoint2d p;
            p.x = std::tanh(u);
            p.y = phi(u);
            p.stability = classify_2d(p, a, b, c, d);
            res.points.push_back(p);
        }
    }
    std::sort(res.points.begin(), res.points.end(),
              [](const FixedPoint2d& l, const FixedPoint2d& r) { return l.x != r.x ? l.x < r.x : l.y < r.y; });
    // Roots found twice across interval seams.
    res.points.erase(std::unique(res.points.begin(), res.points.end(),
                                 [](const FixedPoint2d& l, const FixedPoint2d& r) {
                                     return std::abs(l.x - r.x) < 1e-10 && std::abs(l.y - r.y) < 1e-10;
                                 }),
                     res.points.end());
    return res;
}

NullclinePolylines nullcline_polylines(double a, double b, double c, double d, Index samples)
{
    NullclinePolylines out;
    for (Index i = 1; i < samples; ++i) {
        const double eta = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(samples);
        if (b != 0.0) {
            const double y = nullcline_fn(a, b, eta);
            if (std::abs(y) < 1.0) out.x_nullcline.emplace_back(eta, y);
        }
        if (c != 0.0) {
            const double x = nullcline_fn(d, c, eta);
            if (std::abs(x) < 1.0) out.y_nullcline.emplace_back(x, eta);
        }
    }
    return out;
}

ConditionVerdict count_conditions(double a, double b, double c, double d)
{
    ConditionVerdict v;
    if (!(a > 1.0 && d > 1.0)) {
        v.kind = ConditionVerdict::Kind::not_applicable;
        v.rule = "requires a > 1 and d > 1";
        return v;
    }
    const double ra = std::sqrt((a - 1.0) / a);
    const double rd = std::sqrt((d - 1.0) / d);
    const double hx = std::abs(nullcline_fn(a, b, ra));
    const double hy = std::abs(nullcline_fn(d, c, rd));
    const double bc = b * c;
    auto fire = [&](Index count, const char* rule) {
        v.kind = ConditionVerdict::Kind::count;
        v.count = count;
        v.rule = rule;
        return v;
    };
    if (bc >= 0.0) {
        if ((1.0 - a) * (1.0 - d) < bc) return fire(3, "origin-slope");
        if (hx < rd || hy < ra) return fire(5, "single-hump");
    } else {
        if (hx < rd && hy < ra) return fire(1, "both-humps-inside");
        if ((hx < rd && hy > 1.0) || (hy < ra && hx > 1.0)) return fire(5, "one-hump-out");
    }
    if (hx > 1.0 && hy > 1.0) return fire(9, "both-humps-out");
    v.kind = ConditionVerdict::Kind::indeterminate;
    return v;
}

}  // namespace ena
