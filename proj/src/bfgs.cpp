#include "ena/bfgs.hpp"

#include <algorithm>
#include <cmath>

namespace ena {

namespace {

struct LinePoint {
    double a = 0.0;
    double f = 0.0;
    double d = 0.0;  // directional derivative
};

// Minimizer of the cubic through two points with derivatives, clamped into [lo, hi].
double cubic_step(const LinePoint& p, const LinePoint& q, double lo, double hi)
{
    const double d1 = p.d + q.d - 3.0 * (p.f - q.f) / (p.a - q.a);
    const double disc = d1 * d1 - p.d * q.d;
    double t = 0.5 * (lo + hi);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), q.a - p.a);
        const double denom = q.d - p.d + 2.0 * d2;
        if (denom != 0.0) t = q.a - (q.a - p.a) * (q.d + d2 - d1) / denom;
    }
    if (!std::isfinite(t) || t <= lo || t >= hi) t = 0.5 * (lo + hi);
    // Keep away from the bracket ends.
    const double margin = 0.1 * (hi - lo);
    return std::clamp(t, lo + margin, hi - margin);
}

class LineSearch {
public:
    LineSearch(const Objective& f, const Vector& x, const Vector& dir, const BfgsOptions& opt, Index& evals)
        : f_{f}, x_{x}, dir_{dir}, opt_{opt}, evals_{evals}, grad_(x.size())
    {
    }

    // Returns false when no step satisfying the strong Wolfe conditions was found.
    bool run(double f0, double d0, double a_init)
    {
        const LinePoint zero{0.0, f0, d0};
        LinePoint prev = zero;
        double a = a_init;
        for (Index i = 0; i < opt_.max_line_search; ++i) {
            LinePoint cur = eval(a);
            if (!std::isfinite(cur.f) || cur.f > f0 + opt_.c1 * a * d0 || (i > 0 && cur.f >= prev.f))
                return zoom(zero, prev, cur);
            if (std::abs(cur.d) <= -opt_.c2 * d0) return accept(cur);
            if (cur.d >= 0.0) return zoom(zero, cur, prev);
            prev = cur;
            a *= 2.0;
        }
        return false;
    }

    double step() const { return best_.a; }
    double value() const { return best_.f; }
    const Vector& gradient() const { return best_grad_; }

private:
    LinePoint eval(double a)
    {
        ++evals_;
        trial_ = x_ + a * dir_;
        const double fv = f_(trial_, grad_);
        return {a, fv, grad_.dot(dir_)};
    }

    bool accept(const LinePoint& p)
    {
        best_ = p;
        best_grad_ = grad_;
        return true;
    }

    bool zoom(const LinePoint& zero, LinePoint lo, LinePoint hi)
    {
        for (Index i = 0; i < opt_.max_line_search; ++i) {
            const double left = std::min(lo.a, hi.a);
            const double right = std::max(lo.a, hi.a);
            if (right - left <= 1e-16 * std::max(1.0, right)) break;
            const double a = std::isfinite(hi.f) ? cubic_step(lo, hi, left, right) : 0.5 * (left + right);
            LinePoint cur = eval(a);
            if (!std::isfinite(cur.f) || cur.f > zero.f + opt_.c1 * a * zero.d || cur.f >= lo.f) {
                hi = cur;
            } else {
                if (std::abs(cur.d) <= -opt_.c2 * zero.d) return accept(cur);
                if (cur.d * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = cur;
            }
        }
        // Fall back to the best sufficient-decrease point if it improved f at all.
        if (lo.a > 0.0 && lo.f < zero.f) {
            eval(lo.a);
            best_ = lo;
            best_grad_ = grad_;
            return true;
        }
        return false;
    }

    const Objective& f_;
    const Vector& x_;
    const Vector& dir_;
    const BfgsOptions& opt_;
    Index& evals_;
    Vector grad_;
    Vector trial_;
    LinePoint best_;
    Vector best_grad_;
};

}  // namespace

const char* to_string(BfgsStatus status)
{
    switch (status) {
    case BfgsStatus::converged: return "converged";
    case BfgsStatus::reached_floor: return "reached_floor";
    case BfgsStatus::max_iterations: return "max_iterations";
    case BfgsStatus::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

BfgsResult minimize_bfgs(const Objective& objective, const Vector& x0, const BfgsOptions& options)
{
    const Index n = x0.size();
    BfgsResult res;
    res.x = x0;
    Vector g(n);
    res.f = objective(res.x, g);
    res.evaluations = 1;
    res.grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;

    Matrix h = Matrix::Identity(n, n);
    bool scaled = false;
    Vector dir(n), s(n), y(n), hy(n);
    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        if (res.grad_norm <= options.grad_tol) {
            res.status = BfgsStatus::converged;
            return res;
        }
        if (res.f <= options.f_floor) {
            res.status = BfgsStatus::reached_floor;
            return res;
        }
        dir.noalias() = -(h.selfadjointView<Eigen::Lower>() * g);
        double d0 = g.dot(dir);
        if (!(d0 < 0.0)) {
            h.setIdentity();
            scaled = false;
            dir = -g;
            d0 = -g.squaredNorm();
        }
        const double a_init = scaled ? 1.0 : std::min(1.0, 1.0 / std::max(1e-300, g.norm()));
        LineSearch search{objective, res.x, dir, options, res.evaluations};
        if (!search.run(res.f, d0, a_init)) {
            res.status = BfgsStatus::line_search_failed;
            return res;
        }
        s = search.step() * dir;
        y = search.gradient() - g;
        res.x += s;
        res.f = search.value();
        g = search.gradient();
        res.grad_norm = g.cwiseAbs().maxCoeff();

        const double sy = s.dot(y);
        if (sy > 1e-300) {
            if (!scaled) {
                h *= sy / y.squaredNorm();
                scaled = true;
            }
            // H <- (I - r s y^T) H (I - r y s^T) + r s s^T with r = 1 / (y^T s)
            const double r = 1.0 / sy;
            hy.noalias() = h.selfadjointView<Eigen::Lower>() * y;
            const double yhy = y.dot(hy);
            auto lower = h.selfadjointView<Eigen::Lower>();
            lower.rankUpdate(s, (1.0 + r * yhy) * r);
            lower.rankUpdate(hy, s, -r);
        }
    }
    res.status = res.grad_norm <= options.grad_tol ? BfgsStatus::converged
               : res.f <= options.f_floor         ? BfgsStatus::reached_floor
                                                  : BfgsStatus::max_iterations;
    return res;
}

}  // namespace ena
