#pragma once

// Hand-designed flip-flop reservoirs and fixed-point analysis of 1D and 2D tanh maps.

#include "ena/esn.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ena {

/// M(b) = w_r [[1, b], [b, 1]], W_in = w_in I, identity read-out, a = 1, no noise.
EsnModel make_design_2d(double b, double omega_r = 3.0, double omega_in = 6.0);

/// Block-diagonal reservoir of k copies of B = [[1.1, 4], [-s, 4]]; bit j drives coordinate 2j + 1
/// (zero-based) and is read from coordinate 2j. `coupling` fills every off-block entry.
EsnModel make_design_2k(Index bits, double s, double omega_in = 1.0, double coupling = 0.0);

/// Largest |coupling| accepted by make_design_2k for the given bit count.
double max_design_coupling(Index bits);

/// The 2x2 block used by make_design_2k.
Matrix design_block(double s);

enum class Stability1d { stable, unstable, fold };

struct FixedPoint1d {
    double x = 0.0;
    double slope = 0.0;  ///< F'(x) = m (1 - x^2)
    Stability1d stability = Stability1d::stable;
};

/// Roots of tanh(m x + w) - x in (-1, 1), ascending.
std::vector<FixedPoint1d> fixed_points_1d(double m, double w);

/// Fold points x_l < x_r of tanh(m x + w) - x; empty when m <= 1.
std::vector<double> critical_points_1d(double m, double w);

struct FoldBranches {
    double w_plus = 0.0;
    double w_minus = 0.0;
};

/// w(m) = +-[m sqrt((m-1)/m) - atanh(sqrt((m-1)/m))]. Throws for m < 1.
FoldBranches fold_curve(double m);

/// Fixed-point count implied by the fold curve (1 or 3; 2 exactly on the curve).
Index predicted_count_1d(double m, double w, double on_curve_tol = 1e-12);

struct FixedPoint2d {
    double x = 0.0;
    double y = 0.0;
    std::complex<double> lambda1, lambda2;
    Index unstable_count = 0;
    std::string stability;  ///< stable, saddle, repeller or fold
};

struct NullclineResult {
    std::vector<FixedPoint2d> points;  ///< sorted by x, then y
    Index count() const { return static_cast<Index>(points.size()); }
    bool decoupled = false;  ///< b or c was zero and the 1D fallback was used
    Index samples = 0;       ///< final samples per admissible interval
};

/// Fixed points of (x, y) -> (tanh(a x + b y), tanh(c x + d y)) as nullcline intersections.
NullclineResult nullclines_2d(double a, double b, double c, double d);

/// N_{alpha,beta}(eta) = (atanh(eta) - alpha eta) / beta.
double nullcline_fn(double alpha, double beta, double eta);

/// Polyline samples of y = N_{a,b}(x) and x = N_{d,c}(y) inside the unit square.
struct NullclinePolylines {
    std::vector<std::pair<double, double>> x_nullcline;
    std::vector<std::pair<double, double>> y_nullcline;
};
NullclinePolylines nullcline_polylines(double a, double b, double c, double d, Index samples = 400);

struct ConditionVerdict {
    enum class Kind { count, indeterminate, not_applicable };
    Kind kind = Kind::indeterminate;
    Index count = 0;
    std::string rule;  ///< name of the condition that fired
};

/// Sufficient conditions for the number of fixed points of the 2D map when a, d > 1.
ConditionVerdict count_conditions(double a, double b, double c, double d);

}  // namespace ena
