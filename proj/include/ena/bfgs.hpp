#pragma once

// Dense BFGS with a strong Wolfe line search.

#include "ena/common.hpp"

#include <functional>
#include <limits>

namespace ena {

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct BfgsOptions {
    Index max_iterations = 500;
    double grad_tol = 1e-10;  ///< stop on ||grad||_inf below this
    double c1 = 1e-4;
    double c2 = 0.9;
    Index max_line_search = 40;
    double f_floor = -std::numeric_limits<double>::infinity();  ///< stop once f <= f_floor
};

enum class BfgsStatus { converged, reached_floor, max_iterations, line_search_failed };

struct BfgsResult {
    Vector x;
    double f = 0.0;
    double grad_norm = 0.0;
    Index iterations = 0;
    Index evaluations = 0;
    BfgsStatus status = BfgsStatus::max_iterations;
};

BfgsResult minimize_bfgs(const Objective& objective, const Vector& x0, const BfgsOptions& options = {});

const char* to_string(BfgsStatus status);

}  // namespace ena
