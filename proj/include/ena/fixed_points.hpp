#pragma once

// Fixed points of the autonomous closed loop via kinetic-energy minimization.

#include "ena/bfgs.hpp"
#include "ena/esn.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace ena {

/// Q(x) = a (tanh(M x) - x) and q(x) = |Q(x)|^2 / 2 for the closed loop of a trained model.
class VelocityField {
public:
    explicit VelocityField(const EsnModel& model);
    explicit VelocityField(std::shared_ptr<const ClosedLoop> loop);

    Index dim() const { return loop_->dim(); }
    double leak_rate() const { return loop_->leak_rate(); }
    const ClosedLoop& loop() const { return *loop_; }

    Vector velocity(const Vector& x) const;
    double energy(const Vector& x) const;
    /// grad q = a (D M - I)^T Q with D = diag(1 - tanh^2(M x)).
    Vector gradient(const Vector& x) const;
    double energy_and_gradient(const Vector& x, Vector& grad) const;
    /// J_F = (1 - a) I + a D M.
    Matrix jacobian(const Vector& x) const;

private:
    std::shared_ptr<const ClosedLoop> loop_;
};

enum class Stability { stable, saddle, repeller, fold };

struct FixedPoint {
    Vector location;
    double energy = 0.0;
    std::vector<std::complex<double>> spectrum;  ///< sorted by decreasing modulus
    Index unstable_count = 0;                    ///< eigenvalues with modulus > 1
    Stability stability = Stability::stable;
    bool marginal = false;  ///< some eigenvalue within 1e-9 of the unit circle
    Index cluster_size = 1;
};

std::string stability_name(const FixedPoint& fp);

struct FinderConfig {
    Index n_starts = 500;
    double tol = 1e-6;  ///< acceptance bound on q
    std::uint64_t seed = 0;
    double start_jitter = 0.0;  ///< std of Gaussian noise added to each sampled start
    Index newton_steps = 8;     ///< damped Newton refinement of accepted minima; 0 disables
    BfgsOptions bfgs{.max_iterations = 500, .grad_tol = 1e-10, .c1 = 1e-4, .c2 = 0.9,
                     .max_line_search = 40, .f_floor = 1e-26};
};

struct Candidate {
    Vector location;
    double energy = 0.0;
    Index start_index = 0;  ///< trajectory row the start was sampled from
    Index iterations = 0;
    BfgsStatus status = BfgsStatus::converged;
};

struct FinderResult {
    std::vector<Candidate> candidates;  ///< q < tol
    std::vector<Candidate> ghosts;      ///< stationary points of q with q >= tol
    Index dropped = 0;                  ///< starts that neither converged nor reached tol
};

/// BFGS from n_starts states drawn uniformly (with replacement) from the trajectory.
FinderResult find_fixed_points(const VelocityField& field, const Trajectory& trajectory, const FinderConfig& config);

/// Same, with explicit start states (rows).
FinderResult find_fixed_points(const VelocityField& field, const Matrix& starts, const FinderConfig& config);

/// Damped Newton iteration on Q(x) = 0, accepting only steps that lower q.
Vector newton_polish(const VelocityField& field, const Vector& x, Index max_steps);

/// Full Jacobian spectrum and stability class at a located fixed point.
FixedPoint classify(const VelocityField& field, const Vector& location);

struct AggregateConfig {
    Index k_max = 10;
    double merge_tol = 1e-5;  ///< infinity-norm
    std::uint64_t seed = 0;
};

/// Groups by unstable count, clusters each group with k-means (k by Davies-Bouldin) and keeps the
/// member nearest each centroid; representatives closer than merge_tol are merged.
/// Output is sorted by unstable count, then lexicographically by location.
std::vector<FixedPoint> aggregate(const VelocityField& field, const std::vector<Candidate>& candidates,
                                  const AggregateConfig& config = {});

nlohmann::json fixed_points_to_json(const std::vector<FixedPoint>& points, const FinderResult* search = nullptr);
std::vector<FixedPoint> fixed_points_from_json(const nlohmann::json& doc);

}  // namespace ena
