#pragma once

// Echo state network model, open/closed-loop stepping and the trained reservoir. //

#include "ena/common.hpp"

#include <Eigen/Sparse>
#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace ena {

/// All weights and scalar hyperparameters of a leaky tanh echo state network.
///
/// The open-loop update is
///     x[k] = (1 - a) x[k-1] + a tanh(W_r x[k-1] + W_in u[k] + W_fb y[k-1] + eps)
/// and once a read-out is installed the closed loop replaces W_fb y by W_fb W_o x.
struct EsnModel {
    Matrix reservoir;               ///< N_r x N_r
    Matrix input_weights;           ///< N_r x N_i
    Matrix feedback_weights;        ///< N_r x N_o
    std::optional<Matrix> readout;  ///< N_o x N_r, present once trained
    double leak_rate = 1.0;         ///< in (0, 1]
    double noise_std = 0.0;         ///< std of the pre-activation noise
    std::uint64_t seed = 0;
    std::string provenance;

    Index n_r() const { return reservoir.rows(); }
    Index n_i() const { return input_weights.cols(); }
    Index n_o() const { return feedback_weights.cols(); }
    bool trained() const { return readout.has_value(); }

    /// Throws Error(dimension/invalid_argument) when the invariants do not hold.
    void validate() const;
};

/// M = W_r + W_fb W_o, the effective recurrence of the closed loop.
struct TrainedReservoir {
    Matrix m;
};

/// Throws Error(usage) when the model has no read-out.
TrainedReservoir trained_reservoir(const EsnModel& model);

struct EsnBuildParams {
    Index n_r = 500;
    Index n_i = 2;
    Index n_o = 2;
    double sparsity = 0.95;  ///< fraction of reservoir entries zeroed
    double spectral_radius = 0.9;
    std::uint64_t seed = 0;
};

/// Random reservoir: uniform [-1, 1] entries, masked to the requested sparsity, then rescaled.
EsnModel build_random_esn(const EsnBuildParams& params);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& a);

Vector step_open_loop(const EsnModel& model, const Vector& x, const Vector& u, const Vector& y_prev);
Vector step_open_loop(const EsnModel& model, const Vector& x, const Vector& u, const Vector& y_prev,
                      const Vector& noise);

Vector step_closed_loop(const EsnModel& model, const Vector& x, const Vector& u);
Vector step_closed_loop(const EsnModel& model, const Vector& x, const Vector& u, const Vector& noise);

/// F(x) = G(x, 0) without noise.
Vector autonomous_map(const EsnModel& model, const Vector& x);

/// Precomputed closed-loop evaluator for hot loops.
///
/// Keeps W_r sparse and the feedback term factored, so M x costs nnz(W_r) + 2 N_r N_o
/// instead of N_r^2. Immutable after construction and safe to share between threads.
class ClosedLoop {
public:
    explicit ClosedLoop(const EsnModel& model);

    Index dim() const { return dim_; }
    Index n_i() const { return input_.cols(); }
    Index n_o() const { return readout_.rows(); }
    double leak_rate() const { return leak_; }

    Vector apply_m(const Vector& x) const;
    Vector apply_m_transpose(const Vector& v) const;
    const Matrix& dense_m() const { return dense_m_; }
    const Matrix& readout() const { return readout_; }
    const Matrix& input_weights() const { return input_; }

    Vector step(const Vector& x, const Vector& u) const;
    Vector step(const Vector& x, const Vector& u, const Vector& noise) const;
    Vector map(const Vector& x) const;
    Vector output(const Vector& x) const { return readout_ * x; }

private:
    Index dim_;
    double leak_;
    Eigen::SparseMatrix<double> reservoir_;
    Matrix feedback_;
    Matrix readout_;
    Matrix input_;
    Matrix dense_m_;
};

/// One simulated run: row k of every matrix belongs to step k.
///
/// states.row(k) is the state after input k has been applied, so the state before the
/// pulse at step k is states.row(k - 1), or initial_state for k = 0.
struct Trajectory {
    Vector initial_state;
    Matrix states;   ///< T x N_r
    Matrix inputs;   ///< T x N_i
    Matrix outputs;  ///< T x N_o
    Matrix targets;  ///< T x N_o, or 0 rows when absent

    Index length() const { return states.rows(); }
    bool has_targets() const { return targets.rows() == states.rows() && targets.rows() > 0; }
    Vector state_before(Index k) const;
};

/// Closed-loop run. noise_std == 0 skips noise draws entirely.
Trajectory run_closed_loop(const EsnModel& model, const Matrix& inputs, const Matrix& targets,
                           const Vector& initial_state, double noise_std, Rng& rng);

/// Deterministic start state holding the given memory pattern.
///
/// From the origin, writes each bit of `pattern` with a single noise-free pulse on its input
/// channel and lets the closed loop settle for `settle_steps` steps.
Vector prime_state(const EsnModel& model, const Vector& pattern, Index settle_steps = 50);

nlohmann::json model_to_json(const EsnModel& model);
EsnModel model_from_json(const nlohmann::json& doc);
void save_model(const EsnModel& model, const std::filesystem::path& path);
EsnModel load_model(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& doc);

}  // namespace ena
