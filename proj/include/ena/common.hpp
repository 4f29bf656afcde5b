#pragma once

// Shared numeric aliases, the error type and small helpers used across the library. //

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace ena {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// The single generator type used for every random draw in the library.
using Rng = std::mt19937_64;

enum class ErrorKind {
    invalid_argument,
    dimension,
    usage,
    solver,
    rebuild_required,
    starved,
    io,
};

/// Library-wide exception. The kind lets callers (and the CLI) branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Draw a vector of i.i.d. N(0, std^2) entries.
Vector gaussian_vector(Index n, double std, Rng& rng);

/// Derive an independent stream seed from a base seed and a stream id (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Infinity norm of a - b.
inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Number of worker threads, from the ENA_THREADS environment variable (default: hardware).
unsigned thread_count();

/// Run body(i) for i in [0, n) on thread_count() workers with a static partition.
/// Each index must write only to its own output slot; results are then independent of scheduling.
void parallel_for(Index n, const std::function<void(Index)>& body);

}  // namespace ena
