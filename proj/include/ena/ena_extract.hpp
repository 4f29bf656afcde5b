#pragma once

// Pulse difference vectors, local switching subspaces, grid search and the ENA graph.

#include "ena/fixed_points.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ena {

struct Pdv {
    Vector vector;        ///< x[k] - x[k-1]
    Vector origin_state;  ///< x[k-1]
    Vector pulse;         ///< u[k]
    Index step = 0;
};

/// One entry per step with a nonzero input.
std::vector<Pdv> collect_pdvs(const Trajectory& trajectory);

struct LssConfig {
    double radius = 0.2;  ///< infinity-norm ball around the anchor selecting origin states
    double variance_target = 0.95;
    Index max_dim = 0;  ///< cap on l; 0 means none
};

struct Lss {
    Vector anchor;
    Matrix basis;               ///< N_r x l, orthonormal columns
    Vector explained_variance;  ///< fraction per retained component
    Vector full_spectrum;       ///< fraction for every component
    double radius = 0.0;
    Index local_pdvs = 0;

    Index dim() const { return basis.cols(); }
};

/// Uncentred PCA of the local PDVs. Throws Error(starved) naming `anchor_name` with fewer than 2.
Lss build_lss(const Vector& anchor, const std::vector<Pdv>& pdvs, const LssConfig& config,
              const std::string& anchor_name = "attractor");

struct GridSpec {
    Index dim = 0;              ///< zeta_1; 0 means the LSS dimension
    double edge_length = 4.0;   ///< zeta_2
    Index points_per_edge = 3;  ///< zeta_3

    double spacing() const { return points_per_edge > 1 ? edge_length / static_cast<double>(points_per_edge - 1) : 0.0; }
};

/// zeta_3^zeta_1 lattice points (rows) anchor + basis * c with c in [-zeta_2/2, zeta_2/2]^zeta_1.
/// The first grid axis varies slowest.
Matrix grid_points(const Lss& lss, const GridSpec& spec);

struct OmegaConfig {
    Index max_iterations = 1000;
    double match_eps = 1e-4;
    double settle_eps = 1e-12;  ///< displacement below which an unlisted point counts as converged
};

struct OmegaOutcome {
    enum class Kind { attractor, new_point, unresolved };
    Kind kind = Kind::unresolved;
    Index index = -1;  ///< attractor index when kind == attractor
    Vector final_state;
    Index iterations = 0;
};

OmegaOutcome omega_limit(const ClosedLoop& loop, const Vector& start, const std::vector<Vector>& attractors,
                         const OmegaConfig& config = {});

enum class EdgeClass { unlabelled, desired, undesired };

struct EnaNode {
    FixedPoint point;
    Vector output;
    bool discovered = false;  ///< added during grid classification
    bool spurious = false;
    bool labelable = false;
    Vector pattern;  ///< sign pattern of the output
    Index lss_dim = 0;
    Index grid_total = 0;
    Index grid_home = 0;
    Index grid_unresolved = 0;
};

struct EnaEdge {
    Index from = 0;
    Index to = 0;
    Index count = 0;           ///< grid points converging to `to`
    double threshold = 0.0;    ///< delta~_inp, Euclidean, ambient
    double volume_ratio = 0.0; ///< nu
    double beta = 0.0;         ///< nu / threshold
    Vector argmin;             ///< grid point realising the threshold
    std::optional<double> delta_th;  ///< ambient ray estimate of the plain threshold
    EdgeClass classification = EdgeClass::unlabelled;
};

struct EnaGraph {
    std::vector<EnaNode> nodes;
    std::vector<EnaEdge> edges;
    std::vector<std::string> warnings;
    GridSpec grid;
};

struct ExtractConfig {
    GridSpec grid{.dim = 0, .edge_length = 4.0, .points_per_edge = 223};
    LssConfig lss;
    OmegaConfig omega;
    double discover_merge_tol = 1e-4;
    bool augment = true;
};

/// Builds the graph over the given stable attractors. Grid points that settle on unlisted stable
/// fixed points add nodes; their outgoing edges use an LSS from the same PDVs when available.
EnaGraph extract_ena(const VelocityField& field, const std::vector<FixedPoint>& attractors,
                     const std::vector<Pdv>& pdvs, const ExtractConfig& config);

/// Desired iff endpoint sign patterns differ in exactly one bit; unlabelable or duplicate-pattern
/// nodes are marked spurious.
void label_edges(EnaGraph& graph, Index bits);

struct ThresholdProbeConfig {
    Index random_rays = 16;
    Index scan_steps = 32;
    Index bisection_steps = 30;
    std::uint64_t seed = 0;
};

/// Estimates delta_th per edge along random ambient rays and the ray through each edge's argmin
/// grid point, by radial scan plus bisection. Fills EnaEdge::delta_th.
void estimate_plain_thresholds(const VelocityField& field, EnaGraph& graph, const OmegaConfig& omega,
                               const ThresholdProbeConfig& config);

}  // namespace ena
