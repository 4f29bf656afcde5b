#include "ena/ena_extract.hpp"

#include <Eigen/SVD>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace ena {

std::vector<Pdv> collect_pdvs(const Trajectory& trajectory)
{
    std::vector<Pdv> out;
    for (Index k = 0; k < trajectory.length(); ++k) {
        if (trajectory.inputs.row(k).isZero(0.0)) continue;
        Pdv p;
        p.origin_state = trajectory.state_before(k);
        p.vector = trajectory.states.row(k).transpose() - p.origin_state;
        p.pulse = trajectory.inputs.row(k).transpose();
        p.step = k;
        out.push_back(std::move(p));
    }
    return out;
}

Lss build_lss(const Vector& anchor, const std::vector<Pdv>& pdvs, const LssConfig& config,
              const std::string& anchor_name)
{
    if (!(config.variance_target > 0.0 && config.variance_target <= 1.0))
        throw Error{ErrorKind::invalid_argument, "variance target must lie in (0, 1]"};
    std::vector<const Pdv*> local;
    for (const auto& p : pdvs)
        if (p.origin_state.size() == anchor.size() && max_abs_diff(p.origin_state, anchor) <= config.radius)
            local.push_back(&p);
    if (local.size() < 2)
        throw Error{ErrorKind::starved, fmt::format("{} has {} local pulse difference vectors within radius {}; "
                                                    "at least 2 are needed",
                                                    anchor_name, local.size(), config.radius)};

    Matrix data(static_cast<Index>(local.size()), anchor.size());
    for (std::size_t i = 0; i < local.size(); ++i) data.row(static_cast<Index>(i)) = local[i]->vector.transpose();
    Eigen::BDCSVD<Matrix> svd{data, Eigen::ComputeThinV};
    const Vector energy = svd.singularValues().array().square();
    const double total = energy.sum();
    if (!(total > 0.0))
        throw Error{ErrorKind::starved, fmt::format("{} has only zero pulse difference vectors", anchor_name)};

    Lss lss;
    lss.anchor = anchor;
    lss.radius = config.radius;
    lss.local_pdvs = static_cast<Index>(local.size());
    lss.full_spectrum = energy / total;
    Index l = 0;
    double cum = 0.0;
    while (l < lss.full_spectrum.size() && cum < config.variance_target - 1e-12) cum += lss.full_spectrum(l++);
    l = std::max<Index>(1, l);
    if (config.max_dim > 0) l = std::min(l, config.max_dim);
    lss.basis = svd.matrixV().leftCols(l);
    // Fix signs so the largest component of each direction is positive.
    for (Index c = 0; c < l; ++c) {
        Index at = 0;
        lss.basis.col(c).cwiseAbs().maxCoeff(&at);
        if (lss.basis(at, c) < 0.0) lss.basis.col(c) *= -1.0;
    }
    lss.explained_variance = lss.full_spectrum.head(l);
    return lss;
}

Matrix grid_points(const Lss& lss, const GridSpec& spec)
{
    const Index dim = spec.dim > 0 ? spec.dim : lss.dim();
    if (dim > lss.dim())
        throw Error{ErrorKind::invalid_argument,
                    fmt::format("grid dimension {} exceeds the LSS dimension {}", dim, lss.dim())};
    if (spec.points_per_edge < 1) throw Error{ErrorKind::invalid_argument, "grid needs at least one point per edge"};
    Index total = 1;
    for (Index d = 0; d < dim; ++d) total *= spec.points_per_edge;
    const double half = 0.5 * spec.edge_length;
    const double h = spec.spacing();

    Matrix pts(total, lss.anchor.size());
    Vector coords(dim);
    for (Index idx = 0; idx < total; ++idx) {
        Index rem = idx;
        for (Index d = dim - 1; d >= 0; --d) {
            const Index i = rem % spec.points_per_edge;
            rem /= spec.points_per_edge;
            coords(d) = spec.points_per_edge > 1 ? -half + h * static_cast<double>(i) : 0.0;
        }
        pts.row(idx) = (lss.anchor + lss.basis.leftCols(dim) * coords).transpose();
    }
    return pts;
}

OmegaOutcome omega_limit(const ClosedLoop& loop, const Vector& start, const std::vector<Vector>& attractors,
                         const OmegaConfig& config)
{
    OmegaOutcome out;
    Vector x = start;
    for (Index it = 0; it <= config.max_iterations; ++it) {
        Vector next = loop.map(x);
        const double step = max_abs_diff(next, x);
        if (step < config.match_eps) {
            for (std::size_t j = 0; j < attractors.size(); ++j) {
                if (max_abs_diff(x, attractors[j]) < config.match_eps) {
                    out.kind = OmegaOutcome::Kind::attractor;
                    out.index = static_cast<Index>(j);
                    out.final_state = std::move(x);
                    out.iterations = it;
                    return out;
                }
            }
            if (step < config.settle_eps) {
                out.kind = OmegaOutcome::Kind::new_point;
                out.final_state = std::move(next);
                out.iterations = it;
                return out;
            }
        }
        x = std::move(next);
    }
    out.kind = OmegaOutcome::Kind::unresolved;
    out.final_state = std::move(x);
    out.iterations = config.max_iterations;
    return out;
}

namespace {

std::vector<Vector> node_locations(const EnaGraph& g)
{
    std::vector<Vector> locs;
    for (const auto& n : g.nodes) locs.push_back(n.point.location);
    return locs;
}

struct NodeGrid {
    Matrix points;
    std::vector<OmegaOutcome> outcomes;
};

NodeGrid classify_grid(const ClosedLoop& loop, const Lss& lss, const GridSpec& spec, const std::vector<Vector>& targets,
                       const OmegaConfig& omega)
{
    NodeGrid g;
    g.points = grid_points(lss, spec);
    g.outcomes.resize(static_cast<std::size_t>(g.points.rows()));
    parallel_for(g.points.rows(), [&](Index i) {
        g.outcomes[static_cast<std::size_t>(i)] = omega_limit(loop, g.points.row(i).transpose(), targets, omega);
    });
    return g;
}

}  // namespace

EnaGraph extract_ena(const VelocityField& field, const std::vector<FixedPoint>& attractors,
                     const std::vector<Pdv>& pdvs, const ExtractConfig& config)
{
    const ClosedLoop& loop = field.loop();
    EnaGraph graph;
    graph.grid = config.grid;
    for (const auto& fp : attractors) {
        if (fp.stability != Stability::stable)
            throw Error{ErrorKind::invalid_argument, "ENA nodes must be stable fixed points"};
        EnaNode node;
        node.point = fp;
        node.output = loop.output(fp.location);
        graph.nodes.push_back(std::move(node));
    }
    if (graph.nodes.size() < 2)
        throw Error{ErrorKind::invalid_argument, "ENA extraction needs at least two stable attractors"};

    std::vector<std::optional<Lss>> lss(graph.nodes.size());
    std::vector<NodeGrid> grids(graph.nodes.size());
    auto node_name = [&](std::size_t i) {
        const auto& o = graph.nodes[i].output;
        std::string s = fmt::format("node {} (output", i);
        for (Index j = 0; j < o.size(); ++j) s += fmt::format(" {:.3f}", o(j));
        return s + ")";
    };

    // Processes nodes in order; nodes discovered on the way are appended and processed later.
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        try {
            lss[i] = build_lss(graph.nodes[i].point.location, pdvs, config.lss, node_name(i));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::starved) throw;
            graph.warnings.push_back(fmt::format("{}; no outgoing edges", e.what()));
            continue;
        }
        graph.nodes[i].lss_dim = lss[i]->dim();
        // a node whose PDVs span fewer directions than the configured grid gets a grid of its own l
        GridSpec spec = config.grid;
        if (spec.dim > lss[i]->dim()) spec.dim = lss[i]->dim();
        grids[i] = classify_grid(loop, *lss[i], spec, node_locations(graph), config.omega);
        if (!config.augment) continue;

        // Discovered stable points become nodes; earlier grids are re-scanned for them below.
        std::vector<Vector> found;
        for (const auto& o : grids[i].outcomes) {
            if (o.kind != OmegaOutcome::Kind::new_point) continue;
            bool known = std::any_of(found.begin(), found.end(), [&](const Vector& f) {
                return max_abs_diff(f, o.final_state) < config.discover_merge_tol;
            });
            if (!known) found.push_back(o.final_state);
        }
        std::sort(found.begin(), found.end(), [](const Vector& a, const Vector& b) {
            return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
        });
        bool added = false;
        for (const auto& loc : found) {
            FixedPoint fp = classify(field, loc);
            if (fp.stability != Stability::stable) continue;
            EnaNode node;
            node.point = std::move(fp);
            node.output = loop.output(loc);
            node.discovered = true;
            graph.nodes.push_back(std::move(node));
            graph.warnings.push_back(
                fmt::format("grid search discovered a stable fixed point; added as {}", node_name(graph.nodes.size() - 1)));
            added = true;
        }
        if (added) {
            lss.resize(graph.nodes.size());
            grids.resize(graph.nodes.size());
            const auto targets = node_locations(graph);
            for (std::size_t j = 0; j <= i; ++j) {
                for (auto& o : grids[j].outcomes) {
                    if (o.kind != OmegaOutcome::Kind::new_point) continue;
                    for (std::size_t t = 0; t < targets.size(); ++t) {
                        if (max_abs_diff(o.final_state, targets[t]) < config.omega.match_eps) {
                            o.kind = OmegaOutcome::Kind::attractor;
                            o.index = static_cast<Index>(t);
                            break;
                        }
                    }
                }
            }
        }
    }

    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (!lss[i]) continue;
        auto& node = graph.nodes[i];
        const auto& grid = grids[i];
        node.grid_total = grid.points.rows();
        std::map<Index, EnaEdge> edges;
        for (Index g = 0; g < grid.points.rows(); ++g) {
            const auto& o = grid.outcomes[static_cast<std::size_t>(g)];
            if (o.kind != OmegaOutcome::Kind::attractor) {
                ++node.grid_unresolved;
                continue;
            }
            if (o.index == static_cast<Index>(i)) {
                ++node.grid_home;
                continue;
            }
            const double d = (grid.points.row(g).transpose() - node.point.location).norm();
            auto [it, fresh] = edges.try_emplace(o.index);
            EnaEdge& e = it->second;
            if (fresh || d < e.threshold) {
                e.threshold = d;
                e.argmin = grid.points.row(g).transpose();
            }
            e.from = static_cast<Index>(i);
            e.to = o.index;
            ++e.count;
        }
        const Index denom = node.grid_total - node.grid_home - node.grid_unresolved;
        if (denom == 0) {
            graph.warnings.push_back(fmt::format("{}: every resolved grid point returns home; no outgoing edges",
                                                 node_name(i)));
            continue;
        }
        if (node.grid_unresolved > 0)
            graph.warnings.push_back(fmt::format("{}: {} of {} grid points unresolved and excluded", node_name(i),
                                                 node.grid_unresolved, node.grid_total));
        for (auto& [to, e] : edges) {
            e.volume_ratio = static_cast<double>(e.count) / static_cast<double>(denom);
            e.beta = e.volume_ratio / e.threshold;
            graph.edges.push_back(std::move(e));
        }
    }
    return graph;
}

void label_edges(EnaGraph& graph, Index bits)
{
    for (auto& node : graph.nodes) {
        node.spurious = false;
        if (node.output.size() != bits) {
            node.labelable = false;
            node.spurious = true;
            continue;
        }
        node.pattern = node.output.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
        node.labelable = max_abs_diff(node.output, node.pattern) <= 0.5;
        if (!node.labelable) node.spurious = true;
    }
    // Among nodes sharing a pattern, the one closest to it is canonical.
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        auto& a = graph.nodes[i];
        if (!a.labelable) continue;
        for (std::size_t j = 0; j < graph.nodes.size(); ++j) {
            const auto& b = graph.nodes[j];
            if (i == j || !b.labelable || b.pattern != a.pattern) continue;
            const double da = max_abs_diff(a.output, a.pattern);
            const double db = max_abs_diff(b.output, b.pattern);
            if (db < da || (db == da && j < i)) a.spurious = true;
        }
    }
    for (auto& e : graph.edges) {
        const auto& a = graph.nodes[static_cast<std::size_t>(e.from)];
        const auto& b = graph.nodes[static_cast<std::size_t>(e.to)];
        if (!a.labelable || !b.labelable) {
            e.classification = EdgeClass::undesired;
            continue;
        }
        Index diff = 0;
        for (Index j = 0; j < bits; ++j)
            if (a.pattern(j) != b.pattern(j)) ++diff;
        e.classification = diff == 1 ? EdgeClass::desired : EdgeClass::undesired;
    }
}

void estimate_plain_thresholds(const VelocityField& field, EnaGraph& graph, const OmegaConfig& omega,
                               const ThresholdProbeConfig& config)
{
    const ClosedLoop& loop = field.loop();
    const auto targets = node_locations(graph);
    Rng rng{config.seed};

    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        std::vector<EnaEdge*> out;
        double reach = 0.0;
        for (auto& e : graph.edges) {
            if (e.from != static_cast<Index>(i)) continue;
            out.push_back(&e);
            reach = std::max(reach, e.threshold);
        }
        if (out.empty()) continue;
        const Vector& p = graph.nodes[i].point.location;

        struct Ray {
            Vector dir;
            double length;
            const Vector* end;  // exact far endpoint, if any
        };
        std::vector<Ray> rays;
        for (auto* e : out) rays.push_back({(e->argmin - p) / e->threshold, e->threshold, &e->argmin});
        for (Index r = 0; r < config.random_rays; ++r) {
            Vector v = gaussian_vector(p.size(), 1.0, rng);
            rays.push_back({v / v.norm(), reach, nullptr});
        }

        // Per ray, the first radius at which each target is hit.
        std::vector<std::map<Index, double>> hits(rays.size());
        parallel_for(static_cast<Index>(rays.size()), [&](Index r) {
            const Ray& ray = rays[static_cast<std::size_t>(r)];
            auto label = [&](double t) {
                const Vector x = ray.end && t == ray.length ? *ray.end : Vector(p + t * ray.dir);
                auto o = omega_limit(loop, x, targets, omega);
                return o.kind == OmegaOutcome::Kind::attractor ? o.index : Index{-1};
            };
            auto& found = hits[static_cast<std::size_t>(r)];
            double prev_t = 0.0;
            for (Index s = 1; s <= config.scan_steps; ++s) {
                const double t = s == config.scan_steps
                                     ? ray.length
                                     : ray.length * static_cast<double>(s) / static_cast<double>(config.scan_steps);
                const Index cur = label(t);
                if (cur >= 0 && cur != static_cast<Index>(i) && !found.count(cur)) {
                    // Shrink the bracket (prev_t, t] around the first entry into cur's basin.
                    double lo = prev_t, hi = t;
                    for (Index b = 0; b < config.bisection_steps; ++b) {
                        const double mid = 0.5 * (lo + hi);
                        if (label(mid) == cur) hi = mid;
                        else lo = mid;
                    }
                    found[cur] = hi;
                }
                prev_t = t;
            }
        });
        for (auto* e : out) {
            for (const auto& h : hits) {
                auto it = h.find(e->to);
                if (it == h.end()) continue;
                if (!e->delta_th || it->second < *e->delta_th) e->delta_th = it->second;
            }
        }
    }
}

}  // namespace ena
