#include "ena/fixed_points.hpp"

#include "ena/clustering.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <optional>

namespace ena {

namespace {

Vector& g_scratch(Index n)
{
    thread_local Vector g;
    g.resize(n);
    return g;
}

}  // namespace

VelocityField::VelocityField(const EsnModel& model) : loop_{std::make_shared<const ClosedLoop>(model)} {}

VelocityField::VelocityField(std::shared_ptr<const ClosedLoop> loop) : loop_{std::move(loop)}
{
    if (!loop_) throw Error{ErrorKind::usage, "velocity field needs a closed loop"};
}

Vector VelocityField::velocity(const Vector& x) const
{
    return leak_rate() * (loop_->apply_m(x).array().tanh().matrix() - x);
}

double VelocityField::energy(const Vector& x) const
{
    return 0.5 * velocity(x).squaredNorm();
}

Vector VelocityField::gradient(const Vector& x) const
{
    Vector g;
    energy_and_gradient(x, g);
    return g;
}

double VelocityField::energy_and_gradient(const Vector& x, Vector& grad) const
{
    const double a = leak_rate();
    const Vector t = loop_->apply_m(x).array().tanh().matrix();
    const Vector q = a * (t - x);
    const Vector dq = (1.0 - t.array().square()).matrix().cwiseProduct(q);
    grad = a * (loop_->apply_m_transpose(dq) - q);
    return 0.5 * q.squaredNorm();
}

Matrix VelocityField::jacobian(const Vector& x) const
{
    const double a = leak_rate();
    const Vector d = 1.0 - loop_->apply_m(x).array().tanh().square();
    Matrix j = a * (d.asDiagonal() * loop_->dense_m());
    j.diagonal().array() += 1.0 - a;
    return j;
}

std::string stability_name(const FixedPoint& fp)
{
    switch (fp.stability) {
    case Stability::stable: return "stable";
    case Stability::repeller: return "repeller";
    case Stability::fold: return "fold";
    case Stability::saddle: return fmt::format("saddle({})", fp.unstable_count);
    }
    return "unknown";
}

FixedPoint classify(const VelocityField& field, const Vector& location)
{
    FixedPoint fp;
    fp.location = location;
    fp.energy = field.energy(location);
    Eigen::EigenSolver<Matrix> solver{field.jacobian(location), false};
    if (solver.info() != Eigen::Success) throw Error{ErrorKind::solver, "Jacobian eigen-decomposition failed"};
    const auto& ev = solver.eigenvalues();
    fp.spectrum.assign(ev.data(), ev.data() + ev.size());
    std::stable_sort(fp.spectrum.begin(), fp.spectrum.end(), [](auto a, auto b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    constexpr double band = 1e-9;
    for (auto l : fp.spectrum) {
        const double r = std::abs(l);
        if (r > 1.0) ++fp.unstable_count;
        if (std::abs(r - 1.0) <= band) fp.marginal = true;
    }
    const Index n = static_cast<Index>(fp.spectrum.size());
    fp.stability = fp.unstable_count == 0 ? Stability::stable
                 : fp.unstable_count == n ? Stability::repeller
                                          : Stability::saddle;
    return fp;
}

Vector newton_polish(const VelocityField& field, const Vector& x0, Index max_steps)
{
    Vector x = x0;
    double q = field.energy(x);
    for (Index it = 0; it < max_steps && q > 0.0; ++it) {
        Matrix jq = field.jacobian(x);
        jq.diagonal().array() -= 1.0;  // J_Q = J_F - I
        const Eigen::PartialPivLU<Matrix> lu{jq};
        const Vector dx = lu.solve(-field.velocity(x));
        if (!dx.allFinite()) break;
        bool improved = false;
        for (double t = 1.0; t > 1e-4; t *= 0.5) {
            const Vector trial = x + t * dx;
            const double qt = field.energy(trial);
            if (qt < q) {
                x = trial;
                q = qt;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return x;
}

FinderResult find_fixed_points(const VelocityField& field, const Trajectory& trajectory, const FinderConfig& config)
{
    if (config.n_starts <= 0) return {};
    if (trajectory.length() == 0) throw Error{ErrorKind::invalid_argument, "trajectory is empty"};
    Rng rng{config.seed};
    std::uniform_int_distribution<Index> row{0, trajectory.length() - 1};
    Matrix starts(config.n_starts, field.dim());
    std::vector<Index> rows(static_cast<std::size_t>(config.n_starts));
    for (Index s = 0; s < config.n_starts; ++s) {
        rows[static_cast<std::size_t>(s)] = row(rng);
        starts.row(s) = trajectory.states.row(rows[static_cast<std::size_t>(s)]);
        if (config.start_jitter > 0.0)
            starts.row(s) += gaussian_vector(field.dim(), config.start_jitter, rng).transpose();
    }
    FinderConfig plain = config;
    plain.start_jitter = 0.0;
    FinderResult res = find_fixed_points(field, starts, plain);
    for (auto* list : {&res.candidates, &res.ghosts})
        for (auto& c : *list) c.start_index = rows[static_cast<std::size_t>(c.start_index)];
    return res;
}

FinderResult find_fixed_points(const VelocityField& field, const Matrix& starts, const FinderConfig& config)
{
    if (starts.cols() != field.dim())
        throw Error{ErrorKind::dimension, fmt::format("start states have {} columns, model has {}", starts.cols(),
                                                      field.dim())};
    const Index n = starts.rows();
    std::vector<std::optional<BfgsResult>> runs(static_cast<std::size_t>(n));
    const Objective objective = [&field](const Vector& x, Vector& g) { return field.energy_and_gradient(x, g); };
    parallel_for(n, [&](Index s) {
        BfgsResult r = minimize_bfgs(objective, starts.row(s).transpose(), config.bfgs);
        if (config.newton_steps > 0 && r.f < config.tol) {
            r.x = newton_polish(field, r.x, config.newton_steps);
            r.f = field.energy_and_gradient(r.x, g_scratch(field.dim()));
        }
        runs[static_cast<std::size_t>(s)] = std::move(r);
    });

    FinderResult res;
    for (Index s = 0; s < n; ++s) {
        BfgsResult& r = *runs[static_cast<std::size_t>(s)];
        Candidate c{std::move(r.x), r.f, s, r.iterations, r.status};
        if (c.energy < config.tol) {
            res.candidates.push_back(std::move(c));
        } else if (r.status == BfgsStatus::converged || r.grad_norm <= 1e-6) {
            res.ghosts.push_back(std::move(c));
        } else {
            ++res.dropped;
        }
    }
    return res;
}

namespace {

struct Member {
    Vector location;
    double energy;
    Index weight;  // number of candidates collapsed onto this one
};

// Greedy merge of points within tol (infinity norm) of an earlier kept point.
std::vector<Member> dedupe(const std::vector<Member>& in, double tol)
{
    std::vector<Member> out;
    for (const auto& m : in) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const Member& o) { return max_abs_diff(o.location, m.location) < tol; });
        if (it == out.end()) {
            out.push_back(m);
        } else {
            it->weight += m.weight;
            if (m.energy < it->energy) {
                it->location = m.location;
                it->energy = m.energy;
            }
        }
    }
    return out;
}

bool location_less(const Vector& a, const Vector& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

std::vector<FixedPoint> aggregate(const VelocityField& field, const std::vector<Candidate>& candidates,
                                  const AggregateConfig& config)
{
    if (candidates.empty()) return {};

    // Exact-ish duplicates share one classification.
    std::vector<Member> members;
    members.reserve(candidates.size());
    for (const auto& c : candidates) members.push_back({c.location, c.energy, 1});
    members = dedupe(members, config.merge_tol);

    std::vector<FixedPoint> classes(members.size());
    parallel_for(static_cast<Index>(members.size()), [&](Index i) {
        classes[static_cast<std::size_t>(i)] = classify(field, members[static_cast<std::size_t>(i)].location);
    });

    std::map<Index, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < members.size(); ++i) groups[classes[i].unstable_count].push_back(i);

    std::vector<FixedPoint> out;
    for (const auto& [unstable, idx] : groups) {
        std::vector<FixedPoint> reps;
        if (idx.size() == 1) {
            reps.push_back(classes[idx[0]]);
            reps.back().cluster_size = members[idx[0]].weight;
        } else {
            Matrix pts(static_cast<Index>(idx.size()), field.dim());
            for (std::size_t r = 0; r < idx.size(); ++r) pts.row(static_cast<Index>(r)) = members[idx[r]].location.transpose();
            const KSelection sel = select_k_davies_bouldin(pts, std::min<Index>(config.k_max, pts.rows()),
                                                           derive_seed(config.seed, static_cast<std::uint64_t>(unstable)));
            const auto& km = sel.best;
            for (Index c = 0; c < km.k; ++c) {
                std::optional<std::size_t> nearest;
                double best = 0.0;
                Index size = 0;
                for (std::size_t r = 0; r < idx.size(); ++r) {
                    if (km.labels[r] != c) continue;
                    size += members[idx[r]].weight;
                    const double d = (pts.row(static_cast<Index>(r)) - km.centroids.row(c)).squaredNorm();
                    if (!nearest || d < best) {
                        nearest = r;
                        best = d;
                    }
                }
                if (!nearest) continue;
                FixedPoint fp = classes[idx[*nearest]];
                fp.cluster_size = size;
                reps.push_back(std::move(fp));
            }
        }
        // Merge representatives that still coincide.
        std::vector<FixedPoint> kept;
        for (auto& fp : reps) {
            auto it = std::find_if(kept.begin(), kept.end(), [&](const FixedPoint& o) {
                return max_abs_diff(o.location, fp.location) < config.merge_tol;
            });
            if (it == kept.end()) kept.push_back(std::move(fp));
            else it->cluster_size += fp.cluster_size;
        }
        std::sort(kept.begin(), kept.end(),
                  [](const FixedPoint& a, const FixedPoint& b) { return location_less(a.location, b.location); });
        for (auto& fp : kept) out.push_back(std::move(fp));
    }
    return out;
}

nlohmann::json fixed_points_to_json(const std::vector<FixedPoint>& points, const FinderResult* search)
{
    nlohmann::json doc;
    doc["format"] = "ena-fixed-points";
    doc["count"] = points.size();
    auto& list = doc["fixed_points"] = nlohmann::json::array();
    for (const auto& fp : points) {
        nlohmann::json spectrum = nlohmann::json::array();
        for (auto l : fp.spectrum) spectrum.push_back({l.real(), l.imag()});
        list.push_back({{"location", std::vector<double>(fp.location.data(), fp.location.data() + fp.location.size())},
                        {"energy", fp.energy},
                        {"spectrum", std::move(spectrum)},
                        {"unstable_count", fp.unstable_count},
                        {"stability", stability_name(fp)},
                        {"marginal", fp.marginal},
                        {"cluster_size", fp.cluster_size}});
    }
    if (search) {
        doc["search"] = {{"candidates", search->candidates.size()},
                         {"ghosts", search->ghosts.size()},
                         {"dropped", search->dropped}};
        auto& ghosts = doc["ghosts"] = nlohmann::json::array();
        for (const auto& g : search->ghosts)
            ghosts.push_back({{"energy", g.energy}, {"start_index", g.start_index}, {"iterations", g.iterations},
                              {"location", std::vector<double>(g.location.data(), g.location.data() + g.location.size())}});
    }
    return doc;
}

std::vector<FixedPoint> fixed_points_from_json(const nlohmann::json& doc)
{
    try {
        std::vector<FixedPoint> out;
        for (const auto& e : doc.at("fixed_points")) {
            FixedPoint fp;
            const auto loc = e.at("location").get<std::vector<double>>();
            fp.location = Eigen::Map<const Vector>(loc.data(), static_cast<Index>(loc.size()));
            fp.energy = e.at("energy").get<double>();
            for (const auto& l : e.at("spectrum")) fp.spectrum.emplace_back(l.at(0).get<double>(), l.at(1).get<double>());
            fp.unstable_count = e.at("unstable_count").get<Index>();
            const auto name = e.at("stability").get<std::string>();
            fp.stability = name == "stable" ? Stability::stable
                         : name == "repeller" ? Stability::repeller
                         : name == "fold"     ? Stability::fold
                                              : Stability::saddle;
            fp.marginal = e.value("marginal", false);
            fp.cluster_size = e.value("cluster_size", Index{1});
            out.push_back(std::move(fp));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error{ErrorKind::io, fmt::format("malformed fixed-point document: {}", e.what())};
    }
}

}  // namespace ena
