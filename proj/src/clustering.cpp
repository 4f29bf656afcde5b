#include "ena/clustering.hpp"

#include <fmt/format.h>

#include <limits>

namespace ena {

namespace {

KMeansResult lloyd(const Matrix& points, Index k, Rng& rng, Index max_iterations)
{
    const Index n = points.rows();
    KMeansResult res;
    res.k = k;
    res.centroids.resize(k, points.cols());

    // k-means++ seeding
    std::uniform_int_distribution<Index> first{0, n - 1};
    res.centroids.row(0) = points.row(first(rng));
    Vector d2 = (points.rowwise() - res.centroids.row(0)).rowwise().squaredNorm();
    for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u{0.0, total};
            double r = u(rng);
            for (pick = 0; pick < n - 1; ++pick) {
                r -= d2(pick);
                if (r <= 0.0) break;
            }
        } else {
            pick = first(rng);
        }
        res.centroids.row(c) = points.row(pick);
        d2 = d2.cwiseMin((points.rowwise() - res.centroids.row(c)).rowwise().squaredNorm());
    }

    res.labels.assign(static_cast<std::size_t>(n), -1);
    for (Index it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            (res.centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (res.labels[static_cast<std::size_t>(i)] != best) {
                res.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            sums.row(res.labels[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(i)])];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                res.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                Index far = 0;
                Vector dist(n);
                for (Index i = 0; i < n; ++i)
                    dist(i) = (points.row(i) - res.centroids.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
                dist.maxCoeff(&far);
                res.centroids.row(c) = points.row(far);
            }
        }
    }
    res.inertia = 0.0;
    for (Index i = 0; i < n; ++i)
        res.inertia += (points.row(i) - res.centroids.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
    return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, Index k, std::uint64_t seed, Index restarts, Index max_iterations)
{
    if (k < 1 || k > points.rows())
        throw Error{ErrorKind::invalid_argument, fmt::format("k = {} with {} points", k, points.rows())};
    Rng rng{seed};
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < std::max<Index>(1, restarts); ++r) {
        KMeansResult run = lloyd(points, k, rng, max_iterations);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

double davies_bouldin(const Matrix& points, const std::vector<Index>& labels, const Matrix& centroids)
{
    const Index k = centroids.rows();
    if (k < 2) throw Error{ErrorKind::invalid_argument, "Davies-Bouldin index needs at least two clusters"};
    Vector spread = Vector::Zero(k);
    Vector count = Vector::Zero(k);
    for (Index i = 0; i < points.rows(); ++i) {
        const Index c = labels[static_cast<std::size_t>(i)];
        spread(c) += (points.row(i) - centroids.row(c)).norm();
        count(c) += 1.0;
    }
    for (Index c = 0; c < k; ++c)
        if (count(c) > 0) spread(c) /= count(c);
    double sum = 0.0;
    for (Index i = 0; i < k; ++i) {
        double worst = 0.0;
        for (Index j = 0; j < k; ++j) {
            if (i == j) continue;
            const double sep = (centroids.row(i) - centroids.row(j)).norm();
            const double r = sep > 0.0 ? (spread(i) + spread(j)) / sep : std::numeric_limits<double>::infinity();
            worst = std::max(worst, r);
        }
        sum += worst;
    }
    return sum / static_cast<double>(k);
}

KSelection select_k_davies_bouldin(const Matrix& points, Index k_max, std::uint64_t seed)
{
    k_max = std::min(k_max, points.rows());
    if (k_max < 2) throw Error{ErrorKind::invalid_argument, "k selection needs at least two points"};
    KSelection sel;
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 2; k <= k_max; ++k) {
        KMeansResult run = kmeans(points, k, derive_seed(seed, static_cast<std::uint64_t>(k)));
        const double index = davies_bouldin(points, run.labels, run.centroids);
        sel.index_per_k.push_back(index);
        if (index < best) {
            best = index;
            sel.best = std::move(run);
        }
    }
    return sel;
}

}  // namespace ena
