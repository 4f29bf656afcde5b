#pragma once

// k-means (k-means++ seeding, Lloyd iterations) and the Davies-Bouldin index.

#include "ena/common.hpp"

#include <vector>

namespace ena {

struct KMeansResult {
    Index k = 0;
    std::vector<Index> labels;  ///< one per row of the data
    Matrix centroids;           ///< k x dim
    double inertia = 0.0;       ///< sum of squared distances to the assigned centroid
};

/// Rows of `points` are samples. Best of `restarts` seeded runs by inertia.
KMeansResult kmeans(const Matrix& points, Index k, std::uint64_t seed, Index restarts = 10,
                    Index max_iterations = 300);

/// Mean over clusters of max_j (S_i + S_j) / ||c_i - c_j||, with S_i the mean Euclidean distance of
/// cluster i's members to its centroid. Requires k >= 2.
double davies_bouldin(const Matrix& points, const std::vector<Index>& labels, const Matrix& centroids);

struct KSelection {
    KMeansResult best;
    std::vector<double> index_per_k;  ///< entry i is the index for k = k_min + i
    Index k_min = 2;
};

/// Sweeps k over [2, k_max] and keeps the clustering with the smallest Davies-Bouldin index.
KSelection select_k_davies_bouldin(const Matrix& points, Index k_max, std::uint64_t seed);

}  // namespace ena
