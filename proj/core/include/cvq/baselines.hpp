#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cvq/transform.hpp"
#include "cvq/vectors.hpp"

namespace cvq {

// K centroids; encodes to the nearest centroid (squared L2, ties to the
// lower index).
class CentroidCodebook : public VectorQuantizer {
public:
    CentroidCodebook() = default;
    explicit CentroidCodebook(VectorSet centroids, NormalizationSpec norm = {});

    std::size_t size() const override { return centroids_.size(); }
    std::size_t dim() const override { return centroids_.dim(); }
    std::size_t encode(std::span<const double> v) const override;
    std::span<const double> decode(std::size_t index) const override;

    const VectorSet& centroids() const { return centroids_; }
    const NormalizationSpec& normalization() const { return norm_; }
    void set_normalization(NormalizationSpec n) { norm_ = n; }

private:
    VectorSet centroids_;
    NormalizationSpec norm_;
};

// Sum of squared distances from each vector to its nearest centroid.
double sum_squared_error(const VectorSet& data, const CentroidCodebook& cb);

// ---------------------------------------------------------------- k-means

struct KMeansOptions {
    std::size_t max_iter = 10000;
    std::size_t restarts = 1;
};

struct KMeansResult {
    CentroidCodebook codebook;
    std::vector<std::size_t> assignments;
    std::vector<double> sse_history;  // SSE after each assignment step
    std::size_t iterations = 0;
    bool converged = false;           // assignments stopped changing
    std::size_t empty_repairs = 0;
    double sse = 0.0;
};

// Lloyd iterations from k distinct random rows. An empty cluster is moved
// to the point farthest from its assigned centroid. With restarts > 1 the
// lowest-SSE run wins; run r uses seed + r.
KMeansResult kmeans(const VectorSet& data, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& opts = {});

// ---------------------------------------------------------------- PNN

struct PnnResult {
    CentroidCodebook codebook;
    std::vector<double> weights;  // total weight merged into each centroid
    std::size_t merges = 0;
};

// Agglomerative pairwise-nearest-neighbour merging: repeatedly replaces the
// closest pair of centroids by their weight-averaged mean until k remain.
// Equal distances resolve to the lowest index pair. `weights` may be empty
// (all ones).
PnnResult pnn(const VectorSet& data, std::size_t k, std::span<const double> weights = {});

// ---------------------------------------------------------------- BIRCH

// Clustering feature: count, linear sum and square sum of member points.
struct ClusteringFeature {
    double n = 0.0;
    std::vector<double> ls;
    double ss = 0.0;

    static ClusteringFeature of_point(std::span<const double> x);
    void add(const ClusteringFeature& o);
    std::vector<double> centroid() const;
    // Root-mean-square distance of members to the centroid.
    double radius() const;
};

ClusteringFeature merged(const ClusteringFeature& a, const ClusteringFeature& b);

class CFTree {
public:
    struct Node {
        bool leaf = true;
        std::vector<ClusteringFeature> entries;
        std::vector<std::size_t> children;  // parallel to entries on inner nodes
    };

    CFTree(std::size_t dim, double threshold, std::size_t branching);

    void insert(std::span<const double> x);

    std::vector<ClusteringFeature> leaf_entries() const;
    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t root() const { return root_; }
    std::size_t dim() const { return dim_; }

private:
    // Returns the id of a new sibling when `id` had to split.
    std::size_t insert_into(std::size_t id, const ClusteringFeature& point);
    std::size_t split(std::size_t id);
    ClusteringFeature summary(std::size_t id) const;

    std::size_t dim_;
    double threshold_;
    std::size_t branching_;
    std::vector<Node> nodes_;
    std::size_t root_ = 0;
};

struct BirchResult {
    CentroidCodebook codebook;
    std::size_t leaf_entries = 0;
    double threshold = 0.0;
};

// Phase 1 CF-tree build followed by weighted PNN over the leaf entries.
// Throws InfeasibleError when fewer than k leaf entries result.
BirchResult birch(const VectorSet& data, double threshold, std::size_t branching, std::size_t k);

// 0.25 x RMS pairwise distance over a sample of up to 1000 rows.
double default_birch_threshold(const VectorSet& data, std::uint64_t seed = 1);

// ---------------------------------------------------------------- GMM

struct GmmOptions {
    double tol = 0.01;          // on the mean per-point log-likelihood
    std::size_t max_iter = 300;
    double variance_floor_ratio = 1e-6;  // floor = ratio * per-dimension data variance
};

// Diagonal-covariance mixture. Encodes a vector to its most probable
// component and decodes to that component's mean.
class GaussianMixture : public VectorQuantizer {
public:
    GaussianMixture(VectorSet means, VectorSet variances, std::vector<double> weights);

    std::size_t size() const override { return means_.size(); }
    std::size_t dim() const override { return means_.dim(); }
    std::size_t encode(std::span<const double> v) const override;
    std::span<const double> decode(std::size_t index) const override;

    double log_density(std::span<const double> x) const;
    // Mean log-likelihood per row.
    double mean_log_likelihood(const VectorSet& data) const;

    const VectorSet& means() const { return means_; }
    const VectorSet& variances() const { return variances_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    double component_log(std::size_t j, std::span<const double> x) const;

    VectorSet means_;
    VectorSet variances_;
    std::vector<double> weights_;
    std::vector<double> log_norm_;  // log w_j - 0.5 * sum log(2 pi var)
};

struct GmmResult {
    GaussianMixture model;
    std::vector<double> log_likelihood;  // mean per point, one per E step
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t reinitializations = 0;

    CentroidCodebook codebook() const { return CentroidCodebook(model.means()); }
};

// EM initialised from k-means; stops when the mean log-likelihood gains
// less than tol or after max_iter iterations.
GmmResult gmm_em(const VectorSet& data, std::size_t k, std::uint64_t seed,
                 const GmmOptions& opts = {});

}  // namespace cvq
