#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "cvq/baselines.hpp"
#include "cvq/error.hpp"

namespace cvq {

CentroidCodebook::CentroidCodebook(VectorSet centroids, NormalizationSpec norm)
    : centroids_(std::move(centroids)), norm_(norm) {
    centroids_.validate();
}

std::size_t CentroidCodebook::encode(std::span<const double> v) const {
    if (v.size() != dim()) throw ShapeError("centroid encode: wrong vector length");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) {
        const double d = squared_distance(v, centroids_.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

std::span<const double> CentroidCodebook::decode(std::size_t index) const {
    if (index >= size())
        throw LookupError("centroid codebook: index " + std::to_string(index) + " out of range");
    return centroids_.row(index);
}

double sum_squared_error(const VectorSet& data, const CentroidCodebook& cb) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        s += squared_distance(data.row(i), cb.decode(cb.encode(data.row(i))));
    return s;
}

namespace {

KMeansResult lloyd(const VectorSet& data, std::size_t k, std::uint64_t seed,
                   std::size_t max_iter) {
    const std::size_t n = data.size(), dim = data.dim();
    std::mt19937_64 rng(seed);

    // k distinct rows by partial Fisher-Yates.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<double> centroids(k * dim);
    for (std::size_t j = 0; j < k; ++j) {
        const auto r = data.row(order[j]);
        std::copy(r.begin(), r.end(), centroids.begin() + std::ptrdiff_t(j * dim));
    }

    KMeansResult res;
    std::vector<std::size_t> assign(n, std::numeric_limits<std::size_t>::max());
    std::vector<double> dist(n);
    std::vector<double> sums(k * dim);
    std::vector<std::size_t> counts(k);

    for (std::size_t it = 0; it < max_iter; ++it) {
        bool changed = false;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.row(i);
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double d = squared_distance(x, {centroids.data() + j * dim, dim});
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
            dist[i] = best_d;
            sse += best_d;
        }
        res.sse_history.push_back(sse);
        res.iterations = it + 1;
        if (!changed) {
            res.converged = true;
            break;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.row(i);
            double* s = sums.data() + assign[i] * dim;
            for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
            ++counts[assign[i]];
        }
        for (std::size_t j = 0; j < k; ++j) {
            double* c = centroids.data() + j * dim;
            if (counts[j] > 0) {
                for (std::size_t d = 0; d < dim; ++d) c[d] = sums[j * dim + d] / double(counts[j]);
                continue;
            }
            // Empty cluster: take over the worst-served point.
            const auto far = std::size_t(std::max_element(dist.begin(), dist.end()) - dist.begin());
            const auto x = data.row(far);
            std::copy(x.begin(), x.end(), c);
            dist[far] = 0.0;
            ++res.empty_repairs;
        }
    }

    res.codebook = CentroidCodebook(VectorSet(dim, std::move(centroids)));
    res.assignments = std::move(assign);
    res.sse = res.sse_history.back();
    return res;
}

}  // namespace

KMeansResult kmeans(const VectorSet& data, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& opts) {
    data.validate();
    if (k < 1 || k > data.size())
        throw ConfigError("kmeans: need 1 <= k <= n (k=" + std::to_string(k) +
                          ", n=" + std::to_string(data.size()) + ")");
    if (opts.restarts < 1 || opts.max_iter < 1)
        throw ConfigError("kmeans: restarts and max_iter must be >= 1");
    KMeansResult best;
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        KMeansResult run = lloyd(data, k, seed + r, opts.max_iter);
        if (r == 0 || run.sse < best.sse) best = std::move(run);
    }
    return best;
}

}  // namespace cvq
