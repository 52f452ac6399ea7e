#include <limits>
#include <string>

#include "cvq/baselines.hpp"
#include "cvq/error.hpp"

namespace cvq {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct NearestCache {
    std::vector<std::size_t> nn;
    std::vector<double> dist;
};

}  // namespace

PnnResult pnn(const VectorSet& data, std::size_t k, std::span<const double> weights) {
    data.validate();
    const std::size_t n = data.size(), dim = data.dim();
    if (k < 1 || k > n)
        throw ConfigError("pnn: need 1 <= k <= n (k=" + std::to_string(k) + ", n=" +
                          std::to_string(n) + ")");
    if (!weights.empty() && weights.size() != n)
        throw ShapeError("pnn: weights must match the number of vectors");

    std::vector<double> cent(data.data());
    std::vector<double> w(n, 1.0);
    if (!weights.empty()) w.assign(weights.begin(), weights.end());
    std::vector<char> alive(n, 1);

    auto row = [&](std::size_t i) { return std::span<const double>(cent.data() + i * dim, dim); };

    NearestCache cache{std::vector<std::size_t>(n, kNone),
                       std::vector<double>(n, std::numeric_limits<double>::infinity())};
    // Nearest live neighbour of i; ties go to the lower index.
    auto refresh = [&](std::size_t i) {
        std::size_t best = kNone;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !alive[j]) continue;
            const double d = squared_distance(row(i), row(j));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        cache.nn[i] = best;
        cache.dist[i] = best_d;
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    PnnResult res;
    for (std::size_t remaining = n; remaining > k; --remaining) {
        // First index holding the global minimum gives the lowest index pair.
        std::size_t a = kNone;
        for (std::size_t i = 0; i < n; ++i)
            if (alive[i] && (a == kNone || cache.dist[i] < cache.dist[a])) a = i;
        std::size_t b = cache.nn[a];
        if (b < a) std::swap(a, b);

        const double wa = w[a], wb = w[b], wt = wa + wb;
        for (std::size_t d = 0; d < dim; ++d)
            cent[a * dim + d] = (wa * cent[a * dim + d] + wb * cent[b * dim + d]) / wt;
        w[a] = wt;
        alive[b] = 0;
        ++res.merges;

        refresh(a);
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i] || i == a) continue;
            if (cache.nn[i] == a || cache.nn[i] == b) {
                refresh(i);
                continue;
            }
            const double d = squared_distance(row(i), row(a));
            if (d < cache.dist[i] || (d == cache.dist[i] && a < cache.nn[i])) {
                cache.dist[i] = d;
                cache.nn[i] = a;
            }
        }
    }

    VectorSet out(dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        out.push_back(row(i));
        res.weights.push_back(w[i]);
    }
    res.codebook = CentroidCodebook(std::move(out));
    return res;
}

}  // namespace cvq
