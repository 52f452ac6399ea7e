#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "cvq/baselines.hpp"
#include "cvq/error.hpp"

namespace cvq {

ClusteringFeature ClusteringFeature::of_point(std::span<const double> x) {
    ClusteringFeature cf;
    cf.n = 1.0;
    cf.ls.assign(x.begin(), x.end());
    for (double v : x) cf.ss += v * v;
    return cf;
}

void ClusteringFeature::add(const ClusteringFeature& o) {
    if (ls.empty()) ls.assign(o.ls.size(), 0.0);
    n += o.n;
    for (std::size_t d = 0; d < ls.size(); ++d) ls[d] += o.ls[d];
    ss += o.ss;
}

std::vector<double> ClusteringFeature::centroid() const {
    std::vector<double> c(ls);
    for (double& v : c) v /= n;
    return c;
}

double ClusteringFeature::radius() const {
    double sq = 0.0;
    for (double v : ls) sq += (v / n) * (v / n);
    return std::sqrt(std::max(0.0, ss / n - sq));
}

ClusteringFeature merged(const ClusteringFeature& a, const ClusteringFeature& b) {
    ClusteringFeature m = a;
    m.add(b);
    return m;
}

namespace {

double centroid_distance2(const ClusteringFeature& a, const ClusteringFeature& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.ls.size(); ++d) {
        const double diff = a.ls[d] / a.n - b.ls[d] / b.n;
        s += diff * diff;
    }
    return s;
}

std::size_t closest_entry(const std::vector<ClusteringFeature>& entries,
                          const ClusteringFeature& x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double d = centroid_distance2(entries[i], x);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace

CFTree::CFTree(std::size_t dim, double threshold, std::size_t branching)
    : dim_(dim), threshold_(threshold), branching_(branching) {
    if (dim_ < 1) throw ConfigError("birch: dim must be >= 1");
    if (!(threshold_ >= 0.0)) throw ConfigError("birch: threshold must be >= 0");
    if (branching_ < 2) throw ConfigError("birch: branching must be >= 2");
    nodes_.push_back(Node{});
}

ClusteringFeature CFTree::summary(std::size_t id) const {
    ClusteringFeature s;
    s.ls.assign(dim_, 0.0);
    for (const auto& e : nodes_[id].entries) s.add(e);
    return s;
}

void CFTree::insert(std::span<const double> x) {
    if (x.size() != dim_) throw ShapeError("birch: point has wrong dimension");
    const auto point = ClusteringFeature::of_point(x);
    const std::size_t sibling = insert_into(root_, point);
    if (sibling == 0) return;
    Node root;
    root.leaf = false;
    root.entries = {summary(root_), summary(sibling)};
    root.children = {root_, sibling};
    nodes_.push_back(std::move(root));
    root_ = nodes_.size() - 1;
}

std::size_t CFTree::insert_into(std::size_t id, const ClusteringFeature& point) {
    if (nodes_[id].leaf) {
        auto& entries = nodes_[id].entries;
        if (!entries.empty()) {
            const std::size_t i = closest_entry(entries, point);
            ClusteringFeature m = merged(entries[i], point);
            if (m.radius() <= threshold_) {
                entries[i] = std::move(m);
                return 0;
            }
        }
        entries.push_back(point);
        return entries.size() > branching_ ? split(id) : 0;
    }

    const std::size_t i = closest_entry(nodes_[id].entries, point);
    const std::size_t child = nodes_[id].children[i];
    const std::size_t sibling = insert_into(child, point);
    if (sibling == 0) {
        nodes_[id].entries[i].add(point);
        return 0;
    }
    nodes_[id].entries[i] = summary(child);
    nodes_[id].entries.push_back(summary(sibling));
    nodes_[id].children.push_back(sibling);
    return nodes_[id].entries.size() > branching_ ? split(id) : 0;
}

std::size_t CFTree::split(std::size_t id) {
    Node old = std::move(nodes_[id]);
    const std::size_t m = old.entries.size();

    // Farthest pair of entries seeds the two halves.
    std::size_t sa = 0, sb = 1;
    double far = -1.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = centroid_distance2(old.entries[i], old.entries[j]);
            if (d > far) {
                far = d;
                sa = i;
                sb = j;
            }
        }

    std::vector<char> to_a(m);
    for (std::size_t i = 0; i < m; ++i)
        to_a[i] = i == sa || (i != sb && centroid_distance2(old.entries[i], old.entries[sa]) <=
                                             centroid_distance2(old.entries[i], old.entries[sb]));

    Node a, b;
    a.leaf = b.leaf = old.leaf;
    for (std::size_t i = 0; i < m; ++i) {
        Node& dst = to_a[i] ? a : b;
        dst.entries.push_back(std::move(old.entries[i]));
        if (!old.leaf) dst.children.push_back(old.children[i]);
    }
    nodes_[id] = std::move(a);
    nodes_.push_back(std::move(b));
    return nodes_.size() - 1;
}

std::vector<ClusteringFeature> CFTree::leaf_entries() const {
    std::vector<ClusteringFeature> out;
    std::vector<std::size_t> stack{root_};
    while (!stack.empty()) {
        const std::size_t id = stack.back();
        stack.pop_back();
        const Node& node = nodes_[id];
        if (node.leaf) {
            out.insert(out.end(), node.entries.begin(), node.entries.end());
            continue;
        }
        for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

BirchResult birch(const VectorSet& data, double threshold, std::size_t branching, std::size_t k) {
    data.validate();
    if (k < 1) throw ConfigError("birch: k must be >= 1");
    CFTree tree(data.dim(), threshold, branching);
    for (std::size_t i = 0; i < data.size(); ++i) tree.insert(data.row(i));

    const auto entries = tree.leaf_entries();
    if (entries.size() < k)
        throw InfeasibleError("birch: " + std::to_string(entries.size()) +
                              " leaf entries cannot yield k=" + std::to_string(k));
    VectorSet centroids(data.dim());
    std::vector<double> weights;
    centroids.reserve(entries.size());
    for (const auto& e : entries) {
        centroids.push_back(e.centroid());
        weights.push_back(e.n);
    }
    BirchResult res;
    res.leaf_entries = entries.size();
    res.threshold = threshold;
    res.codebook = pnn(centroids, k, weights).codebook;
    return res;
}

double default_birch_threshold(const VectorSet& data, std::uint64_t seed) {
    data.validate();
    const std::size_t n = data.size();
    const std::size_t m = std::min<std::size_t>(n, 1000);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < m; ++i)
        std::swap(idx[i], idx[std::uniform_int_distribution<std::size_t>(i, n - 1)(rng)]);
    if (m < 2) return 0.0;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            sum += squared_distance(data.row(idx[i]), data.row(idx[j]));
            ++pairs;
        }
    return 0.25 * std::sqrt(sum / double(pairs));
}

}  // namespace cvq
