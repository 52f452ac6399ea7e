#include "cvq/cortex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "cvq/error.hpp"

namespace cvq {

namespace {

double per_level(const std::vector<double>& v, int level) {
    if (v.size() == 1) return v.front();
    return v.at(std::size_t(level - 1));
}

template <class Node>
std::size_t insert_sorted(std::vector<Node>& list, Node node) {
    auto it = std::lower_bound(list.begin(), list.end(), node.value,
                               [](const Node& n, double v) { return n.value < v; });
    const auto pos = std::size_t(it - list.begin());
    list.insert(it, std::move(node));
    return pos;
}

template <class Node>
std::size_t nearest_in(const std::vector<Node>& list, double x, std::size_t* probes) {
    std::size_t lo = 0, hi = list.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (probes) ++*probes;
        if (list[mid].value < x) lo = mid + 1;
        else hi = mid;
    }
    if (lo == list.size()) return lo - 1;
    if (lo == 0) return 0;
    return (x - list[lo - 1].value <= list[lo].value - x) ? lo - 1 : lo;
}

}  // namespace

double CortexParams::r_init_at(int level) const { return per_level(r_init, level); }
double CortexParams::r_limit_at(int level) const { return per_level(r_limit, level); }
double CortexParams::l_level(int level) const { return 1.0 + l_base / double(level); }
double CortexParams::k_learning(int level) const {
    return k_learning_base * std::ldexp(1.0, level - 1);
}
double CortexParams::energy_epsilon(int level) const { return epsilon_ratio * r_init_at(level); }

void CortexParams::validate(std::size_t depth) const {
    if (r_init.empty() || r_limit.empty())
        throw ConfigError("cortex params: r_init and r_limit must be non-empty");
    if (depth > 0) {
        if (r_init.size() != 1 && r_init.size() != depth)
            throw ConfigError("cortex params: r_init needs 1 or depth entries");
        if (r_limit.size() != 1 && r_limit.size() != depth)
            throw ConfigError("cortex params: r_limit needs 1 or depth entries");
    }
    const std::size_t levels = std::max({r_init.size(), r_limit.size(), depth, std::size_t(1)});
    for (std::size_t l = 1; l <= levels; ++l) {
        if (r_init.size() != 1 && l > r_init.size()) break;
        if (r_limit.size() != 1 && l > r_limit.size()) break;
        const double ri = r_init_at(int(l)), rl = r_limit_at(int(l));
        if (!(ri > 0.0) || !std::isfinite(ri)) throw ConfigError("cortex params: r_init must be > 0");
        if (!(rl > 0.0)) throw ConfigError("cortex params: r_limit must be > 0");
        if (!(rl < ri)) throw ConfigError("cortex params: r_limit must be < r_init");
    }
    if (!(k_adapt > 0.0 && k_adapt < 1.0)) throw ConfigError("cortex params: k_adapt must be in (0,1)");
    if (!(n_power >= 0.5 && n_power <= 1.0))
        throw ConfigError("cortex params: n_power must be in [0.5,1]");
    if (!(l_base > 0.0)) throw ConfigError("cortex params: l_base must be > 0");
    if (!(k_range_power > 0.0)) throw ConfigError("cortex params: k_range_power must be > 0");
    if (!(k_learning_base > 0.0)) throw ConfigError("cortex params: k_learning_base must be > 0");
    if (!(maturity_threshold > 0.0))
        throw ConfigError("cortex params: maturity_threshold must be > 0");
    if (!(epsilon_ratio > 0.0)) throw ConfigError("cortex params: epsilon_ratio must be > 0");
}

double adapted_value(double c, double x, std::uint64_t w, double k, double l, double n) {
    return c + (1.0 - k) * (x - c) / std::pow(double(w) * l + 1.0, n);
}

double narrowed_range(std::uint64_t w, double r_init, double r_limit, double k_pow, double l) {
    const double r = r_init / (std::pow(double(w), k_pow) * l);
    return r > r_limit ? r : r_limit;
}

double maturity_increment(double x, double c, double k_l, double eps) {
    return k_l / std::max(std::abs(x - c), eps);
}

std::size_t nearest_sorted(std::span<const double> values, double x, std::size_t* probes) {
    std::size_t lo = 0, hi = values.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (probes) ++*probes;
        if (values[mid] < x) lo = mid + 1;
        else hi = mid;
    }
    if (lo == values.size()) return lo - 1;
    if (lo == 0) return 0;
    return (x - values[lo - 1] <= values[lo] - x) ? lo - 1 : lo;
}

ChildSelection select_child(const CortexNode& node, double coeff, std::size_t* probes) {
    if (!node.cortex.empty()) {
        const std::size_t i = nearest_in(node.cortex, coeff, probes);
        if (std::abs(node.cortex[i].value - coeff) <= node.cortex[i].range)
            return {SelectionKind::Cortex, i};
    }
    if (!node.spines.empty()) {
        const std::size_t i = nearest_in(node.spines, coeff, probes);
        if (std::abs(node.spines[i].value - coeff) <= node.spines[i].range)
            return {SelectionKind::Spine, i};
    }
    return {};
}

double update_value(CortexNode& node, double coeff, const CortexParams& p) {
    node.value = adapted_value(node.value, coeff, node.pass_count, p.k_adapt,
                               p.l_level(node.level), p.n_power);
    return node.value;
}

double update_value(SpineNode& node, double coeff, const CortexParams& p) {
    node.value = adapted_value(node.value, coeff, node.pass_count, p.k_adapt,
                               p.l_level(node.level), p.n_power);
    return node.value;
}

double update_range(CortexNode& node, const CortexParams& p) {
    const double r = narrowed_range(std::max<std::uint64_t>(node.pass_count, 1),
                                    p.r_init_at(node.level), p.r_limit_at(node.level),
                                    p.k_range_power, p.l_level(node.level));
    node.range = std::min(node.range, r);
    return node.range;
}

double update_range(SpineNode& node, const CortexParams& p) {
    const double r = narrowed_range(std::max<std::uint64_t>(node.pass_count, 1),
                                    p.r_init_at(node.level), p.r_limit_at(node.level),
                                    p.k_range_power, p.l_level(node.level));
    node.range = std::min(node.range, r);
    return node.range;
}

double update_maturity(SpineNode& spine, double coeff, double pre_update_value,
                       const CortexParams& p) {
    spine.maturity += maturity_increment(coeff, pre_update_value, p.k_learning(spine.level),
                                         p.energy_epsilon(spine.level));
    return spine.maturity;
}

std::size_t TreeStats::cortex_nodes() const {
    std::size_t s = 0;
    for (auto c : cortex_per_level) s += c;
    return s;
}

std::size_t TreeStats::spine_nodes() const {
    std::size_t s = 0;
    for (auto c : spines_per_level) s += c;
    return s;
}

CortexTree::CortexTree(std::size_t depth, CortexParams params)
    : depth_(depth), params_(std::move(params)) {
    if (depth_ < 1) throw ConfigError("cortex tree: depth must be >= 1");
    params_.validate(depth_);
    root_.level = 0;
}

TrainTrace CortexTree::train(std::span<const double> coeffs) {
    if (coeffs.size() != depth_)
        throw ShapeError("cortex train: vector length " + std::to_string(coeffs.size()) +
                         " != tree depth " + std::to_string(depth_));
    ++frames_seen_;
    TrainTrace trace;
    CortexNode* node = &root_;
    for (std::size_t li = 0; li < depth_; ++li) {
        const int level = int(li) + 1;
        const double x = coeffs[li];
        const ChildSelection sel = select_child(*node, x, &trace.node_visits);
        ++trace.node_visits;

        if (sel.kind == SelectionKind::Cortex) {
            CortexNode& child = node->cortex[sel.index];
            update_value(child, x, params_);
            ++child.pass_count;
            update_range(child, params_);
            ++trace.cortex_updates;
            ++trace.levels_descended;
            node = &child;
            continue;
        }

        if (sel.kind == SelectionKind::Spine) {
            SpineNode& spine = node->spines[sel.index];
            const double before = spine.value;
            update_value(spine, x, params_);
            ++spine.pass_count;
            update_range(spine, params_);
            update_maturity(spine, x, before, params_);
            ++trace.spine_updates;
            if (!(spine.maturity > params_.maturity_threshold)) break;

            // Promotion: the spine becomes a cortex child and training
            // continues below it within this frame.
            const SpineNode s = spine;
            node->spines.erase(node->spines.begin() + std::ptrdiff_t(sel.index));
            auto same = std::find_if(node->cortex.begin(), node->cortex.end(),
                                     [&](const CortexNode& c) { return c.value == s.value; });
            CortexNode* next = nullptr;
            if (same != node->cortex.end()) {
                same->pass_count += s.pass_count;
                same->range = std::min(same->range, s.range);
                next = &*same;
            } else {
                CortexNode promoted;
                promoted.value = s.value;
                promoted.range = s.range;
                promoted.pass_count = s.pass_count;
                promoted.level = level;
                next = &node->cortex[insert_sorted(node->cortex, std::move(promoted))];
            }
            ++trace.promotions;
            ++trace.levels_descended;
            node = next;
            continue;
        }

        SpineNode fresh;
        fresh.value = x;
        fresh.range = params_.r_init_at(level);
        fresh.level = level;
        insert_sorted(node->spines, fresh);
        ++trace.spines_created;
        break;
    }
    trace.reached_leaf = std::size_t(trace.levels_descended) == depth_;
    return trace;
}

void CortexTree::train_all(const VectorSet& vectors) {
    for (std::size_t i = 0; i < vectors.size(); ++i) train(vectors.row(i));
}

namespace {

void collect_stats(const CortexNode& n, std::size_t depth, TreeStats& st) {
    st.max_children = std::max({st.max_children, n.cortex.size(), n.spines.size()});
    if (n.level >= 0 && std::size_t(n.level) < depth) {
        st.spines_per_level[std::size_t(n.level)] += n.spines.size();
        st.cortex_per_level[std::size_t(n.level)] += n.cortex.size();
    }
    if (std::size_t(n.level) == depth) ++st.full_paths;
    for (const auto& c : n.cortex) collect_stats(c, depth, st);
}

void collect_paths(const CortexNode& n, std::size_t depth, std::vector<double>& prefix,
                   std::vector<CoefficientVector>& out) {
    if (std::size_t(n.level) == depth) {
        out.push_back(CoefficientVector{prefix});
        return;
    }
    for (const auto& c : n.cortex) {
        prefix.push_back(c.value);
        collect_paths(c, depth, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

TreeStats CortexTree::stats() const {
    TreeStats st;
    st.cortex_per_level.assign(depth_, 0);
    st.spines_per_level.assign(depth_, 0);
    collect_stats(root_, depth_, st);
    return st;
}

std::vector<double> estimate_r_init(const VectorSet& vectors) {
    vectors.validate();
    const std::size_t rows = vectors.size();
    std::vector<double> lo(vectors.dim(), 0.0), hi(vectors.dim(), 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = vectors.row(i);
        for (std::size_t d = 0; d < r.size(); ++d) {
            if (i == 0 || r[d] < lo[d]) lo[d] = r[d];
            if (i == 0 || r[d] > hi[d]) hi[d] = r[d];
        }
    }
    std::vector<double> half(vectors.dim());
    double widest = 0.0;
    for (std::size_t d = 0; d < half.size(); ++d) {
        half[d] = 0.5 * (hi[d] - lo[d]);
        widest = std::max(widest, half[d]);
    }
    const double fallback = widest > 0.0 ? widest * 1e-6 : 1e-12;
    for (double& h : half)
        if (!(h > 0.0)) h = fallback;
    return half;
}

Codebook Codebook::from_codewords(std::size_t depth, std::vector<CoefficientVector> codewords,
                                  CortexParams params, NormalizationSpec norm) {
    if (depth < 1) throw ConfigError("codebook: depth must be >= 1");
    if (codewords.empty()) throw ConfigError("codebook: no codewords");
    for (std::size_t j = 0; j < codewords.size(); ++j) {
        if (codewords[j].size() != depth)
            throw ConfigError("codebook: codeword " + std::to_string(j) + " has wrong length");
        if (j > 0 && !std::lexicographical_compare(codewords[j - 1].coeffs.begin(),
                                                   codewords[j - 1].coeffs.end(),
                                                   codewords[j].coeffs.begin(),
                                                   codewords[j].coeffs.end()))
            throw ConfigError("codebook: codewords are not in strictly increasing order");
    }

    Codebook cb;
    cb.depth_ = depth;
    cb.params_ = std::move(params);
    cb.norm_ = norm;
    cb.codewords_ = std::move(codewords);

    struct Pending {
        std::uint32_t id;
        std::size_t lo, hi, level;
    };
    cb.nodes_.push_back(Node{});
    cb.level_offset_.push_back(0);
    std::deque<Pending> queue{{0, 0, cb.codewords_.size(), 0}};
    while (!queue.empty()) {
        const Pending p = queue.front();
        queue.pop_front();
        if (p.level == depth) {
            cb.nodes_[p.id].first = std::uint32_t(p.lo);
            continue;
        }
        if (cb.level_offset_.size() == p.level + 1) cb.level_offset_.push_back(cb.nodes_.size());
        const auto first = std::uint32_t(cb.nodes_.size());
        std::size_t j = p.lo;
        while (j < p.hi) {
            const double v = cb.codewords_[j].coeffs[p.level];
            std::size_t e = j + 1;
            while (e < p.hi && cb.codewords_[e].coeffs[p.level] == v) ++e;
            const auto id = std::uint32_t(cb.nodes_.size());
            cb.nodes_.push_back(Node{v, 0, 0});
            queue.push_back({id, j, e, p.level + 1});
            j = e;
        }
        cb.nodes_[p.id].first = first;
        cb.nodes_[p.id].count = std::uint32_t(cb.nodes_.size() - first);
    }
    cb.level_offset_.push_back(cb.nodes_.size());
    cb.values_.resize(cb.nodes_.size());
    for (std::size_t i = 0; i < cb.nodes_.size(); ++i) cb.values_[i] = cb.nodes_[i].value;
    return cb;
}

std::size_t Codebook::encode(std::span<const double> coeffs) const {
    if (coeffs.size() != depth_)
        throw ShapeError("codebook encode: vector length " + std::to_string(coeffs.size()) +
                         " != depth " + std::to_string(depth_));
    std::size_t id = 0;
    for (std::size_t l = 0; l < depth_; ++l) {
        const Node& n = nodes_[id];
        id = n.first + nearest_sorted({values_.data() + n.first, n.count}, coeffs[l]);
    }
    return nodes_[id].first;
}

std::vector<std::size_t> Codebook::encode_path(std::span<const double> coeffs) const {
    if (coeffs.size() != depth_) throw ShapeError("codebook encode_path: wrong vector length");
    std::vector<std::size_t> path(depth_);
    std::size_t id = 0;
    for (std::size_t l = 0; l < depth_; ++l) {
        const Node& n = nodes_[id];
        id = n.first + nearest_sorted({values_.data() + n.first, n.count}, coeffs[l]);
        path[l] = id - level_offset_[l + 1];
    }
    return path;
}

std::size_t Codebook::level_size(std::size_t level) const {
    if (level < 1 || level > depth_) throw LookupError("codebook: level out of range");
    return level_offset_[level + 1] - level_offset_[level];
}

const CoefficientVector& Codebook::codeword(std::size_t index) const {
    if (index >= codewords_.size())
        throw LookupError("codebook: index " + std::to_string(index) + " out of range (K=" +
                          std::to_string(codewords_.size()) + ")");
    return codewords_[index];
}

std::span<const double> Codebook::decode(std::size_t index) const {
    return codeword(index).coeffs;
}

double Codebook::dissipated_energy(std::span<const double> coeffs, std::size_t index) const {
    const auto& cw = codeword(index);
    if (coeffs.size() != depth_) throw ShapeError("dissipated_energy: wrong vector length");
    double e = 0.0;
    for (std::size_t l = 0; l < depth_; ++l) {
        const double d = cw.coeffs[l] - coeffs[l];
        e += d * d;
    }
    return e;
}

Codebook finalize(const CortexTree& tree, NormalizationSpec norm) {
    std::vector<CoefficientVector> paths;
    std::vector<double> prefix;
    collect_paths(tree.root(), tree.depth(), prefix, paths);
    if (paths.empty())
        throw UndertrainedError("finalize: no full-depth cortex path after " +
                                std::to_string(tree.frames_seen()) + " frames");
    return Codebook::from_codewords(tree.depth(), std::move(paths), tree.params(), norm);
}

}  // namespace cvq
