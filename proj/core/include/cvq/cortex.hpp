#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cvq/transform.hpp"
#include "cvq/vectors.hpp"

namespace cvq {

// Hyperparameters of cortex training.
//
// r_init and r_limit are per tree level (index 0 is level 1). A
// single-element vector applies to every level.
struct CortexParams {
    std::vector<double> r_init{1.0};
    std::vector<double> r_limit{0.05};
    double k_adapt = 0.75;          // adaptation control of the value update, in (0,1)
    double n_power = 0.5;           // pass-count exponent of the value update, in [0.5,1]
    double l_base = 1.0;            // level constant l(level) = 1 + l_base/level
    double k_range_power = 1.0;     // pass-count exponent of the range update
    double k_learning_base = 1.0;   // maturity rate k_l(level) = base * 2^(level-1)
    double maturity_threshold = 10.0;
    double epsilon_ratio = 1e-6;    // distance floor of the maturity update = ratio * r_init

    double r_init_at(int level) const;
    double r_limit_at(int level) const;
    double l_level(int level) const;
    double k_learning(int level) const;
    double energy_epsilon(int level) const;

    // Throws ConfigError when a constraint is violated. depth = 0 skips the
    // per-level vector length check.
    void validate(std::size_t depth = 0) const;

    bool operator==(const CortexParams&) const = default;
};

// Value update: c + (1-k)(x-c) / (w*l + 1)^n, where w is the pass count
// before this update.
double adapted_value(double c, double x, std::uint64_t w, double k, double l, double n);

// Range update: max(r_init / (w^k * l), r_limit) for pass count w >= 1.
double narrowed_range(std::uint64_t w, double r_init, double r_limit, double k_pow, double l);

// Maturity gain of one hit: k_l / max(|x - c|, eps).
double maturity_increment(double x, double c, double k_l, double eps);

struct SpineNode {
    double value = 0.0;
    double range = 0.0;
    std::uint64_t pass_count = 0;
    double maturity = 0.0;
    int level = 1;
};

struct CortexNode {
    double value = 0.0;  // unused on the root
    double range = 0.0;
    std::uint64_t pass_count = 0;
    int level = 0;
    // Both lists are kept strictly sorted by value.
    std::vector<CortexNode> cortex;
    std::vector<SpineNode> spines;
};

enum class SelectionKind { None, Cortex, Spine };

struct ChildSelection {
    SelectionKind kind = SelectionKind::None;
    std::size_t index = 0;
};

// Index of the sorted value nearest to x; ties go to the lower value.
// `probes` (optional) is incremented once per value inspected.
std::size_t nearest_sorted(std::span<const double> values, double x, std::size_t* probes = nullptr);

// Picks the cortex child nearest to `coeff` if coeff is inside that
// child's range, otherwise the nearest spine under the same condition.
ChildSelection select_child(const CortexNode& node, double coeff, std::size_t* probes = nullptr);

// Node-level updates, applied in training order:
// value (pre-update pass count), then pass count, then range.
double update_value(CortexNode& node, double coeff, const CortexParams& p);
double update_value(SpineNode& node, double coeff, const CortexParams& p);
double update_range(CortexNode& node, const CortexParams& p);
double update_range(SpineNode& node, const CortexParams& p);
// Uses the spine value before the value update of the same hit.
double update_maturity(SpineNode& spine, double coeff, double pre_update_value,
                       const CortexParams& p);

struct TrainTrace {
    int levels_descended = 0;   // cortex levels entered below the root
    bool reached_leaf = false;  // levels_descended == depth
    int spines_created = 0;
    int promotions = 0;
    int cortex_updates = 0;
    int spine_updates = 0;
    std::size_t node_visits = 0;  // selected nodes plus search probes
};

struct TreeStats {
    std::vector<std::size_t> cortex_per_level;  // index 0 = level 1
    std::vector<std::size_t> spines_per_level;
    std::size_t full_paths = 0;
    std::size_t max_children = 0;  // largest single cortex or spine list

    std::size_t cortex_nodes() const;
    std::size_t spine_nodes() const;
};

class Codebook;

// Online cortex tree. train() mutates the tree and must be externally
// serialized; it never looks at more than one vector at a time.
class CortexTree {
public:
    CortexTree(std::size_t depth, CortexParams params);

    TrainTrace train(std::span<const double> coeffs);
    TrainTrace train(const CoefficientVector& c) { return train(std::span<const double>(c.coeffs)); }
    // One pass over every row, in order.
    void train_all(const VectorSet& vectors);

    std::size_t depth() const { return depth_; }
    const CortexParams& params() const { return params_; }
    const CortexNode& root() const { return root_; }
    std::size_t frames_seen() const { return frames_seen_; }

    TreeStats stats() const;

private:
    std::size_t depth_;
    CortexParams params_;
    CortexNode root_;
    std::size_t frames_seen_ = 0;
};

// Per-level half dynamic range of the vectors; a usable r_init. Levels with
// no spread fall back to a small positive value.
std::vector<double> estimate_r_init(const VectorSet& vectors);

// Finalized, index-assigned cortex tree.
//
// Stored as a trie over the codewords: level-l nodes hold the l-th
// coefficient, siblings are sorted by value, and each leaf owns one
// codeword index. Indices follow in-order traversal, so codewords are in
// strictly increasing lexicographic order.
class Codebook final : public VectorQuantizer {
public:
    // Rebuilds the trie. Throws ConfigError if the codewords are not
    // strictly lexicographically increasing or have the wrong length.
    static Codebook from_codewords(std::size_t depth, std::vector<CoefficientVector> codewords,
                                   CortexParams params, NormalizationSpec norm);

    std::size_t size() const override { return codewords_.size(); }
    std::size_t dim() const override { return depth_; }
    std::size_t depth() const { return depth_; }

    // Winner-take-all descent: nearest child at each level, ranges ignored.
    std::size_t encode(std::span<const double> coeffs) const override;
    std::span<const double> decode(std::size_t index) const override;
    const CoefficientVector& codeword(std::size_t index) const;
    const std::vector<CoefficientVector>& codewords() const { return codewords_; }

    // Node id (dense within its level, sorted order) visited at each level.
    std::vector<std::size_t> encode_path(std::span<const double> coeffs) const;
    std::size_t level_size(std::size_t level) const;  // nodes at level (1-based)

    // Sum over levels of (codeword_l - coeffs_l)^2.
    double dissipated_energy(std::span<const double> coeffs, std::size_t index) const;

    const CortexParams& params() const { return params_; }
    const NormalizationSpec& normalization() const { return norm_; }
    void set_normalization(NormalizationSpec n) { norm_ = n; }

private:
    struct Node {
        double value = 0.0;
        std::uint32_t first = 0;  // first child id; codeword index on leaves
        std::uint32_t count = 0;  // number of children; 0 on leaves
    };

    std::size_t depth_ = 0;
    std::vector<Node> nodes_;                 // BFS order, node 0 is the root
    std::vector<double> values_;              // values_[id] == nodes_[id].value
    std::vector<std::size_t> level_offset_;   // first node id of each level
    std::vector<CoefficientVector> codewords_;
    CortexParams params_;
    NormalizationSpec norm_;
};

// Drops spines and partial branches, then indexes every full-depth path in
// sorted traversal order. Throws UndertrainedError if no such path exists.
Codebook finalize(const CortexTree& tree, NormalizationSpec norm = {});

}  // namespace cvq
