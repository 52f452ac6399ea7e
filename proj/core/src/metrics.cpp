#include "cvq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cvq/error.hpp"

namespace cvq {

std::string_view to_string(Phase p) { return p == Phase::Train ? "train" : "test"; }

DistortionReport rmse_distortion(std::span<const double> original,
                                 std::span<const double> reconstructed, Phase phase) {
    if (original.size() != reconstructed.size())
        throw ShapeError("rmse: lengths differ (" + std::to_string(original.size()) + " vs " +
                         std::to_string(reconstructed.size()) + ")");
    if (original.empty()) throw ShapeError("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double d = original[i] - reconstructed[i];
        s += d * d;
    }
    return {std::sqrt(s / double(original.size())), original.size(), phase};
}

EntropyReport shannon_entropy(std::span<const double> counts, double base) {
    if (!(base > 1.0)) throw DomainError("entropy: base must be > 1");
    double total = 0.0;
    for (double c : counts) {
        if (!(c >= 0.0)) throw DomainError("entropy: counts must be non-negative");
        total += c;
    }
    if (!(total > 0.0)) throw DegenerateInputError("entropy: counts sum to zero");
    EntropyReport r;
    r.base = base;
    r.probabilities.reserve(counts.size());
    const double log_b = std::log(base);
    for (double c : counts) {
        const double p = c / total;
        r.probabilities.push_back(p);
        if (p > 0.0) r.entropy -= p * std::log(p) / log_b;
    }
    return r;
}

EntropyReport shannon_entropy(std::span<const std::uint64_t> counts, double base) {
    std::vector<double> c(counts.begin(), counts.end());
    return shannon_entropy(std::span<const double>(c), base);
}

EntropyReport normalized_entropy(std::span<const std::uint64_t> counts) {
    if (counts.size() >= 2) return shannon_entropy(counts, double(counts.size()));
    // One outcome: certain, entropy 0 under any base.
    EntropyReport r = shannon_entropy(counts, 2.0);
    r.entropy = 0.0;
    return r;
}

GainRecord gain(double t_alg, double d_alg, double t_cortex, double d_cortex) {
    if (!(t_alg > 0.0) || !(d_alg > 0.0) || !(t_cortex > 0.0) || !(d_cortex > 0.0))
        throw DomainError("gain: all inputs must be positive");
    return {t_alg, t_cortex, d_alg, d_cortex, (t_alg * d_alg) / (t_cortex * d_cortex)};
}

double generalization_ratio(const DistortionReport& train, const DistortionReport& test) {
    if (!(train.rmse > 0.0)) throw DomainError("generalization: train rmse must be > 0");
    return test.rmse / train.rmse;
}

TimingStats summarize(std::span<const double> seconds) {
    TimingStats st;
    st.samples = seconds.size();
    if (seconds.empty()) return st;
    st.mean = std::accumulate(seconds.begin(), seconds.end(), 0.0) / double(seconds.size());
    if (seconds.size() > 1) {
        double ss = 0.0;
        for (double s : seconds) ss += (s - st.mean) * (s - st.mean);
        st.variance = ss / double(seconds.size() - 1);
    }
    std::vector<double> sorted(seconds.begin(), seconds.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    st.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    st.min = sorted.front();
    return st;
}

}  // namespace cvq
