#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace cvq {

enum class Phase { Train, Test };
std::string_view to_string(Phase p);

struct DistortionReport {
    double rmse = 0.0;
    std::size_t n_samples = 0;
    Phase phase = Phase::Train;
};

// sqrt(mean((original - reconstructed)^2)); ShapeError on length mismatch.
DistortionReport rmse_distortion(std::span<const double> original,
                                 std::span<const double> reconstructed,
                                 Phase phase = Phase::Train);

struct EntropyReport {
    std::vector<double> probabilities;
    double entropy = 0.0;
    double base = 2.0;
};

// Shannon entropy -sum p log_b p with 0 log 0 = 0.
EntropyReport shannon_entropy(std::span<const double> counts, double base);
EntropyReport shannon_entropy(std::span<const std::uint64_t> counts, double base);
// Base = number of outcomes, so a uniform distribution scores 1. A single
// outcome scores 0.
EntropyReport normalized_entropy(std::span<const std::uint64_t> counts);

struct GainRecord {
    double t_alg = 0.0, t_cortex = 0.0;
    double d_alg = 0.0, d_cortex = 0.0;
    double gain = 0.0;
};

// (t_alg * d_alg) / (t_cortex * d_cortex): the time advantage times the
// distortion ratio.
GainRecord gain(double t_alg, double d_alg, double t_cortex, double d_cortex);

// test.rmse / train.rmse.
double generalization_ratio(const DistortionReport& train, const DistortionReport& test);
inline bool generalization_anomaly(double ratio) { return ratio < 0.9; }

template <class T>
struct Timed {
    T value;
    double seconds = 0.0;
};

template <>
struct Timed<void> {
    double seconds = 0.0;
};

// Wall time of fn() on the monotonic clock.
template <class F>
auto timed(F&& fn) {
    using R = std::invoke_result_t<F>;
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<R>) {
        std::forward<F>(fn)();
        const auto t1 = std::chrono::steady_clock::now();
        return Timed<void>{std::chrono::duration<double>(t1 - t0).count()};
    } else {
        R value = std::forward<F>(fn)();
        const auto t1 = std::chrono::steady_clock::now();
        return Timed<R>{std::move(value), std::chrono::duration<double>(t1 - t0).count()};
    }
}

struct TimingStats {
    std::size_t samples = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased; 0 for a single sample
    double median = 0.0;
    double min = 0.0;
};

TimingStats summarize(std::span<const double> seconds);

}  // namespace cvq
