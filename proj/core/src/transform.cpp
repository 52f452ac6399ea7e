#include "cvq/transform.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "cvq/error.hpp"
#include "cvq/signal.hpp"

namespace cvq {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

void require_pow2(std::size_t n, const char* what) {
    if (n < 2 || !is_power_of_two(n))
        throw ShapeError(std::string(what) + ": length " + std::to_string(n) +
                         " is not a power of two >= 2");
}
}  // namespace

int CoefficientVector::depth() const {
    return coeffs.empty() ? 0 : std::countr_zero(coeffs.size());
}

std::string_view to_string(NormalizationMode m) {
    return m == NormalizationMode::FixedScale ? "fixed" : "maxabs";
}

NormalizationMode normalization_mode_from_string(std::string_view name) {
    if (name == "fixed") return NormalizationMode::FixedScale;
    if (name == "maxabs") return NormalizationMode::PerStreamMaxAbs;
    throw ConfigError("unknown normalization mode '" + std::string(name) + "'");
}

NormalizationSpec NormalizationSpec::fixed(double scale) {
    NormalizationSpec s{scale, NormalizationMode::FixedScale};
    s.validate();
    return s;
}

NormalizationSpec NormalizationSpec::from_stream(std::span<const double> samples) {
    double m = 0.0;
    for (double x : samples) m = std::max(m, std::abs(x));
    if (!(m > 0.0)) throw DegenerateInputError("normalization: stream max |x| is zero");
    return NormalizationSpec{m, NormalizationMode::PerStreamMaxAbs};
}

void NormalizationSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ConfigError("normalization: scale must be finite and > 0");
}

std::vector<double> normalize(std::span<const double> frame, const NormalizationSpec& spec) {
    spec.validate();
    std::vector<double> out(frame.begin(), frame.end());
    for (double& v : out) v /= spec.scale;
    return out;
}

std::vector<double> denormalize(std::span<const double> frame, const NormalizationSpec& spec) {
    spec.validate();
    std::vector<double> out(frame.begin(), frame.end());
    for (double& v : out) v *= spec.scale;
    return out;
}

void haar_split_bands(std::span<double> data, std::size_t band, std::vector<double>& scratch) {
    const std::size_t half = band / 2;
    scratch.resize(band);
    for (std::size_t start = 0; start < data.size(); start += band) {
        double* x = data.data() + start;
        for (std::size_t k = 0; k < half; ++k) {
            scratch[k] = (x[2 * k] + x[2 * k + 1]) * kInvSqrt2;
            scratch[half + k] = (x[2 * k] - x[2 * k + 1]) * kInvSqrt2;
        }
        std::copy(scratch.begin(), scratch.end(), x);
    }
}

void haar_merge_bands(std::span<double> data, std::size_t band, std::vector<double>& scratch) {
    const std::size_t half = band / 2;
    scratch.resize(band);
    for (std::size_t start = 0; start < data.size(); start += band) {
        double* x = data.data() + start;
        for (std::size_t k = 0; k < half; ++k) {
            scratch[2 * k] = (x[k] + x[half + k]) * kInvSqrt2;
            scratch[2 * k + 1] = (x[k] - x[half + k]) * kInvSqrt2;
        }
        std::copy(scratch.begin(), scratch.end(), x);
    }
}

CoefficientVector dwpt_forward(std::span<const double> frame) {
    require_pow2(frame.size(), "dwpt_forward");
    CoefficientVector out{{frame.begin(), frame.end()}};
    std::vector<double> scratch;
    for (std::size_t band = frame.size(); band >= 2; band /= 2)
        haar_split_bands(out.coeffs, band, scratch);
    return out;
}

std::vector<double> dwpt_inverse(const CoefficientVector& coeffs) {
    require_pow2(coeffs.size(), "dwpt_inverse");
    std::vector<double> out = coeffs.coeffs;
    std::vector<double> scratch;
    for (std::size_t band = 2; band <= out.size(); band *= 2) haar_merge_bands(out, band, scratch);
    return out;
}

std::size_t packet_frequency_rank(std::size_t index, int depth) {
    // Each detail branch mirrors the spectrum of its parent band, so the
    // natural-order index is the Gray code of the frequency rank.
    std::size_t rank = 0;
    for (int b = depth - 1; b >= 0; --b) {
        const std::size_t prev = (rank >> (b + 1)) & 1u;
        const std::size_t bit = ((index >> b) & 1u) ^ prev;
        rank |= bit << b;
    }
    return rank;
}

}  // namespace cvq
