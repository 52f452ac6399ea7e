#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cvq {

// Full-depth Haar wavelet packet coefficients of one frame.
//
// Coefficients are stored in natural (Paley) packet order: at every level
// each band is split into [approximation | detail] in place, so index 0 is
// the full-depth approximation (DC) coefficient. Bit i of a coefficient's
// index, read from the most significant end, records whether the i-th
// split took the detail branch.
struct CoefficientVector {
    std::vector<double> coeffs;

    std::size_t size() const { return coeffs.size(); }
    // log2(size()); the number of decomposition levels.
    int depth() const;

    bool operator==(const CoefficientVector&) const = default;
};

enum class NormalizationMode { FixedScale, PerStreamMaxAbs };

std::string_view to_string(NormalizationMode m);
NormalizationMode normalization_mode_from_string(std::string_view name);

struct NormalizationSpec {
    double scale = 1.0;
    NormalizationMode mode = NormalizationMode::FixedScale;

    static NormalizationSpec fixed(double scale);
    // Scale = max |sample|; throws DegenerateInputError for an all-zero stream.
    static NormalizationSpec from_stream(std::span<const double> samples);

    void validate() const;
    bool operator==(const NormalizationSpec&) const = default;
};

std::vector<double> normalize(std::span<const double> frame, const NormalizationSpec& spec);
std::vector<double> denormalize(std::span<const double> frame, const NormalizationSpec& spec);

// One analysis step of the orthonormal Haar pair on every band of width
// `band` in `data`: a = (x0 + x1)/sqrt2, d = (x0 - x1)/sqrt2.
void haar_split_bands(std::span<double> data, std::size_t band, std::vector<double>& scratch);
// Exact inverse of haar_split_bands.
void haar_merge_bands(std::span<double> data, std::size_t band, std::vector<double>& scratch);

CoefficientVector dwpt_forward(std::span<const double> frame);
std::vector<double> dwpt_inverse(const CoefficientVector& coeffs);

// Frequency rank (0 = lowest) of the packet stored at natural-order `index`.
// Natural order and frequency (sequency) order differ by a Gray code.
std::size_t packet_frequency_rank(std::size_t index, int depth);

}  // namespace cvq
