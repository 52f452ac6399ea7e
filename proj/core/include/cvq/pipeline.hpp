#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cvq/metrics.hpp"
#include "cvq/signal.hpp"
#include "cvq/transform.hpp"
#include "cvq/vectors.hpp"

namespace cvq {

enum class TransformKind { Dwpt, Identity };

std::string_view to_string(TransformKind t);
TransformKind transform_from_string(std::string_view name);

// How a sample stream becomes training vectors: framing, scaling and the
// per-frame transform.
struct FrontEnd {
    std::size_t window = 8;
    std::size_t stride = 8;
    TransformKind transform = TransformKind::Dwpt;
    NormalizationMode normalization = NormalizationMode::PerStreamMaxAbs;
    double fixed_scale = 1.0;  // used by NormalizationMode::FixedScale

    void validate() const;
    bool operator==(const FrontEnd&) const = default;
};

// The scale this front end applies to `stream`.
NormalizationSpec resolve_normalization(const FrontEnd& fe, const SampleStream& stream);

// One vector per frame: normalized, then transformed. max_vectors = 0 keeps
// every frame.
VectorSet analyze(std::span<const double> samples, const FrontEnd& fe,
                  const NormalizationSpec& norm, std::size_t max_vectors = 0);

// Inverse of analyze() for one vector.
std::vector<double> synthesize(std::span<const double> coeffs, const FrontEnd& fe,
                               const NormalizationSpec& norm);

// Encodes every vector.
std::vector<std::size_t> encode_all(const VectorQuantizer& q, const VectorSet& vectors);

// Concatenation of the synthesized codewords.
std::vector<double> decode_indices(const VectorQuantizer& q, std::span<const std::size_t> indices,
                                   const FrontEnd& fe, const NormalizationSpec& norm);

// RMSE between each original frame and its encode -> decode -> inverse
// transform -> denormalize reconstruction, over all frame samples.
DistortionReport frame_distortion(const VectorQuantizer& q, std::span<const double> samples,
                                  const FrontEnd& fe, const NormalizationSpec& norm,
                                  std::size_t max_vectors = 0, Phase phase = Phase::Train);

}  // namespace cvq
