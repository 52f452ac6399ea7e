#include "cvq/pipeline.hpp"

#include <algorithm>
#include <string>

#include "cvq/error.hpp"

namespace cvq {

std::string_view to_string(TransformKind t) { return t == TransformKind::Dwpt ? "dwpt" : "identity"; }

TransformKind transform_from_string(std::string_view name) {
    if (name == "dwpt") return TransformKind::Dwpt;
    if (name == "identity") return TransformKind::Identity;
    throw ConfigError("unknown transform '" + std::string(name) + "'");
}

void FrontEnd::validate() const {
    if (window < 2 || !is_power_of_two(window))
        throw ConfigError("front end: window must be a power of two >= 2");
    if (stride < 1 || stride > window)
        throw ConfigError("front end: stride must satisfy 1 <= stride <= window");
    if (normalization == NormalizationMode::FixedScale && !(fixed_scale > 0.0))
        throw ConfigError("front end: fixed scale must be > 0");
}

NormalizationSpec resolve_normalization(const FrontEnd& fe, const SampleStream& stream) {
    fe.validate();
    if (fe.normalization == NormalizationMode::FixedScale) return NormalizationSpec::fixed(fe.fixed_scale);
    return NormalizationSpec::from_stream(stream.samples);
}

VectorSet analyze(std::span<const double> samples, const FrontEnd& fe,
                  const NormalizationSpec& norm, std::size_t max_vectors) {
    fe.validate();
    norm.validate();
    std::size_t n = frame_count(samples.size(), fe.window, fe.stride);
    if (max_vectors > 0) n = std::min(n, max_vectors);
    VectorSet out(fe.window);
    out.reserve(n);
    for (std::size_t f = 0; f < n; ++f) {
        const auto frame = normalize(samples.subspan(f * fe.stride, fe.window), norm);
        if (fe.transform == TransformKind::Dwpt)
            out.push_back(dwpt_forward(frame).coeffs);
        else
            out.push_back(frame);
    }
    return out;
}

std::vector<double> synthesize(std::span<const double> coeffs, const FrontEnd& fe,
                               const NormalizationSpec& norm) {
    if (coeffs.size() != fe.window) throw ShapeError("synthesize: vector length differs from window");
    if (fe.transform == TransformKind::Dwpt) {
        CoefficientVector cv{std::vector<double>(coeffs.begin(), coeffs.end())};
        return denormalize(dwpt_inverse(cv), norm);
    }
    return denormalize(coeffs, norm);
}

std::vector<std::size_t> encode_all(const VectorQuantizer& q, const VectorSet& vectors) {
    std::vector<std::size_t> out(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) out[i] = q.encode(vectors.row(i));
    return out;
}

std::vector<double> decode_indices(const VectorQuantizer& q, std::span<const std::size_t> indices,
                                   const FrontEnd& fe, const NormalizationSpec& norm) {
    std::vector<double> out;
    out.reserve(indices.size() * fe.window);
    for (std::size_t idx : indices) {
        const auto frame = synthesize(q.decode(idx), fe, norm);
        out.insert(out.end(), frame.begin(), frame.end());
    }
    return out;
}

DistortionReport frame_distortion(const VectorQuantizer& q, std::span<const double> samples,
                                  const FrontEnd& fe, const NormalizationSpec& norm,
                                  std::size_t max_vectors, Phase phase) {
    const VectorSet vectors = analyze(samples, fe, norm, max_vectors);
    if (vectors.empty()) throw ShapeError("distortion: stream shorter than one frame");
    std::vector<double> original, rebuilt;
    original.reserve(vectors.size() * fe.window);
    rebuilt.reserve(vectors.size() * fe.window);
    for (std::size_t f = 0; f < vectors.size(); ++f) {
        const auto src = samples.subspan(f * fe.stride, fe.window);
        original.insert(original.end(), src.begin(), src.end());
        const auto frame = synthesize(q.decode(q.encode(vectors.row(f))), fe, norm);
        rebuilt.insert(rebuilt.end(), frame.begin(), frame.end());
    }
    return rmse_distortion(original, rebuilt, phase);
}

}  // namespace cvq
