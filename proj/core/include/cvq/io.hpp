#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cvq/baselines.hpp"
#include "cvq/cortex.hpp"
#include "cvq/pipeline.hpp"
#include "cvq/signal.hpp"

namespace cvq::io {

// ------------------------------------------------------------------ streams
//
// CSV: a "# source=<name>;seed=<n>;rate=<hz>" header line, then one sample
// per line. Binary: "CVQSTRM1", u32 source, u64 seed, f64 rate, u64 count,
// then count f64 samples, all little-endian.

enum class StreamFormat { Csv, Binary };

void write_stream_csv(const SampleStream& s, std::ostream& out);
SampleStream read_stream_csv(std::istream& in);
void write_stream_binary(const SampleStream& s, std::ostream& out);
SampleStream read_stream_binary(std::istream& in);

void save_stream(const SampleStream& s, const std::filesystem::path& path, StreamFormat fmt);
// Picks the format from the file's first bytes.
SampleStream load_stream(const std::filesystem::path& path);

// ---------------------------------------------------------------- codebooks
//
// Text: a "CVQCBK1" line followed by one JSON document. Binary: "CVQCBK1\0",
// a u32 header length, the JSON header without codewords, then for each
// codeword a u32 index and dim f64 values (mixtures add dim f64 variances
// and one f64 weight). Both carry every field needed to rebuild the
// quantizer bit for bit.

enum class CodebookFormat { Text, Binary };

struct CodebookArtifact {
    std::string algorithm = "cortex";
    FrontEnd front_end;
    NormalizationSpec normalization;
    std::variant<Codebook, CentroidCodebook, GaussianMixture> codebook;

    const VectorQuantizer& quantizer() const;
    std::string_view kind() const;  // "cortex", "centroid" or "gmm"
    bool is_cortex() const { return std::holds_alternative<Codebook>(codebook); }
};

void write_codebook(const CodebookArtifact& a, std::ostream& out, CodebookFormat fmt);
CodebookArtifact read_codebook(std::istream& in);

void save_codebook(const CodebookArtifact& a, const std::filesystem::path& path, CodebookFormat fmt);
CodebookArtifact load_codebook(const std::filesystem::path& path);

// ------------------------------------------------------------------ indices
//
// "CVQIDX1", then fixed 32-bit little-endian indices; the count follows from
// the file size.

void write_indices(std::span<const std::size_t> indices, std::ostream& out);
std::vector<std::size_t> read_indices(std::istream& in);

void save_indices(std::span<const std::size_t> indices, const std::filesystem::path& path);
std::vector<std::size_t> load_indices(const std::filesystem::path& path);

}  // namespace cvq::io
