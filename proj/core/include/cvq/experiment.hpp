#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "cvq/baselines.hpp"
#include "cvq/cortex.hpp"
#include "cvq/io.hpp"
#include "cvq/metrics.hpp"
#include "cvq/pipeline.hpp"
#include "cvq/signal.hpp"

namespace cvq {

// ------------------------------------------------------------- datasets

struct DatasetSpec {
    Source source = Source::BasicWaves;
    BasicWavesConfig waves;
    LorenzConfig lorenz;
    GaussianMixtureConfig gaussian;
};

// A stream of at least `min_samples` samples from the configured generator
// under `seed`. Waves and Lorenz are sized to fit; the Gaussian mixture has
// a fixed length and throws InfeasibleError if it is too short. Lorenz
// streams for a non-zero seed start from the configured state plus a small
// seed-derived offset, so different seeds give different trajectories.
SampleStream generate_stream(const DatasetSpec& spec, std::uint64_t seed, std::size_t min_samples);

// Samples needed for n frames.
std::size_t samples_for_frames(std::size_t n, const FrontEnd& fe);

// ----------------------------------------------------------- algorithms

inline constexpr const char* kAlgorithms[] = {"cortex", "birch", "kmeans", "gmm", "pnn"};
bool is_known_algorithm(std::string_view name);

struct CortexRunConfig {
    CortexParams params;          // r_init empty -> estimated from the data
    double r_limit_ratio = 0.1;   // r_limit = ratio * r_init when r_limit is empty
    std::size_t epochs = 1;
    bool tune = true;             // sweep r_limit_ratio to hit the grid point's K
    double k_tolerance = 0.10;    // accepted relative K miss when tuning
    double ratio_min = 0.005, ratio_max = 1.0;
    std::size_t sweep_points = 24;
};

struct AlgorithmSettings {
    CortexRunConfig cortex;
    KMeansOptions kmeans;
    double birch_threshold = 0.0;  // <= 0 selects default_birch_threshold
    std::size_t birch_branching = 50;
    GmmOptions gmm;
};

// Cortex parameters with r_init and r_limit filled in for `data`.
CortexParams resolve_cortex_params(const CortexRunConfig& cfg, const VectorSet& data, double ratio);

struct CortexTuning {
    CortexParams params;
    double r_limit_ratio = 0.0;
    std::size_t achieved_k = 0;
    std::size_t trials = 0;
    bool within_tolerance = false;
};

// Untimed search over r_limit_ratio for a codebook of about target_k
// codewords: a geometric scan, then bisection inside every bracket that
// straddles the target, largest ratios first. Returns the closest found.
CortexTuning tune_cortex(const VectorSet& data, std::size_t target_k, const CortexRunConfig& cfg);

// Trains a cortex tree for `epochs` passes and finalizes it.
Codebook train_cortex(const VectorSet& data, const CortexParams& params, std::size_t epochs,
                      const NormalizationSpec& norm);

struct TrainedModel {
    io::CodebookArtifact artifact;
    double seconds = 0.0;  // wall time of the training call only
    std::string note;
};

// Trains one algorithm on `data`. For cortex, `params` must already be
// resolved (see tune_cortex / resolve_cortex_params); k is ignored.
TrainedModel train_algorithm(const std::string& algorithm, const VectorSet& data, std::size_t k,
                             const FrontEnd& fe, const NormalizationSpec& norm,
                             const AlgorithmSettings& settings, const CortexParams& params,
                             std::uint64_t seed);

// ----------------------------------------------------------- experiment

struct GridPoint {
    std::size_t n_vectors = 0;
    std::size_t k = 0;
    bool operator==(const GridPoint&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    FrontEnd front_end;
    std::vector<std::string> algorithms{"cortex", "birch", "kmeans", "gmm"};
    std::vector<GridPoint> grid{{16000, 330}};
    std::uint64_t seed = 1;
    std::uint64_t test_seed = 1001;
    std::size_t repetitions = 3;
    AlgorithmSettings settings;
    bool serial_timing = true;

    // ConfigError on empty algorithm list, unknown names, K > n, ...
    void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ResultCell {
    std::string algorithm;
    std::size_t n = 0;
    std::size_t k = 0;         // achieved codebook size (target K for failed cells)
    std::size_t k_target = 0;
    std::size_t rep = 0;
    std::uint64_t seed = 0;    // training-stream seed
    std::uint64_t test_seed = 0;
    DistortionReport train;
    DistortionReport test;
    double wall_s = std::numeric_limits<double>::quiet_NaN();
    double entropy = std::numeric_limits<double>::quiet_NaN();
    double gain = std::numeric_limits<double>::quiet_NaN();
    bool failed = false;
    std::string note;  // failure reason or tuning remark
};

struct ExperimentResult {
    std::string name;
    std::vector<ResultCell> cells;
};

// Every (grid point, repetition, algorithm) cell, in that nesting order.
// Failures are recorded on the cell and the run continues.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Median over repetitions of one metric for (algorithm, n).
double median_metric(const ExperimentResult& r, const std::string& algorithm, std::size_t n,
                     double ResultCell::*metric);

enum class ReportFormat { Csv, Json };
ReportFormat report_format_from_string(std::string_view s);

inline constexpr const char* kResultColumns =
    "algorithm,n,K,rep,seed,train_rmse,test_rmse,wall_s,entropy,gain";

void write_results_csv(const ExperimentResult& r, std::ostream& out);
void write_results_json(const ExperimentResult& r, std::ostream& out);
// Reads back what write_results_csv wrote (the CSV columns only).
std::vector<ResultCell> parse_results_csv(std::istream& in);

// Writes <name>.csv or <name>.json plus the other as a mirror, and one
// two-column TSV per plot panel. Returns the files written.
std::vector<std::filesystem::path> emit_reports(const ExperimentResult& r,
                                                const std::filesystem::path& dir, ReportFormat primary);

// ------------------------------------------------------ entropy experiment

struct EntropyConfig {
    GaussianMixtureConfig stream;
    CortexParams cortex;         // r_init empty -> estimated; r_limit absolute
    std::size_t epochs = 50;
    std::uint64_t kmeans_seed = 1;
    std::vector<double> r_limit_sweep{0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
    std::size_t histogram_bins = 100;
    // Depth-level entropy check on non-overlapping raw frames.
    std::size_t level_depth = 3;
    std::size_t level_epochs = 30;
    double level_maturity_threshold = 50.0;
    bool run_kmeans = true;
    bool run_sweep = true;
    bool run_levels = true;

    void validate() const;
};

EntropyConfig parse_entropy_config(std::istream& in);
EntropyConfig load_entropy_config(const std::filesystem::path& path);

struct EntropyReportSet {
    std::size_t k = 0;
    double h_cortex = 0.0, h_kmeans = std::numeric_limits<double>::quiet_NaN(), h_uniform = 0.0;
    double data_min = 0.0, data_max = 0.0;
    std::vector<double> cortex_codewords;
    std::vector<double> cortex_probabilities;
    std::vector<double> kmeans_probabilities;
    std::vector<double> uniform_probabilities;
    std::vector<std::size_t> nodes_per_epoch;     // cortex node count after each epoch
    std::vector<std::size_t> new_nodes_per_epoch;
    std::vector<std::pair<double, std::size_t>> r_limit_nodes;  // (r_limit, K)
    std::vector<std::pair<double, std::size_t>> histogram;      // (bin centre, count)
    std::vector<double> level_entropy;             // normalized, level 1..depth
    std::vector<std::size_t> level_nodes;
    double seconds = 0.0;
};

// Normalized visit entropy of a quantizer over 1-D samples.
EntropyReport visit_entropy(const VectorQuantizer& q, std::span<const double> samples);

// K equally spaced one-dimensional codewords spanning [lo, hi].
CentroidCodebook uniform_codebook(double lo, double hi, std::size_t k);

// Normalized visit entropy of each level of a finalized tree.
std::vector<double> level_entropies(const Codebook& cb, const VectorSet& data,
                                    std::vector<std::size_t>* level_nodes = nullptr);

EntropyReportSet entropy_experiment(const EntropyConfig& cfg, std::ostream* log = nullptr);

std::vector<std::filesystem::path> emit_entropy_reports(const EntropyReportSet& r,
                                                        const std::filesystem::path& dir,
                                                        ReportFormat primary);

}  // namespace cvq
