#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cvq {

enum class Source { BasicWaves, Lorenz, GaussianMixture };

std::string_view to_string(Source s);
Source source_from_string(std::string_view name);

// A generated 1-D signal plus the metadata needed to regenerate it.
struct SampleStream {
    std::vector<double> samples;
    double sample_rate_hz = 8000.0;
    Source source = Source::BasicWaves;
    std::uint64_t seed = 0;

    bool operator==(const SampleStream&) const = default;
};

enum class WaveKind { Sinus, Square, Sawtooth };

std::string_view to_string(WaveKind k);

struct BasicWavesConfig {
    std::vector<WaveKind> wave_kinds{WaveKind::Sinus, WaveKind::Square, WaveKind::Sawtooth};
    std::vector<int> periods_in_samples{6, 8, 10, 12};
    std::vector<double> amplitudes = default_amplitudes();
    std::size_t count = 1000;
    std::uint64_t seed = 1;
    double sample_rate_hz = 8000.0;

    // Ten evenly spaced amplitudes from 1,000 to 20,000.
    static std::vector<double> default_amplitudes();
    void validate() const;
    std::size_t signal_type_count() const {
        return wave_kinds.size() * periods_in_samples.size() * amplitudes.size();
    }
};

// One drawn segment of the basic-waves stream.
struct WaveSegment {
    WaveKind kind = WaveKind::Sinus;
    int period = 8;
    double amplitude = 1.0;
    int phase = 0;  // offset in samples, [0, period)
    // Index into the kind x period x amplitude cross product.
    std::size_t type_index = 0;
};

// Sample m (0 <= m < period) of one full period of the given wave.
double wave_sample(WaveKind kind, int period, double amplitude, int phase, int m);
std::vector<double> render_segment(const WaveSegment& seg);

std::vector<WaveSegment> draw_basic_wave_segments(const BasicWavesConfig& cfg);
SampleStream gen_basic_waves(const BasicWavesConfig& cfg);

enum class Integrator { Euler, RK4 };

struct LorenzConfig {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double step = 0.01;
    std::size_t n_steps = 10000;
    std::array<double, 3> initial_xyz{1.0, 1.0, 1.0};
    double amplitude_scale = 1e3;
    Integrator integrator = Integrator::Euler;
    // Recorded in the stream for provenance; the system itself is deterministic.
    std::uint64_t seed = 0;

    void validate() const;
};

// States after each of the n_steps integration steps (initial state excluded).
std::vector<std::array<double, 3>> lorenz_trajectory(const LorenzConfig& cfg);
SampleStream gen_lorenz(const LorenzConfig& cfg);

struct GaussianComponent {
    double mean = 0.0;
    double stddev = 1.0;
    std::size_t n_samples = 1;
};

struct GaussianMixtureConfig {
    std::vector<GaussianComponent> components{
        {0.0, 5.0, 100000}, {-10.0, 3.0, 100000}, {10.0, 2.0, 100000}};
    std::uint64_t seed = 1;
    double sample_rate_hz = 1.0;

    void validate() const;
};

// Components are drawn one after another and concatenated, not interleaved.
SampleStream gen_gaussian_mixture(const GaussianMixtureConfig& cfg);

struct Frame {
    std::vector<double> values;
    std::size_t origin_offset = 0;
};

bool is_power_of_two(std::size_t n);

// Windows at offsets 0, stride, 2*stride, ...; a trailing partial window is dropped.
std::vector<Frame> frame_stream(std::span<const double> samples, std::size_t window,
                                std::size_t stride);
inline std::vector<Frame> frame_stream(const SampleStream& s, std::size_t window,
                                       std::size_t stride) {
    return frame_stream(std::span<const double>(s.samples), window, stride);
}

// Number of frames frame_stream() produces for a stream of `length` samples.
std::size_t frame_count(std::size_t length, std::size_t window, std::size_t stride);

}  // namespace cvq
