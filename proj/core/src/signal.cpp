#include "cvq/signal.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cvq/error.hpp"

namespace cvq {

std::string_view to_string(Source s) {
    switch (s) {
        case Source::BasicWaves: return "waves";
        case Source::Lorenz: return "lorenz";
        case Source::GaussianMixture: return "gaussian";
    }
    return "unknown";
}

Source source_from_string(std::string_view name) {
    if (name == "waves") return Source::BasicWaves;
    if (name == "lorenz") return Source::Lorenz;
    if (name == "gaussian") return Source::GaussianMixture;
    throw ConfigError("unknown source '" + std::string(name) + "'");
}

std::string_view to_string(WaveKind k) {
    switch (k) {
        case WaveKind::Sinus: return "sinus";
        case WaveKind::Square: return "square";
        case WaveKind::Sawtooth: return "sawtooth";
    }
    return "unknown";
}

std::vector<double> BasicWavesConfig::default_amplitudes() {
    std::vector<double> a(10);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 1000.0 + 19000.0 * double(i) / 9.0;
    return a;
}

void BasicWavesConfig::validate() const {
    if (wave_kinds.empty() || periods_in_samples.empty() || amplitudes.empty())
        throw ConfigError("basic waves: kinds, periods and amplitudes must be non-empty");
    for (int p : periods_in_samples)
        if (p < 2) throw ConfigError("basic waves: every period must be >= 2");
    for (double a : amplitudes)
        if (!(a > 0.0)) throw ConfigError("basic waves: amplitudes must be > 0");
    if (count == 0) throw ConfigError("basic waves: count must be >= 1");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("basic waves: sample rate must be > 0");
}

double wave_sample(WaveKind kind, int period, double amplitude, int phase, int m) {
    const int pos = (m + phase) % period;
    switch (kind) {
        case WaveKind::Sinus:
            return amplitude * std::sin(2.0 * std::numbers::pi * double(pos) / double(period));
        case WaveKind::Square:
            return 2 * pos < period ? amplitude : -amplitude;
        case WaveKind::Sawtooth:
            // ramp from -A to +A across the period
            return -amplitude + 2.0 * amplitude * double(pos) / double(period - 1);
    }
    return 0.0;
}

std::vector<double> render_segment(const WaveSegment& seg) {
    std::vector<double> out(std::size_t(seg.period));
    for (int m = 0; m < seg.period; ++m)
        out[std::size_t(m)] = wave_sample(seg.kind, seg.period, seg.amplitude, seg.phase, m);
    return out;
}

std::vector<WaveSegment> draw_basic_wave_segments(const BasicWavesConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const std::size_t n_types = cfg.signal_type_count();
    std::uniform_int_distribution<std::size_t> pick(0, n_types - 1);
    const std::size_t n_amp = cfg.amplitudes.size();
    const std::size_t n_per = cfg.periods_in_samples.size();

    std::vector<WaveSegment> segs;
    segs.reserve(cfg.count);
    for (std::size_t i = 0; i < cfg.count; ++i) {
        WaveSegment s;
        s.type_index = pick(rng);
        s.kind = cfg.wave_kinds[s.type_index / (n_per * n_amp)];
        s.period = cfg.periods_in_samples[(s.type_index / n_amp) % n_per];
        s.amplitude = cfg.amplitudes[s.type_index % n_amp];
        s.phase = std::uniform_int_distribution<int>(0, s.period - 1)(rng);
        segs.push_back(s);
    }
    return segs;
}

SampleStream gen_basic_waves(const BasicWavesConfig& cfg) {
    SampleStream out;
    out.source = Source::BasicWaves;
    out.seed = cfg.seed;
    out.sample_rate_hz = cfg.sample_rate_hz;
    for (const auto& seg : draw_basic_wave_segments(cfg)) {
        for (int m = 0; m < seg.period; ++m)
            out.samples.push_back(wave_sample(seg.kind, seg.period, seg.amplitude, seg.phase, m));
    }
    return out;
}

void LorenzConfig::validate() const {
    if (!(step > 0.0)) throw ConfigError("lorenz: step must be > 0");
    if (n_steps < 1) throw ConfigError("lorenz: n_steps must be >= 1");
    if (!std::isfinite(sigma) || !std::isfinite(rho) || !std::isfinite(beta))
        throw ConfigError("lorenz: parameters must be finite");
}

namespace {

using State = std::array<double, 3>;

State lorenz_rhs(const LorenzConfig& c, const State& s) {
    return {c.sigma * (s[1] - s[0]), s[0] * (c.rho - s[2]) - s[1], s[0] * s[1] - c.beta * s[2]};
}

State axpy(const State& s, double h, const State& d) {
    return {s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2]};
}

}  // namespace

std::vector<std::array<double, 3>> lorenz_trajectory(const LorenzConfig& cfg) {
    cfg.validate();
    std::vector<State> out;
    out.reserve(cfg.n_steps);
    State s = cfg.initial_xyz;
    const double h = cfg.step;
    for (std::size_t i = 0; i < cfg.n_steps; ++i) {
        if (cfg.integrator == Integrator::Euler) {
            s = axpy(s, h, lorenz_rhs(cfg, s));
        } else {
            const State k1 = lorenz_rhs(cfg, s);
            const State k2 = lorenz_rhs(cfg, axpy(s, h / 2, k1));
            const State k3 = lorenz_rhs(cfg, axpy(s, h / 2, k2));
            const State k4 = lorenz_rhs(cfg, axpy(s, h, k3));
            for (int j = 0; j < 3; ++j) s[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        }
        out.push_back(s);
    }
    return out;
}

SampleStream gen_lorenz(const LorenzConfig& cfg) {
    SampleStream out;
    out.source = Source::Lorenz;
    out.seed = cfg.seed;
    out.sample_rate_hz = 1.0 / cfg.step;
    const auto traj = lorenz_trajectory(cfg);
    out.samples.reserve(traj.size());
    for (const auto& s : traj) out.samples.push_back(s[0] * cfg.amplitude_scale);
    return out;
}

void GaussianMixtureConfig::validate() const {
    if (components.empty()) throw ConfigError("gaussian mixture: no components");
    for (const auto& c : components) {
        if (!(c.stddev > 0.0)) throw ConfigError("gaussian mixture: stddev must be > 0");
        if (c.n_samples < 1) throw ConfigError("gaussian mixture: n_samples must be >= 1");
    }
    if (!(sample_rate_hz > 0.0)) throw ConfigError("gaussian mixture: sample rate must be > 0");
}

SampleStream gen_gaussian_mixture(const GaussianMixtureConfig& cfg) {
    cfg.validate();
    SampleStream out;
    out.source = Source::GaussianMixture;
    out.seed = cfg.seed;
    out.sample_rate_hz = cfg.sample_rate_hz;
    std::mt19937_64 rng(cfg.seed);
    for (const auto& c : cfg.components) {
        std::normal_distribution<double> dist(c.mean, c.stddev);
        for (std::size_t i = 0; i < c.n_samples; ++i) out.samples.push_back(dist(rng));
    }
    return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t frame_count(std::size_t length, std::size_t window, std::size_t stride) {
    if (length < window) return 0;
    return (length - window) / stride + 1;
}

std::vector<Frame> frame_stream(std::span<const double> samples, std::size_t window,
                                std::size_t stride) {
    if (window < 2 || !is_power_of_two(window))
        throw ConfigError("frame_stream: window must be a power of two >= 2");
    if (stride < 1 || stride > window)
        throw ConfigError("frame_stream: stride must satisfy 1 <= stride <= window");
    const std::size_t n = frame_count(samples.size(), window, stride);
    std::vector<Frame> frames;
    frames.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t off = i * stride;
        frames.push_back(Frame{{samples.begin() + off, samples.begin() + off + window}, off});
    }
    return frames;
}

}  // namespace cvq
