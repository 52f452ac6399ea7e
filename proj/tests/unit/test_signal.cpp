#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cvq/error.hpp"
#include "cvq/signal.hpp"

using namespace cvq;

TEST(Waves, SquareSegment) {
    const auto s = render_segment({WaveKind::Square, 8, 1000.0, 0, 0});
    const std::vector<double> want{1000, 1000, 1000, 1000, -1000, -1000, -1000, -1000};
    EXPECT_EQ(s, want);
}

TEST(Waves, SinusSegment) {
    const double a = 2500.0;
    const auto s = render_segment({WaveKind::Sinus, 8, a, 0, 0});
    ASSERT_EQ(s.size(), 8u);
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(s[k], a * std::sin(2.0 * std::numbers::pi * k / 8.0), 1e-9);
}

TEST(Waves, SegmentsHaveOnePeriodEach) {
    BasicWavesConfig cfg;
    cfg.count = 50;
    const auto segs = draw_basic_wave_segments(cfg);
    ASSERT_EQ(segs.size(), 50u);
    std::size_t total = 0;
    for (const auto& s : segs) {
        EXPECT_GE(s.phase, 0);
        EXPECT_LT(s.phase, s.period);
        total += std::size_t(s.period);
    }
    EXPECT_EQ(gen_basic_waves(cfg).samples.size(), total);
}

TEST(Waves, SignalTypesAreUniform) {
    BasicWavesConfig cfg;
    cfg.count = 1'000'000;
    ASSERT_EQ(cfg.signal_type_count(), 120u);
    std::vector<double> counts(120, 0.0);
    for (const auto& s : draw_basic_wave_segments(cfg)) ++counts.at(s.type_index);
    const double expected = double(cfg.count) / 120.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 119 degrees of freedom; the 0.999 quantile is about 173.
    EXPECT_LT(chi2, 173.0);
}

TEST(Waves, SameSeedSameStream) {
    BasicWavesConfig cfg;
    cfg.count = 200;
    EXPECT_EQ(gen_basic_waves(cfg), gen_basic_waves(cfg));
    auto other = cfg;
    other.seed = 2;
    EXPECT_NE(gen_basic_waves(cfg).samples, gen_basic_waves(other).samples);
}

TEST(Waves, RejectsBadConfig) {
    BasicWavesConfig cfg;
    cfg.periods_in_samples = {1};
    EXPECT_THROW(gen_basic_waves(cfg), ConfigError);
    cfg = {};
    cfg.amplitudes.clear();
    EXPECT_THROW(gen_basic_waves(cfg), ConfigError);
}

TEST(Lorenz, SingleEulerStep) {
    LorenzConfig cfg;
    cfg.n_steps = 1;
    cfg.amplitude_scale = 1.0;
    const auto t = lorenz_trajectory(cfg);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_NEAR(t[0][0], 1.0, 1e-12);
    EXPECT_NEAR(t[0][1], 1.26, 1e-12);
    EXPECT_NEAR(t[0][2], 1.0 + 0.01 * (1.0 - 8.0 / 3.0), 1e-12);
}

TEST(Lorenz, ZeroStepRejected) {
    LorenzConfig cfg;
    cfg.step = 0.0;
    EXPECT_THROW(gen_lorenz(cfg), ConfigError);
}

TEST(Lorenz, Deterministic) {
    LorenzConfig cfg;
    cfg.n_steps = 500;
    EXPECT_EQ(gen_lorenz(cfg), gen_lorenz(cfg));
    EXPECT_EQ(gen_lorenz(cfg).samples.size(), 500u);
}

TEST(Gaussian, DefaultLengthAndMeans) {
    const auto s = gen_gaussian_mixture({});
    ASSERT_EQ(s.samples.size(), 300'000u);
    double m = 0.0;
    for (std::size_t i = 100'000; i < 200'000; ++i) m += s.samples[i];
    m /= 1e5;
    EXPECT_NEAR(m, -10.0, 3.0 * 3.0 / std::sqrt(1e5));
}

TEST(Gaussian, StandardNormalSpread) {
    GaussianMixtureConfig cfg;
    cfg.components = {{0.0, 1.0, 200'000}};
    const auto s = gen_gaussian_mixture(cfg);
    double m = 0.0, v = 0.0;
    for (double x : s.samples) m += x;
    m /= double(s.samples.size());
    for (double x : s.samples) v += (x - m) * (x - m);
    EXPECT_NEAR(std::sqrt(v / double(s.samples.size() - 1)), 1.0, 0.01);
}

TEST(Framing, CountsAndOffsets) {
    std::vector<double> x(16);
    const auto f = frame_stream(x, 8, 1);
    ASSERT_EQ(f.size(), 9u);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(f[i].origin_offset, i);
    EXPECT_EQ(frame_stream(std::vector<double>(8), 8, 1).size(), 1u);
    EXPECT_EQ(frame_stream(std::vector<double>(7), 8, 8).size(), 0u);
    EXPECT_EQ(frame_count(16, 8, 1), 9u);
    EXPECT_EQ(frame_count(7, 8, 8), 0u);
}
