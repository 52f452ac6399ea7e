#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cvq/error.hpp"
#include "cvq/experiment.hpp"

using namespace cvq;

namespace {

const char* kSmall = R"(
[experiment]
name = small
algorithms = cortex, birch, kmeans, gmm
grid = 600:20, 1200:30
repetitions = 2
seed = 5
test_seed = 50

[dataset]
source = waves

[frontend]
window = 8
transform = dwpt
normalization = maxabs

[cortex]
k_adapt = 0.2
n_power = 0.8
maturity_threshold = 20
epsilon_ratio = 1
sweep_points = 12

[gmm]
max_iter = 20
)";

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_experiment_config(in);
}

ExperimentConfig small() { return parse(kSmall); }

}  // namespace

TEST(ExperimentConfig, ParsesSections) {
    const auto c = small();
    EXPECT_EQ(c.name, "small");
    EXPECT_EQ(c.algorithms, (std::vector<std::string>{"cortex", "birch", "kmeans", "gmm"}));
    EXPECT_EQ(c.grid, (std::vector<GridPoint>{{600, 20}, {1200, 30}}));
    EXPECT_EQ(c.repetitions, 2u);
    EXPECT_EQ(c.front_end.stride, 8u);
    EXPECT_EQ(c.settings.cortex.params.maturity_threshold, 20.0);
    EXPECT_TRUE(c.settings.cortex.params.r_init.empty());
    EXPECT_EQ(c.settings.gmm.max_iter, 20u);
}

TEST(ExperimentConfig, ValidationErrors) {
    EXPECT_THROW(parse("[experiment]\nalgorithms =\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nalgorithms = cortex, svm\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\ngrid = 10:20\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\ngrid = 10\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nrepetitons = 3\n"), ConfigError);
    EXPECT_THROW(parse("[nonsense]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse("[frontend]\nwindow = 6\n"), ConfigError);
    EXPECT_THROW(parse("[experiment]\nseed = -1\n"), ConfigError);
    EXPECT_THROW(parse("[dataset]\nsource = noise\n"), ConfigError);
}

TEST(Experiment, StreamsAreLongEnoughAndSeeded) {
    DatasetSpec d;
    FrontEnd fe;
    const std::size_t need = samples_for_frames(1000, fe);
    EXPECT_EQ(need, 8000u);
    for (Source s : {Source::BasicWaves, Source::Lorenz}) {
        d.source = s;
        const auto a = generate_stream(d, 1, need), b = generate_stream(d, 2, need);
        EXPECT_GE(a.samples.size(), need);
        EXPECT_NE(a.samples, b.samples);
        EXPECT_EQ(a, generate_stream(d, 1, need));
    }
    d.source = Source::GaussianMixture;
    EXPECT_THROW(generate_stream(d, 1, 400'000), InfeasibleError);
}

TEST(Experiment, TuningLandsNearTarget) {
    DatasetSpec d;
    FrontEnd fe;
    const auto s = generate_stream(d, 1, samples_for_frames(4000, fe));
    const auto data = analyze(s.samples, fe, resolve_normalization(fe, s), 4000);
    CortexRunConfig rc = small().settings.cortex;
    const auto t = tune_cortex(data, 100, rc);
    EXPECT_TRUE(t.within_tolerance) << "achieved K " << t.achieved_k;
    EXPECT_NEAR(double(t.achieved_k), 100.0, 10.0);
    EXPECT_EQ(train_cortex(data, t.params, rc.epochs, {}).size(), t.achieved_k);
}

TEST(Experiment, GridIsCompleteAndOrdered) {
    const auto cfg = small();
    const auto r = run_experiment(cfg);
    ASSERT_EQ(r.cells.size(), cfg.algorithms.size() * cfg.grid.size() * cfg.repetitions);
    std::size_t i = 0;
    for (const auto& g : cfg.grid)
        for (std::size_t rep = 0; rep < cfg.repetitions; ++rep)
            for (const auto& a : cfg.algorithms) {
                const auto& c = r.cells[i++];
                EXPECT_EQ(c.algorithm, a);
                EXPECT_EQ(c.n, g.n_vectors);
                EXPECT_EQ(c.rep, rep);
                EXPECT_EQ(c.seed, cfg.seed + rep);
                EXPECT_FALSE(c.failed) << c.note;
                EXPECT_GT(c.test.rmse, 0.0);
                if (a == "cortex") EXPECT_EQ(c.gain, 1.0);
                else EXPECT_GT(c.gain, 0.0);
            }
}

TEST(Experiment, TestSeedOnlyChangesTestMetrics) {
    auto cfg = small();
    cfg.grid = {{600, 20}};
    cfg.repetitions = 1;
    cfg.algorithms = {"cortex", "kmeans", "birch"};
    const auto a = run_experiment(cfg);
    cfg.test_seed = 77;
    const auto b = run_experiment(cfg);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].train.rmse, b.cells[i].train.rmse);
        EXPECT_EQ(a.cells[i].k, b.cells[i].k);
        EXPECT_NE(a.cells[i].test.rmse, b.cells[i].test.rmse);
    }
}

TEST(Experiment, KEqualsNIsLossless) {
    auto cfg = small();
    cfg.grid = {{40, 40}};
    cfg.repetitions = 1;
    cfg.algorithms = {"kmeans", "pnn", "birch"};
    cfg.settings.birch_threshold = 1e-12;
    const auto r = run_experiment(cfg);
    for (const auto& c : r.cells) {
        ASSERT_FALSE(c.failed) << c.algorithm << ": " << c.note;
        EXPECT_NEAR(c.train.rmse, 0.0, 1e-6) << c.algorithm;
    }
}

TEST(Experiment, InfeasibleCellIsRecordedNotFatal) {
    auto cfg = small();
    cfg.grid = {{600, 20}};
    cfg.repetitions = 1;
    cfg.algorithms = {"birch", "kmeans"};
    cfg.settings.birch_threshold = 1e6;
    const auto r = run_experiment(cfg);
    ASSERT_EQ(r.cells.size(), 2u);
    EXPECT_TRUE(r.cells[0].failed);
    EXPECT_FALSE(r.cells[0].note.empty());
    EXPECT_FALSE(r.cells[1].failed);
}

TEST(Experiment, ParallelRunMatchesSerialMetrics) {
    auto cfg = small();
    cfg.algorithms = {"cortex", "kmeans"};
    const auto a = run_experiment(cfg);
    cfg.serial_timing = false;
    const auto b = run_experiment(cfg);
    ASSERT_EQ(a.cells.size(), b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].algorithm, b.cells[i].algorithm);
        EXPECT_EQ(a.cells[i].train.rmse, b.cells[i].train.rmse);
        EXPECT_EQ(a.cells[i].test.rmse, b.cells[i].test.rmse);
    }
}

TEST(Reports, CsvRoundTrip) {
    auto cfg = small();
    cfg.grid = {{600, 20}};
    cfg.repetitions = 1;
    const auto r = run_experiment(cfg);
    std::stringstream ss;
    write_results_csv(r, ss);
    std::string header;
    std::getline(std::istringstream(ss.str()), header);
    EXPECT_EQ(header, kResultColumns);
    const auto back = parse_results_csv(ss);
    ASSERT_EQ(back.size(), r.cells.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto &x = back[i], &y = r.cells[i];
        EXPECT_EQ(x.algorithm, y.algorithm);
        EXPECT_EQ(x.n, y.n);
        EXPECT_EQ(x.k, y.k);
        EXPECT_EQ(x.rep, y.rep);
        EXPECT_EQ(x.seed, y.seed);
        EXPECT_EQ(x.train.rmse, y.train.rmse);
        EXPECT_EQ(x.test.rmse, y.test.rmse);
        EXPECT_EQ(x.wall_s, y.wall_s);
        EXPECT_EQ(x.entropy, y.entropy);
        EXPECT_EQ(x.gain, y.gain);
    }
}

TEST(Reports, OneCellGivesOneRowAndFiles) {
    auto cfg = small();
    cfg.name = "one";
    cfg.grid = {{600, 20}};
    cfg.repetitions = 1;
    cfg.algorithms = {"kmeans"};
    const auto r = run_experiment(cfg);
    std::stringstream ss;
    write_results_csv(r, ss);
    std::size_t lines = 0;
    for (std::string l; std::getline(ss, l);) ++lines;
    EXPECT_EQ(lines, 2u);

    const auto dir = std::filesystem::temp_directory_path() / "cvq_reports_test";
    std::filesystem::remove_all(dir);
    const auto files = emit_reports(r, dir, ReportFormat::Json);
    ASSERT_GE(files.size(), 2u);
    EXPECT_EQ(files[0].filename(), "one.json");
    EXPECT_EQ(files[1].filename(), "one.csv");
    for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
    std::filesystem::remove_all(dir);
    EXPECT_THROW(report_format_from_string("xml"), ConfigError);
}

TEST(Reports, MedianMetric) {
    ExperimentResult r;
    for (double t : {3.0, 1.0, 2.0, 100.0}) {
        ResultCell c;
        c.algorithm = "kmeans";
        c.n = 10;
        c.wall_s = t;
        r.cells.push_back(c);
    }
    r.cells.back().failed = true;
    EXPECT_EQ(median_metric(r, "kmeans", 10, &ResultCell::wall_s), 2.0);
    EXPECT_TRUE(std::isnan(median_metric(r, "gmm", 10, &ResultCell::wall_s)));
}

TEST(EntropyExperiment, UniformCodebookAndMaximum) {
    const auto u = uniform_codebook(-2.0, 2.0, 5);
    ASSERT_EQ(u.size(), 5u);
    EXPECT_EQ(u.decode(0)[0], -2.0);
    EXPECT_EQ(u.decode(4)[0], 2.0);
    std::vector<double> xs;
    for (int i = 0; i < 5; ++i) xs.insert(xs.end(), 10, -2.0 + i);
    EXPECT_NEAR(visit_entropy(u, xs).entropy, 1.0, 1e-12);
}

TEST(EntropyExperiment, SmallRunProducesAllSeries) {
    std::istringstream in(R"(
[entropy]
components = 0:5:10000, -10:3:10000, 10:2:10000
epochs = 10
r_limit_sweep = 1, 2
level_epochs = 5
level_maturity_threshold = 20

[cortex]
r_limit = 1.0
k_adapt = 0.2
n_power = 0.8
maturity_threshold = 90
epsilon_ratio = 1
)");
    const auto cfg = parse_entropy_config(in);
    const auto r = entropy_experiment(cfg);
    EXPECT_GT(r.k, 1u);
    EXPECT_EQ(r.nodes_per_epoch.size(), 10u);
    EXPECT_EQ(r.nodes_per_epoch.back(), r.k);
    EXPECT_EQ(r.r_limit_nodes.size(), 2u);
    EXPECT_EQ(r.histogram.size(), 100u);
    EXPECT_EQ(r.level_entropy.size(), 3u);
    EXPECT_GT(r.h_cortex, r.h_uniform);
    EXPECT_LE(r.h_cortex, 1.0);
}
