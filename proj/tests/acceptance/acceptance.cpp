// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cvq/baselines.hpp"
#include "cvq/cortex.hpp"
#include "cvq/experiment.hpp"
#include "cvq/io.hpp"
#include "cvq/metrics.hpp"
#include "cvq/pipeline.hpp"
#include "cvq/transform.hpp"

#ifndef CVQ_SOURCE_DIR
#error "CVQ_SOURCE_DIR must point at the source tree"
#endif

using namespace cvq;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string f(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path config(const char* name) { return std::filesystem::path(CVQ_SOURCE_DIR) / "configs" / name; }

// ------------------------------------------------------------------- AC1

Outcome ac1_dwpt_round_trip() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double max_err = 0.0, max_rel = 0.0;
    for (std::size_t n : {8u, 16u}) {
        std::vector<double> x(n);
        for (int t = 0; t < 10000; ++t) {
            for (double& v : x) v = u(rng);
            const auto c = dwpt_forward(x);
            const auto y = dwpt_inverse(c);
            double ex = 0.0, ec = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                max_err = std::max(max_err, std::abs(y[i] - x[i]));
                ex += x[i] * x[i];
                ec += c.coeffs[i] * c.coeffs[i];
            }
            max_rel = std::max(max_rel, std::abs(ec - ex) / ex);
        }
    }
    const double s = seconds_since(t0);
    return {max_err < 1e-9 && max_rel < 1e-9 && s < 5.0,
            "max abs error " + f(max_err) + ", max energy rel error " + f(max_rel) + ", " + f(s, 3) + " s"};
}

// ------------------------------------------------------------------- AC2

Outcome ac2_energy_decrease() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> val(-1000.0, 1000.0), kd(0.0, 1.0), ld(1.0, 16.0), nd(0.5, 1.0);
    std::uniform_int_distribution<std::uint64_t> wd(0, 100000);
    std::size_t violations = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        double k = kd(rng), l = ld(rng);
        while (!(k > 0.0)) k = kd(rng);  // open interval (0,1)
        while (!(l > 1.0)) l = ld(rng);
        const double c = val(rng), x = val(rng);
        const double c2 = adapted_value(c, x, wd(rng), k, l, nd(rng));
        if ((x - c2) * (x - c2) > (x - c) * (x - c)) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(n) + " tuples"};
}

// ------------------------------------------------------------- AC3/4/9

struct EntropyRun {
    EntropyReportSet r;
    double seconds = 0.0;
    std::string error;
};

const EntropyRun& entropy_run() {
    static const EntropyRun run = [] {
        EntropyRun e;
        try {
            const auto cfg = load_entropy_config(config("entropy_m4.ini"));
            const auto t0 = std::chrono::steady_clock::now();
            e.r = entropy_experiment(cfg);
            e.seconds = seconds_since(t0);
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        return e;
    }();
    return run;
}

Outcome ac3_entropy() {
    const auto& e = entropy_run();
    if (!e.error.empty()) return {false, e.error};
    const auto& r = e.r;
    const bool kmeans_ok = r.h_cortex > r.h_kmeans || std::abs(r.h_cortex - r.h_kmeans) <= 0.02;
    const bool gap_ok = r.h_cortex - r.h_uniform >= 0.08;
    const bool uniform_ok = std::abs(r.h_uniform - 0.8627) <= 0.02;
    return {kmeans_ok && gap_ok && uniform_ok && e.seconds < 60.0,
            "K=" + std::to_string(r.k) + " H_cortex=" + f(r.h_cortex) + " H_kmeans=" + f(r.h_kmeans) +
                " H_uniform=" + f(r.h_uniform) + " (gap " + f(r.h_cortex - r.h_uniform, 3) + "), " +
                f(e.seconds, 3) + " s"};
}

Outcome ac4_node_convergence() {
    const auto& e = entropy_run();
    if (!e.error.empty()) return {false, e.error};
    const auto& g = e.r.new_nodes_per_epoch;
    if (g.empty()) return {false, "no epochs"};
    // First epoch from which growth never increases again.
    std::size_t tail = g.size() - 1;
    while (tail > 0 && g[tail - 1] >= g[tail]) --tail;
    // First epoch from which growth stays at zero.
    std::size_t zero_from = g.size();
    while (zero_from > 0 && g[zero_from - 1] == 0) --zero_from;
    const bool pass = g.size() <= 50 && zero_from < g.size();
    return {pass, "growth non-increasing from epoch " + std::to_string(tail + 1) + ", zero from epoch " +
                      std::to_string(zero_from + 1) + " of " + std::to_string(g.size()) + "; final nodes " +
                      std::to_string(e.r.nodes_per_epoch.back())};
}

Outcome ac9_level_entropy() {
    const auto& e = entropy_run();
    if (!e.error.empty()) return {false, e.error};
    const auto& h = e.r.level_entropy;
    if (h.size() < 3) return {false, "no depth-3 run"};
    bool pass = true;
    std::string detail = "H per level:";
    for (std::size_t l = 0; l < h.size(); ++l) {
        detail += " " + f(h[l]) + " (" + std::to_string(e.r.level_nodes[l]) + " nodes)";
        if (l > 0 && !(h[l] >= h[l - 1] - 0.02)) pass = false;
    }
    return {pass, detail};
}

// ------------------------------------------------------------------- AC5

Outcome ac5_adaptation_ordering() {
    const double ks[] = {0.2, 0.5, 0.75, 0.9};
    CortexParams p;
    p.n_power = 0.5;
    const double l = p.l_level(1);
    std::vector<double> err;
    for (double k : ks) {
        double c = 0.0, x = 0.0;
        for (int t = 1; t <= 50; ++t) {
            x = std::sin(std::log(double(t)));
            c = adapted_value(c, x, std::uint64_t(t - 1), k, l, p.n_power);
        }
        err.push_back(std::abs(x - c));
    }
    bool pass = true;
    std::string detail = "final |x-c| for k=0.2,0.5,0.75,0.9:";
    for (std::size_t i = 0; i < err.size(); ++i) {
        detail += " " + f(err[i]);
        if (i > 0 && !(err[i - 1] < err[i])) pass = false;
    }
    return {pass, detail};
}

// ------------------------------------------------------------------- AC6

Outcome ac6_baseline_oracles() {
    const VectorSet four(1, {0.0, 1.0, 9.0, 10.0});
    auto sorted = [](const CentroidCodebook& cb) {
        auto v = cb.centroids().data();
        std::sort(v.begin(), v.end());
        return v;
    };
    std::vector<std::string> bad;
    if (sorted(kmeans(four, 2, 1).codebook) != std::vector<double>{0.5, 9.5}) bad.push_back("kmeans k=2");
    if (sorted(kmeans(four, 4, 1).codebook) != std::vector<double>{0, 1, 9, 10}) bad.push_back("kmeans k=n");
    if (sorted(kmeans(four, 1, 1).codebook) != std::vector<double>{5.0}) bad.push_back("kmeans k=1");
    if (sorted(pnn(four, 2).codebook) != std::vector<double>{0.5, 9.5}) bad.push_back("pnn k=2");
    if (sorted(pnn(four, 3).codebook) != std::vector<double>{0.5, 9.0, 10.0}) bad.push_back("pnn k=3");
    if (sorted(pnn(four, 4).codebook) != std::vector<double>{0, 1, 9, 10}) bad.push_back("pnn k=n");

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> mu(-20.0, 20.0), sd(0.2, 5.0);
    std::uniform_int_distribution<int> kd(1, 4), nd(50, 400);
    double worst_drop = 0.0;
    std::size_t em_bad = 0;
    for (int t = 0; t < 100; ++t) {
        const int comps = kd(rng);
        std::vector<double> x;
        for (int c = 0; c < comps; ++c) {
            std::normal_distribution<double> g(mu(rng), sd(rng));
            for (int i = nd(rng); i > 0; --i) x.push_back(g(rng));
        }
        GmmOptions o;
        o.tol = 1e-300;
        o.max_iter = 100;
        const auto r = gmm_em(VectorSet(1, x), std::size_t(kd(rng)), std::uint64_t(t), o);
        for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) {
            const double drop = r.log_likelihood[i - 1] - r.log_likelihood[i];
            worst_drop = std::max(worst_drop, drop);
            if (drop > 1e-9) ++em_bad;
        }
    }
    if (em_bad) bad.push_back("EM decreased " + std::to_string(em_bad) + " times");
    std::string detail = bad.empty() ? "6 k-means/PNN oracles exact" : "failed:";
    for (const auto& b : bad) detail += " [" + b + "]";
    detail += "; EM worst log-likelihood drop " + f(worst_drop) + " over 100 instances";
    return {bad.empty(), detail};
}

// ------------------------------------------------------------------- AC7

Outcome ac7_comparative_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_experiment_config(config("fig4_waves.ini"));
    cfg.repetitions = 1;
    cfg.grid = {{16000, 330}};
    cfg.serial_timing = true;
    const auto r = run_experiment(cfg);
    auto cell = [&](const char* a) -> const ResultCell* {
        for (const auto& c : r.cells)
            if (c.algorithm == a) return &c;
        return nullptr;
    };
    const ResultCell *co = cell("cortex"), *bi = cell("birch"), *km = cell("kmeans"), *gm = cell("gmm");
    for (const auto* c : {co, bi, km, gm})
        if (!c || c->failed) return {false, "missing or failed cell" + (c ? ": " + c->note : std::string())};
    auto ratio = [](const ResultCell* c) { return c->test.rmse / c->train.rmse; };
    const bool time_ok = co->wall_s < bi->wall_s && bi->wall_s < km->wall_s && bi->wall_s < gm->wall_s;
    const double rc = ratio(co);
    const bool gen_ok = rc <= ratio(bi) + 0.05 && rc <= ratio(km) + 0.05 && rc <= ratio(gm) + 0.05;
    const double s = seconds_since(t0);
    std::string detail = "seconds cortex=" + f(co->wall_s, 3) + " (K=" + std::to_string(co->k) + ") birch=" +
                         f(bi->wall_s, 3) + " kmeans=" + f(km->wall_s, 3) + " gmm=" + f(gm->wall_s, 3) +
                         "; test/train cortex=" + f(rc) + " birch=" + f(ratio(bi)) + " kmeans=" + f(ratio(km)) +
                         " gmm=" + f(ratio(gm)) + "; " + f(s, 3) + " s total";
    return {time_ok && gen_ok && s < 1800.0, detail};
}

// ------------------------------------------------------------------- AC8

Outcome ac8_scaling() {
    auto cfg = load_experiment_config(config("fig4_waves.ini"));
    const std::size_t n_max = 64000;
    const auto stream = generate_stream(cfg.dataset, cfg.seed, samples_for_frames(n_max, cfg.front_end));
    const auto norm = resolve_normalization(cfg.front_end, stream);
    const auto all = analyze(stream.samples, cfg.front_end, norm, n_max);
    // Fixed parameters for every n, so only the amount of data changes.
    auto rc = cfg.settings.cortex;
    rc.tune = false;
    const CortexParams params = resolve_cortex_params(rc, all, rc.r_limit_ratio);

    const std::size_t ns[] = {8000, 16000, 32000, 64000};
    std::vector<double> med;
    std::string detail = "median seconds:";
    for (std::size_t n : ns) {
        const VectorSet data(all.dim(), std::vector<double>(all.data().begin(),
                                                            all.data().begin() + std::ptrdiff_t(n * all.dim())));
        std::vector<double> t;
        for (int rep = 0; rep < 15; ++rep)
            t.push_back(timed([&] { return train_cortex(data, params, rc.epochs, norm); }).seconds);
        med.push_back(summarize(t).median);
        detail += " n=" + std::to_string(n) + ":" + f(med.back(), 3);
    }
    bool pass = true;
    detail += "; ratios";
    for (std::size_t i = 0; i + 1 < med.size(); ++i) {
        const double q = med[i + 1] / med[i];
        detail += " " + f(q, 3);
        if (!(q >= 1.5 && q <= 3.0)) pass = false;
    }
    return {pass, detail};
}

// ------------------------------------------------------------------ AC10

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

Outcome ac10_serialization() {
    auto cfg = load_experiment_config(config("fig4_waves.ini"));
    const std::size_t n = 4000;
    const auto stream = generate_stream(cfg.dataset, cfg.seed, samples_for_frames(n, cfg.front_end));
    const auto norm = resolve_normalization(cfg.front_end, stream);
    const auto data = analyze(stream.samples, cfg.front_end, norm, n);

    std::vector<std::string> bad;
    std::size_t checked = 0;

    for (auto fmt : {io::StreamFormat::Csv, io::StreamFormat::Binary}) {
        std::stringstream ss;
        if (fmt == io::StreamFormat::Csv) io::write_stream_csv(stream, ss);
        else io::write_stream_binary(stream, ss);
        const auto back = fmt == io::StreamFormat::Csv ? io::read_stream_csv(ss) : io::read_stream_binary(ss);
        ++checked;
        if (!same_bits(back.samples, stream.samples) || !(back == stream))
            bad.push_back(fmt == io::StreamFormat::Csv ? "stream csv" : "stream binary");
    }

    const CortexParams params = tune_cortex(data, 80, cfg.settings.cortex).params;
    for (const char* alg : {"cortex", "birch", "kmeans", "gmm"}) {
        const auto m = train_algorithm(alg, data, 80, cfg.front_end, norm, cfg.settings, params, 1);
        const auto idx = encode_all(m.artifact.quantizer(), data);
        const auto rec = decode_indices(m.artifact.quantizer(), idx, cfg.front_end, norm);
        for (auto fmt : {io::CodebookFormat::Text, io::CodebookFormat::Binary}) {
            std::stringstream cs, is;
            io::write_codebook(m.artifact, cs, fmt);
            io::write_indices(idx, is);
            const auto a = io::read_codebook(cs);
            const auto idx_back = io::read_indices(is);
            const auto idx2 = encode_all(a.quantizer(), data);
            const auto rec2 = decode_indices(a.quantizer(), idx_back, a.front_end, a.normalization);
            ++checked;
            if (!same_bits(idx2, idx) || !same_bits(idx_back, idx) || !same_bits(rec2, rec))
                bad.push_back(std::string(alg) + (fmt == io::CodebookFormat::Text ? " text" : " binary"));
        }
    }
    std::string detail = std::to_string(checked) + " round trips";
    for (const auto& b : bad) detail += " [mismatch: " + b + "]";
    return {bad.empty(), detail};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"AC1 DWPT round trip", ac1_dwpt_round_trip},
        {"AC2 energy-decrease inequality", ac2_energy_decrease},
        {"AC3 entropy ordering", ac3_entropy},
        {"AC4 node-count convergence", ac4_node_convergence},
        {"AC5 adaptation ordering", ac5_adaptation_ordering},
        {"AC6 baseline oracles", ac6_baseline_oracles},
        {"AC7 comparative ordering", ac7_comparative_ordering},
        {"AC8 near-linear scaling", ac8_scaling},
        {"AC9 level-entropy monotonicity", ac9_level_entropy},
        {"AC10 serialization round trips", ac10_serialization},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
