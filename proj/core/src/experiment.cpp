#include "cvq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "cvq/error.hpp"

namespace cvq {

namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

// ------------------------------------------------------------ formatting

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    while (true) {
        const auto pos = s.find(sep);
        const auto item = trim(s.substr(0, pos));
        if (!item.empty()) out.emplace_back(item);
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

double to_double(std::string_view s, const std::string& what) {
    s = trim(s);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ConfigError(what + ": '" + std::string(s) + "' is not a number");
    return v;
}

std::uint64_t to_u64(std::string_view s, const std::string& what) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw ConfigError(what + ": '" + std::string(s) + "' is not a non-negative integer");
    return v;
}

bool to_bool(std::string_view s, const std::string& what) {
    s = trim(s);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError(what + ": '" + std::string(s) + "' is not a boolean");
}

// ------------------------------------------------------------- INI access

// One INI section; rejects keys it was not asked about so typos surface.
class Section {
public:
    Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return tree_ && tree_->find(key) != tree_->not_found();
    }
    std::string str(const std::string& key) { return tree_->get<std::string>(key); }
    double num(const std::string& key, double def) { return has(key) ? to_double(str(key), where(key)) : def; }
    std::uint64_t u64(const std::string& key, std::uint64_t def) {
        return has(key) ? to_u64(str(key), where(key)) : def;
    }
    std::size_t size(const std::string& key, std::size_t def) { return std::size_t(u64(key, def)); }
    bool flag(const std::string& key, bool def) { return has(key) ? to_bool(str(key), where(key)) : def; }
    std::string text(const std::string& key, const std::string& def) { return has(key) ? std::string(trim(str(key))) : def; }
    std::vector<double> nums(const std::string& key, const std::vector<double>& def) {
        if (!has(key)) return def;
        std::vector<double> out;
        for (const auto& item : split(str(key), ',')) out.push_back(to_double(item, where(key)));
        return out;
    }
    std::vector<std::string> words(const std::string& key, const std::vector<std::string>& def) {
        return has(key) ? split(str(key), ',') : def;
    }

    void finish() const {
        if (!tree_) return;
        for (const auto& [key, _] : *tree_)
            if (!seen_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
    }

private:
    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

    const pt::ptree* tree_;
    std::string name_;
    std::set<std::string> seen_;
};

pt::ptree read_ini(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return tree;
}

const pt::ptree* child(const pt::ptree& tree, const std::string& name) {
    const auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
}

void reject_unknown_sections(const pt::ptree& tree, const std::set<std::string>& known) {
    for (const auto& [name, _] : tree)
        if (!known.count(name)) throw ConfigError("unknown config section [" + name + "]");
}

WaveKind wave_kind_from(std::string_view s) {
    for (WaveKind k : {WaveKind::Sinus, WaveKind::Square, WaveKind::Sawtooth})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown wave kind '" + std::string(s) + "'");
}

CortexParams run_params_default() {
    CortexParams p;
    p.r_init.clear();
    p.r_limit.clear();
    return p;
}

void parse_cortex_params(Section& s, CortexParams& p) {
    p.r_init = s.nums("r_init", p.r_init);
    p.r_limit = s.nums("r_limit", p.r_limit);
    p.k_adapt = s.num("k_adapt", p.k_adapt);
    p.n_power = s.num("n_power", p.n_power);
    p.l_base = s.num("l_base", p.l_base);
    p.k_range_power = s.num("k_range_power", p.k_range_power);
    p.k_learning_base = s.num("k_learning_base", p.k_learning_base);
    p.maturity_threshold = s.num("maturity_threshold", p.maturity_threshold);
    p.epsilon_ratio = s.num("epsilon_ratio", p.epsilon_ratio);
}

std::vector<GaussianComponent> parse_components(const std::vector<std::string>& items) {
    std::vector<GaussianComponent> out;
    for (const auto& item : items) {
        const auto parts = split(item, ':');
        if (parts.size() != 3) throw ConfigError("gaussian component '" + item + "' must be mean:stddev:count");
        out.push_back({to_double(parts[0], "component mean"), to_double(parts[1], "component stddev"),
                       std::size_t(to_u64(parts[2], "component count"))});
    }
    return out;
}

// ---------------------------------------------------------- small helpers

std::vector<std::uint64_t> visit_counts(const VectorQuantizer& q, const VectorSet& data) {
    std::vector<std::uint64_t> counts(q.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) ++counts[q.encode(data.row(i))];
    return counts;
}

double normalized_visit_entropy(const VectorQuantizer& q, const VectorSet& data) {
    return normalized_entropy(visit_counts(q, data)).entropy;
}

double median_of(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

std::ofstream open_report(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void close_report(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

template <class Rows>
std::filesystem::path write_tsv(const std::filesystem::path& path, const Rows& rows) {
    auto out = open_report(path);
    for (const auto& [x, y] : rows) out << fmt(double(x)) << '\t' << fmt(double(y)) << '\n';
    close_report(out, path);
    return path;
}

}  // namespace

// ------------------------------------------------------------- datasets

std::size_t samples_for_frames(std::size_t n, const FrontEnd& fe) {
    return n == 0 ? 0 : (n - 1) * fe.stride + fe.window;
}

SampleStream generate_stream(const DatasetSpec& spec, std::uint64_t seed, std::size_t min_samples) {
    switch (spec.source) {
        case Source::BasicWaves: {
            BasicWavesConfig cfg = spec.waves;
            cfg.seed = seed;
            if (min_samples > 0) {
                cfg.validate();
                const auto shortest = std::size_t(
                    *std::min_element(cfg.periods_in_samples.begin(), cfg.periods_in_samples.end()));
                cfg.count = (min_samples + shortest - 1) / shortest;
            }
            return gen_basic_waves(cfg);
        }
        case Source::Lorenz: {
            LorenzConfig cfg = spec.lorenz;
            cfg.seed = seed;
            if (min_samples > 0) cfg.n_steps = min_samples;
            if (seed != 0) {
                std::mt19937_64 rng(seed);
                std::uniform_real_distribution<double> jitter(-0.5, 0.5);
                for (double& v : cfg.initial_xyz) v += jitter(rng);
            }
            return gen_lorenz(cfg);
        }
        case Source::GaussianMixture: {
            GaussianMixtureConfig cfg = spec.gaussian;
            cfg.seed = seed;
            SampleStream s = gen_gaussian_mixture(cfg);
            if (s.samples.size() < min_samples)
                throw InfeasibleError("gaussian mixture stream has " + std::to_string(s.samples.size()) +
                                      " samples, " + std::to_string(min_samples) + " needed");
            return s;
        }
    }
    throw ConfigError("unknown source");
}

// ----------------------------------------------------------- algorithms

bool is_known_algorithm(std::string_view name) {
    return std::any_of(std::begin(kAlgorithms), std::end(kAlgorithms),
                       [&](const char* a) { return name == a; });
}

CortexParams resolve_cortex_params(const CortexRunConfig& cfg, const VectorSet& data, double ratio) {
    CortexParams p = cfg.params;
    if (p.r_init.empty()) p.r_init = estimate_r_init(data);
    if (p.r_limit.empty() || cfg.tune) {
        p.r_limit.resize(p.r_init.size());
        for (std::size_t i = 0; i < p.r_init.size(); ++i) p.r_limit[i] = ratio * p.r_init[i];
    }
    p.validate(data.dim());
    return p;
}

Codebook train_cortex(const VectorSet& data, const CortexParams& params, std::size_t epochs,
                      const NormalizationSpec& norm) {
    CortexTree tree(data.dim(), params);
    for (std::size_t e = 0; e < epochs; ++e) tree.train_all(data);
    return finalize(tree, norm);
}

CortexTuning tune_cortex(const VectorSet& data, std::size_t target_k, const CortexRunConfig& cfg) {
    if (target_k < 1) throw ConfigError("tune: target K must be >= 1");
    if (!(cfg.ratio_min > 0.0) || !(cfg.ratio_max > cfg.ratio_min) || cfg.sweep_points < 2)
        throw ConfigError("tune: need 0 < ratio_min < ratio_max and sweep_points >= 2");
    const double target = double(target_k);
    const double tol = cfg.k_tolerance * target;

    CortexTuning best;
    double best_miss = std::numeric_limits<double>::infinity();
    auto eval = [&](double ratio) -> std::size_t {
        const CortexParams p = resolve_cortex_params(cfg, data, ratio);
        std::size_t k = 0;
        try {
            k = train_cortex(data, p, cfg.epochs, {}).size();
        } catch (const UndertrainedError&) {
            k = 0;
        }
        ++best.trials;
        const double miss = std::abs(double(k) - target);
        // Ties prefer the larger ratio: wider ranges, fewer stray spines.
        if (miss < best_miss || (miss == best_miss && ratio > best.r_limit_ratio)) {
            best_miss = miss;
            best.params = p;
            best.r_limit_ratio = ratio;
            best.achieved_k = k;
        }
        return k;
    };
    auto done = [&] { return best_miss <= tol; };

    std::vector<double> ratios(cfg.sweep_points);
    std::vector<double> ks(cfg.sweep_points);
    const double step = std::log(cfg.ratio_max / cfg.ratio_min) / double(cfg.sweep_points - 1);
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        ratios[i] = cfg.ratio_min * std::exp(step * double(i));
        ks[i] = double(eval(ratios[i]));
    }
    for (std::size_t i = ratios.size() - 1; i-- > 0 && !done();) {
        double lo = ratios[i], hi = ratios[i + 1];
        double klo = ks[i], khi = ks[i + 1];
        if ((klo - target) * (khi - target) > 0.0) continue;
        for (int it = 0; it < 20 && !done(); ++it) {
            const double mid = std::sqrt(lo * hi);
            const double km = double(eval(mid));
            if ((klo - target) * (km - target) <= 0.0) {
                hi = mid;
                khi = km;
            } else {
                lo = mid;
                klo = km;
            }
        }
    }
    best.within_tolerance = done();
    return best;
}

TrainedModel train_algorithm(const std::string& algorithm, const VectorSet& data, std::size_t k,
                             const FrontEnd& fe, const NormalizationSpec& norm,
                             const AlgorithmSettings& settings, const CortexParams& params,
                             std::uint64_t seed) {
    TrainedModel m;
    m.artifact.algorithm = algorithm;
    m.artifact.front_end = fe;
    m.artifact.normalization = norm;
    if (algorithm == "cortex") {
        auto t = timed([&] { return train_cortex(data, params, settings.cortex.epochs, norm); });
        m.seconds = t.seconds;
        m.artifact.codebook = std::move(t.value);
    } else if (algorithm == "kmeans") {
        auto t = timed([&] { return kmeans(data, k, seed, settings.kmeans); });
        m.seconds = t.seconds;
        t.value.codebook.set_normalization(norm);
        if (!t.value.converged) m.note = "kmeans hit max_iter";
        m.artifact.codebook = std::move(t.value.codebook);
    } else if (algorithm == "birch") {
        // An automatic threshold is halved until the tree keeps at least k
        // leaf entries; only the final, feasible build is reported.
        const bool fixed = settings.birch_threshold > 0.0;
        double threshold = fixed ? settings.birch_threshold : default_birch_threshold(data, seed);
        auto attempt = [&] { return timed([&] { return birch(data, threshold, settings.birch_branching, k); }); };
        std::optional<decltype(attempt())> done;
        for (int halvings = 0; !done; ++halvings) {
            try {
                done.emplace(attempt());
            } catch (const InfeasibleError&) {
                if (fixed || halvings >= 30) throw;
                threshold *= 0.5;
            }
        }
        auto& t = *done;
        m.seconds = t.seconds;
        if (!fixed) m.note = "threshold " + fmt(threshold);
        t.value.codebook.set_normalization(norm);
        m.artifact.codebook = std::move(t.value.codebook);
    } else if (algorithm == "gmm") {
        auto t = timed([&] { return gmm_em(data, k, seed, settings.gmm); });
        m.seconds = t.seconds;
        if (!t.value.converged) m.note = "gmm hit max_iter";
        m.artifact.codebook = std::move(t.value.model);
    } else if (algorithm == "pnn") {
        auto t = timed([&] { return pnn(data, k); });
        m.seconds = t.seconds;
        t.value.codebook.set_normalization(norm);
        m.artifact.codebook = std::move(t.value.codebook);
    } else {
        throw ConfigError("unknown algorithm '" + algorithm + "'");
    }
    return m;
}

// ----------------------------------------------------------- experiment

void ExperimentConfig::validate() const {
    front_end.validate();
    if (algorithms.empty()) throw ConfigError("experiment: algorithm list is empty");
    for (const auto& a : algorithms)
        if (!is_known_algorithm(a)) throw ConfigError("experiment: unknown algorithm '" + a + "'");
    if (grid.empty()) throw ConfigError("experiment: grid is empty");
    for (const auto& g : grid) {
        if (g.n_vectors < 1 || g.k < 1) throw ConfigError("experiment: grid entries need n >= 1 and K >= 1");
        if (g.k > g.n_vectors)
            throw ConfigError("experiment: K=" + std::to_string(g.k) + " exceeds n=" + std::to_string(g.n_vectors));
    }
    if (repetitions < 1) throw ConfigError("experiment: repetitions must be >= 1");
    if (seed == test_seed) throw ConfigError("experiment: test_seed must differ from seed");
    if (settings.cortex.epochs < 1) throw ConfigError("experiment: cortex epochs must be >= 1");
    if (!(settings.cortex.k_tolerance >= 0.0)) throw ConfigError("experiment: k_tolerance must be >= 0");
}

ExperimentConfig parse_experiment_config(std::istream& in) {
    const pt::ptree tree = read_ini(in);
    reject_unknown_sections(tree, {"experiment", "dataset", "frontend", "cortex", "kmeans", "birch", "gmm"});
    ExperimentConfig cfg;
    cfg.settings.cortex.params = run_params_default();

    {
        Section s(child(tree, "experiment"), "experiment");
        cfg.name = s.text("name", cfg.name);
        cfg.seed = s.u64("seed", cfg.seed);
        cfg.test_seed = s.u64("test_seed", cfg.test_seed);
        cfg.repetitions = s.size("repetitions", cfg.repetitions);
        cfg.algorithms = s.words("algorithms", cfg.algorithms);
        cfg.serial_timing = s.flag("serial_timing", cfg.serial_timing);
        if (s.has("grid")) {
            cfg.grid.clear();
            for (const auto& item : split(s.str("grid"), ',')) {
                const auto parts = split(item, ':');
                if (parts.size() != 2) throw ConfigError("grid entry '" + item + "' must be n:K");
                cfg.grid.push_back({std::size_t(to_u64(parts[0], "grid n")), std::size_t(to_u64(parts[1], "grid K"))});
            }
        }
        s.finish();
    }
    {
        Section s(child(tree, "dataset"), "dataset");
        auto& d = cfg.dataset;
        d.source = source_from_string(s.text("source", std::string(to_string(d.source))));
        if (s.has("kinds")) {
            d.waves.wave_kinds.clear();
            for (const auto& w : split(s.str("kinds"), ',')) d.waves.wave_kinds.push_back(wave_kind_from(w));
        }
        if (s.has("periods")) {
            d.waves.periods_in_samples.clear();
            for (double p : s.nums("periods", {})) d.waves.periods_in_samples.push_back(int(p));
        }
        d.waves.amplitudes = s.nums("amplitudes", d.waves.amplitudes);
        d.waves.sample_rate_hz = s.num("sample_rate", d.waves.sample_rate_hz);
        d.lorenz.sigma = s.num("sigma", d.lorenz.sigma);
        d.lorenz.rho = s.num("rho", d.lorenz.rho);
        d.lorenz.beta = s.num("beta", d.lorenz.beta);
        d.lorenz.step = s.num("step", d.lorenz.step);
        d.lorenz.amplitude_scale = s.num("scale", d.lorenz.amplitude_scale);
        if (s.has("initial")) {
            const auto xyz = s.nums("initial", {});
            if (xyz.size() != 3) throw ConfigError("[dataset] initial needs three values");
            d.lorenz.initial_xyz = {xyz[0], xyz[1], xyz[2]};
        }
        if (s.has("integrator")) {
            const auto name = s.text("integrator", "euler");
            if (name == "euler")
                d.lorenz.integrator = Integrator::Euler;
            else if (name == "rk4")
                d.lorenz.integrator = Integrator::RK4;
            else
                throw ConfigError("unknown integrator '" + name + "'");
        }
        if (s.has("components")) d.gaussian.components = parse_components(split(s.str("components"), ','));
        s.finish();
    }
    {
        Section s(child(tree, "frontend"), "frontend");
        auto& fe = cfg.front_end;
        fe.window = s.size("window", fe.window);
        fe.stride = s.size("stride", fe.window);
        fe.transform = transform_from_string(s.text("transform", std::string(to_string(fe.transform))));
        fe.normalization =
            normalization_mode_from_string(s.text("normalization", std::string(to_string(fe.normalization))));
        fe.fixed_scale = s.num("fixed_scale", fe.fixed_scale);
        s.finish();
    }
    {
        Section s(child(tree, "cortex"), "cortex");
        auto& c = cfg.settings.cortex;
        parse_cortex_params(s, c.params);
        c.r_limit_ratio = s.num("r_limit_ratio", c.r_limit_ratio);
        c.epochs = s.size("epochs", c.epochs);
        c.tune = s.flag("tune", c.tune);
        c.k_tolerance = s.num("k_tolerance", c.k_tolerance);
        c.ratio_min = s.num("ratio_min", c.ratio_min);
        c.ratio_max = s.num("ratio_max", c.ratio_max);
        c.sweep_points = s.size("sweep_points", c.sweep_points);
        s.finish();
    }
    {
        Section s(child(tree, "kmeans"), "kmeans");
        cfg.settings.kmeans.max_iter = s.size("max_iter", cfg.settings.kmeans.max_iter);
        cfg.settings.kmeans.restarts = s.size("restarts", cfg.settings.kmeans.restarts);
        s.finish();
    }
    {
        Section s(child(tree, "birch"), "birch");
        const auto t = s.text("threshold", "auto");
        cfg.settings.birch_threshold = t == "auto" ? 0.0 : to_double(t, "[birch] threshold");
        cfg.settings.birch_branching = s.size("branching", cfg.settings.birch_branching);
        s.finish();
    }
    {
        Section s(child(tree, "gmm"), "gmm");
        cfg.settings.gmm.tol = s.num("tol", cfg.settings.gmm.tol);
        cfg.settings.gmm.max_iter = s.size("max_iter", cfg.settings.gmm.max_iter);
        cfg.settings.gmm.variance_floor_ratio = s.num("variance_floor_ratio", cfg.settings.gmm.variance_floor_ratio);
        s.finish();
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    return parse_experiment_config(in);
}

namespace {

// All cells of one (grid point, repetition): shared streams, shared tuning.
void run_unit(const ExperimentConfig& cfg, const GridPoint& g, std::size_t rep, ResultCell* cells,
              std::ostream* log, std::mutex& log_mutex) {
    const std::uint64_t seed = cfg.seed + rep;
    const std::uint64_t test_seed = cfg.test_seed + rep;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
        ResultCell& c = cells[a];
        c.algorithm = cfg.algorithms[a];
        c.n = g.n_vectors;
        c.k = c.k_target = g.k;
        c.rep = rep;
        c.seed = seed;
        c.test_seed = test_seed;
    }
    auto fail_all = [&](const std::string& why) {
        for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
            cells[a].failed = true;
            cells[a].note = why;
        }
    };

    const std::size_t need = samples_for_frames(g.n_vectors, cfg.front_end);
    SampleStream train_stream, test_stream;
    NormalizationSpec norm;
    VectorSet train;
    try {
        train_stream = generate_stream(cfg.dataset, seed, need);
        test_stream = generate_stream(cfg.dataset, test_seed, need);
        norm = resolve_normalization(cfg.front_end, train_stream);
        train = analyze(train_stream.samples, cfg.front_end, norm, g.n_vectors);
        if (train.size() < g.n_vectors)
            throw InfeasibleError("stream yields only " + std::to_string(train.size()) + " frames");
    } catch (const Error& e) {
        fail_all(e.what());
        return;
    }

    CortexParams cortex_params;
    std::string tuning_note;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
        ResultCell& c = cells[a];
        try {
            if (c.algorithm == "cortex") {
                const auto& rc = cfg.settings.cortex;
                if (rc.tune) {
                    const CortexTuning t = tune_cortex(train, g.k, rc);
                    cortex_params = t.params;
                    if (!t.within_tolerance)
                        tuning_note = "tuned K " + std::to_string(t.achieved_k) + " outside tolerance";
                } else {
                    cortex_params = resolve_cortex_params(rc, train, rc.r_limit_ratio);
                }
            }
            const TrainedModel m =
                train_algorithm(c.algorithm, train, g.k, cfg.front_end, norm, cfg.settings, cortex_params, seed);
            const VectorQuantizer& q = m.artifact.quantizer();
            c.k = q.size();
            c.wall_s = m.seconds;
            c.train = frame_distortion(q, train_stream.samples, cfg.front_end, norm, g.n_vectors, Phase::Train);
            c.test = frame_distortion(q, test_stream.samples, cfg.front_end, norm, g.n_vectors, Phase::Test);
            c.entropy = normalized_visit_entropy(q, train);
            c.note = c.algorithm == "cortex" ? tuning_note : m.note;
        } catch (const Error& e) {
            c.failed = true;
            c.note = e.what();
        }
        if (log) {
            std::lock_guard lock(log_mutex);
            *log << c.algorithm << " n=" << c.n << " K=" << c.k << " rep=" << c.rep;
            if (c.failed)
                *log << " FAILED: " << c.note << '\n';
            else
                *log << " t=" << fmt(c.wall_s) << "s train_rmse=" << fmt(c.train.rmse)
                     << " test_rmse=" << fmt(c.test.rmse) << " H=" << fmt(c.entropy) << '\n';
        }
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    cfg.validate();
    ExperimentResult result;
    result.name = cfg.name;
    const std::size_t n_alg = cfg.algorithms.size();
    const std::size_t units = cfg.grid.size() * cfg.repetitions;
    result.cells.resize(units * n_alg);
    std::mutex log_mutex;

    auto run = [&](std::size_t u) {
        const GridPoint& g = cfg.grid[u / cfg.repetitions];
        run_unit(cfg, g, u % cfg.repetitions, result.cells.data() + u * n_alg, log, log_mutex);
    };
    if (cfg.serial_timing) {
        for (std::size_t u = 0; u < units; ++u) run(u);
    } else {
        std::atomic<std::size_t> next{0};
        const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(units, std::thread::hardware_concurrency()));
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t u; (u = next.fetch_add(1)) < units;) run(u);
            });
    }

    // Gain of each algorithm against the cortex cell of the same unit.
    for (std::size_t u = 0; u < units; ++u) {
        ResultCell* cells = result.cells.data() + u * n_alg;
        const ResultCell* cortex = nullptr;
        for (std::size_t a = 0; a < n_alg; ++a)
            if (cells[a].algorithm == "cortex" && !cells[a].failed) cortex = &cells[a];
        if (!cortex) continue;
        for (std::size_t a = 0; a < n_alg; ++a) {
            ResultCell& c = cells[a];
            if (c.failed) continue;
            try {
                c.gain = gain(c.wall_s, c.train.rmse, cortex->wall_s, cortex->train.rmse).gain;
            } catch (const DomainError&) {
                c.gain = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return result;
}

double median_metric(const ExperimentResult& r, const std::string& algorithm, std::size_t n,
                     double ResultCell::*metric) {
    std::vector<double> v;
    for (const auto& c : r.cells)
        if (c.algorithm == algorithm && c.n == n && !c.failed) v.push_back(c.*metric);
    return median_of(std::move(v));
}

ReportFormat report_format_from_string(std::string_view s) {
    if (s == "csv") return ReportFormat::Csv;
    if (s == "json") return ReportFormat::Json;
    throw ConfigError("unknown report format '" + std::string(s) + "' (csv or json)");
}

void write_results_csv(const ExperimentResult& r, std::ostream& out) {
    out << kResultColumns << '\n';
    for (const auto& c : r.cells)
        out << c.algorithm << ',' << c.n << ',' << c.k << ',' << c.rep << ',' << c.seed << ','
            << fmt(c.failed ? std::nan("") : c.train.rmse) << ',' << fmt(c.failed ? std::nan("") : c.test.rmse)
            << ',' << fmt(c.wall_s) << ',' << fmt(c.entropy) << ',' << fmt(c.gain) << '\n';
}

std::vector<ResultCell> parse_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kResultColumns)
        throw IoError("results csv: unexpected header");
    std::vector<ResultCell> cells;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::string_view rest = line;
        while (true) {
            const auto pos = rest.find(',');
            f.emplace_back(trim(rest.substr(0, pos)));
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (f.size() != 10) throw IoError("results csv: expected 10 columns, got " + std::to_string(f.size()));
        try {
            ResultCell c;
            c.algorithm = f[0];
            c.n = std::size_t(to_u64(f[1], "n"));
            c.k = std::size_t(to_u64(f[2], "K"));
            c.rep = std::size_t(to_u64(f[3], "rep"));
            c.seed = to_u64(f[4], "seed");
            c.train.rmse = to_double(f[5], "train_rmse");
            c.train.phase = Phase::Train;
            c.test.rmse = to_double(f[6], "test_rmse");
            c.test.phase = Phase::Test;
            c.wall_s = to_double(f[7], "wall_s");
            c.entropy = to_double(f[8], "entropy");
            c.gain = to_double(f[9], "gain");
            c.failed = std::isnan(c.train.rmse);
            cells.push_back(std::move(c));
        } catch (const ConfigError& e) {
            throw IoError(std::string("results csv: ") + e.what());
        }
    }
    return cells;
}

namespace {

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json results_json(const ExperimentResult& r) {
    json cells = json::array();
    std::vector<std::pair<std::string, std::size_t>> keys;
    for (const auto& c : r.cells) {
        cells.push_back({{"algorithm", c.algorithm},
                         {"n", c.n},
                         {"K", c.k},
                         {"K_target", c.k_target},
                         {"rep", c.rep},
                         {"seed", c.seed},
                         {"test_seed", c.test_seed},
                         {"train_rmse", number_or_null(c.failed ? std::nan("") : c.train.rmse)},
                         {"test_rmse", number_or_null(c.failed ? std::nan("") : c.test.rmse)},
                         {"wall_s", number_or_null(c.wall_s)},
                         {"entropy", number_or_null(c.entropy)},
                         {"gain", number_or_null(c.gain)},
                         {"failed", c.failed},
                         {"note", c.note}});
        const std::pair<std::string, std::size_t> key{c.algorithm, c.n};
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    json summary = json::array();
    for (const auto& [alg, n] : keys) {
        const double tr = median_metric(r, alg, n, &ResultCell::wall_s);
        std::vector<double> train, test;
        for (const auto& c : r.cells)
            if (c.algorithm == alg && c.n == n && !c.failed) {
                train.push_back(c.train.rmse);
                test.push_back(c.test.rmse);
            }
        const double mtrain = median_of(train), mtest = median_of(test);
        summary.push_back({{"algorithm", alg},
                           {"n", n},
                           {"median_wall_s", number_or_null(tr)},
                           {"median_train_rmse", number_or_null(mtrain)},
                           {"median_test_rmse", number_or_null(mtest)},
                           {"generalization", number_or_null(mtrain > 0.0 ? mtest / mtrain : std::nan(""))},
                           {"median_gain", number_or_null(median_metric(r, alg, n, &ResultCell::gain))},
                           {"median_entropy", number_or_null(median_metric(r, alg, n, &ResultCell::entropy))}});
    }
    return {{"name", r.name}, {"columns", split(kResultColumns, ',')}, {"cells", cells}, {"summary", summary}};
}

}  // namespace

void write_results_json(const ExperimentResult& r, std::ostream& out) { out << results_json(r).dump(2) << '\n'; }

std::vector<std::filesystem::path> emit_reports(const ExperimentResult& r, const std::filesystem::path& dir,
                                                ReportFormat primary) {
    ensure_dir(dir);
    std::vector<std::filesystem::path> written;
    const auto csv_path = dir / (r.name + ".csv");
    const auto json_path = dir / (r.name + ".json");
    auto write_csv = [&] {
        auto out = open_report(csv_path);
        write_results_csv(r, out);
        close_report(out, csv_path);
        written.push_back(csv_path);
    };
    auto write_json = [&] {
        auto out = open_report(json_path);
        write_results_json(r, out);
        close_report(out, json_path);
        written.push_back(json_path);
    };
    if (primary == ReportFormat::Csv) {
        write_csv();
        write_json();
    } else {
        write_json();
        write_csv();
    }

    // Plot panels: one series per algorithm, x = n, y = median metric.
    std::vector<std::string> algs;
    std::vector<std::size_t> ns;
    for (const auto& c : r.cells) {
        if (std::find(algs.begin(), algs.end(), c.algorithm) == algs.end()) algs.push_back(c.algorithm);
        if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    }
    std::sort(ns.begin(), ns.end());
    const std::pair<const char*, double ResultCell::*> panels[] = {
        {"time", &ResultCell::wall_s}, {"gain", &ResultCell::gain}, {"entropy", &ResultCell::entropy}};
    for (const auto& alg : algs) {
        for (const auto& [panel, metric] : panels) {
            std::vector<std::pair<double, double>> rows;
            for (std::size_t n : ns) rows.emplace_back(double(n), median_metric(r, alg, n, metric));
            written.push_back(write_tsv(dir / (r.name + "_" + panel + "_" + alg + ".tsv"), rows));
        }
        std::vector<std::pair<double, double>> train_rows, test_rows;
        for (std::size_t n : ns) {
            std::vector<double> tr, te;
            for (const auto& c : r.cells)
                if (c.algorithm == alg && c.n == n && !c.failed) {
                    tr.push_back(c.train.rmse);
                    te.push_back(c.test.rmse);
                }
            train_rows.emplace_back(double(n), median_of(tr));
            test_rows.emplace_back(double(n), median_of(te));
        }
        written.push_back(write_tsv(dir / (r.name + "_train_rmse_" + alg + ".tsv"), train_rows));
        written.push_back(write_tsv(dir / (r.name + "_test_rmse_" + alg + ".tsv"), test_rows));
    }
    return written;
}

// ------------------------------------------------------ entropy experiment

void EntropyConfig::validate() const {
    stream.validate();
    if (epochs < 1) throw ConfigError("entropy: epochs must be >= 1");
    if (cortex.r_limit.size() > 1) throw ConfigError("entropy: the depth-1 tree takes one r_limit");
    for (double r : r_limit_sweep)
        if (!(r > 0.0)) throw ConfigError("entropy: r_limit sweep values must be > 0");
    if (histogram_bins < 1) throw ConfigError("entropy: histogram_bins must be >= 1");
    if (run_levels && (level_depth < 1 || level_epochs < 1))
        throw ConfigError("entropy: level_depth and level_epochs must be >= 1");
}

EntropyConfig parse_entropy_config(std::istream& in) {
    const pt::ptree tree = read_ini(in);
    reject_unknown_sections(tree, {"entropy", "cortex"});
    EntropyConfig cfg;
    cfg.cortex = run_params_default();
    {
        Section s(child(tree, "entropy"), "entropy");
        cfg.stream.seed = s.u64("seed", cfg.stream.seed);
        if (s.has("components")) cfg.stream.components = parse_components(split(s.str("components"), ','));
        cfg.epochs = s.size("epochs", cfg.epochs);
        cfg.kmeans_seed = s.u64("kmeans_seed", cfg.kmeans_seed);
        cfg.r_limit_sweep = s.nums("r_limit_sweep", cfg.r_limit_sweep);
        cfg.histogram_bins = s.size("histogram_bins", cfg.histogram_bins);
        cfg.level_depth = s.size("level_depth", cfg.level_depth);
        cfg.level_epochs = s.size("level_epochs", cfg.level_epochs);
        cfg.level_maturity_threshold = s.num("level_maturity_threshold", cfg.level_maturity_threshold);
        cfg.run_kmeans = s.flag("run_kmeans", cfg.run_kmeans);
        cfg.run_sweep = s.flag("run_sweep", cfg.run_sweep);
        cfg.run_levels = s.flag("run_levels", cfg.run_levels);
        s.finish();
    }
    {
        Section s(child(tree, "cortex"), "cortex");
        parse_cortex_params(s, cfg.cortex);
        s.finish();
    }
    if (cfg.cortex.r_limit.empty()) cfg.cortex.r_limit = {1.0};
    cfg.validate();
    return cfg;
}

EntropyConfig load_entropy_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    return parse_entropy_config(in);
}

EntropyReport visit_entropy(const VectorQuantizer& q, std::span<const double> samples) {
    if (q.dim() != 1) throw ShapeError("visit_entropy: quantizer must be one-dimensional");
    std::vector<std::uint64_t> counts(q.size(), 0);
    for (const double& x : samples) ++counts[q.encode(std::span<const double>(&x, 1))];
    return normalized_entropy(counts);
}

CentroidCodebook uniform_codebook(double lo, double hi, std::size_t k) {
    if (k < 1) throw ConfigError("uniform codebook: k must be >= 1");
    if (!(hi >= lo)) throw DomainError("uniform codebook: empty range");
    VectorSet c(1);
    c.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double x = k == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * double(i) / double(k - 1);
        c.push_back(std::span<const double>(&x, 1));
    }
    return CentroidCodebook(std::move(c));
}

std::vector<double> level_entropies(const Codebook& cb, const VectorSet& data,
                                    std::vector<std::size_t>* level_nodes) {
    if (data.dim() != cb.depth()) throw ShapeError("level entropy: data width differs from depth");
    std::vector<std::vector<std::uint64_t>> counts(cb.depth());
    for (std::size_t l = 0; l < cb.depth(); ++l) counts[l].assign(cb.level_size(l + 1), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto path = cb.encode_path(data.row(i));
        for (std::size_t l = 0; l < path.size(); ++l) ++counts[l][path[l]];
    }
    std::vector<double> h;
    if (level_nodes) level_nodes->clear();
    for (const auto& c : counts) {
        h.push_back(normalized_entropy(c).entropy);
        if (level_nodes) level_nodes->push_back(c.size());
    }
    return h;
}

EntropyReportSet entropy_experiment(const EntropyConfig& cfg, std::ostream* log) {
    cfg.validate();
    EntropyReportSet r;
    const auto t0 = std::chrono::steady_clock::now();

    const SampleStream stream = gen_gaussian_mixture(cfg.stream);
    const auto& xs = stream.samples;
    const VectorSet data(1, xs);
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    r.data_min = *lo_it;
    r.data_max = *hi_it;

    CortexParams params = cfg.cortex;
    if (params.r_init.empty()) params.r_init = estimate_r_init(data);
    params.validate(1);

    // Depth-1 cortex: node growth per epoch, then visit entropy.
    CortexTree tree(1, params);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        tree.train_all(data);
        const std::size_t nodes = tree.stats().cortex_nodes();
        r.new_nodes_per_epoch.push_back(nodes - (r.nodes_per_epoch.empty() ? 0 : r.nodes_per_epoch.back()));
        r.nodes_per_epoch.push_back(nodes);
    }
    const Codebook cb = finalize(tree);
    r.k = cb.size();
    for (const auto& w : cb.codewords()) r.cortex_codewords.push_back(w.coeffs[0]);
    {
        const auto h = visit_entropy(cb, xs);
        r.h_cortex = h.entropy;
        r.cortex_probabilities = h.probabilities;
    }
    {
        const auto h = visit_entropy(uniform_codebook(r.data_min, r.data_max, r.k), xs);
        r.h_uniform = h.entropy;
        r.uniform_probabilities = h.probabilities;
    }
    if (log) *log << "cortex K=" << r.k << " H=" << fmt(r.h_cortex) << "; uniform H=" << fmt(r.h_uniform) << '\n';
    if (cfg.run_kmeans) {
        const KMeansResult km = kmeans(data, r.k, cfg.kmeans_seed);
        const auto h = visit_entropy(km.codebook, xs);
        r.h_kmeans = h.entropy;
        r.kmeans_probabilities = h.probabilities;
        if (log) *log << "kmeans K=" << r.k << " H=" << fmt(r.h_kmeans) << '\n';
    }
    if (cfg.run_sweep) {
        for (double rl : cfg.r_limit_sweep) {
            CortexParams p = params;
            p.r_limit = {rl};
            std::size_t k = 0;
            try {
                k = train_cortex(data, p, cfg.epochs, {}).size();
            } catch (const UndertrainedError&) {
                k = 0;
            }
            r.r_limit_nodes.emplace_back(rl, k);
            if (log) *log << "r_limit=" << fmt(rl) << " K=" << k << '\n';
        }
    }

    // Histogram of the stream.
    {
        const double width = (r.data_max - r.data_min) / double(cfg.histogram_bins);
        std::vector<std::size_t> bins(cfg.histogram_bins, 0);
        for (double x : xs) {
            std::size_t b = width > 0.0 ? std::size_t((x - r.data_min) / width) : 0;
            ++bins[std::min(b, bins.size() - 1)];
        }
        for (std::size_t b = 0; b < bins.size(); ++b)
            r.histogram.emplace_back(r.data_min + (double(b) + 0.5) * width, bins[b]);
    }

    // Level entropies of a deeper tree on non-overlapping raw frames.
    if (cfg.run_levels) {
        const std::size_t d = cfg.level_depth;
        const VectorSet frames(d, std::vector<double>(xs.begin(), xs.begin() + std::ptrdiff_t(xs.size() / d * d)));
        CortexParams p = cfg.cortex;
        p.r_init = estimate_r_init(frames);
        p.maturity_threshold = cfg.level_maturity_threshold;
        const Codebook deep = train_cortex(frames, p, cfg.level_epochs, {});
        r.level_entropy = level_entropies(deep, frames, &r.level_nodes);
        if (log)
            for (std::size_t l = 0; l < d; ++l)
                *log << "level " << l + 1 << " nodes=" << r.level_nodes[l] << " H=" << fmt(r.level_entropy[l]) << '\n';
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<std::filesystem::path> emit_entropy_reports(const EntropyReportSet& r, const std::filesystem::path& dir,
                                                        ReportFormat primary) {
    ensure_dir(dir);
    std::vector<std::filesystem::path> written;
    const std::vector<std::pair<std::string, double>> summary = [&] {
        std::vector<std::pair<std::string, double>> s{{"K", double(r.k)},
                                                      {"h_cortex", r.h_cortex},
                                                      {"h_kmeans", r.h_kmeans},
                                                      {"h_uniform", r.h_uniform},
                                                      {"h_max", 1.0},
                                                      {"data_min", r.data_min},
                                                      {"data_max", r.data_max},
                                                      {"seconds", r.seconds}};
        for (std::size_t l = 0; l < r.level_entropy.size(); ++l)
            s.emplace_back("h_level_" + std::to_string(l + 1), r.level_entropy[l]);
        return s;
    }();

    auto write_csv = [&] {
        const auto path = dir / "entropy.csv";
        auto out = open_report(path);
        out << "metric,value\n";
        for (const auto& [k, v] : summary) out << k << ',' << fmt(v) << '\n';
        close_report(out, path);
        written.push_back(path);
    };
    auto write_json = [&] {
        const auto path = dir / "entropy.json";
        json j;
        for (const auto& [k, v] : summary) j[k] = number_or_null(v);
        j["nodes_per_epoch"] = r.nodes_per_epoch;
        j["new_nodes_per_epoch"] = r.new_nodes_per_epoch;
        j["cortex_codewords"] = r.cortex_codewords;
        j["cortex_probabilities"] = r.cortex_probabilities;
        j["uniform_probabilities"] = r.uniform_probabilities;
        j["kmeans_probabilities"] = r.kmeans_probabilities;
        json sweep = json::array();
        for (const auto& [rl, k] : r.r_limit_nodes) sweep.push_back({{"r_limit", rl}, {"K", k}});
        j["r_limit_sweep"] = sweep;
        j["level_nodes"] = r.level_nodes;
        auto out = open_report(path);
        out << j.dump(2) << '\n';
        close_report(out, path);
        written.push_back(path);
    };
    if (primary == ReportFormat::Csv) {
        write_csv();
        write_json();
    } else {
        write_json();
        write_csv();
    }

    std::vector<std::pair<double, double>> bars{{0, r.h_uniform}, {1, r.h_kmeans}, {2, r.h_cortex}, {3, 1.0}};
    written.push_back(write_tsv(dir / "entropy_bars.tsv", bars));
    written.push_back(write_tsv(dir / "entropy_histogram.tsv", r.histogram));
    std::vector<std::pair<double, double>> growth, fresh, visits, levels;
    for (std::size_t e = 0; e < r.nodes_per_epoch.size(); ++e) {
        growth.emplace_back(double(e + 1), double(r.nodes_per_epoch[e]));
        fresh.emplace_back(double(e + 1), double(r.new_nodes_per_epoch[e]));
    }
    for (std::size_t i = 0; i < r.cortex_codewords.size(); ++i)
        visits.emplace_back(r.cortex_codewords[i], r.cortex_probabilities[i]);
    for (std::size_t l = 0; l < r.level_entropy.size(); ++l) levels.emplace_back(double(l + 1), r.level_entropy[l]);
    written.push_back(write_tsv(dir / "entropy_node_growth.tsv", growth));
    written.push_back(write_tsv(dir / "entropy_new_nodes.tsv", fresh));
    written.push_back(write_tsv(dir / "entropy_rlimit_nodes.tsv", r.r_limit_nodes));
    written.push_back(write_tsv(dir / "entropy_cortex_visits.tsv", visits));
    written.push_back(write_tsv(dir / "entropy_levels.tsv", levels));
    return written;
}

}  // namespace cvq
