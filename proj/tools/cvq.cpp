// cvq: generate streams, train and apply codebooks, run comparison grids.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cvq/error.hpp"
#include "cvq/experiment.hpp"
#include "cvq/io.hpp"

namespace fs = std::filesystem;

namespace {

bool has_ext(const fs::path& p, const char* ext) { return p.extension() == ext; }

cvq::io::StreamFormat stream_format_for(const fs::path& p) {
    return has_ext(p, ".csv") ? cvq::io::StreamFormat::Csv : cvq::io::StreamFormat::Binary;
}

cvq::io::CodebookFormat codebook_format_for(const fs::path& p) {
    return has_ext(p, ".json") ? cvq::io::CodebookFormat::Text : cvq::io::CodebookFormat::Binary;
}

cvq::ExperimentConfig experiment_config(const std::string& path) {
    return path.empty() ? cvq::ExperimentConfig{} : cvq::load_experiment_config(path);
}

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
    bool serial_timing = true;
    std::string input;
    std::string codebook;
    std::string algorithm = "cortex";
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t samples = 0;
    bool quiet = false;
};

int cmd_gen(const Options& o) {
    const auto cfg = experiment_config(o.config);
    std::size_t need = o.samples;
    if (need == 0)
        for (const auto& g : cfg.grid) need = std::max(need, cvq::samples_for_frames(g.n_vectors, cfg.front_end));
    const auto stream = cvq::generate_stream(cfg.dataset, o.seed.value_or(cfg.seed), need);
    cvq::io::save_stream(stream, o.out, stream_format_for(o.out));
    std::cout << "wrote " << stream.samples.size() << " samples (" << cvq::to_string(stream.source) << ", seed "
              << stream.seed << ") to " << o.out << '\n';
    return 0;
}

int cmd_train(const Options& o) {
    const auto cfg = experiment_config(o.config);
    const std::uint64_t seed = o.seed.value_or(cfg.seed);
    const std::size_t n = o.n ? o.n : cfg.grid.front().n_vectors;
    const std::size_t k = o.k ? o.k : cfg.grid.front().k;
    if (!cvq::is_known_algorithm(o.algorithm)) throw cvq::ConfigError("unknown algorithm '" + o.algorithm + "'");

    const cvq::SampleStream stream = o.input.empty()
                                         ? cvq::generate_stream(cfg.dataset, seed, cvq::samples_for_frames(n, cfg.front_end))
                                         : cvq::io::load_stream(o.input);
    const auto norm = cvq::resolve_normalization(cfg.front_end, stream);
    const auto data = cvq::analyze(stream.samples, cfg.front_end, norm, n);
    if (data.size() < k) throw cvq::InfeasibleError("stream gives " + std::to_string(data.size()) + " vectors, K=" + std::to_string(k));

    cvq::CortexParams params;
    if (o.algorithm == "cortex") {
        const auto& rc = cfg.settings.cortex;
        if (rc.tune) {
            const auto t = cvq::tune_cortex(data, k, rc);
            params = t.params;
            std::cout << "tuned r_limit ratio " << t.r_limit_ratio << " -> K=" << t.achieved_k << " in " << t.trials
                      << " trials" << (t.within_tolerance ? "" : " (outside tolerance)") << '\n';
        } else {
            params = cvq::resolve_cortex_params(rc, data, rc.r_limit_ratio);
        }
    }
    const auto m = cvq::train_algorithm(o.algorithm, data, k, cfg.front_end, norm, cfg.settings, params, seed);
    const auto rep = cvq::frame_distortion(m.artifact.quantizer(), stream.samples, cfg.front_end, norm, n,
                                           cvq::Phase::Train);
    cvq::io::save_codebook(m.artifact, o.out, codebook_format_for(o.out));
    std::cout << o.algorithm << ": K=" << m.artifact.quantizer().size() << " from " << data.size()
              << " vectors in " << m.seconds << " s, train rmse " << rep.rmse;
    if (!m.note.empty()) std::cout << " (" << m.note << ")";
    std::cout << "; wrote " << o.out << '\n';
    return 0;
}

int cmd_encode(const Options& o) {
    const auto a = cvq::io::load_codebook(o.codebook);
    const auto stream = cvq::io::load_stream(o.input);
    const auto vectors = cvq::analyze(stream.samples, a.front_end, a.normalization);
    const auto idx = cvq::encode_all(a.quantizer(), vectors);
    cvq::io::save_indices(idx, o.out);
    std::cout << "encoded " << idx.size() << " frames to " << o.out << '\n';
    return 0;
}

int cmd_decode(const Options& o) {
    const auto a = cvq::io::load_codebook(o.codebook);
    const auto idx = cvq::io::load_indices(o.input);
    cvq::SampleStream s;
    s.samples = cvq::decode_indices(a.quantizer(), idx, a.front_end, a.normalization);
    s.seed = o.seed.value_or(0);
    cvq::io::save_stream(s, o.out, stream_format_for(o.out));
    std::cout << "decoded " << idx.size() << " indices to " << s.samples.size() << " samples in " << o.out << '\n';
    return 0;
}

int cmd_bench(const Options& o) {
    auto cfg = experiment_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    cfg.serial_timing = o.serial_timing;
    const auto fmt = cvq::report_format_from_string(o.format);
    const auto r = cvq::run_experiment(cfg, o.quiet ? nullptr : &std::cerr);
    for (const auto& p : cvq::emit_reports(r, o.out, fmt)) std::cout << p.string() << '\n';
    const auto failed = std::count_if(r.cells.begin(), r.cells.end(), [](const auto& c) { return c.failed; });
    if (failed) std::cerr << failed << " of " << r.cells.size() << " cells failed\n";
    return 0;
}

int cmd_entropy(const Options& o) {
    cvq::EntropyConfig cfg;
    if (!o.config.empty())
        cfg = cvq::load_entropy_config(o.config);
    else
        cfg.cortex.r_init.clear(), cfg.cortex.r_limit = {1.0};
    if (o.seed) cfg.stream.seed = *o.seed;
    const auto fmt = cvq::report_format_from_string(o.format);
    const auto r = cvq::entropy_experiment(cfg, o.quiet ? nullptr : &std::cerr);
    for (const auto& p : cvq::emit_entropy_reports(r, o.out, fmt)) std::cout << p.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cvq: cortex vector quantization toolkit"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* c, const char* out_help) {
        c->add_option("--config", o.config, "experiment config (INI)")->check(CLI::ExistingFile);
        c->add_option("--seed", o.seed, "seed override");
        c->add_option("-o,--out", o.out, out_help)->required();
    };

    auto* gen = app.add_subcommand("gen", "generate a dataset stream");
    add_common(gen, "stream file (.csv for text, anything else binary)");
    gen->add_option("--samples", o.samples, "stream length (default: enough for the largest grid point)");

    auto* train = app.add_subcommand("train", "train one algorithm and write its codebook");
    add_common(train, "codebook file (.json for text, anything else binary)");
    train->add_option("-a,--algorithm", o.algorithm, "cortex, birch, kmeans, gmm or pnn");
    train->add_option("-i,--input", o.input, "training stream (default: generate from config)")->check(CLI::ExistingFile);
    train->add_option("-n,--vectors", o.n, "training vectors (default: first grid point)");
    train->add_option("-k,--codewords", o.k, "target codebook size (default: first grid point)");

    auto* encode = app.add_subcommand("encode", "encode a stream to an index file");
    encode->add_option("-c,--codebook", o.codebook, "codebook file")->required()->check(CLI::ExistingFile);
    encode->add_option("-i,--input", o.input, "stream file")->required()->check(CLI::ExistingFile);
    encode->add_option("-o,--out", o.out, "index file")->required();

    auto* decode = app.add_subcommand("decode", "decode an index file to a stream");
    decode->add_option("-c,--codebook", o.codebook, "codebook file")->required()->check(CLI::ExistingFile);
    decode->add_option("-i,--input", o.input, "index file")->required()->check(CLI::ExistingFile);
    decode->add_option("-o,--out", o.out, "stream file (.csv for text, anything else binary)")->required();
    decode->add_option("--seed", o.seed, "seed recorded in the stream header");

    auto* bench = app.add_subcommand("bench", "run a comparison grid and write reports");
    add_common(bench, "report directory");
    bench->add_option("--format", o.format, "primary report format")->check(CLI::IsMember({"csv", "json"}));
    bench->add_flag("--serial-timing,!--parallel", o.serial_timing,
                    "run grid cells one at a time so timings are comparable (default on)");
    bench->add_flag("-q,--quiet", o.quiet, "no per-cell log");

    auto* entropy = app.add_subcommand("entropy", "run the visit-entropy experiment");
    add_common(entropy, "report directory");
    entropy->add_option("--format", o.format, "primary report format")->check(CLI::IsMember({"csv", "json"}));
    entropy->add_flag("-q,--quiet", o.quiet, "no progress log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_gen(o);
        if (*train) return cmd_train(o);
        if (*encode) return cmd_encode(o);
        if (*decode) return cmd_decode(o);
        if (*bench) return cmd_bench(o);
        if (*entropy) return cmd_entropy(o);
    } catch (const cvq::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const cvq::ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const cvq::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
