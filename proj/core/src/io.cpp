#include "cvq/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

#include "json.hpp"

#include "cvq/error.hpp"

namespace cvq::io {

using nlohmann::json;

namespace {

constexpr std::string_view kStreamMagic = "CVQSTRM1";
constexpr std::string_view kCodebookMagic = "CVQCBK1";
constexpr std::string_view kIndexMagic = "CVQIDX1";
constexpr int kCodebookVersion = 1;

// ---- little-endian primitives

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b;
    for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xffu);
    out.write(b.data(), b.size());
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b;
    for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xffu);
    out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

template <std::size_t N>
std::array<unsigned char, N> get_bytes(std::istream& in, const char* what) {
    std::array<unsigned char, N> b;
    in.read(reinterpret_cast<char*>(b.data()), N);
    if (in.gcount() != std::streamsize(N)) throw IoError(std::string("truncated file reading ") + what);
    return b;
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    const auto b = get_bytes<4>(in, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t get_u64(std::istream& in, const char* what) {
    const auto b = get_bytes<8>(in, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

double get_f64(std::istream& in, const char* what) { return std::bit_cast<double>(get_u64(in, what)); }

void expect_magic(std::istream& in, std::string_view magic) {
    std::string got(magic.size(), '\0');
    in.read(got.data(), std::streamsize(got.size()));
    if (in.gcount() != std::streamsize(magic.size()) || got != magic)
        throw IoError("bad magic: expected " + std::string(magic));
}

// ---- exact decimal text

std::string format_double(double v) {
    std::array<char, 32> buf;
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw IoError(std::string("malformed number in ") + what + ": '" + std::string(s) + "'");
    return v;
}

template <class Int>
Int parse_int(std::string_view s, const char* what) {
    Int v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
        throw IoError(std::string("malformed integer in ") + what + ": '" + std::string(s) + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// ---- codebook headers

json params_to_json(const CortexParams& p) {
    return {{"r_init", p.r_init},
            {"r_limit", p.r_limit},
            {"k_adapt", p.k_adapt},
            {"n_power", p.n_power},
            {"l_base", p.l_base},
            {"k_range_power", p.k_range_power},
            {"k_learning_base", p.k_learning_base},
            {"maturity_threshold", p.maturity_threshold},
            {"epsilon_ratio", p.epsilon_ratio}};
}

CortexParams params_from_json(const json& j) {
    CortexParams p;
    p.r_init = j.at("r_init").get<std::vector<double>>();
    p.r_limit = j.at("r_limit").get<std::vector<double>>();
    p.k_adapt = j.at("k_adapt").get<double>();
    p.n_power = j.at("n_power").get<double>();
    p.l_base = j.at("l_base").get<double>();
    p.k_range_power = j.at("k_range_power").get<double>();
    p.k_learning_base = j.at("k_learning_base").get<double>();
    p.maturity_threshold = j.at("maturity_threshold").get<double>();
    p.epsilon_ratio = j.at("epsilon_ratio").get<double>();
    return p;
}

json header_of(const CodebookArtifact& a) {
    const VectorQuantizer& q = a.quantizer();
    const NormalizationSpec& n = a.normalization;
    json h = {{"version", kCodebookVersion},
              {"kind", std::string(a.kind())},
              {"algorithm", a.algorithm},
              {"dim", q.dim()},
              {"K", q.size()},
              {"front_end",
               {{"window", a.front_end.window},
                {"stride", a.front_end.stride},
                {"transform", std::string(to_string(a.front_end.transform))},
                {"normalization", std::string(to_string(a.front_end.normalization))},
                {"fixed_scale", a.front_end.fixed_scale}}},
              {"normalization", {{"mode", std::string(to_string(n.mode))}, {"scale", n.scale}}}};
    if (const auto* cb = std::get_if<Codebook>(&a.codebook)) h["params"] = params_to_json(cb->params());
    return h;
}

// One codeword as read from disk; variances and weight only for mixtures.
struct Record {
    std::vector<double> values;
    std::vector<double> variances;
    double weight = 0.0;
};

CodebookArtifact artifact_from(const json& h, std::vector<Record> rows) {
    if (h.at("version").get<int>() != kCodebookVersion)
        throw IoError("unsupported codebook version " + h.at("version").dump());
    const auto dim = h.at("dim").get<std::size_t>();
    const auto k = h.at("K").get<std::size_t>();
    if (rows.size() != k) throw IoError("codebook: K does not match the number of codewords");
    for (const auto& r : rows)
        if (r.values.size() != dim) throw IoError("codebook: codeword length differs from dim");

    CodebookArtifact a;
    a.algorithm = h.at("algorithm").get<std::string>();
    const json& fe = h.at("front_end");
    a.front_end.window = fe.at("window").get<std::size_t>();
    a.front_end.stride = fe.at("stride").get<std::size_t>();
    a.front_end.transform = transform_from_string(fe.at("transform").get<std::string>());
    a.front_end.normalization = normalization_mode_from_string(fe.at("normalization").get<std::string>());
    a.front_end.fixed_scale = fe.at("fixed_scale").get<double>();

    a.normalization.mode = normalization_mode_from_string(h.at("normalization").at("mode").get<std::string>());
    a.normalization.scale = h.at("normalization").at("scale").get<double>();

    const auto kind = h.at("kind").get<std::string>();
    if (kind == "cortex") {
        std::vector<CoefficientVector> words;
        words.reserve(rows.size());
        for (auto& r : rows) words.push_back(CoefficientVector{std::move(r.values)});
        a.codebook = Codebook::from_codewords(dim, std::move(words), params_from_json(h.at("params")),
                                              a.normalization);
    } else if (kind == "centroid") {
        VectorSet cents(dim);
        cents.reserve(rows.size());
        for (const auto& r : rows) cents.push_back(r.values);
        a.codebook = CentroidCodebook(std::move(cents), a.normalization);
    } else if (kind == "gmm") {
        VectorSet means(dim), vars(dim);
        std::vector<double> weights;
        for (const auto& r : rows) {
            if (r.variances.size() != dim) throw IoError("codebook: variance length differs from dim");
            means.push_back(r.values);
            vars.push_back(r.variances);
            weights.push_back(r.weight);
        }
        a.codebook = GaussianMixture(std::move(means), std::move(vars), std::move(weights));
    } else {
        throw IoError("unknown codebook kind '" + kind + "'");
    }
    return a;
}

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

// ------------------------------------------------------------------ streams

void write_stream_csv(const SampleStream& s, std::ostream& out) {
    out << "# source=" << to_string(s.source) << ";seed=" << s.seed
        << ";rate=" << format_double(s.sample_rate_hz) << '\n';
    for (double v : s.samples) out << format_double(v) << '\n';
}

SampleStream read_stream_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || !line.starts_with("# "))
        throw IoError("stream csv: missing '# source=...' header");
    SampleStream s;
    bool have_source = false, have_seed = false, have_rate = false;
    std::string_view rest = std::string_view(line).substr(2);
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const std::string_view field = trim(rest.substr(0, semi));
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
        const auto eq = field.find('=');
        if (eq == std::string_view::npos) throw IoError("stream csv: malformed header field");
        const auto key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "source") {
            try {
                s.source = source_from_string(value);
            } catch (const ConfigError& e) {
                throw IoError(std::string("stream csv: ") + e.what());
            }
            have_source = true;
        } else if (key == "seed") {
            s.seed = parse_int<std::uint64_t>(value, "stream header");
            have_seed = true;
        } else if (key == "rate") {
            s.sample_rate_hz = parse_double(value, "stream header");
            have_rate = true;
        }
    }
    if (!have_source || !have_seed || !have_rate)
        throw IoError("stream csv: header needs source, seed and rate");
    while (std::getline(in, line)) {
        const auto v = trim(line);
        if (v.empty()) continue;
        s.samples.push_back(parse_double(v, "stream csv"));
    }
    return s;
}

void write_stream_binary(const SampleStream& s, std::ostream& out) {
    out.write(kStreamMagic.data(), std::streamsize(kStreamMagic.size()));
    put_u32(out, std::uint32_t(s.source));
    put_u64(out, s.seed);
    put_f64(out, s.sample_rate_hz);
    put_u64(out, s.samples.size());
    for (double v : s.samples) put_f64(out, v);
}

SampleStream read_stream_binary(std::istream& in) {
    expect_magic(in, kStreamMagic);
    SampleStream s;
    const auto src = get_u32(in, "stream source");
    if (src > std::uint32_t(Source::GaussianMixture)) throw IoError("stream: unknown source id");
    s.source = Source(src);
    s.seed = get_u64(in, "stream seed");
    s.sample_rate_hz = get_f64(in, "stream rate");
    const auto n = get_u64(in, "stream count");
    s.samples.reserve(std::size_t(std::min<std::uint64_t>(n, 1u << 24)));
    for (std::uint64_t i = 0; i < n; ++i) s.samples.push_back(get_f64(in, "stream samples"));
    return s;
}

void save_stream(const SampleStream& s, const std::filesystem::path& path, StreamFormat fmt) {
    auto out = open_out(path);
    if (fmt == StreamFormat::Csv)
        write_stream_csv(s, out);
    else
        write_stream_binary(s, out);
    finish(out, path);
}

SampleStream load_stream(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string head(kStreamMagic.size(), '\0');
    in.read(head.data(), std::streamsize(head.size()));
    in.clear();
    in.seekg(0);
    return head == kStreamMagic ? read_stream_binary(in) : read_stream_csv(in);
}

// ---------------------------------------------------------------- codebooks

const VectorQuantizer& CodebookArtifact::quantizer() const {
    return std::visit([](const auto& cb) -> const VectorQuantizer& { return cb; }, codebook);
}

std::string_view CodebookArtifact::kind() const {
    switch (codebook.index()) {
        case 0: return "cortex";
        case 1: return "centroid";
        default: return "gmm";
    }
}

void write_codebook(const CodebookArtifact& a, std::ostream& out, CodebookFormat fmt) {
    json h = header_of(a);
    const VectorQuantizer& q = a.quantizer();
    const auto* mix = std::get_if<GaussianMixture>(&a.codebook);
    if (fmt == CodebookFormat::Text) {
        json words = json::array();
        for (std::size_t i = 0; i < q.size(); ++i) {
            json w = {{"index", i}, {"values", to_vector(q.decode(i))}};
            if (mix) {
                w["variances"] = to_vector(mix->variances().row(i));
                w["weight"] = mix->weights()[i];
            }
            words.push_back(std::move(w));
        }
        h["codewords"] = std::move(words);
        out << kCodebookMagic << '\n' << h.dump(1) << '\n';
        return;
    }
    const std::string header = h.dump();
    out.write(kCodebookMagic.data(), std::streamsize(kCodebookMagic.size()));
    out.put('\0');
    put_u32(out, std::uint32_t(header.size()));
    out.write(header.data(), std::streamsize(header.size()));
    for (std::size_t i = 0; i < q.size(); ++i) {
        put_u32(out, std::uint32_t(i));
        for (double v : q.decode(i)) put_f64(out, v);
        if (mix) {
            for (double v : mix->variances().row(i)) put_f64(out, v);
            put_f64(out, mix->weights()[i]);
        }
    }
}

CodebookArtifact read_codebook(std::istream& in) {
    expect_magic(in, kCodebookMagic);
    const int sep = in.get();
    try {
        if (sep == '\n') {
            const std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
            const json h = json::parse(body);
            const bool mix = h.at("kind").get<std::string>() == "gmm";
            std::vector<Record> rows;
            const auto& words = h.at("codewords");
            rows.reserve(words.size());
            for (std::size_t i = 0; i < words.size(); ++i) {
                if (words[i].at("index").get<std::size_t>() != i)
                    throw IoError("codebook: codeword indices must be 0..K-1 in order");
                Record r;
                r.values = words[i].at("values").get<std::vector<double>>();
                if (mix) {
                    r.variances = words[i].at("variances").get<std::vector<double>>();
                    r.weight = words[i].at("weight").get<double>();
                }
                rows.push_back(std::move(r));
            }
            return artifact_from(h, std::move(rows));
        }
        if (sep == '\0') {
            const auto len = get_u32(in, "codebook header length");
            std::string header(len, '\0');
            in.read(header.data(), std::streamsize(len));
            if (in.gcount() != std::streamsize(len)) throw IoError("truncated codebook header");
            const json h = json::parse(header);
            const bool mix = h.at("kind").get<std::string>() == "gmm";
            const auto dim = h.at("dim").get<std::size_t>();
            const auto k = h.at("K").get<std::size_t>();
            std::vector<Record> rows(k);
            for (std::size_t i = 0; i < k; ++i) {
                if (get_u32(in, "codeword index") != i)
                    throw IoError("codebook: codeword indices must be 0..K-1 in order");
                rows[i].values.resize(dim);
                for (double& v : rows[i].values) v = get_f64(in, "codeword values");
                if (mix) {
                    rows[i].variances.resize(dim);
                    for (double& v : rows[i].variances) v = get_f64(in, "codeword variances");
                    rows[i].weight = get_f64(in, "codeword weight");
                }
            }
            return artifact_from(h, std::move(rows));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("codebook: malformed header: ") + e.what());
    }
    throw IoError("codebook: unknown encoding after magic");
}

void save_codebook(const CodebookArtifact& a, const std::filesystem::path& path, CodebookFormat fmt) {
    auto out = open_out(path);
    write_codebook(a, out, fmt);
    finish(out, path);
}

CodebookArtifact load_codebook(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_codebook(in);
}

// ------------------------------------------------------------------ indices

void write_indices(std::span<const std::size_t> indices, std::ostream& out) {
    out.write(kIndexMagic.data(), std::streamsize(kIndexMagic.size()));
    for (std::size_t i : indices) {
        if (i > std::numeric_limits<std::uint32_t>::max())
            throw DomainError("index " + std::to_string(i) + " does not fit in 32 bits");
        put_u32(out, std::uint32_t(i));
    }
}

std::vector<std::size_t> read_indices(std::istream& in) {
    expect_magic(in, kIndexMagic);
    const std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (body.size() % 4 != 0) throw IoError("index file: trailing partial index");
    std::vector<std::size_t> out(body.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t v = 0;
        for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(body[4 * i + std::size_t(b)]);
        out[i] = v;
    }
    return out;
}

void save_indices(std::span<const std::size_t> indices, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_indices(indices, out);
    finish(out, path);
}

std::vector<std::size_t> load_indices(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_indices(in);
}

}  // namespace cvq::io
