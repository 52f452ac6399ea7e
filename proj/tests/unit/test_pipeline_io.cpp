#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cvq/baselines.hpp"
#include "cvq/cortex.hpp"
#include "cvq/error.hpp"
#include "cvq/io.hpp"
#include "cvq/pipeline.hpp"

using namespace cvq;

namespace {

SampleStream waves(std::uint64_t seed, std::size_t count = 400) {
    BasicWavesConfig cfg;
    cfg.count = count;
    cfg.seed = seed;
    return gen_basic_waves(cfg);
}

struct Fixture {
    FrontEnd fe;
    SampleStream stream = waves(3);
    NormalizationSpec norm = resolve_normalization(fe, stream);
    VectorSet data = analyze(stream.samples, fe, norm);
};

io::CodebookArtifact cortex_artifact(const Fixture& f) {
    CortexParams p;
    p.r_init = estimate_r_init(f.data);
    p.r_limit = p.r_init;
    for (double& r : p.r_limit) r *= 0.1;
    p.k_adapt = 0.2;
    p.n_power = 0.8;
    p.maturity_threshold = 5.0;
    p.epsilon_ratio = 1.0;
    CortexTree t(f.fe.window, p);
    t.train_all(f.data);
    t.train_all(f.data);
    io::CodebookArtifact a;
    a.front_end = f.fe;
    a.normalization = f.norm;
    a.codebook = finalize(t, f.norm);
    return a;
}

void expect_same_behaviour(const io::CodebookArtifact& a, const io::CodebookArtifact& b, const Fixture& f) {
    ASSERT_EQ(a.kind(), b.kind());
    EXPECT_EQ(a.algorithm, b.algorithm);
    EXPECT_EQ(a.front_end, b.front_end);
    EXPECT_EQ(a.normalization, b.normalization);
    const auto& qa = a.quantizer();
    const auto& qb = b.quantizer();
    ASSERT_EQ(qa.size(), qb.size());
    ASSERT_EQ(qa.dim(), qb.dim());
    const auto ia = encode_all(qa, f.data), ib = encode_all(qb, f.data);
    EXPECT_EQ(ia, ib);
    EXPECT_EQ(decode_indices(qa, ia, a.front_end, a.normalization),
              decode_indices(qb, ib, b.front_end, b.normalization));
    for (std::size_t j = 0; j < qa.size(); ++j) {
        const auto x = qa.decode(j), y = qb.decode(j);
        EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
    }
}

io::CodebookArtifact round_trip(const io::CodebookArtifact& a, io::CodebookFormat fmt) {
    std::stringstream ss;
    io::write_codebook(a, ss, fmt);
    return io::read_codebook(ss);
}

}  // namespace

TEST(FrontEnd, Validation) {
    FrontEnd fe;
    fe.window = 6;
    EXPECT_THROW(fe.validate(), ConfigError);
    fe = {};
    fe.stride = 9;
    EXPECT_THROW(fe.validate(), ConfigError);
    EXPECT_THROW(transform_from_string("fft"), ConfigError);
}

TEST(Pipeline, AnalyzeSynthesizeRoundTrip) {
    Fixture f;
    ASSERT_EQ(f.data.size(), f.stream.samples.size() / 8);
    for (std::size_t i = 0; i < f.data.size(); i += 7) {
        const auto back = synthesize(f.data.row(i), f.fe, f.norm);
        for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(back[j], f.stream.samples[i * 8 + j], 1e-9);
    }
}

TEST(Pipeline, IdentityCentroidsOnEveryVectorGiveZeroDistortion) {
    Fixture f;
    f.fe.transform = TransformKind::Identity;
    const VectorSet v = analyze(f.stream.samples, f.fe, f.norm, 64);
    const CentroidCodebook cb(v);
    EXPECT_NEAR(frame_distortion(cb, f.stream.samples, f.fe, f.norm, 64, Phase::Train).rmse, 0.0, 1e-9);
}

TEST(StreamIo, CsvAndBinaryRoundTripBitExact) {
    SampleStream s = waves(5, 50);
    s.samples.push_back(0.1 + 0.2);
    s.samples.push_back(-1e-300);
    for (auto fmt : {0, 1}) {
        std::stringstream ss;
        if (fmt == 0) io::write_stream_csv(s, ss);
        else io::write_stream_binary(s, ss);
        const auto back = fmt == 0 ? io::read_stream_csv(ss) : io::read_stream_binary(ss);
        EXPECT_EQ(back, s);
    }
}

TEST(StreamIo, FilesAndFormatDetection) {
    const auto dir = std::filesystem::temp_directory_path() / "cvq_stream_io_test";
    std::filesystem::create_directories(dir);
    const SampleStream s = waves(6, 30);
    io::save_stream(s, dir / "a.csv", io::StreamFormat::Csv);
    io::save_stream(s, dir / "a.bin", io::StreamFormat::Binary);
    EXPECT_EQ(io::load_stream(dir / "a.csv"), s);
    EXPECT_EQ(io::load_stream(dir / "a.bin"), s);
    EXPECT_THROW(io::load_stream(dir / "missing.bin"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(StreamIo, RejectsGarbage) {
    std::stringstream bad("CVQSTRM1\x01");
    EXPECT_THROW(io::read_stream_binary(bad), IoError);
    std::stringstream csv("# source=waves;seed=1;rate=8000\n1.0\nabc\n");
    EXPECT_THROW(io::read_stream_csv(csv), IoError);
}

TEST(CodebookIo, CortexRoundTrips) {
    Fixture f;
    const auto a = cortex_artifact(f);
    ASSERT_GT(a.quantizer().size(), 1u);
    for (auto fmt : {io::CodebookFormat::Text, io::CodebookFormat::Binary}) {
        const auto b = round_trip(a, fmt);
        expect_same_behaviour(a, b, f);
        EXPECT_EQ(std::get<Codebook>(b.codebook).params(), std::get<Codebook>(a.codebook).params());
        EXPECT_EQ(std::get<Codebook>(b.codebook).codewords(), std::get<Codebook>(a.codebook).codewords());
    }
}

TEST(CodebookIo, CentroidAndMixtureRoundTrips) {
    Fixture f;
    io::CodebookArtifact km;
    km.algorithm = "kmeans";
    km.front_end = f.fe;
    km.normalization = f.norm;
    auto kr = kmeans(f.data, 12, 4);
    kr.codebook.set_normalization(f.norm);
    km.codebook = kr.codebook;
    io::CodebookArtifact gm = km;
    gm.algorithm = "gmm";
    gm.codebook = gmm_em(f.data, 6, 4).model;
    for (const auto* a : {&km, &gm})
        for (auto fmt : {io::CodebookFormat::Text, io::CodebookFormat::Binary})
            expect_same_behaviour(*a, round_trip(*a, fmt), f);
    EXPECT_EQ(km.kind(), "centroid");
    EXPECT_EQ(gm.kind(), "gmm");
}

TEST(CodebookIo, RejectsCorruptInput) {
    std::stringstream none("not a codebook");
    EXPECT_THROW(io::read_codebook(none), IoError);
    std::stringstream bad_json("CVQCBK1\n{\"version\": 1");
    EXPECT_THROW(io::read_codebook(bad_json), IoError);
    Fixture f;
    std::stringstream ss;
    io::write_codebook(cortex_artifact(f), ss, io::CodebookFormat::Binary);
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 5);
    std::stringstream cut(bytes);
    EXPECT_THROW(io::read_codebook(cut), IoError);
}

TEST(IndexIo, RoundTripAndLayout) {
    const std::vector<std::size_t> idx{0, 1, 329, 70000, 4294967295u};
    std::stringstream ss;
    io::write_indices(idx, ss);
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 7 + 4 * idx.size());
    EXPECT_EQ(bytes.substr(0, 7), "CVQIDX1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[7 + 8]), 329 & 0xff);
    EXPECT_EQ(static_cast<unsigned char>(bytes[7 + 9]), 329 >> 8);
    EXPECT_EQ(io::read_indices(ss), idx);
}

TEST(IndexIo, Errors) {
    std::stringstream big;
    const std::vector<std::size_t> too_big{std::size_t(1) << 33};
    EXPECT_THROW(io::write_indices(too_big, big), DomainError);
    std::stringstream partial(std::string("CVQIDX1\x01\x00", 9));
    EXPECT_THROW(io::read_indices(partial), IoError);
    std::stringstream magic("CVQIDX2");
    EXPECT_THROW(io::read_indices(magic), IoError);
}

TEST(IndexIo, EncodeSaveLoadDecodeIsBitExact) {
    Fixture f;
    const auto a = cortex_artifact(f);
    const auto dir = std::filesystem::temp_directory_path() / "cvq_index_io_test";
    std::filesystem::create_directories(dir);
    const auto idx = encode_all(a.quantizer(), f.data);
    io::save_indices(idx, dir / "x.idx");
    io::save_codebook(a, dir / "x.cbk", io::CodebookFormat::Binary);
    const auto b = io::load_codebook(dir / "x.cbk");
    const auto idx2 = io::load_indices(dir / "x.idx");
    EXPECT_EQ(idx2, idx);
    EXPECT_EQ(decode_indices(b.quantizer(), idx2, b.front_end, b.normalization),
              decode_indices(a.quantizer(), idx, a.front_end, a.normalization));
    std::filesystem::remove_all(dir);
}
