#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "gtcnn/cochleagram.hpp"
#include "gtcnn/rng.hpp"

using namespace gtcnn;

namespace {

const Filterbank& default_bank() {
    static Filterbank bank{FilterbankConfig{}};
    return bank;
}

AudioClip tone_clip(double freq, double seconds = 1.0, double amp = 0.5, double phase = 0.0) {
    AudioClip clip;
    clip.sample_rate = 16000;
    const std::size_t n = static_cast<std::size_t>(seconds * 16000);
    clip.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        clip.samples[i] = amp * std::cos(2.0 * std::numbers::pi * freq * i / 16000.0 + phase);
    return clip;
}

} // namespace

TEST_CASE("analytic envelope of silence is silence", "[cochleagram]") {
    std::vector<double> zeros(4096, 0.0);
    for (double v : analytic_envelope(zeros)) CHECK(v == 0.0);

    std::vector<double> empty;
    CHECK_THROWS_AS(analytic_envelope(empty), ConfigError);
}

TEST_CASE("analytic envelope of a tone is its amplitude", "[cochleagram]") {
    const double amp = 0.8;
    auto clip = tone_clip(1000.0, 1.0, amp);
    auto env = analytic_envelope(clip.samples);
    const std::size_t margin = 80; // 5 ms at 16 kHz
    for (std::size_t i = margin; i + margin < env.size(); ++i) {
        REQUIRE(env[i] == Catch::Approx(amp).epsilon(0.01));
    }
}

TEST_CASE("analytic envelope is carrier-phase invariant", "[cochleagram]") {
    auto base = analytic_envelope(tone_clip(1000.0, 0.5, 0.8, 0.0).samples);
    for (double phase : {std::numbers::pi / 4.0, std::numbers::pi / 2.0}) {
        auto env = analytic_envelope(tone_clip(1000.0, 0.5, 0.8, phase).samples);
        const std::size_t margin = 80;
        for (std::size_t i = margin; i + margin < env.size(); ++i)
            REQUIRE(env[i] == Catch::Approx(base[i]).epsilon(0.01));
    }
}

TEST_CASE("analytic envelope tracks an AM modulator", "[cochleagram]") {
    const int rate = 16000;
    const std::size_t n = 16000;
    std::vector<double> sig(n);
    auto modulator = [](double t) { return 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * 5.0 * t); };
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate;
        sig[i] = modulator(t) * std::cos(2.0 * std::numbers::pi * 2000.0 * t);
    }
    auto env = analytic_envelope(sig);
    const std::size_t margin = 800; // 50 ms interior margin
    for (std::size_t i = margin; i + margin < n; ++i) {
        const double want = modulator(static_cast<double>(i) / rate);
        REQUIRE(env[i] == Catch::Approx(want).epsilon(0.02));
    }
}

TEST_CASE("frame energy of a constant envelope is that constant", "[cochleagram]") {
    Array2D rows(3, 8000, 0.25);
    FramingConfig framing;
    auto map = frame_energy(rows, framing, 16000);
    CHECK(map.num_channels() == 3);
    for (double v : map.values.v) CHECK(v == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("frame count follows floor((L-W)/H)+1", "[cochleagram]") {
    Array2D rows(1, 64000, 1.0);
    FramingConfig framing; // 25 ms window, 10 ms hop
    auto map = frame_energy(rows, framing, 16000);
    CHECK(map.num_frames() == 398);
    CHECK(map.frame_rate == Catch::Approx(100.0));
}

TEST_CASE("frame energy is local to the window that covers the sample", "[cochleagram]") {
    Array2D rows(1, 2000, 0.0);
    rows.at(0, 1000) = 1.0;
    FramingConfig framing;
    auto map = frame_energy(rows, framing, 16000);
    // sample 1000 is covered by frames with t*160 <= 1000 < t*160 + 400
    for (std::size_t t = 0; t < map.num_frames(); ++t) {
        const bool covers = t * 160 <= 1000 && 1000 < t * 160 + 400;
        if (covers)
            CHECK(map.values.at(0, t) > 0.0);
        else
            CHECK(map.values.at(0, t) == 0.0);
    }

    Array2D tiny(1, 100, 0.0);
    CHECK_THROWS_AS(frame_energy(tiny, framing, 16000), ConfigError);
}

TEST_CASE("log compression", "[cochleagram]") {
    EnergyMap e;
    e.values = Array2D(1, 3);
    e.values.at(0, 0) = 0.0;
    e.values.at(0, 1) = 1.0;
    e.values.at(0, 2) = 2.0;
    CompressionConfig cfg; // alpha = 1e3
    auto y = log_compress(e, cfg);
    CHECK(y.at(0, 0) == 0.0);
    CHECK(y.at(0, 1) == Catch::Approx(3.000434).margin(1e-6));
    CHECK(y.at(0, 2) > y.at(0, 1)); // monotone

    e.values.at(0, 0) = -0.1;
    CHECK_THROWS_AS(log_compress(e, cfg), NumericError);
}

TEST_CASE("normalize_resize handles degenerate and exact cases", "[cochleagram]") {
    Array2D constant(4, 5, 3.7);
    auto z = normalize_resize(constant, 4, 5);
    for (double v : z.v) CHECK(v == 0.0);

    Array2D already(2, 2);
    already.at(0, 0) = 0.0;
    already.at(0, 1) = 1.0;
    already.at(1, 0) = 1.0;
    already.at(1, 1) = 0.0;
    auto same = normalize_resize(already, 2, 2);
    CHECK(same == already);

    auto up = normalize_resize(already, 3, 3);
    CHECK(up.at(1, 1) == Catch::Approx(0.5).margin(1e-12));

    // bounds always preserved
    Rng rng(5);
    Array2D rnd(7, 9);
    for (auto& v : rnd.v) v = rng.uniform(-4.0, 4.0);
    auto out = normalize_resize(rnd, 23, 31);
    for (double v : out.v) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("silent input produces an all-zero image", "[cochleagram]") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(16000, 0.0);
    auto img = compute_cochleagram(clip, default_bank(), FramingConfig{}, CompressionConfig{}, 32, 32);
    CHECK(img.height == 32);
    CHECK(img.width == 32);
    CHECK(img.frontend == "gammatone");
    for (double v : img.pixels) CHECK(v == 0.0);
}

TEST_CASE("a 400 Hz tone lights the row nearest 400 Hz", "[cochleagram]") {
    auto clip = tone_clip(400.0);
    auto map = cochleagram_map(clip, default_bank(), FramingConfig{}, CompressionConfig{});
    std::size_t best_row = 0;
    double best_mean = -1.0;
    for (std::size_t r = 0; r < map.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < map.cols; ++c) acc += map.at(r, c);
        if (acc > best_mean) {
            best_mean = acc;
            best_row = r;
        }
    }
    std::size_t nearest = 0;
    double best_dist = 1e9;
    for (std::size_t k = 0; k < default_bank().size(); ++k) {
        const double d = std::abs(default_bank().specs()[k].fc - 400.0);
        if (d < best_dist) {
            best_dist = d;
            nearest = k;
        }
    }
    CHECK(best_row == nearest);
}

TEST_CASE("tonotopy holds for log-spaced probes", "[cochleagram][tonotopy]") {
    const auto& bank = default_bank();
    const int probes = 10;
    for (int p = 0; p < probes; ++p) {
        const double f = 100.0 * std::pow(6000.0 / 100.0, static_cast<double>(p) / (probes - 1));
        auto clip = tone_clip(f);
        auto map = cochleagram_map(clip, bank, FramingConfig{}, CompressionConfig{});
        std::size_t best_row = 0;
        double best_mean = -1.0;
        for (std::size_t r = 0; r < map.rows; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < map.cols; ++c) acc += map.at(r, c);
            if (acc > best_mean) {
                best_mean = acc;
                best_row = r;
            }
        }
        std::size_t nearest = 0;
        double best_dist = 1e9;
        for (std::size_t k = 0; k < bank.size(); ++k) {
            const double d = std::abs(bank.specs()[k].fc - f);
            if (d < best_dist) {
                best_dist = d;
                nearest = k;
            }
        }
        INFO("probe " << f << " Hz: argmax row " << best_row << ", nearest fc row " << nearest);
        CHECK(best_row == nearest);
    }
}

TEST_CASE("pipeline is deterministic", "[cochleagram]") {
    Rng rng(17);
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(16000);
    for (auto& s : clip.samples) s = rng.uniform(-0.5, 0.5);

    auto a = compute_cochleagram(clip, default_bank(), FramingConfig{}, CompressionConfig{}, 64, 64);
    auto b = compute_cochleagram(clip, default_bank(), FramingConfig{}, CompressionConfig{}, 64, 64);
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("sample-rate mismatch is rejected with advice", "[cochleagram]") {
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.samples.assign(44100, 0.0);
    try {
        compute_cochleagram(clip, default_bank(), FramingConfig{}, CompressionConfig{}, 32, 32);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("resample") != std::string::npos);
    }
}

TEST_CASE("energy is 1-homogeneous in the input", "[cochleagram]") {
    Rng rng(23);
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(8000);
    for (auto& s : clip.samples) s = rng.uniform(-0.25, 0.25);

    auto channels = default_bank().apply(clip.samples);
    Dft plan(channels.cols);
    std::vector<cplx> scratch;
    for (std::size_t ch = 0; ch < channels.rows; ++ch)
        analytic_envelope_inplace(channels.row(ch), channels.cols, plan, scratch);
    auto e1 = frame_energy(channels, FramingConfig{}, 16000);

    // power-of-two scaling propagates exactly through the linear stages
    AudioClip doubled = clip;
    for (auto& s : doubled.samples) s *= 2.0;
    auto channels2 = default_bank().apply(doubled.samples);
    for (std::size_t ch = 0; ch < channels2.rows; ++ch)
        analytic_envelope_inplace(channels2.row(ch), channels2.cols, plan, scratch);
    auto e2 = frame_energy(channels2, FramingConfig{}, 16000);

    REQUIRE(e1.values.v.size() == e2.values.v.size());
    for (std::size_t i = 0; i < e1.values.v.size(); ++i)
        REQUIRE(e2.values.v[i] == 2.0 * e1.values.v[i]);

    // arbitrary positive scaling holds to rounding
    AudioClip scaled = clip;
    for (auto& s : scaled.samples) s *= 3.7;
    auto channels3 = default_bank().apply(scaled.samples);
    for (std::size_t ch = 0; ch < channels3.rows; ++ch)
        analytic_envelope_inplace(channels3.row(ch), channels3.cols, plan, scratch);
    auto e3 = frame_energy(channels3, FramingConfig{}, 16000);
    for (std::size_t i = 0; i < e1.values.v.size(); ++i)
        REQUIRE(e3.values.v[i] == Catch::Approx(3.7 * e1.values.v[i]).epsilon(1e-9).margin(1e-15));
}
