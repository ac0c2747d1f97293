#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "gtcnn/mfcc.hpp"
#include "gtcnn/rng.hpp"

using namespace gtcnn;

TEST_CASE("mel scale reference point", "[mfcc]") {
    CHECK(hz_to_mel(700.0) == Catch::Approx(2595.0 * std::log10(2.0)).margin(1e-9));
    CHECK(hz_to_mel(700.0) == Catch::Approx(781.17).margin(0.01));
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == Catch::Approx(1234.5).epsilon(1e-12));
}

TEST_CASE("mel energies of silence are zero", "[mfcc]") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(16000, 0.0);
    auto map = mel_filterbank_energies(clip, FramingConfig{}, 40, 50.0, 8000.0);
    CHECK(map.num_channels() == 40);
    for (double v : map.values.v) CHECK(v == 0.0);
}

TEST_CASE("a tone at a mel filter centre maximizes that filter", "[mfcc]") {
    const std::size_t num_mel = 40;
    const double f_min = 50.0, f_max = 8000.0;
    const double mel_lo = hz_to_mel(f_min), mel_hi = hz_to_mel(f_max);
    // centre of filter 12
    const double centre =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * 13.0 / static_cast<double>(num_mel + 1));

    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(16000);
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * centre * i / 16000.0);

    auto map = mel_filterbank_energies(clip, FramingConfig{}, num_mel, f_min, f_max);
    const std::size_t t = map.num_frames() / 2;
    std::size_t best = 0;
    double best_e = -1.0;
    for (std::size_t k = 0; k < num_mel; ++k) {
        if (map.values.at(k, t) > best_e) {
            best_e = map.values.at(k, t);
            best = k;
        }
    }
    CHECK(best == 12);

    CHECK_THROWS_AS(mel_filterbank_energies(clip, FramingConfig{}, 1, f_min, f_max), ConfigError);
}

TEST_CASE("DCT-II of a constant vector concentrates in coefficient 0", "[mfcc]") {
    std::vector<double> constant(32, 2.5);
    auto c = dct2(constant, 32);
    CHECK(c[0] != 0.0);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-12);
}

TEST_CASE("temporal deltas of a static sequence vanish", "[mfcc]") {
    Array2D coeffs(4, 10);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t t = 0; t < 10; ++t) coeffs.at(r, t) = 1.0 + r;
    auto d = temporal_delta(coeffs);
    for (double v : d.v) CHECK(v == 0.0);
}

TEST_CASE("mfcc image pipeline is deterministic", "[mfcc]") {
    Rng rng(31);
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(16000);
    for (auto& s : clip.samples) s = rng.uniform(-0.5, 0.5);

    auto a = compute_mfcc_image(clip, FramingConfig{}, MfccConfig{}, 64, 64);
    auto b = compute_mfcc_image(clip, FramingConfig{}, MfccConfig{}, 64, 64);
    CHECK(a.pixels == b.pixels);
    CHECK(a.frontend == "mfcc");
    CHECK(a.height == 64);
    for (double v : a.pixels) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("mfcc image needs at least three frames", "[mfcc]") {
    AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.assign(500, 0.1); // one 25 ms frame only
    CHECK_THROWS_AS(compute_mfcc_image(clip, FramingConfig{}, MfccConfig{}, 32, 32), ConfigError);
}
