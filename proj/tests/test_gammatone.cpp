#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <numbers>

#include "gtcnn/gammatone.hpp"
#include "gtcnn/rng.hpp"

using namespace gtcnn;

namespace {

const Filterbank& default_bank() {
    static Filterbank bank{FilterbankConfig{}};
    return bank;
}

// measured peak location and equivalent rectangular bandwidth of a kernel,
// both from a dense sampled response over [0, fs/2]
struct MeasuredResponse {
    double peak_hz;
    double peak_mag;
    double erb_hz;
};

MeasuredResponse measure(const std::vector<double>& kernel, int sample_rate) {
    const std::size_t n_points = 32769; // 65536-point transform
    auto mag = frequency_response(kernel, n_points);
    std::size_t arg = 0;
    double peak = 0.0;
    double energy = 0.0; // integral of |H|^2 df by the rectangle rule
    const double df = (sample_rate / 2.0) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (mag[i] > peak) {
            peak = mag[i];
            arg = i;
        }
        const double wgt = (i == 0 || i == mag.size() - 1) ? 0.5 : 1.0; // trapezoid ends
        energy += wgt * mag[i] * mag[i] * df;
    }
    return {static_cast<double>(arg) * df, peak, energy / (peak * peak)};
}

} // namespace

TEST_CASE("ERB bandwidth follows the auditory relation", "[gammatone]") {
    CHECK(erb_bandwidth(0.0) == Catch::Approx(24.7).margin(1e-12));
    CHECK(erb_bandwidth(1000.0) == Catch::Approx(132.639).margin(1e-9));
    CHECK(erb_bandwidth(8000.0) == Catch::Approx(888.212).margin(1e-9));
    CHECK_THROWS_AS(erb_bandwidth(-1.0), DomainError);

    // strictly increasing over the audio range
    double prev = erb_bandwidth(50.0);
    for (double f = 60.0; f <= 8000.0; f += 10.0) {
        const double cur = erb_bandwidth(f);
        REQUIRE(cur > prev);
        prev = cur;
    }
}

TEST_CASE("ERB-rate scale and its inverse", "[gammatone]") {
    CHECK(erb_rate(0.0) == 0.0);
    CHECK(erb_rate(1000.0) == Catch::Approx(21.4 * std::log10(5.37)).margin(1e-12));
    CHECK(erb_rate(1000.0) == Catch::Approx(15.621).margin(1e-3));
    CHECK(inverse_erb_rate(0.0) == 0.0);
    CHECK_THROWS_AS(erb_rate(-2.0), DomainError);
    CHECK_THROWS_AS(inverse_erb_rate(-0.5), DomainError);

    for (double f : {50.0, 1000.0, 8000.0})
        CHECK(inverse_erb_rate(erb_rate(f)) == Catch::Approx(f).epsilon(1e-6));
    CHECK(inverse_erb_rate(15.621) == Catch::Approx(1000.0).epsilon(1e-3));
}

TEST_CASE("centre frequencies are ERB-uniform with inclusive endpoints", "[gammatone]") {
    FilterbankConfig cfg;
    cfg.num_filters = 2;
    auto two = center_frequencies(cfg);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == 50.0);
    CHECK(two[1] == 8000.0);

    cfg.num_filters = 3;
    auto three = center_frequencies(cfg);
    const double mid = inverse_erb_rate((erb_rate(50.0) + erb_rate(8000.0)) / 2.0);
    CHECK(three[1] == Catch::Approx(mid).epsilon(1e-9));

    cfg.num_filters = 64;
    auto fcs = center_frequencies(cfg);
    REQUIRE(fcs.size() == 64);
    CHECK(fcs.front() == 50.0);
    CHECK(fcs.back() == 8000.0);
    for (std::size_t i = 1; i < fcs.size(); ++i) REQUIRE(fcs[i] > fcs[i - 1]);

    // low frequencies are sampled more densely: gaps never shrink upward
    for (std::size_t i = 2; i < fcs.size(); ++i)
        REQUIRE(fcs[i] - fcs[i - 1] >= fcs[i - 1] - fcs[i - 2] - 1e-9);

    cfg.num_filters = 1;
    auto one = center_frequencies(cfg);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 50.0);
}

TEST_CASE("impulse response shape", "[gammatone]") {
    GammatoneSpec spec;
    spec.fc = 1000.0;
    spec.order = 4;
    spec.b = 1.019 * erb_bandwidth(1000.0);

    auto g = gammatone_impulse_response(spec, 16000, 2048);
    CHECK(g[0] == 0.0); // t^(n-1) kills the first sample for n = 4

    // envelope max lands within one sample of t = (n-1)/(2*pi*b)
    const double t_peak = 3.0 / (2.0 * std::numbers::pi * spec.b);
    std::size_t argmax = 0;
    double best = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double t = k / 16000.0;
        const double env = std::pow(t, 3) * std::exp(-2.0 * std::numbers::pi * spec.b * t);
        if (env > best) {
            best = env;
            argmax = k;
        }
    }
    CHECK(std::abs(argmax / 16000.0 - t_peak) <= 1.0 / 16000.0);

    // degenerate first-order filter with vanishing bandwidth is a pure tone
    GammatoneSpec pure;
    pure.fc = 500.0;
    pure.order = 1;
    pure.b = 1e-9;
    pure.amplitude = 0.7;
    auto cosine = gammatone_impulse_response(pure, 16000, 128);
    for (std::size_t k = 0; k < cosine.size(); ++k) {
        const double want = 0.7 * std::cos(2.0 * std::numbers::pi * 500.0 * k / 16000.0);
        CHECK(cosine[k] == Catch::Approx(want).margin(1e-6));
    }

    GammatoneSpec aliased;
    aliased.fc = 9000.0;
    aliased.b = 100.0;
    CHECK_THROWS_AS(gammatone_impulse_response(aliased, 16000, 64), DomainError);
}

TEST_CASE("frequency_response basics", "[gammatone]") {
    std::vector<double> zeros(16, 0.0);
    for (double m : frequency_response(zeros, 64)) CHECK(m == 0.0);

    std::vector<double> tap = {1.0};
    for (double m : frequency_response(tap, 33)) CHECK(m == Catch::Approx(1.0).margin(1e-12));

    std::vector<double> delayed = {0.0, 1.0};
    for (double m : frequency_response(delayed, 33)) CHECK(m == Catch::Approx(1.0).margin(1e-12));

    CHECK_THROWS_AS(frequency_response(zeros, 8), ConfigError);
}

TEST_CASE("default bank: peak normalization holds for every kernel", "[gammatone]") {
    const auto& bank = default_bank();
    REQUIRE(bank.size() == 64);
    for (std::size_t k = 0; k < bank.size(); ++k) {
        std::vector<double> kernel(bank.kernels().row(k), bank.kernels().row(k) + 2048);
        auto m = measure(kernel, 16000);
        INFO("filter " << k << " fc=" << bank.specs()[k].fc);
        CHECK(m.peak_mag == Catch::Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("default bank: measured peaks and bandwidths track the design", "[gammatone]") {
    const auto& bank = default_bank();
    // Filters whose passband clears the Nyquist edge behave as designed.
    // The top of the bank overlaps its own spectral image; the acceptance
    // suite reports the full-bank numbers.
    for (std::size_t k = 0; k < bank.size(); ++k) {
        const auto& spec = bank.specs()[k];
        if (spec.fc + 2.0 * spec.b > 16000.0 / 2.0) continue;
        std::vector<double> kernel(bank.kernels().row(k), bank.kernels().row(k) + 2048);
        auto m = measure(kernel, 16000);
        INFO("filter " << k << " fc=" << spec.fc << " peak=" << m.peak_hz
                       << " erb=" << m.erb_hz << " want " << erb_bandwidth(spec.fc));
        CHECK(std::abs(m.peak_hz - spec.fc) <= 0.01 * spec.fc);
        CHECK(std::abs(m.erb_hz - erb_bandwidth(spec.fc)) <= 0.05 * erb_bandwidth(spec.fc));
    }
}

TEST_CASE("diagnostic: top-of-bank measured response", "[gammatone][.diag]") {
    const auto& bank = default_bank();
    for (std::size_t k = 58; k < bank.size(); ++k) {
        const auto& spec = bank.specs()[k];
        std::vector<double> kernel(bank.kernels().row(k), bank.kernels().row(k) + 2048);
        auto m = measure(kernel, 16000);
        WARN("filter " << k << " fc=" << spec.fc << " peak_hz=" << m.peak_hz
                       << " peak_err%=" << 100.0 * std::abs(m.peak_hz - spec.fc) / spec.fc
                       << " erb_meas=" << m.erb_hz << " erb_want=" << erb_bandwidth(spec.fc)
                       << " erb_err%="
                       << 100.0 * std::abs(m.erb_hz - erb_bandwidth(spec.fc)) / erb_bandwidth(spec.fc));
    }
}

TEST_CASE("filterbank application: impulse reproduces the kernels", "[gammatone]") {
    FilterbankConfig cfg;
    cfg.num_filters = 5;
    cfg.fir_length = 1024;
    Filterbank bank(cfg);

    std::vector<double> impulse(4096, 0.0);
    impulse[0] = 1.0;
    auto out = bank.apply(impulse);
    REQUIRE(out.rows == 5);
    REQUIRE(out.cols == 4096);
    for (std::size_t k = 0; k < 5; ++k) {
        for (std::size_t i = 0; i < 1024; ++i)
            REQUIRE(out.at(k, i) == Catch::Approx(bank.kernels().at(k, i)).margin(1e-10));
        for (std::size_t i = 1024; i < 4096; ++i) REQUIRE(std::abs(out.at(k, i)) < 1e-10);
    }
}

TEST_CASE("a tone at a centre frequency excites that channel hardest", "[gammatone]") {
    const auto& bank = default_bank();
    for (std::size_t k : {10u, 32u, 50u}) {
        const double fc = bank.specs()[k].fc;
        std::vector<double> sig(16000);
        for (std::size_t i = 0; i < sig.size(); ++i)
            sig[i] = std::sin(2.0 * std::numbers::pi * fc * i / 16000.0);
        auto rows = bank.apply(sig);
        std::size_t best = 0;
        double best_rms = -1.0;
        for (std::size_t r = 0; r < rows.rows; ++r) {
            double acc = 0.0;
            for (std::size_t i = 0; i < rows.cols; ++i) acc += rows.at(r, i) * rows.at(r, i);
            if (acc > best_rms) {
                best_rms = acc;
                best = r;
            }
        }
        INFO("probe at fc[" << k << "]=" << fc);
        CHECK(best == k);
    }
}

TEST_CASE("block convolution matches the direct time-domain sum", "[gammatone]") {
    FilterbankConfig cfg;
    cfg.num_filters = 3;
    cfg.fir_length = 256;
    cfg.f_min = 800.0; // keep the short kernel valid for the slowest envelope
    Filterbank bank(cfg);

    Rng rng(99);
    std::vector<double> sig(1000);
    for (auto& s : sig) s = rng.uniform(-1.0, 1.0);

    auto fast = bank.apply(sig);

    for (std::size_t ch = 0; ch < 3; ++ch) {
        for (std::size_t t = 0; t < sig.size(); ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 256 && j <= t; ++j)
                acc += bank.kernels().at(ch, j) * sig[t - j];
            REQUIRE(fast.at(ch, t) == Catch::Approx(acc).margin(1e-9));
        }
    }
}

TEST_CASE("filterbank application is linear", "[gammatone]") {
    FilterbankConfig cfg;
    cfg.num_filters = 4;
    cfg.fir_length = 256;
    cfg.f_min = 800.0;
    Filterbank bank(cfg);

    Rng rng(123);
    std::vector<double> x(1000), y(1000), mix(1000);
    const double a = 0.7, b = -1.3;
    for (std::size_t i = 0; i < 1000; ++i) {
        x[i] = rng.uniform(-1.0, 1.0);
        y[i] = rng.uniform(-1.0, 1.0);
        mix[i] = a * x[i] + b * y[i];
    }
    auto fx = bank.apply(x);
    auto fy = bank.apply(y);
    auto fmix = bank.apply(mix);
    for (std::size_t i = 0; i < fmix.v.size(); ++i)
        REQUIRE(fmix.v[i] == Catch::Approx(a * fx.v[i] + b * fy.v[i]).margin(1e-9));
}

TEST_CASE("too-short kernels are rejected with an explanation", "[gammatone]") {
    FilterbankConfig cfg;
    cfg.fir_length = 256; // ~16 ms, far below what the 50 Hz envelope needs
    try {
        Filterbank bank(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("fir_length") != std::string::npos);
    }

    CHECK_THROWS_AS(build_filterbank([] {
        FilterbankConfig c;
        c.f_min = 9000.0;
        c.f_max = 10000.0;
        return c;
    }()), ConfigError);

    std::vector<double> empty;
    CHECK_THROWS_AS(default_bank().apply(empty), ConfigError);
}
