#include "catch2/catch_amalgamated.hpp"

#include <numbers>
#include <vector>

#include "gtcnn/fft.hpp"
#include "gtcnn/rng.hpp"

using gtcnn::cplx;

namespace {

// quadratic-time reference DFT
std::vector<cplx> naive_dft(const std::vector<cplx>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n, cplx(0.0, 0.0));
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
            out[k] += x[j] * cplx(std::cos(ang), std::sin(ang));
        }
        if (inverse) out[k] /= static_cast<double>(n);
    }
    return out;
}

std::vector<cplx> random_signal(std::size_t n, std::uint64_t seed) {
    gtcnn::Rng rng(seed);
    std::vector<cplx> x(n);
    for (auto& v : x) v = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    return x;
}

double max_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("forward DFT matches the quadratic reference", "[fft]") {
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 12u, 16u, 27u, 100u, 125u, 128u, 250u, 1000u}) {
        auto x = random_signal(n, 77 + n);
        gtcnn::Dft plan(n);
        auto got = plan.forward(x);
        auto want = naive_dft(x, false);
        INFO("n=" << n);
        CHECK(max_err(got, want) < 1e-9 * static_cast<double>(n));
    }
}

TEST_CASE("inverse DFT matches the quadratic reference", "[fft]") {
    for (std::size_t n : {2u, 3u, 6u, 9u, 64u, 100u, 160u}) {
        auto x = random_signal(n, 13 + n);
        gtcnn::Dft plan(n);
        auto got = plan.inverse(x);
        auto want = naive_dft(x, true);
        INFO("n=" << n);
        CHECK(max_err(got, want) < 1e-10 * static_cast<double>(n));
    }
}

TEST_CASE("inverse(forward(x)) returns x", "[fft]") {
    for (std::size_t n : {16u, 125u, 400u, 64000u}) {
        auto x = random_signal(n, n);
        gtcnn::Dft plan(n);
        auto roundtrip = plan.inverse(plan.forward(x));
        INFO("n=" << n);
        CHECK(max_err(roundtrip, x) < 1e-9);
    }
}

TEST_CASE("DFT of a pure tone concentrates on its bin", "[fft]") {
    const std::size_t n = 512;
    const std::size_t bin = 37;
    std::vector<cplx> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        double ang = 2.0 * std::numbers::pi * static_cast<double>(bin * t) / static_cast<double>(n);
        x[t] = cplx(std::cos(ang), 0.0);
    }
    auto spec = gtcnn::Dft(n).forward(x);
    CHECK(std::abs(spec[bin]) == Catch::Approx(n / 2.0).margin(1e-6));
    for (std::size_t k = 0; k < n; ++k) {
        if (k == bin || k == n - bin) continue;
        CHECK(std::abs(spec[k]) < 1e-6);
    }
}

TEST_CASE("Dft rejects mismatched input lengths", "[fft]") {
    gtcnn::Dft plan(8);
    std::vector<cplx> wrong(7, cplx(0.0, 0.0));
    CHECK_THROWS_AS(plan.forward(wrong), gtcnn::ConfigError);
}
