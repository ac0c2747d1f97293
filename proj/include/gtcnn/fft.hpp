#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <vector>

#include "gtcnn/error.hpp"

namespace gtcnn {

using cplx = std::complex<double>;

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace detail

// Power-of-two FFT with a precomputed twiddle table. forward() computes the
// DFT with e^{-2*pi*i*k*n/N}; inverse() applies the conjugate kernel and the
// 1/N scale, so inverse(forward(x)) == x up to rounding.
class Pow2Fft {
public:
    explicit Pow2Fft(std::size_t n) : n_(n) {
        if (!detail::is_pow2(n)) throw ConfigError("Pow2Fft: size must be a power of two");
        twiddle_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = cplx(std::cos(ang), std::sin(ang));
        }
    }

    std::size_t size() const { return n_; }

    void forward(cplx* a) const { run(a, false); }

    void inverse(cplx* a) const {
        run(a, true);
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) a[i] *= s;
    }

private:
    void run(cplx* a, bool conj) const {
        const std::size_t n = n_;
        if (n == 1) return;
        // bit-reversal permutation
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const std::size_t step = n / len;
            const std::size_t half = len / 2;
            for (std::size_t i = 0; i < n; i += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    cplx w = twiddle_[j * step];
                    if (conj) w = std::conj(w);
                    cplx u = a[i + j];
                    cplx v = a[i + j + half] * w;
                    a[i + j] = u + v;
                    a[i + j + half] = u - v;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<cplx> twiddle_;
};

// DFT of arbitrary length. Power-of-two sizes run directly; everything else
// goes through Bluestein's chirp-z reformulation on top of Pow2Fft. The chirp
// angles are reduced with k^2 mod 2N in integer arithmetic before the float
// conversion, which keeps them accurate for large N.
class Dft {
public:
    explicit Dft(std::size_t n) : n_(n) {
        if (n == 0) throw ConfigError("Dft: size must be positive");
        if (detail::is_pow2(n)) {
            pow2_ = std::make_unique<Pow2Fft>(n);
            return;
        }
        m_ = detail::next_pow2(2 * n - 1);
        pow2_ = std::make_unique<Pow2Fft>(m_);
        chirp_.resize(n);
        std::vector<cplx> kernel(m_, cplx(0.0, 0.0));
        const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::uint64_t k2 = (static_cast<std::uint64_t>(k) * k) % two_n;
            double ang = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
            chirp_[k] = cplx(std::cos(ang), std::sin(ang));
            kernel[k] = std::conj(chirp_[k]);
            if (k > 0) kernel[m_ - k] = std::conj(chirp_[k]);
        }
        pow2_->forward(kernel.data());
        kernel_fft_ = std::move(kernel);
    }

    std::size_t size() const { return n_; }

    std::vector<cplx> forward(const std::vector<cplx>& x) const {
        check_len(x.size());
        if (!chirp_.empty()) return bluestein(x);
        std::vector<cplx> a(x);
        pow2_->forward(a.data());
        return a;
    }

    std::vector<cplx> inverse(const std::vector<cplx>& x) const {
        check_len(x.size());
        if (chirp_.empty()) {
            std::vector<cplx> a(x);
            pow2_->inverse(a.data());
            return a;
        }
        // IDFT(X) = conj(DFT(conj(X))) / N
        std::vector<cplx> a(n_);
        for (std::size_t i = 0; i < n_; ++i) a[i] = std::conj(x[i]);
        a = bluestein(a);
        const double s = 1.0 / static_cast<double>(n_);
        for (auto& v : a) v = std::conj(v) * s;
        return a;
    }

private:
    void check_len(std::size_t len) const {
        if (len != n_) throw ConfigError("Dft: input length does not match plan size");
    }

    std::vector<cplx> bluestein(const std::vector<cplx>& x) const {
        std::vector<cplx> a(m_, cplx(0.0, 0.0));
        for (std::size_t k = 0; k < n_; ++k) a[k] = x[k] * chirp_[k];
        pow2_->forward(a.data());
        for (std::size_t k = 0; k < m_; ++k) a[k] *= kernel_fft_[k];
        pow2_->inverse(a.data());
        std::vector<cplx> out(n_);
        for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * chirp_[k];
        return out;
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0; // Bluestein convolution size (0 for pow2 path)
    std::unique_ptr<Pow2Fft> pow2_;
    std::vector<cplx> chirp_;
    std::vector<cplx> kernel_fft_;
};

/// One-shot DFT of a real sequence, zero-padded to `n` bins.
inline std::vector<cplx> dft_real(const std::vector<double>& x, std::size_t n) {
    std::vector<cplx> in(n, cplx(0.0, 0.0));
    const std::size_t copy = std::min(n, x.size());
    for (std::size_t i = 0; i < copy; ++i) in[i] = cplx(x[i], 0.0);
    return Dft(n).forward(in);
}

} // namespace gtcnn
