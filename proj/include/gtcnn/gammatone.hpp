#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "gtcnn/array2d.hpp"
#include "gtcnn/error.hpp"
#include "gtcnn/fft.hpp"

namespace gtcnn {

// ---------------------------------------------------------------------------
// ERB scale
// ---------------------------------------------------------------------------

inline constexpr double kErbScaleA = 24.7;
inline constexpr double kErbScaleB = 4.37e-3;
inline constexpr double kErbRateScale = 21.4;

/// Equivalent rectangular bandwidth (Hz) of the auditory filter centred at fc.
inline double erb_bandwidth(double fc_hz) {
    if (fc_hz < 0.0) throw DomainError("erb_bandwidth: negative frequency");
    return kErbScaleA * (kErbScaleB * fc_hz + 1.0);
}

/// Cumulative ERB count below f; the nonlinear axis the bank is spaced on.
inline double erb_rate(double f_hz) {
    if (f_hz < 0.0) throw DomainError("erb_rate: negative frequency");
    return kErbRateScale * std::log10(kErbScaleB * f_hz + 1.0);
}

inline double inverse_erb_rate(double erb_number) {
    if (erb_number < 0.0) throw DomainError("inverse_erb_rate: negative ERB number");
    return (std::pow(10.0, erb_number / kErbRateScale) - 1.0) / kErbScaleB;
}

// ---------------------------------------------------------------------------
// Filter definitions
// ---------------------------------------------------------------------------

/// Parameters of one gammatone filter: impulse response
/// g(t) = a * t^(n-1) * exp(-2*pi*b*t) * cos(2*pi*fc*t + phase).
struct GammatoneSpec {
    double fc = 0.0;        // centre frequency, Hz
    int order = 4;          // gamma envelope order n
    double b = 0.0;         // bandwidth parameter, Hz
    double phase = 0.0;     // carrier phase, rad
    double amplitude = 1.0; // scale before normalization
};

struct FilterbankConfig {
    std::size_t num_filters = 64;
    double f_min = 50.0;
    double f_max = 8000.0;
    int sample_rate = 16000;
    int order = 4;
    std::size_t fir_length = 2048;
    // b = bandwidth_scale * ERB(fc); 1.019 makes a 4th-order filter's
    // equivalent rectangular bandwidth equal ERB(fc)
    double bandwidth_scale = 1.019;

    void validate() const {
        if (num_filters < 1) throw ConfigError("filterbank: num_filters must be >= 1");
        if (!(0.0 < f_min && f_min < f_max))
            throw ConfigError("filterbank: need 0 < f_min < f_max");
        if (f_max > sample_rate / 2.0)
            throw ConfigError("filterbank: f_max above Nyquist");
        if (order < 1) throw ConfigError("filterbank: order must be >= 1");
        if (fir_length < 2) throw ConfigError("filterbank: fir_length must be >= 2");
        if (bandwidth_scale <= 0.0) throw ConfigError("filterbank: bandwidth_scale must be > 0");
    }
};

/// Centre frequencies spaced uniformly on the ERB-rate axis, endpoints
/// inclusive. A single filter degenerates to [f_min].
inline std::vector<double> center_frequencies(const FilterbankConfig& cfg) {
    cfg.validate();
    std::vector<double> fcs(cfg.num_filters);
    if (cfg.num_filters == 1) {
        fcs[0] = cfg.f_min;
        return fcs;
    }
    const double lo = erb_rate(cfg.f_min);
    const double hi = erb_rate(cfg.f_max);
    const double step = (hi - lo) / static_cast<double>(cfg.num_filters - 1);
    for (std::size_t k = 0; k < cfg.num_filters; ++k)
        fcs[k] = inverse_erb_rate(lo + step * static_cast<double>(k));
    fcs.front() = cfg.f_min; // pin endpoints exactly
    fcs.back() = cfg.f_max;
    return fcs;
}

/// Sampled impulse response, un-normalized. t = k / sample_rate.
inline std::vector<double> gammatone_impulse_response(const GammatoneSpec& spec,
                                                      int sample_rate,
                                                      std::size_t length) {
    if (length < 1) throw ConfigError("gammatone: length must be >= 1");
    if (spec.fc <= 0.0) throw DomainError("gammatone: fc must be positive");
    if (spec.order < 1) throw DomainError("gammatone: order must be >= 1");
    if (spec.b <= 0.0) throw DomainError("gammatone: bandwidth must be positive");
    if (2.0 * spec.fc > static_cast<double>(sample_rate))
        throw DomainError("gammatone: fc above Nyquist would alias");

    std::vector<double> g(length);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t k = 0; k < length; ++k) {
        const double t = static_cast<double>(k) / sample_rate;
        g[k] = spec.amplitude * std::pow(t, spec.order - 1) *
               std::exp(-two_pi * spec.b * t) *
               std::cos(two_pi * spec.fc * t + spec.phase);
    }
    return g;
}

/// Magnitude response of an FIR kernel at n_points bins spanning
/// [0, sample_rate/2] inclusive.
inline std::vector<double> frequency_response(const std::vector<double>& kernel,
                                              std::size_t n_points) {
    if (n_points < kernel.size())
        throw ConfigError("frequency_response: n_points must be >= kernel length");
    if (n_points < 2) throw ConfigError("frequency_response: need at least 2 points");
    const std::size_t fft_size = 2 * (n_points - 1);
    auto spectrum = dft_real(kernel, fft_size);
    std::vector<double> mag(n_points);
    for (std::size_t k = 0; k < n_points; ++k) mag[k] = std::abs(spectrum[k]);
    return mag;
}

// ---------------------------------------------------------------------------
// Filterbank
// ---------------------------------------------------------------------------

/// Immutable bank of peak-normalized gammatone FIR kernels plus the
/// precomputed spectra used by the FFT convolver. Safe to share across
/// threads once built.
class Filterbank {
public:
    explicit Filterbank(const FilterbankConfig& cfg) : config_(cfg) {
        cfg.validate();
        const auto fcs = center_frequencies(cfg);

        // the slowest envelope must peak and mostly decay inside the kernel
        const double b_min = cfg.bandwidth_scale * erb_bandwidth(cfg.f_min);
        const double needed_sec =
            3.0 * (cfg.order - 1) / (2.0 * std::numbers::pi * b_min);
        const double kernel_sec = static_cast<double>(cfg.fir_length) / cfg.sample_rate;
        if (kernel_sec < needed_sec) {
            throw ConfigError(
                "filterbank: fir_length " + std::to_string(cfg.fir_length) + " (" +
                std::to_string(kernel_sec) + " s) is too short for the lowest filter; the " +
                std::to_string(cfg.f_min) + " Hz envelope needs about " +
                std::to_string(needed_sec) + " s to peak and decay — raise fir_length or f_min");
        }

        // measurement grid for peak normalization; fine enough that the
        // sampled maximum is the response peak for every filter
        measure_fft_ = std::max<std::size_t>(65536, detail::next_pow2(16 * cfg.fir_length));

        kernels_ = Array2D(cfg.num_filters, cfg.fir_length);
        specs_.reserve(cfg.num_filters);
        Dft measure(measure_fft_);
        std::vector<cplx> padded(measure_fft_);
        for (std::size_t k = 0; k < cfg.num_filters; ++k) {
            GammatoneSpec spec;
            spec.fc = fcs[k];
            spec.order = cfg.order;
            spec.b = cfg.bandwidth_scale * erb_bandwidth(fcs[k]);
            auto ir = gammatone_impulse_response(spec, cfg.sample_rate, cfg.fir_length);

            std::fill(padded.begin(), padded.end(), cplx(0.0, 0.0));
            for (std::size_t i = 0; i < ir.size(); ++i) padded[i] = cplx(ir[i], 0.0);
            auto spectrum = measure.forward(padded);
            double peak = 0.0;
            for (std::size_t i = 0; i <= measure_fft_ / 2; ++i)
                peak = std::max(peak, std::abs(spectrum[i]));
            if (peak <= 0.0) throw NumericError("filterbank: degenerate kernel");
            const double scale = 1.0 / peak;
            for (std::size_t i = 0; i < ir.size(); ++i)
                kernels_.at(k, i) = ir[i] * scale;
            specs_.push_back(spec);
        }

        build_convolver();
    }

    const FilterbankConfig& config() const { return config_; }
    const std::vector<GammatoneSpec>& specs() const { return specs_; }
    const Array2D& kernels() const { return kernels_; }
    std::size_t size() const { return specs_.size(); }
    std::size_t measurement_fft_size() const { return measure_fft_; }

    /// Convolve each kernel with the signal ("same" causal alignment:
    /// output[t] uses taps ending at input[t]). Overlap-save block FFT;
    /// each block's forward transform is shared by all channels and the
    /// inverse transforms carry two channels at a time.
    Array2D apply(const std::vector<double>& signal) const {
        if (signal.empty()) throw ConfigError("apply_filterbank: empty signal");
        if (signal.size() < config_.fir_length)
            throw ConfigError("apply_filterbank: signal shorter than the FIR kernels");

        const std::size_t n = signal.size();
        const std::size_t klen = config_.fir_length;
        const std::size_t fft_size = conv_fft_->size();
        const std::size_t step = fft_size - klen + 1;
        const std::size_t channels = specs_.size();

        Array2D out(channels, n);
        std::vector<cplx> block(fft_size);
        std::vector<cplx> spec(fft_size);
        std::vector<cplx> pair(fft_size);

        for (std::size_t start = 0; start < n; start += step) {
            // segment [start - klen + 1, start + step) with zero history
            for (std::size_t i = 0; i < fft_size; ++i) {
                const std::int64_t idx =
                    static_cast<std::int64_t>(start) - static_cast<std::int64_t>(klen) + 1 +
                    static_cast<std::int64_t>(i);
                block[i] = (idx >= 0 && idx < static_cast<std::int64_t>(n))
                               ? cplx(signal[static_cast<std::size_t>(idx)], 0.0)
                               : cplx(0.0, 0.0);
            }
            conv_fft_->forward(block.data());
            const std::size_t valid = std::min(step, n - start);

            for (std::size_t ch = 0; ch < channels; ch += 2) {
                const bool have_second = ch + 1 < channels;
                const cplx* ka = kernel_fft_.row_ptr(ch);
                const cplx* kb = have_second ? kernel_fft_.row_ptr(ch + 1) : nullptr;
                if (have_second) {
                    // two real outputs per inverse transform: y_a + i*y_b
                    for (std::size_t i = 0; i < fft_size; ++i)
                        pair[i] = block[i] * ka[i] + cplx(0.0, 1.0) * (block[i] * kb[i]);
                } else {
                    for (std::size_t i = 0; i < fft_size; ++i) pair[i] = block[i] * ka[i];
                }
                conv_fft_->inverse(pair.data());
                double* row_a = out.row(ch);
                double* row_b = have_second ? out.row(ch + 1) : nullptr;
                for (std::size_t i = 0; i < valid; ++i) {
                    row_a[start + i] = pair[klen - 1 + i].real();
                    if (row_b) row_b[start + i] = pair[klen - 1 + i].imag();
                }
            }
        }
        return out;
    }

private:
    struct ComplexRows {
        std::size_t cols = 0;
        std::vector<cplx> v;
        const cplx* row_ptr(std::size_t r) const { return v.data() + r * cols; }
        cplx* row_ptr(std::size_t r) { return v.data() + r * cols; }
    };

    void build_convolver() {
        const std::size_t fft_size =
            std::max<std::size_t>(4096, detail::next_pow2(2 * config_.fir_length));
        conv_fft_ = std::make_shared<Pow2Fft>(fft_size);
        kernel_fft_.cols = fft_size;
        kernel_fft_.v.assign(specs_.size() * fft_size, cplx(0.0, 0.0));
        for (std::size_t ch = 0; ch < specs_.size(); ++ch) {
            cplx* row = kernel_fft_.row_ptr(ch);
            for (std::size_t i = 0; i < config_.fir_length; ++i)
                row[i] = cplx(kernels_.at(ch, i), 0.0);
            conv_fft_->forward(row);
        }
    }

    FilterbankConfig config_;
    std::vector<GammatoneSpec> specs_;
    Array2D kernels_;
    std::size_t measure_fft_ = 0;
    std::shared_ptr<Pow2Fft> conv_fft_;
    ComplexRows kernel_fft_;
};

inline Filterbank build_filterbank(const FilterbankConfig& cfg) { return Filterbank(cfg); }

inline Array2D apply_filterbank(const std::vector<double>& signal, const Filterbank& bank) {
    return bank.apply(signal);
}

} // namespace gtcnn
