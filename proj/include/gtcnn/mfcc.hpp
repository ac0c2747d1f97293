#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "gtcnn/array2d.hpp"
#include "gtcnn/audio.hpp"
#include "gtcnn/cochleagram.hpp"
#include "gtcnn/error.hpp"
#include "gtcnn/fft.hpp"

namespace gtcnn {

inline double hz_to_mel(double f_hz) { return 2595.0 * std::log10(1.0 + f_hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MfccConfig {
    std::size_t num_mel = 40;
    std::size_t num_coeffs = 20;
    double f_min = 50.0;
    double f_max = 8000.0;

    void validate() const {
        if (num_mel < 2) throw ConfigError("mfcc: num_mel must be >= 2");
        if (num_coeffs < 1 || num_coeffs > num_mel)
            throw ConfigError("mfcc: num_coeffs must be in [1, num_mel]");
        if (!(0.0 <= f_min && f_min < f_max)) throw ConfigError("mfcc: need 0 <= f_min < f_max");
    }
};

/// Triangular mel filter energies per frame: Hann-windowed magnitude
/// spectrum weighted by filters spaced uniformly on the mel axis.
inline EnergyMap mel_filterbank_energies(const AudioClip& clip, const FramingConfig& framing,
                                         std::size_t num_mel, double f_min, double f_max) {
    framing.validate();
    if (num_mel < 2) throw ConfigError("mel_filterbank_energies: num_mel must be >= 2");
    if (f_max > clip.sample_rate / 2.0)
        throw ConfigError("mel_filterbank_energies: f_max above Nyquist");
    const std::size_t w =
        static_cast<std::size_t>(std::llround(framing.window_sec * clip.sample_rate));
    const std::size_t h =
        static_cast<std::size_t>(std::llround(framing.hop_sec * clip.sample_rate));
    if (w == 0 || h == 0 || clip.samples.size() < w)
        throw ConfigError("mel_filterbank_energies: clip shorter than one analysis window");

    const std::size_t fft_size = detail::next_pow2(w);
    const std::size_t bins = fft_size / 2 + 1;
    const double bin_hz = static_cast<double>(clip.sample_rate) / fft_size;

    // mel points: num_mel + 2 edges, triangle k spans [p_{k-1}, p_{k+1}]
    std::vector<double> edges(num_mel + 2);
    const double mel_lo = hz_to_mel(f_min), mel_hi = hz_to_mel(f_max);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                          static_cast<double>(num_mel + 1));

    Array2D tri(num_mel, bins);
    for (std::size_t k = 0; k < num_mel; ++k) {
        const double lo = edges[k], mid = edges[k + 1], hi = edges[k + 2];
        for (std::size_t b = 0; b < bins; ++b) {
            const double f = b * bin_hz;
            double wgt = 0.0;
            if (f > lo && f < mid) wgt = (f - lo) / (mid - lo);
            else if (f == mid) wgt = 1.0;
            else if (f > mid && f < hi) wgt = (hi - f) / (hi - mid);
            tri.at(k, b) = wgt;
        }
    }

    const auto window = window_weights(WindowShape::Hann, w);
    const std::size_t frames = (clip.samples.size() - w) / h + 1;

    EnergyMap map;
    map.frame_rate = static_cast<double>(clip.sample_rate) / static_cast<double>(h);
    map.values = Array2D(num_mel, frames);

    Pow2Fft fft(fft_size);
    std::vector<cplx> buf(fft_size);
    std::vector<double> mag(bins);
    for (std::size_t t = 0; t < frames; ++t) {
        const double* seg = clip.samples.data() + t * h;
        for (std::size_t i = 0; i < fft_size; ++i)
            buf[i] = i < w ? cplx(seg[i] * window[i], 0.0) : cplx(0.0, 0.0);
        fft.forward(buf.data());
        for (std::size_t b = 0; b < bins; ++b) mag[b] = std::abs(buf[b]);
        for (std::size_t k = 0; k < num_mel; ++k) {
            const double* wrow = tri.row(k);
            double acc = 0.0;
            for (std::size_t b = 0; b < bins; ++b) acc += wrow[b] * mag[b];
            map.values.at(k, t) = acc;
        }
    }
    return map;
}

/// Orthonormal DCT-II along a vector.
inline std::vector<double> dct2(const std::vector<double>& x, std::size_t keep) {
    const std::size_t m = x.size();
    std::vector<double> out(std::min(keep, m), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < m; ++n)
            acc += x[n] * std::cos(std::numbers::pi * static_cast<double>(k) *
                                   (2.0 * static_cast<double>(n) + 1.0) / (2.0 * static_cast<double>(m)));
        const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(m))
                                    : std::sqrt(2.0 / static_cast<double>(m));
        out[k] = acc * scale;
    }
    return out;
}

/// Central-difference temporal delta with clamped edges.
inline Array2D temporal_delta(const Array2D& coeffs) {
    Array2D out(coeffs.rows, coeffs.cols);
    for (std::size_t r = 0; r < coeffs.rows; ++r) {
        for (std::size_t t = 0; t < coeffs.cols; ++t) {
            const std::size_t tp = t + 1 < coeffs.cols ? t + 1 : coeffs.cols - 1;
            const std::size_t tm = t > 0 ? t - 1 : 0;
            out.at(r, t) = (coeffs.at(r, tp) - coeffs.at(r, tm)) / 2.0;
        }
    }
    return out;
}

/// MFCC image: log mel energies -> DCT-II (first num_coeffs) -> stack with
/// first and second temporal differences -> min-max normalize -> resize.
inline FeatureImage compute_mfcc_image(const AudioClip& clip, const FramingConfig& framing,
                                       const MfccConfig& cfg, std::size_t height,
                                       std::size_t width) {
    cfg.validate();
    EnergyMap mel = mel_filterbank_energies(clip, framing, cfg.num_mel, cfg.f_min, cfg.f_max);
    if (mel.num_frames() < 3)
        throw ConfigError("mfcc: need at least 3 frames for the temporal differences");

    const std::size_t frames = mel.num_frames();
    Array2D coeffs(cfg.num_coeffs, frames);
    std::vector<double> column(cfg.num_mel);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t k = 0; k < cfg.num_mel; ++k)
            column[k] = std::log(std::max(mel.values.at(k, t), 1e-10));
        auto c = dct2(column, cfg.num_coeffs);
        for (std::size_t k = 0; k < cfg.num_coeffs; ++k) coeffs.at(k, t) = c[k];
    }

    Array2D d1 = temporal_delta(coeffs);
    Array2D d2 = temporal_delta(d1);

    Array2D stacked(3 * cfg.num_coeffs, frames);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t k = 0; k < cfg.num_coeffs; ++k) {
            stacked.at(k, t) = coeffs.at(k, t);
            stacked.at(cfg.num_coeffs + k, t) = d1.at(k, t);
            stacked.at(2 * cfg.num_coeffs + k, t) = d2.at(k, t);
        }
    }
    return to_feature_image(stacked, height, width, "mfcc", clip.source);
}

} // namespace gtcnn
