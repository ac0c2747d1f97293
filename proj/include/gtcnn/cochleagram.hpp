#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "gtcnn/array2d.hpp"
#include "gtcnn/audio.hpp"
#include "gtcnn/envelope.hpp"
#include "gtcnn/error.hpp"
#include "gtcnn/gammatone.hpp"

namespace gtcnn {

enum class WindowShape { Hann, Rectangular };

struct FramingConfig {
    double window_sec = 0.025;
    double hop_sec = 0.010;
    WindowShape window = WindowShape::Hann;

    void validate() const {
        if (!(hop_sec > 0.0 && hop_sec <= window_sec))
            throw ConfigError("framing: need 0 < hop <= window");
    }
};

struct CompressionConfig {
    double alpha = 1.0e3;

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("compression: alpha must be > 0");
    }
};

/// Per-channel, per-frame energy map E[f, t].
struct EnergyMap {
    Array2D values;
    double frame_rate = 0.0;

    std::size_t num_channels() const { return values.rows; }
    std::size_t num_frames() const { return values.cols; }
};

/// Three-channel image in [0,1] ready for the classifier. The channels are
/// identical replicas for every front end in this library.
struct FeatureImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels; // H x W x 3, channel-last
    std::string frontend;       // "gammatone" | "mfcc"
    std::string config_hash;
    std::string source;

    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * 3 + c];
    }
};

inline std::vector<double> window_weights(WindowShape shape, std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (shape == WindowShape::Hann && n > 1) {
        for (std::size_t i = 0; i < n; ++i)
            w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
    }
    return w;
}

/// Window-weighted mean of each envelope row over sliding frames.
/// Weights are normalized to sum to one, so a constant envelope maps to
/// itself. Frame count = floor((L - W) / H) + 1.
inline EnergyMap frame_energy(const Array2D& envelope_rows, const FramingConfig& framing,
                              int sample_rate) {
    framing.validate();
    if (envelope_rows.empty()) throw ConfigError("frame_energy: empty input");
    const std::size_t w = static_cast<std::size_t>(std::llround(framing.window_sec * sample_rate));
    const std::size_t h = static_cast<std::size_t>(std::llround(framing.hop_sec * sample_rate));
    if (w == 0 || h == 0) throw ConfigError("frame_energy: window/hop shorter than one sample");
    if (envelope_rows.cols < w)
        throw ConfigError("frame_energy: rows shorter than one analysis window");

    auto weights = window_weights(framing.window, w);
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (auto& x : weights) x /= wsum;

    const std::size_t frames = (envelope_rows.cols - w) / h + 1;
    EnergyMap map;
    map.frame_rate = static_cast<double>(sample_rate) / static_cast<double>(h);
    map.values = Array2D(envelope_rows.rows, frames);
    for (std::size_t f = 0; f < envelope_rows.rows; ++f) {
        const double* src = envelope_rows.row(f);
        double* dst = map.values.row(f);
        for (std::size_t t = 0; t < frames; ++t) {
            const double* seg = src + t * h;
            double acc = 0.0;
            for (std::size_t i = 0; i < w; ++i) acc += weights[i] * seg[i];
            dst[t] = acc;
        }
    }
    return map;
}

/// Y = log10(1 + alpha * E), elementwise. Monotone, zero-preserving.
inline Array2D log_compress(const EnergyMap& energy, const CompressionConfig& cfg) {
    cfg.validate();
    Array2D out(energy.values.rows, energy.values.cols);
    for (std::size_t i = 0; i < energy.values.v.size(); ++i) {
        const double e = energy.values.v[i];
        if (e < 0.0)
            throw NumericError("log_compress: negative energy entry (invariant violation)");
        out.v[i] = std::log10(1.0 + cfg.alpha * e);
    }
    return out;
}

/// Min-max normalize to [0,1] (a constant map becomes all zeros), then
/// bilinear-resize on a corner-aligned grid.
inline Array2D normalize_resize(const Array2D& in, std::size_t height, std::size_t width) {
    if (in.empty()) throw ConfigError("normalize_resize: empty input");
    if (height == 0 || width == 0) throw ConfigError("normalize_resize: zero output size");

    const auto [mn_it, mx_it] = std::minmax_element(in.v.begin(), in.v.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx - mn;
    Array2D norm(in.rows, in.cols);
    if (span > 0.0) {
        for (std::size_t i = 0; i < in.v.size(); ++i) norm.v[i] = (in.v[i] - mn) / span;
    }

    if (height == in.rows && width == in.cols) return norm;

    Array2D out(height, width);
    const double ry = height > 1 ? static_cast<double>(in.rows - 1) / (height - 1) : 0.0;
    const double rx = width > 1 ? static_cast<double>(in.cols - 1) / (width - 1) : 0.0;
    for (std::size_t y = 0; y < height; ++y) {
        const double sy = height > 1 ? y * ry : (in.rows - 1) / 2.0;
        const std::size_t y0 = std::min(static_cast<std::size_t>(sy), in.rows - 1);
        const std::size_t y1 = std::min(y0 + 1, in.rows - 1);
        const double fy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < width; ++x) {
            const double sx = width > 1 ? x * rx : (in.cols - 1) / 2.0;
            const std::size_t x0 = std::min(static_cast<std::size_t>(sx), in.cols - 1);
            const std::size_t x1 = std::min(x0 + 1, in.cols - 1);
            const double fx = sx - static_cast<double>(x0);
            const double top = norm.at(y0, x0) * (1.0 - fx) + norm.at(y0, x1) * fx;
            const double bot = norm.at(y1, x0) * (1.0 - fx) + norm.at(y1, x1) * fx;
            out.at(y, x) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

/// Compressed pre-resize cochleagram: filterbank -> per-channel envelope ->
/// framed energy -> log compression.
inline Array2D cochleagram_map(const AudioClip& clip, const Filterbank& bank,
                               const FramingConfig& framing, const CompressionConfig& compression) {
    if (clip.sample_rate != bank.config().sample_rate)
        throw ConfigError("cochleagram: clip is " + std::to_string(clip.sample_rate) +
                          " Hz but the bank expects " +
                          std::to_string(bank.config().sample_rate) +
                          " Hz; resample the clip first");

    Array2D channels = bank.apply(clip.samples);
    Dft plan(channels.cols);
    std::vector<cplx> scratch;
    for (std::size_t ch = 0; ch < channels.rows; ++ch)
        analytic_envelope_inplace(channels.row(ch), channels.cols, plan, scratch);

    EnergyMap energy = frame_energy(channels, framing, clip.sample_rate);
    return log_compress(energy, compression);
}

inline FeatureImage to_feature_image(const Array2D& map, std::size_t height, std::size_t width,
                                     const std::string& frontend, const std::string& source) {
    Array2D img = normalize_resize(map, height, width);
    FeatureImage out;
    out.height = height;
    out.width = width;
    out.frontend = frontend;
    out.source = source;
    out.pixels.resize(height * width * 3);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double v = img.at(y, x);
            double* px = out.pixels.data() + (y * width + x) * 3;
            px[0] = px[1] = px[2] = v;
        }
    return out;
}

inline FeatureImage compute_cochleagram(const AudioClip& clip, const Filterbank& bank,
                                        const FramingConfig& framing,
                                        const CompressionConfig& compression,
                                        std::size_t height, std::size_t width) {
    Array2D map = cochleagram_map(clip, bank, framing, compression);
    return to_feature_image(map, height, width, "gammatone", clip.source);
}

} // namespace gtcnn
