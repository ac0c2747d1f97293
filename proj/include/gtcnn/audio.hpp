#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gtcnn/error.hpp"

namespace gtcnn {

/// Mono audio buffer with provenance. Samples live in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = 0;
    std::optional<int> label; // class id 0..4 when known
    std::string source;

    double duration_sec() const {
        return sample_rate > 0
                   ? static_cast<double>(samples.size()) / sample_rate
                   : 0.0;
    }
};

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline float read_f32(const unsigned char* p) {
    std::uint32_t bits = read_u32(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

} // namespace wav_detail

/// Parse a RIFF/WAVE file. Accepts 16-bit PCM and 32-bit IEEE float,
/// any channel count (channels are averaged down to mono). Integer
/// samples are scaled by 1/32768.
inline AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    using namespace wav_detail;

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError(FormatError::Kind::MalformedHeader,
                          path.string() + ": not a RIFF/WAVE file");
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        std::uint32_t chunk_size = read_u32(hdr + 4);
        std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) {
            throw FormatError(FormatError::Kind::Truncated,
                              path.string() + ": chunk extends past end of file");
        }
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_size < 16)
                throw FormatError(FormatError::Kind::MalformedHeader,
                                  path.string() + ": fmt chunk too small");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1); // chunks are word-aligned
    }

    if (!have_fmt || rate == 0 || channels == 0)
        throw FormatError(FormatError::Kind::MalformedHeader,
                          path.string() + ": missing or invalid fmt chunk");

    const bool pcm16 = format == 1 && bits == 16;
    const bool float32 = format == 3 && bits == 32;
    if (!pcm16 && !float32)
        throw FormatError(FormatError::Kind::UnsupportedCodec,
                          path.string() + ": only PCM16 and float32 are supported");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_size = bytes_per_sample * channels;
    const std::size_t frames = data ? data_len / frame_size : 0;
    if (frames == 0)
        throw FormatError(FormatError::Kind::EmptyPayload,
                          path.string() + ": no audio frames");

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.source = path.string();
    clip.samples.resize(frames);
    const double ch_scale = 1.0 / channels;
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        const unsigned char* p = data + f * frame_size;
        for (std::size_t c = 0; c < channels; ++c, p += bytes_per_sample) {
            if (pcm16) {
                std::int16_t s = static_cast<std::int16_t>(read_u16(p));
                acc += s / 32768.0;
            } else {
                acc += read_f32(p);
            }
        }
        clip.samples[f] = std::clamp(acc * ch_scale, -1.0, 1.0);
    }
    return clip;
}

enum class WavFormat { Pcm16, Float32 };

inline void write_wav(const AudioClip& clip, const std::filesystem::path& path,
                      WavFormat format = WavFormat::Pcm16) {
    if (clip.samples.empty()) throw ConfigError("write_wav: empty clip");
    if (clip.sample_rate <= 0) throw ConfigError("write_wav: invalid sample rate");

    const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
    const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_size = n * (bits / 8);
    const std::uint32_t riff_size = 36 + data_size;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
        out.write(reinterpret_cast<const char*>(b), 2);
    };

    out.write("RIFF", 4);
    put_u32(riff_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(format == WavFormat::Pcm16 ? 1 : 3);
    put_u16(1); // mono
    put_u32(static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
    put_u16(bits / 8);
    put_u16(bits);
    out.write("data", 4);
    put_u32(data_size);

    if (format == WavFormat::Pcm16) {
        for (double s : clip.samples) {
            long q = std::lround(s * 32768.0);
            q = std::clamp(q, -32768L, 32767L);
            put_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
        }
    } else {
        for (double s : clip.samples) {
            float f = static_cast<float>(s);
            std::uint32_t bitsv;
            std::memcpy(&bitsv, &f, sizeof(f));
            put_u32(bitsv);
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

namespace resample_detail {

// 4-term Blackman-Harris, x in [-1, 1]
inline double window(double x) {
    const double a0 = 0.35875, a1 = 0.48829, a2 = 0.14128, a3 = 0.01168;
    const double px = std::numbers::pi * x;
    return a0 + a1 * std::cos(px) + a2 * std::cos(2 * px) + a3 * std::cos(3 * px);
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

} // namespace resample_detail

/// Windowed-sinc polyphase resampler. Same-rate input is returned
/// bit-exactly; otherwise the signal is interpolated on a rational
/// grid with an anti-aliasing lowpass sized for the rate ratio.
inline AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw ConfigError("resample: target rate must be positive");
    if (clip.sample_rate == target_rate) return clip;
    if (clip.samples.empty()) {
        AudioClip out = clip;
        out.sample_rate = target_rate;
        return out;
    }

    const std::uint64_t g = std::gcd<std::uint64_t>(clip.sample_rate, target_rate);
    const std::uint64_t up = target_rate / g;    // L
    const std::uint64_t down = clip.sample_rate / g; // M

    // anti-alias cutoff relative to the input Nyquist, with headroom for
    // the window's transition band
    const double ratio = static_cast<double>(up) / static_cast<double>(down);
    const double cutoff = 0.945 * std::min(1.0, ratio);
    const int taps_side = 24;
    const double stretch = std::max(1.0, 1.0 / ratio);
    const int half = static_cast<int>(std::ceil(taps_side * stretch));

    // one filter per fractional phase p/L, taps normalized to unit DC gain
    std::vector<std::vector<double>> phases(up);
    for (std::uint64_t p = 0; p < up; ++p) {
        const double frac = static_cast<double>(p) / static_cast<double>(up);
        auto& taps = phases[p];
        taps.resize(2 * half + 1);
        double sum = 0.0;
        for (int i = -half; i <= half; ++i) {
            const double t = frac + i; // input-sample offset of this tap
            double h = cutoff * resample_detail::sinc(cutoff * t) *
                       resample_detail::window(t / (half + 1.0));
            taps[i + half] = h;
            sum += h;
        }
        if (sum != 0.0)
            for (auto& h : taps) h /= sum;
    }

    const std::size_t n_in = clip.samples.size();
    const std::size_t n_out = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_in) * ratio));

    AudioClip out;
    out.sample_rate = target_rate;
    out.label = clip.label;
    out.source = clip.source;
    out.samples.resize(n_out, 0.0);

    const double* x = clip.samples.data();
    for (std::size_t j = 0; j < n_out; ++j) {
        const std::uint64_t num = j * down;
        const std::uint64_t n0 = num / up;
        const std::uint64_t p = num % up;
        const auto& taps = phases[p];
        // output time = n0 + p/L; tap i multiplies x[n0 - i]
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
            const std::int64_t k = static_cast<std::int64_t>(n0) - i;
            if (k < 0 || k >= static_cast<std::int64_t>(n_in)) continue;
            acc += taps[i + half] * x[k];
        }
        out.samples[j] = acc;
    }
    return out;
}

/// Slice a clip into fixed-length windows. Trailing samples that do not
/// fill a whole window are dropped. hop <= 0 means non-overlapping.
inline std::vector<AudioClip> segment(const AudioClip& clip, double window_sec,
                                      double hop_sec = 0.0) {
    if (window_sec <= 0.0) throw ConfigError("segment: window must be positive");
    if (hop_sec <= 0.0) hop_sec = window_sec;
    const std::size_t w = static_cast<std::size_t>(std::llround(window_sec * clip.sample_rate));
    const std::size_t h = static_cast<std::size_t>(std::llround(hop_sec * clip.sample_rate));
    std::vector<AudioClip> out;
    if (w == 0 || h == 0 || clip.samples.size() < w) return out;
    const std::size_t count = (clip.samples.size() - w) / h + 1;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        AudioClip seg;
        seg.sample_rate = clip.sample_rate;
        seg.label = clip.label;
        seg.source = clip.source + "#" + std::to_string(s);
        seg.samples.assign(clip.samples.begin() + s * h,
                           clip.samples.begin() + s * h + w);
        out.push_back(std::move(seg));
    }
    return out;
}

} // namespace gtcnn
