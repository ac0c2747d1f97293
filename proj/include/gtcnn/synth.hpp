#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "gtcnn/audio.hpp"
#include "gtcnn/error.hpp"
#include "gtcnn/fft.hpp"
#include "gtcnn/rng.hpp"

namespace gtcnn {

/// Acoustic recipe for one vessel class: a decaying harmonic stack under
/// propeller amplitude modulation, a cavitation noise band, and the ambient
/// SNR range the class is rendered at.
struct VesselClassProfile {
    int class_id = 0;
    std::string name;
    std::pair<double, double> f0_range{0.0, 0.0};      // shaft fundamental, Hz
    int num_harmonics = 0;                             // 0 = noise-only class
    double harmonic_decay = 0.85;                      // amplitude ratio per harmonic
    std::pair<double, double> am_rate_range{0.0, 0.0}; // propeller modulation, Hz
    double am_depth = 0.0;                             // modulation index m
    std::pair<double, double> broadband_band{0.0, 0.0};// cavitation band, Hz
    double broadband_level = 0.0;                      // RMS vs harmonic stack
    std::pair<double, double> snr_range{0.0, 15.0};    // dB vs ambient

    void validate(int sample_rate) const {
        const double nyquist = sample_rate / 2.0;
        auto check_band = [&](std::pair<double, double> b, const char* what) {
            if (b.first < 0.0 || b.second < b.first || b.second > nyquist)
                throw ConfigError(std::string("profile ") + name + ": " + what +
                                  " interval outside [0, Nyquist]");
        };
        check_band(f0_range, "f0");
        check_band(am_rate_range, "AM rate");
        check_band(broadband_band, "broadband");
        if (num_harmonics < 0) throw ConfigError("profile: negative harmonic count");
        if (snr_range.second < snr_range.first) throw ConfigError("profile: empty SNR range");
    }
};

/// The five stock classes. SNR range is shared so experiments can sweep it.
inline std::vector<VesselClassProfile> default_profiles(double snr_lo_db = 0.0,
                                                        double snr_hi_db = 15.0) {
    std::vector<VesselClassProfile> out(5);

    out[0].class_id = 0;
    out[0].name = "Background";
    out[0].num_harmonics = 0;
    out[0].broadband_band = {50.0, 7900.0};
    out[0].broadband_level = 1.0;

    out[1].class_id = 1;
    out[1].name = "Cargo";
    out[1].f0_range = {50.0, 80.0};
    out[1].num_harmonics = 12;
    out[1].harmonic_decay = 0.85;
    out[1].broadband_band = {500.0, 4000.0};
    out[1].broadband_level = 0.25;

    out[2].class_id = 2;
    out[2].name = "Passengership";
    out[2].f0_range = {100.0, 160.0};
    out[2].num_harmonics = 8;
    out[2].harmonic_decay = 0.80;
    out[2].broadband_band = {800.0, 6000.0};
    out[2].broadband_level = 0.3;

    out[3].class_id = 3;
    out[3].name = "Tanker";
    out[3].f0_range = {40.0, 60.0};
    out[3].num_harmonics = 15;
    out[3].harmonic_decay = 0.90;
    out[3].am_rate_range = {1.0, 3.0};
    out[3].am_depth = 0.3;
    out[3].broadband_band = {300.0, 3000.0};
    out[3].broadband_level = 0.2;

    out[4].class_id = 4;
    out[4].name = "Tug";
    out[4].f0_range = {70.0, 110.0};
    out[4].num_harmonics = 10;
    out[4].harmonic_decay = 0.82;
    out[4].am_rate_range = {4.0, 8.0};
    out[4].am_depth = 0.6;
    out[4].broadband_band = {500.0, 7500.0};
    out[4].broadband_level = 0.7;

    for (auto& p : out) p.snr_range = {snr_lo_db, snr_hi_db};
    return out;
}

/// Vessel signal and ambient noise rendered separately but already scaled to
/// the drawn SNR; clip == signal + noise elementwise.
struct SynthComponents {
    std::vector<double> signal;
    std::vector<double> noise;
    double snr_db = 0.0;
    double f0 = 0.0;
    double am_rate = 0.0;
};

namespace synth_detail {

inline double rms(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

// white gaussian noise filtered to a band (or 1/f-shaped) in the DFT domain
inline std::vector<double> shaped_noise(Rng& rng, std::size_t n, int sample_rate,
                                        double f_lo, double f_hi, bool pink) {
    std::vector<cplx> buf(n);
    for (auto& v : buf) v = cplx(rng.gaussian(), 0.0);
    Dft plan(n);
    auto spec = plan.forward(buf);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        // two-sided frequency of bin k
        const double f = std::min(static_cast<double>(k), static_cast<double>(n - k)) * bin_hz;
        double g;
        if (pink) {
            g = 1.0 / std::sqrt(std::max(f, 1.0)); // power ~ 1/f, flat below 1 Hz
        } else {
            g = (f >= f_lo && f <= f_hi) ? 1.0 : 0.0;
        }
        spec[k] *= g;
    }
    auto shaped = plan.inverse(spec);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = shaped[i].real();
    return out;
}

} // namespace synth_detail

/// Deterministic render of one clip. The harmonic stack, its propeller AM,
/// and the cavitation band form the "signal"; 1/f ambient noise scaled to the
/// drawn SNR is the "noise". The sum is peak-normalized to 0.9 and both
/// components carry the same final scale.
inline SynthComponents synth_vessel_components(const VesselClassProfile& profile,
                                               double duration_sec, int sample_rate,
                                               std::uint64_t seed) {
    if (duration_sec <= 0.0) throw ConfigError("synth: duration must be positive");
    profile.validate(sample_rate);

    const std::size_t n = static_cast<std::size_t>(std::llround(duration_sec * sample_rate));
    if (n == 0) throw ConfigError("synth: duration shorter than one sample");

    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(profile.class_id)));

    SynthComponents out;
    out.f0 = rng.uniform(profile.f0_range.first, profile.f0_range.second);
    out.am_rate = rng.uniform(profile.am_rate_range.first, profile.am_rate_range.second);
    out.snr_db = rng.uniform(profile.snr_range.first, profile.snr_range.second);

    const double nyquist = sample_rate / 2.0;
    std::vector<double> harm(n, 0.0);
    if (profile.num_harmonics > 0 && out.f0 > 0.0) {
        for (int h = 1; h <= profile.num_harmonics; ++h) {
            const double fh = h * out.f0;
            if (fh >= 0.99 * nyquist) break;
            const double amp = std::pow(profile.harmonic_decay, h);
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double w = 2.0 * std::numbers::pi * fh / sample_rate;
            for (std::size_t i = 0; i < n; ++i)
                harm[i] += amp * std::sin(w * static_cast<double>(i) + phase);
        }
        if (profile.am_depth > 0.0 && out.am_rate > 0.0) {
            const double wm = 2.0 * std::numbers::pi * out.am_rate / sample_rate;
            for (std::size_t i = 0; i < n; ++i)
                harm[i] *= 1.0 + profile.am_depth * std::sin(wm * static_cast<double>(i));
        }
    }

    out.signal = std::move(harm);
    const double harm_rms = synth_detail::rms(out.signal);
    if (profile.broadband_level > 0.0 && profile.broadband_band.second > profile.broadband_band.first) {
        auto cav = synth_detail::shaped_noise(rng, n, sample_rate, profile.broadband_band.first,
                                              profile.broadband_band.second, false);
        const double cav_rms = synth_detail::rms(cav);
        if (cav_rms > 0.0) {
            const double target = profile.broadband_level * (harm_rms > 0.0 ? harm_rms : 1.0);
            const double g = target / cav_rms;
            for (std::size_t i = 0; i < n; ++i) out.signal[i] += g * cav[i];
        }
    }

    out.noise = synth_detail::shaped_noise(rng, n, sample_rate, 0.0, nyquist, true);
    const double sig_pow = std::pow(synth_detail::rms(out.signal), 2);
    const double noise_pow = std::pow(synth_detail::rms(out.noise), 2);
    if (sig_pow <= 0.0) throw NumericError("synth: silent signal component");
    if (noise_pow > 0.0) {
        const double g = std::sqrt(sig_pow / (noise_pow * std::pow(10.0, out.snr_db / 10.0)));
        for (auto& v : out.noise) v *= g;
    }

    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        peak = std::max(peak, std::abs(out.signal[i] + out.noise[i]));
    if (peak > 0.0) {
        const double s = 0.9 / peak;
        for (auto& v : out.signal) v *= s;
        for (auto& v : out.noise) v *= s;
    }
    return out;
}

inline AudioClip synth_vessel(const VesselClassProfile& profile, double duration_sec,
                              int sample_rate, std::uint64_t seed) {
    auto parts = synth_vessel_components(profile, duration_sec, sample_rate, seed);
    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.label = profile.class_id;
    clip.source = "synth:" + profile.name + ":" + std::to_string(seed);
    clip.samples.resize(parts.signal.size());
    for (std::size_t i = 0; i < clip.samples.size(); ++i)
        clip.samples[i] = parts.signal[i] + parts.noise[i];
    return clip;
}

} // namespace gtcnn
