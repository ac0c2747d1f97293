#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtcnn/audio.hpp"
#include "gtcnn/error.hpp"
#include "gtcnn/rng.hpp"
#include "gtcnn/synth.hpp"

namespace gtcnn {

using ordered_json = nlohmann::ordered_json;

struct ManifestEntry {
    std::string file; // relative to the dataset root
    int class_id = 0;
    std::string class_name;
    std::string split; // "train" | "val" | "test"
    double duration_sec = 0.0;
    double snr_db = 0.0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::uint64_t seed = 0;
    std::array<double, 3> split_fractions{0.8, 0.1, 0.1};
    std::vector<VesselClassProfile> profiles;
    std::filesystem::path root;
};

namespace dataset_detail {

// largest-remainder allocation of n items to the three splits; every count
// differs from the exact quota by less than one
inline std::array<std::size_t, 3> allocate(std::size_t n, const std::array<double, 3>& f) {
    std::array<std::size_t, 3> base{};
    std::array<double, 3> rem{};
    std::size_t used = 0;
    for (int i = 0; i < 3; ++i) {
        const double quota = static_cast<double>(n) * f[i];
        base[i] = static_cast<std::size_t>(std::floor(quota + 1e-12));
        rem[i] = quota - static_cast<double>(base[i]);
        used += base[i];
    }
    for (std::size_t extra = n - used; extra > 0; --extra) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (rem[i] > rem[best]) best = i;
        ++base[best];
        rem[best] = -1.0;
    }
    return base;
}

inline ordered_json profile_to_json(const VesselClassProfile& p) {
    return ordered_json{{"class_id", p.class_id},
                        {"name", p.name},
                        {"f0_range", {p.f0_range.first, p.f0_range.second}},
                        {"num_harmonics", p.num_harmonics},
                        {"harmonic_decay", p.harmonic_decay},
                        {"am_rate_range", {p.am_rate_range.first, p.am_rate_range.second}},
                        {"am_depth", p.am_depth},
                        {"broadband_band", {p.broadband_band.first, p.broadband_band.second}},
                        {"broadband_level", p.broadband_level},
                        {"snr_range", {p.snr_range.first, p.snr_range.second}}};
}

inline VesselClassProfile profile_from_json(const ordered_json& j) {
    VesselClassProfile p;
    p.class_id = j.at("class_id").get<int>();
    p.name = j.at("name").get<std::string>();
    p.f0_range = {j.at("f0_range")[0].get<double>(), j.at("f0_range")[1].get<double>()};
    p.num_harmonics = j.at("num_harmonics").get<int>();
    p.harmonic_decay = j.at("harmonic_decay").get<double>();
    p.am_rate_range = {j.at("am_rate_range")[0].get<double>(), j.at("am_rate_range")[1].get<double>()};
    p.am_depth = j.at("am_depth").get<double>();
    p.broadband_band = {j.at("broadband_band")[0].get<double>(), j.at("broadband_band")[1].get<double>()};
    p.broadband_level = j.at("broadband_level").get<double>();
    p.snr_range = {j.at("snr_range")[0].get<double>(), j.at("snr_range")[1].get<double>()};
    return p;
}

} // namespace dataset_detail

inline void validate_fractions(const std::array<double, 3>& f) {
    double sum = 0.0;
    for (double x : f) {
        if (x < 0.0) throw ConfigError("split fractions must be non-negative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

/// Render per_class clips per profile under out_dir/<class_name>/ and build a
/// stratified (train, val, test) manifest. Pure function of (arguments, seed).
inline DatasetManifest make_dataset(const std::vector<VesselClassProfile>& profiles,
                                    std::size_t per_class, double duration_sec, int sample_rate,
                                    std::uint64_t seed, const std::filesystem::path& out_dir,
                                    std::array<double, 3> fractions = {0.8, 0.1, 0.1}) {
    if (per_class < 1) throw ConfigError("make_dataset: per_class must be >= 1");
    validate_fractions(fractions);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("make_dataset: cannot create " + out_dir.string());

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.split_fractions = fractions;
    manifest.profiles = profiles;
    manifest.root = out_dir;

    static const char* kSplitNames[3] = {"train", "val", "test"};

    for (const auto& profile : profiles) {
        const auto dir = out_dir / profile.name;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("make_dataset: cannot create " + dir.string());

        // per-clip split tags: stratified shuffle within the class
        const auto counts = dataset_detail::allocate(per_class, fractions);
        std::vector<int> tags(per_class);
        std::size_t pos = 0;
        for (int s = 0; s < 3; ++s)
            for (std::size_t i = 0; i < counts[s]; ++i) tags[pos++] = s;
        Rng split_rng(Rng::derive(seed, 1000 + static_cast<std::uint64_t>(profile.class_id)));
        split_rng.shuffle(tags);

        for (std::size_t i = 0; i < per_class; ++i) {
            const std::uint64_t clip_seed =
                Rng::derive(seed, static_cast<std::uint64_t>(profile.class_id) * 1000003ULL + i);
            auto parts = synth_vessel_components(profile, duration_sec, sample_rate, clip_seed);

            AudioClip clip;
            clip.sample_rate = sample_rate;
            clip.label = profile.class_id;
            clip.samples.resize(parts.signal.size());
            for (std::size_t t = 0; t < clip.samples.size(); ++t)
                clip.samples[t] = parts.signal[t] + parts.noise[t];

            char name[64];
            std::snprintf(name, sizeof(name), "%llu_%04zu.wav",
                          static_cast<unsigned long long>(seed), i);
            const auto rel = std::filesystem::path(profile.name) / name;
            write_wav(clip, out_dir / rel);

            ManifestEntry entry;
            entry.file = rel.generic_string();
            entry.class_id = profile.class_id;
            entry.class_name = profile.name;
            entry.split = kSplitNames[tags[i]];
            entry.duration_sec = duration_sec;
            entry.snr_db = parts.snr_db;
            manifest.entries.push_back(std::move(entry));
        }
    }
    return manifest;
}

/// Manifest persistence: JSONL entries plus a JSON header file.
inline void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir) {
    std::ofstream lines(dir / "manifest.jsonl");
    if (!lines) throw IoError("cannot write manifest in " + dir.string());
    for (const auto& e : manifest.entries) {
        ordered_json j{{"file", e.file},       {"class_id", e.class_id},
                       {"class", e.class_name}, {"split", e.split},
                       {"duration_sec", e.duration_sec}, {"snr_db", e.snr_db}};
        lines << j.dump() << "\n";
    }

    ordered_json header{{"seed", manifest.seed},
                        {"fractions", manifest.split_fractions},
                        {"profiles", ordered_json::array()}};
    for (const auto& p : manifest.profiles)
        header["profiles"].push_back(dataset_detail::profile_to_json(p));
    std::ofstream hdr(dir / "manifest_header.json");
    hdr << header.dump(2) << "\n";
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
    std::ifstream lines(dir / "manifest.jsonl");
    if (!lines) throw IoError("missing manifest: " + (dir / "manifest.jsonl").string());

    DatasetManifest manifest;
    manifest.root = dir;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(FormatError::Kind::BadSidecar,
                              "manifest.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry entry;
        entry.file = j.at("file").get<std::string>();
        entry.class_id = j.at("class_id").get<int>();
        entry.class_name = j.at("class").get<std::string>();
        entry.split = j.at("split").get<std::string>();
        entry.duration_sec = j.at("duration_sec").get<double>();
        entry.snr_db = j.at("snr_db").get<double>();
        manifest.entries.push_back(std::move(entry));
    }

    std::ifstream hdr(dir / "manifest_header.json");
    if (hdr) {
        ordered_json header = ordered_json::parse(hdr, nullptr, true);
        manifest.seed = header.at("seed").get<std::uint64_t>();
        auto f = header.at("fractions");
        manifest.split_fractions = {f[0].get<double>(), f[1].get<double>(), f[2].get<double>()};
        for (const auto& pj : header.at("profiles"))
            manifest.profiles.push_back(dataset_detail::profile_from_json(pj));
    }
    return manifest;
}

/// Clips of one split, loaded in manifest order.
inline std::vector<std::pair<AudioClip, int>> load_split(const DatasetManifest& manifest,
                                                         const std::string& split) {
    std::vector<std::pair<AudioClip, int>> out;
    for (const auto& e : manifest.entries) {
        if (e.split != split) continue;
        const auto path = manifest.root / e.file;
        if (!std::filesystem::exists(path))
            throw IoError("load_split: missing file " + path.string());
        auto clip = read_wav(path);
        clip.label = e.class_id;
        out.emplace_back(std::move(clip), e.class_id);
    }
    return out;
}

} // namespace gtcnn
