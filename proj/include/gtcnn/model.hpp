#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtcnn/cochleagram.hpp"
#include "gtcnn/error.hpp"
#include "gtcnn/layers.hpp"
#include "gtcnn/rng.hpp"
#include "gtcnn/tensor.hpp"

namespace gtcnn {

struct LayerSpec {
    enum class Kind { Conv, Relu, MaxPool, GlobalAvgPool, FullyConnected, Softmax };
    Kind kind = Kind::Relu;
    std::size_t kernel = 0;       // conv kernel size
    std::size_t in_channels = 0;  // conv / fc fan-in
    std::size_t out_channels = 0; // conv / fc fan-out
    std::size_t stride = 1;
    std::size_t padding = 0;

    bool has_params() const {
        return kind == Kind::Conv || kind == Kind::FullyConnected;
    }
};

inline const char* layer_kind_name(LayerSpec::Kind k) {
    switch (k) {
        case LayerSpec::Kind::Conv: return "conv";
        case LayerSpec::Kind::Relu: return "relu";
        case LayerSpec::Kind::MaxPool: return "maxpool";
        case LayerSpec::Kind::GlobalAvgPool: return "global_avg_pool";
        case LayerSpec::Kind::FullyConnected: return "fully_connected";
        case LayerSpec::Kind::Softmax: return "softmax";
    }
    return "?";
}

inline LayerSpec::Kind layer_kind_from_name(const std::string& s) {
    if (s == "conv") return LayerSpec::Kind::Conv;
    if (s == "relu") return LayerSpec::Kind::Relu;
    if (s == "maxpool") return LayerSpec::Kind::MaxPool;
    if (s == "global_avg_pool") return LayerSpec::Kind::GlobalAvgPool;
    if (s == "fully_connected") return LayerSpec::Kind::FullyConnected;
    if (s == "softmax") return LayerSpec::Kind::Softmax;
    throw FormatError(FormatError::Kind::BadSidecar, "unknown layer kind: " + s);
}

struct Model {
    std::vector<LayerSpec> layers;
    std::vector<Tensor> weights; // parallel to layers; empty for parameterless ones
    std::vector<Tensor> biases;
    std::uint64_t rng_seed = 0;
};

/// Per-parameter gradient buffers with the model's shapes. Backward passes
/// accumulate, so one buffer serves a whole mini-batch.
struct Gradients {
    std::vector<Tensor> w, b;

    static Gradients like(const Model& m) {
        Gradients g;
        g.w.reserve(m.layers.size());
        g.b.reserve(m.layers.size());
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            g.w.emplace_back(std::vector<std::size_t>(m.weights[i].dims));
            g.b.emplace_back(std::vector<std::size_t>(m.biases[i].dims));
        }
        return g;
    }

    void zero() {
        for (auto& t : w) t.zero();
        for (auto& t : b) t.zero();
    }

    void add(const Gradients& other) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            for (std::size_t j = 0; j < w[i].data.size(); ++j) w[i].data[j] += other.w[i].data[j];
            for (std::size_t j = 0; j < b[i].data.size(); ++j) b[i].data[j] += other.b[i].data[j];
        }
    }
};

/// Adam first/second moments mirroring the parameters, plus the step count.
struct AdamState {
    std::vector<Tensor> m_w, v_w, m_b, v_b;
    std::uint64_t step = 0;

    static AdamState like(const Model& m) {
        AdamState s;
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            s.m_w.emplace_back(std::vector<std::size_t>(m.weights[i].dims));
            s.v_w.emplace_back(std::vector<std::size_t>(m.weights[i].dims));
            s.m_b.emplace_back(std::vector<std::size_t>(m.biases[i].dims));
            s.v_b.emplace_back(std::vector<std::size_t>(m.biases[i].dims));
        }
        return s;
    }
};

struct ForwardCache {
    std::vector<Tensor> acts; // acts[i] = input to layer i; back() = final output
    std::vector<std::vector<std::size_t>> pool_idx; // per layer, maxpool only
};

/// Run the network. With stop_before_softmax the trailing softmax layer is
/// skipped and the raw logits come back (training pairs softmax with the
/// loss). When `cache` is given every layer input is retained for backward.
inline Tensor model_forward(const Model& m, const Tensor& image, ForwardCache* cache = nullptr,
                            bool stop_before_softmax = false) {
    if (cache) {
        cache->acts.clear();
        cache->pool_idx.assign(m.layers.size(), {});
    }
    Tensor cur = image;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const auto& spec = m.layers[i];
        if (spec.kind == LayerSpec::Kind::Softmax && stop_before_softmax) break;
        if (cache) cache->acts.push_back(cur);
        const Tensor& in = cache ? cache->acts.back() : cur;
        switch (spec.kind) {
            case LayerSpec::Kind::Conv:
                cur = conv2d_forward(in, m.weights[i], m.biases[i], spec.stride, spec.padding);
                break;
            case LayerSpec::Kind::Relu:
                cur = relu_forward(in);
                break;
            case LayerSpec::Kind::MaxPool: {
                std::vector<std::size_t> idx;
                cur = maxpool_forward(in, idx);
                if (cache) cache->pool_idx[i] = std::move(idx);
                break;
            }
            case LayerSpec::Kind::GlobalAvgPool:
                cur = global_avg_pool_forward(in);
                break;
            case LayerSpec::Kind::FullyConnected:
                cur = fully_connected_forward(in, m.weights[i], m.biases[i]);
                break;
            case LayerSpec::Kind::Softmax: {
                auto p = softmax(std::vector<double>(in.data.begin(), in.data.end()));
                cur = Tensor({p.size()});
                cur.data = std::move(p);
                break;
            }
        }
    }
    if (cache) cache->acts.push_back(cur);
    return cur;
}

/// Backpropagate d(loss)/d(logits) through everything below the softmax.
/// Parameter gradients are accumulated into `grads`.
inline void model_backward(const Model& m, const ForwardCache& cache, Tensor grad,
                           Gradients& grads) {
    std::size_t last = m.layers.size();
    while (last > 0 && m.layers[last - 1].kind == LayerSpec::Kind::Softmax) --last;
    if (cache.acts.size() != last + 1)
        throw ConfigError("model_backward: cache does not match a logits forward pass");

    for (std::size_t ii = last; ii-- > 0;) {
        const auto& spec = m.layers[ii];
        const Tensor& in = cache.acts[ii];
        switch (spec.kind) {
            case LayerSpec::Kind::Conv: {
                Tensor gin(std::vector<std::size_t>(in.dims));
                conv2d_backward(grad, in, m.weights[ii], spec.stride, spec.padding, gin,
                                grads.w[ii], grads.b[ii]);
                grad = std::move(gin);
                break;
            }
            case LayerSpec::Kind::Relu:
                grad = relu_backward(grad, in);
                break;
            case LayerSpec::Kind::MaxPool:
                grad = maxpool_backward(grad, cache.pool_idx[ii], in.dims);
                break;
            case LayerSpec::Kind::GlobalAvgPool:
                grad = global_avg_pool_backward(grad, in.dims);
                break;
            case LayerSpec::Kind::FullyConnected: {
                Tensor gin(std::vector<std::size_t>(in.dims));
                fully_connected_backward(grad, in, m.weights[ii], gin, grads.w[ii], grads.b[ii]);
                grad = std::move(gin);
                break;
            }
            case LayerSpec::Kind::Softmax:
                throw ConfigError("model_backward: softmax below the top is unsupported");
        }
    }
}

inline std::size_t count_parameters(const Model& m) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.layers.size(); ++i) n += m.weights[i].numel() + m.biases[i].numel();
    return n;
}

/// The classifier: three stages of shrinking kernels (7x7 -> 5x5 -> 3x3),
/// global average pooling, and a linear head. 1,607,749 parameters.
inline Model build_reference_model(std::size_t height, std::size_t width,
                                   std::size_t num_classes = 5, std::uint64_t seed = 0) {
    if (height < 32 || width < 32)
        throw ConfigError("build_reference_model: input must be at least 32x32 for the pool chain");

    Model m;
    m.rng_seed = seed;
    auto conv = [](std::size_t k, std::size_t cin, std::size_t cout, std::size_t stride,
                   std::size_t pad) {
        LayerSpec s;
        s.kind = LayerSpec::Kind::Conv;
        s.kernel = k;
        s.in_channels = cin;
        s.out_channels = cout;
        s.stride = stride;
        s.padding = pad;
        return s;
    };
    auto plain = [](LayerSpec::Kind kind) {
        LayerSpec s;
        s.kind = kind;
        return s;
    };
    auto fc = [](std::size_t cin, std::size_t cout) {
        LayerSpec s;
        s.kind = LayerSpec::Kind::FullyConnected;
        s.in_channels = cin;
        s.out_channels = cout;
        return s;
    };

    m.layers = {
        conv(7, 3, 32, 2, 3),  plain(LayerSpec::Kind::Relu), plain(LayerSpec::Kind::MaxPool),
        conv(5, 32, 64, 1, 2), plain(LayerSpec::Kind::Relu), plain(LayerSpec::Kind::MaxPool),
        conv(3, 64, 128, 1, 1), plain(LayerSpec::Kind::Relu), plain(LayerSpec::Kind::MaxPool),
        conv(3, 128, 256, 1, 1), plain(LayerSpec::Kind::Relu), plain(LayerSpec::Kind::MaxPool),
        conv(3, 256, 512, 1, 1), plain(LayerSpec::Kind::Relu),
        plain(LayerSpec::Kind::GlobalAvgPool),
        fc(512, num_classes),
        plain(LayerSpec::Kind::Softmax),
    };

    m.weights.resize(m.layers.size());
    m.biases.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const auto& spec = m.layers[i];
        if (!spec.has_params()) {
            m.weights[i] = Tensor({0});
            m.biases[i] = Tensor({0});
            continue;
        }
        std::size_t fan_in;
        if (spec.kind == LayerSpec::Kind::Conv) {
            m.weights[i] = Tensor({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
            fan_in = spec.in_channels * spec.kernel * spec.kernel;
        } else {
            m.weights[i] = Tensor({spec.out_channels, spec.in_channels});
            fan_in = spec.in_channels;
        }
        m.biases[i] = Tensor({spec.out_channels});
        Rng rng(Rng::derive(seed, i));
        const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
        for (auto& v : m.weights[i].data) v = rng.uniform(-bound, bound);
        // biases start at zero
    }
    return m;
}

inline Tensor image_to_tensor(const FeatureImage& img) {
    Tensor t({3, img.height, img.width});
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x)
                t.data[(c * img.height + y) * img.width + x] = img.at(y, x, c);
    return t;
}

inline std::vector<double> predict(const Model& m, const FeatureImage& img) {
    Tensor out = model_forward(m, image_to_tensor(img));
    return {out.data.begin(), out.data.end()};
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check
// ---------------------------------------------------------------------------

namespace gradcheck_detail {

inline double loss_from_logits(const std::vector<double>& logits, int label) {
    auto p = softmax(logits);
    return -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
}

// forward from layer `from` given its input activation, to the logits
inline double resume_loss(const Model& m, std::size_t from, Tensor cur, int label,
                          std::size_t last) {
    for (std::size_t i = from; i < last; ++i) {
        const auto& spec = m.layers[i];
        switch (spec.kind) {
            case LayerSpec::Kind::Conv:
                cur = conv2d_forward(cur, m.weights[i], m.biases[i], spec.stride, spec.padding);
                break;
            case LayerSpec::Kind::Relu:
                cur = relu_forward(cur);
                break;
            case LayerSpec::Kind::MaxPool: {
                std::vector<std::size_t> idx;
                cur = maxpool_forward(cur, idx);
                break;
            }
            case LayerSpec::Kind::GlobalAvgPool:
                cur = global_avg_pool_forward(cur);
                break;
            case LayerSpec::Kind::FullyConnected:
                cur = fully_connected_forward(cur, m.weights[i], m.biases[i]);
                break;
            case LayerSpec::Kind::Softmax:
                break;
        }
    }
    return loss_from_logits({cur.data.begin(), cur.data.end()}, label);
}

} // namespace gradcheck_detail

/// Central-difference check of the full backward pass on one sample.
/// A seeded `fraction` of each parameter tensor is probed; perturbed conv
/// channels are recomputed in isolation and the forward pass resumes from
/// cached activations, which keeps the probe count affordable.
inline double gradient_check(const Model& m, const Tensor& image, int label,
                             double fraction = 0.05, std::uint64_t seed = 1234,
                             double step = 1e-5) {
    ForwardCache cache;
    Tensor logits_t = model_forward(m, image, &cache, /*stop_before_softmax=*/true);
    std::vector<double> logits(logits_t.data.begin(), logits_t.data.end());
    auto probs = softmax(logits);

    Tensor grad_logits({probs.size()});
    for (std::size_t i = 0; i < probs.size(); ++i)
        grad_logits.data[i] = probs[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);

    Gradients analytic = Gradients::like(m);
    model_backward(m, cache, grad_logits, analytic);

    std::size_t last = m.layers.size();
    while (last > 0 && m.layers[last - 1].kind == LayerSpec::Kind::Softmax) --last;

    Rng rng(seed);
    double max_rel = 0.0;

    auto probe = [&](std::size_t layer, bool is_weight, std::size_t flat) {
        const auto& spec = m.layers[layer];
        const Tensor& cached_out = cache.acts[layer + 1];
        auto eval = [&](double delta) {
            Tensor out = cached_out;
            if (spec.kind == LayerSpec::Kind::Conv) {
                const std::size_t plane = out.dims[1] * out.dims[2];
                const std::size_t per_out = m.weights[layer].numel() / spec.out_channels;
                const std::size_t oc = is_weight ? flat / per_out : flat;
                if (is_weight) {
                    // only channel oc changes; rebuild it from its weight
                    // slice with the tweaked tap
                    std::vector<double> slice(m.weights[layer].ptr() + oc * per_out,
                                              m.weights[layer].ptr() + (oc + 1) * per_out);
                    slice[flat % per_out] += delta;
                    conv2d_forward_channel(cache.acts[layer], slice.data(), spec.kernel,
                                           m.biases[layer].data[oc], spec.stride, spec.padding,
                                           out.ptr() + oc * plane, out.dims[1], out.dims[2]);
                } else {
                    double* p = out.ptr() + oc * plane;
                    for (std::size_t i = 0; i < plane; ++i) p[i] += delta;
                }
            } else { // fully connected
                const std::size_t in_n = m.weights[layer].dims[1];
                if (is_weight) {
                    const std::size_t o = flat / in_n, i = flat % in_n;
                    out.data[o] += delta * cache.acts[layer].data[i];
                } else {
                    out.data[flat] += delta;
                }
            }
            return gradcheck_detail::resume_loss(m, layer + 1, std::move(out), label, last);
        };

        const double lp = eval(step), lm = eval(-step);
        const double numeric = (lp - lm) / (2.0 * step);
        const double a = is_weight ? analytic.w[layer].data[flat] : analytic.b[layer].data[flat];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-5});
        max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    };

    for (std::size_t layer = 0; layer < last; ++layer) {
        if (!m.layers[layer].has_params()) continue;
        // conv weight copies in `probe` are cheap only if we walk one output
        // channel's slice; sample indices per tensor instead of globally
        for (bool is_weight : {true, false}) {
            const std::size_t n = is_weight ? m.weights[layer].numel() : m.biases[layer].numel();
            if (n == 0) continue;
            std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                         std::llround(fraction * static_cast<double>(n))));
            k = std::min(k, n);
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            rng.shuffle(idx);
            for (std::size_t j = 0; j < k; ++j) probe(layer, is_weight, idx[j]);
        }
    }
    return max_rel;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------
// Layout: "GTCN" magic, u32 format version, u64 header length, JSON header
// (layer specs, seed, optimizer step), then raw little-endian f64 buffers:
// per layer weights then biases, and when optimizer state is present the
// Adam m then v moments in the same order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Model model;
    std::optional<AdamState> adam;
};

namespace ckpt_detail {

inline void write_raw(std::ofstream& out, const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
}

inline void read_raw(std::ifstream& in, Tensor& t, const std::filesystem::path& path) {
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!in)
        throw FormatError(FormatError::Kind::Truncated,
                          path.string() + ": checkpoint ends mid-buffer");
}

} // namespace ckpt_detail

inline void save_checkpoint(const Model& m, const AdamState* adam,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());

    nlohmann::ordered_json header;
    header["seed"] = m.rng_seed;
    header["layers"] = nlohmann::ordered_json::array();
    for (const auto& spec : m.layers) {
        header["layers"].push_back({{"kind", layer_kind_name(spec.kind)},
                                    {"kernel", spec.kernel},
                                    {"in", spec.in_channels},
                                    {"out", spec.out_channels},
                                    {"stride", spec.stride},
                                    {"padding", spec.padding}});
    }
    header["optimizer"] = adam ? nlohmann::ordered_json{{"step", adam->step}}
                               : nlohmann::ordered_json(nullptr);
    const std::string json = header.dump();

    out.write("GTCN", 4);
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const std::uint64_t len = json.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(json.data(), static_cast<std::streamsize>(json.size()));

    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        ckpt_detail::write_raw(out, m.weights[i]);
        ckpt_detail::write_raw(out, m.biases[i]);
    }
    if (adam) {
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            ckpt_detail::write_raw(out, adam->m_w[i]);
            ckpt_detail::write_raw(out, adam->m_b[i]);
        }
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            ckpt_detail::write_raw(out, adam->v_w[i]);
            ckpt_detail::write_raw(out, adam->v_b[i]);
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GTCN", 4) != 0)
        throw FormatError(FormatError::Kind::BadMagic, path.string() + ": not a checkpoint file");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || version != kCheckpointVersion)
        throw FormatError(FormatError::Kind::MalformedHeader,
                          path.string() + ": unsupported checkpoint version " +
                              std::to_string(version));
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    if (!in) throw FormatError(FormatError::Kind::Truncated, path.string() + ": missing header");
    std::string json(len, '\0');
    in.read(json.data(), static_cast<std::streamsize>(len));
    if (!in) throw FormatError(FormatError::Kind::Truncated, path.string() + ": truncated header");

    nlohmann::ordered_json header;
    try {
        header = nlohmann::ordered_json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(FormatError::Kind::MalformedHeader,
                          path.string() + ": bad header json: " + e.what());
    }

    Checkpoint ck;
    ck.model.rng_seed = header.at("seed").get<std::uint64_t>();
    for (const auto& lj : header.at("layers")) {
        LayerSpec spec;
        spec.kind = layer_kind_from_name(lj.at("kind").get<std::string>());
        spec.kernel = lj.at("kernel").get<std::size_t>();
        spec.in_channels = lj.at("in").get<std::size_t>();
        spec.out_channels = lj.at("out").get<std::size_t>();
        spec.stride = lj.at("stride").get<std::size_t>();
        spec.padding = lj.at("padding").get<std::size_t>();
        ck.model.layers.push_back(spec);
    }

    for (const auto& spec : ck.model.layers) {
        if (spec.kind == LayerSpec::Kind::Conv) {
            ck.model.weights.emplace_back(std::vector<std::size_t>{
                spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
            ck.model.biases.emplace_back(std::vector<std::size_t>{spec.out_channels});
        } else if (spec.kind == LayerSpec::Kind::FullyConnected) {
            ck.model.weights.emplace_back(std::vector<std::size_t>{spec.out_channels, spec.in_channels});
            ck.model.biases.emplace_back(std::vector<std::size_t>{spec.out_channels});
        } else {
            ck.model.weights.emplace_back(std::vector<std::size_t>{0});
            ck.model.biases.emplace_back(std::vector<std::size_t>{0});
        }
    }
    for (std::size_t i = 0; i < ck.model.layers.size(); ++i) {
        ckpt_detail::read_raw(in, ck.model.weights[i], path);
        ckpt_detail::read_raw(in, ck.model.biases[i], path);
    }

    if (!header.at("optimizer").is_null()) {
        AdamState st = AdamState::like(ck.model);
        st.step = header.at("optimizer").at("step").get<std::uint64_t>();
        for (std::size_t i = 0; i < ck.model.layers.size(); ++i) {
            ckpt_detail::read_raw(in, st.m_w[i], path);
            ckpt_detail::read_raw(in, st.m_b[i], path);
        }
        for (std::size_t i = 0; i < ck.model.layers.size(); ++i) {
            ckpt_detail::read_raw(in, st.v_w[i], path);
            ckpt_detail::read_raw(in, st.v_b[i], path);
        }
        ck.adam = std::move(st);
    }
    return ck;
}

} // namespace gtcnn
