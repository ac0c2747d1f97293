#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "gtcnn/error.hpp"
#include "gtcnn/model.hpp"
#include "gtcnn/rng.hpp"

namespace gtcnn {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    // batch items evaluated concurrently; gradients are still reduced in a
    // fixed order so a given thread count reproduces bit-identical runs
    std::size_t threads = 1;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("train: betas must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be > 0");
    }
};

/// Mean categorical cross-entropy over a batch (natural log). Also returns
/// the combined softmax+CCE gradient with respect to the logits, (p - y)/N.
struct CceResult {
    double loss = 0.0;
    std::vector<std::vector<double>> grad_logits;
};

inline CceResult cce_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<std::vector<double>>& onehot) {
    if (probs.empty() || probs.size() != onehot.size())
        throw ConfigError("cce_loss: batch size mismatch");
    const std::size_t n = probs.size();
    const std::size_t c = probs[0].size();

    CceResult r;
    r.grad_logits.assign(n, std::vector<double>(c, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        if (probs[j].size() != c || onehot[j].size() != c)
            throw ConfigError("cce_loss: ragged rows");
        double row_sum = 0.0;
        int ones = 0;
        for (double y : onehot[j]) {
            if (y != 0.0 && y != 1.0) throw ConfigError("cce_loss: target row is not one-hot");
            if (y == 1.0) ++ones;
            row_sum += y;
        }
        if (ones != 1 || row_sum != 1.0) throw ConfigError("cce_loss: target row is not one-hot");
        for (std::size_t i = 0; i < c; ++i) {
            if (onehot[j][i] == 1.0)
                r.loss -= std::log(std::max(probs[j][i], 1e-300));
            r.grad_logits[j][i] = (probs[j][i] - onehot[j][i]) / static_cast<double>(n);
        }
    }
    r.loss /= static_cast<double>(n);
    return r;
}

/// Bias-corrected Adam update applied in place.
inline void adam_step(Model& model, const Gradients& grads, AdamState& st,
                      const TrainConfig& cfg) {
    ++st.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    auto update = [&](Tensor& theta, const Tensor& g, Tensor& mom, Tensor& vel) {
        if (theta.numel() != g.numel()) throw ConfigError("adam_step: shape mismatch");
        for (std::size_t i = 0; i < theta.data.size(); ++i) {
            const double gi = g.data[i];
            mom.data[i] = cfg.beta1 * mom.data[i] + (1.0 - cfg.beta1) * gi;
            vel.data[i] = cfg.beta2 * vel.data[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = mom.data[i] / bc1;
            const double vhat = vel.data[i] / bc2;
            theta.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    };
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        update(model.weights[i], grads.w[i], st.m_w[i], st.v_w[i]);
        update(model.biases[i], grads.b[i], st.m_b[i], st.v_b[i]);
    }
}

struct Sample {
    Tensor image; // 3xHxW
    int label = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    Model best_model;
    double best_val_acc = -1.0;
    std::size_t best_epoch = 0;
    Model final_model;   // end-of-training weights
    AdamState final_adam; // optimizer state matching final_model
};

namespace train_detail {

// forward + loss + gradient accumulation for samples [lo, hi)
inline double run_chunk(const Model& model, const std::vector<Sample>& data,
                        const std::vector<std::size_t>& order, std::size_t lo, std::size_t hi,
                        double inv_batch, Gradients& grads) {
    ForwardCache cache;
    double loss = 0.0;
    for (std::size_t s = lo; s < hi; ++s) {
        const Sample& sample = data[order[s]];
        Tensor logits = model_forward(model, sample.image, &cache, true);
        auto probs = softmax({logits.data.begin(), logits.data.end()});
        loss -= std::log(std::max(probs[static_cast<std::size_t>(sample.label)], 1e-300));
        Tensor grad({probs.size()});
        for (std::size_t i = 0; i < probs.size(); ++i) {
            grad.data[i] =
                (probs[i] - (static_cast<int>(i) == sample.label ? 1.0 : 0.0)) * inv_batch;
        }
        model_backward(model, cache, std::move(grad), grads);
    }
    return loss;
}

inline std::pair<double, double> evaluate(const Model& model, const std::vector<Sample>& data) {
    if (data.empty()) return {0.0, 0.0};
    double loss = 0.0;
    std::size_t correct = 0;
    for (const auto& sample : data) {
        Tensor logits = model_forward(model, sample.image, nullptr, true);
        auto probs = softmax({logits.data.begin(), logits.data.end()});
        loss -= std::log(std::max(probs[static_cast<std::size_t>(sample.label)], 1e-300));
        const std::size_t arg =
            std::distance(probs.begin(), std::max_element(probs.begin(), probs.end()));
        if (static_cast<int>(arg) == sample.label) ++correct;
    }
    return {loss / static_cast<double>(data.size()),
            static_cast<double>(correct) / static_cast<double>(data.size())};
}

} // namespace train_detail

/// Seeded mini-batch training loop. Keeps the checkpoint with the best
/// validation accuracy (earliest epoch wins ties). Deterministic for a fixed
/// config, including the thread count.
inline TrainResult train(const Model& initial, const std::vector<Sample>& train_set,
                         const std::vector<Sample>& val_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty()) throw ConfigError("train: empty training split");

    Model model = initial;
    AdamState adam = AdamState::like(model);

    TrainResult result;
    result.best_model = model;
    result.best_epoch = 0;
    {
        auto [vl, va] = train_detail::evaluate(model, val_set);
        result.best_val_acc = va;
    }

    const std::size_t threads =
        std::max<std::size_t>(1, std::min(cfg.threads, std::thread::hardware_concurrency()
                                                           ? std::thread::hardware_concurrency()
                                                           : 1));
    std::vector<Gradients> grad_parts;
    for (std::size_t t = 0; t < threads; ++t) grad_parts.push_back(Gradients::like(model));

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(Rng::derive(cfg.seed, 0x5u + epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0, batch_idx = 0; start < order.size();
             start += cfg.batch_size, ++batch_idx) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::size_t batch = end - start;
            const double inv_batch = 1.0 / static_cast<double>(batch);

            double batch_loss = 0.0;
            if (threads == 1 || batch < 2 * threads) {
                grad_parts[0].zero();
                batch_loss =
                    train_detail::run_chunk(model, train_set, order, start, end, inv_batch,
                                            grad_parts[0]);
            } else {
                // fixed contiguous chunks per thread; merge in thread order
                std::vector<double> losses(threads, 0.0);
                std::vector<std::thread> pool;
                const std::size_t chunk = (batch + threads - 1) / threads;
                for (std::size_t t = 0; t < threads; ++t) {
                    grad_parts[t].zero();
                    const std::size_t lo = start + std::min(batch, t * chunk);
                    const std::size_t hi = start + std::min(batch, (t + 1) * chunk);
                    pool.emplace_back([&, t, lo, hi] {
                        losses[t] = train_detail::run_chunk(model, train_set, order, lo, hi,
                                                            inv_batch, grad_parts[t]);
                    });
                }
                for (auto& th : pool) th.join();
                for (std::size_t t = 1; t < threads; ++t) grad_parts[0].add(grad_parts[t]);
                for (double l : losses) batch_loss += l;
            }
            batch_loss *= inv_batch;

            if (!std::isfinite(batch_loss))
                throw NumericError("train: loss diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_idx));

            adam_step(model, grad_parts[0], adam, cfg);
            epoch_loss += batch_loss * static_cast<double>(batch);
        }
        epoch_loss /= static_cast<double>(order.size());

        auto [val_loss, val_acc] = train_detail::evaluate(model, val_set);
        result.history.push_back({epoch, epoch_loss, val_loss, val_acc});
        if (val_acc > result.best_val_acc) {
            result.best_val_acc = val_acc;
            result.best_model = model;
            result.best_epoch = epoch;
        }
    }

    if (cfg.epochs > 0 && val_set.empty()) result.best_model = model; // fall back to final
    result.final_adam = std::move(adam);
    result.final_model = std::move(model);
    return result;
}

inline void write_history_csv(const std::vector<EpochStats>& history,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,train_loss,val_loss,val_acc\n";
    char buf[160];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                      e.val_loss, e.val_acc);
        out << buf;
    }
}

} // namespace gtcnn
