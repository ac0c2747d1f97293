#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtcnn/error.hpp"
#include "gtcnn/tensor.hpp"

namespace gtcnn {

namespace conv_detail {

inline void expect(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

// output rows/cols for which the kernel tap stays inside the padded input
struct TapRange {
    std::size_t lo, hi; // [lo, hi)
};

inline TapRange tap_range(std::size_t in_size, std::size_t out_size, std::size_t k,
                          std::size_t stride, std::size_t pad) {
    // valid o: 0 <= o*stride + k - pad < in_size
    std::size_t lo = 0;
    if (k < pad) lo = (pad - k + stride - 1) / stride;
    const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(in_size) - 1 + pad - k;
    std::size_t hi = 0;
    if (top >= 0) hi = std::min(out_size, static_cast<std::size_t>(top) / stride + 1);
    return {std::min(lo, hi), hi};
}

} // namespace conv_detail

/// Cross-correlation with bias: out[o] = b[o] + sum_c in[c] * w[o][c].
/// in: CxHxW, w: OxCxKxK, bias: O. H' = (H + 2p - k)/s + 1.
inline Tensor conv2d_forward(const Tensor& in, const Tensor& w, const Tensor& bias,
                             std::size_t stride, std::size_t pad) {
    using conv_detail::expect;
    expect(in.dims.size() == 3, "conv2d: input must be CxHxW, got " + in.shape_str());
    expect(w.dims.size() == 4, "conv2d: weights must be OxCxKxK, got " + w.shape_str());
    const std::size_t C = in.dims[0], H = in.dims[1], W = in.dims[2];
    const std::size_t O = w.dims[0], K = w.dims[2];
    expect(w.dims[1] == C, "conv2d: weight channels " + std::to_string(w.dims[1]) +
                               " != input channels " + std::to_string(C));
    expect(w.dims[3] == K, "conv2d: kernel must be square, got " + w.shape_str());
    expect(bias.numel() == O, "conv2d: bias length " + std::to_string(bias.numel()) +
                                  " != output channels " + std::to_string(O));
    expect(stride >= 1, "conv2d: stride must be >= 1");
    expect(H + 2 * pad >= K && W + 2 * pad >= K,
           "conv2d: kernel " + std::to_string(K) + " larger than padded input " + in.shape_str());

    const std::size_t Ho = (H + 2 * pad - K) / stride + 1;
    const std::size_t Wo = (W + 2 * pad - K) / stride + 1;
    Tensor out({O, Ho, Wo});

    for (std::size_t o = 0; o < O; ++o) {
        double* out_plane = out.ptr() + o * Ho * Wo;
        std::fill(out_plane, out_plane + Ho * Wo, bias.data[o]);
        for (std::size_t c = 0; c < C; ++c) {
            const double* in_plane = in.ptr() + c * H * W;
            const double* w_base = w.ptr() + ((o * C + c) * K) * K;
            for (std::size_t ky = 0; ky < K; ++ky) {
                const auto ry = conv_detail::tap_range(H, Ho, ky, stride, pad);
                for (std::size_t kx = 0; kx < K; ++kx) {
                    const double wv = w_base[ky * K + kx];
                    const auto rx = conv_detail::tap_range(W, Wo, kx, stride, pad);
                    for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                        const std::size_t iy = oy * stride + ky - pad;
                        const double* in_row = in_plane + iy * W + (rx.lo * stride + kx - pad);
                        double* out_row = out_plane + oy * Wo + rx.lo;
                        const std::size_t span = rx.hi - rx.lo;
                        if (stride == 1) {
                            for (std::size_t i = 0; i < span; ++i) out_row[i] += wv * in_row[i];
                        } else {
                            for (std::size_t i = 0; i < span; ++i)
                                out_row[i] += wv * in_row[i * stride];
                        }
                    }
                }
            }
        }
    }
    return out;
}

/// Recompute a single output channel of a convolution from that channel's
/// weight slice (CxKxK doubles). Used by the finite-difference checker to
/// avoid full-layer re-evaluation.
inline void conv2d_forward_channel(const Tensor& in, const double* w_slice, std::size_t K,
                                   double bias_o, std::size_t stride, std::size_t pad,
                                   double* out_plane, std::size_t Ho, std::size_t Wo) {
    const std::size_t C = in.dims[0], H = in.dims[1], W = in.dims[2];
    std::fill(out_plane, out_plane + Ho * Wo, bias_o);
    for (std::size_t c = 0; c < C; ++c) {
        const double* in_plane = in.ptr() + c * H * W;
        const double* w_base = w_slice + (c * K) * K;
        for (std::size_t ky = 0; ky < K; ++ky) {
            const auto ry = conv_detail::tap_range(H, Ho, ky, stride, pad);
            for (std::size_t kx = 0; kx < K; ++kx) {
                const double wv = w_base[ky * K + kx];
                const auto rx = conv_detail::tap_range(W, Wo, kx, stride, pad);
                for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                    const std::size_t iy = oy * stride + ky - pad;
                    const double* in_row = in_plane + iy * W + (rx.lo * stride + kx - pad);
                    double* out_row = out_plane + oy * Wo + rx.lo;
                    for (std::size_t i = 0; i < rx.hi - rx.lo; ++i)
                        out_row[i] += wv * in_row[i * stride];
                }
            }
        }
    }
}

/// Exact gradients of conv2d_forward. Gradients are accumulated (+=) so a
/// mini-batch can share one buffer; zero them before the first sample.
inline void conv2d_backward(const Tensor& grad_out, const Tensor& in, const Tensor& w,
                            std::size_t stride, std::size_t pad, Tensor& grad_in,
                            Tensor& grad_w, Tensor& grad_b) {
    using conv_detail::expect;
    const std::size_t C = in.dims[0], H = in.dims[1], W = in.dims[2];
    const std::size_t O = w.dims[0], K = w.dims[2];
    const std::size_t Ho = grad_out.dims[1], Wo = grad_out.dims[2];
    expect(grad_out.dims[0] == O, "conv2d_backward: grad channels " +
                                      std::to_string(grad_out.dims[0]) + " != " + std::to_string(O));
    expect(grad_in.same_shape(in) && grad_w.same_shape(w) && grad_b.numel() == O,
           "conv2d_backward: gradient buffer shape mismatch");

    for (std::size_t o = 0; o < O; ++o) {
        const double* g_plane = grad_out.ptr() + o * Ho * Wo;
        double acc = 0.0;
        for (std::size_t i = 0; i < Ho * Wo; ++i) acc += g_plane[i];
        grad_b.data[o] += acc;

        for (std::size_t c = 0; c < C; ++c) {
            const double* in_plane = in.ptr() + c * H * W;
            double* gin_plane = grad_in.ptr() + c * H * W;
            const double* w_base = w.ptr() + ((o * C + c) * K) * K;
            double* gw_base = grad_w.ptr() + ((o * C + c) * K) * K;
            for (std::size_t ky = 0; ky < K; ++ky) {
                const auto ry = conv_detail::tap_range(H, Ho, ky, stride, pad);
                for (std::size_t kx = 0; kx < K; ++kx) {
                    const auto rx = conv_detail::tap_range(W, Wo, kx, stride, pad);
                    const double wv = w_base[ky * K + kx];
                    double gw_acc = 0.0;
                    for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
                        const std::size_t iy = oy * stride + ky - pad;
                        const double* in_row = in_plane + iy * W + (rx.lo * stride + kx - pad);
                        double* gin_row = gin_plane + iy * W + (rx.lo * stride + kx - pad);
                        const double* g_row = g_plane + oy * Wo + rx.lo;
                        const std::size_t span = rx.hi - rx.lo;
                        if (stride == 1) {
                            for (std::size_t i = 0; i < span; ++i) {
                                gw_acc += g_row[i] * in_row[i];
                                gin_row[i] += wv * g_row[i];
                            }
                        } else {
                            for (std::size_t i = 0; i < span; ++i) {
                                gw_acc += g_row[i] * in_row[i * stride];
                                gin_row[i * stride] += wv * g_row[i];
                            }
                        }
                    }
                    gw_base[ky * K + kx] += gw_acc;
                }
            }
        }
    }
}

inline Tensor relu_forward(const Tensor& in) {
    Tensor out = in;
    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

inline Tensor relu_backward(const Tensor& grad_out, const Tensor& in) {
    Tensor grad = grad_out;
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        if (in.data[i] <= 0.0) grad.data[i] = 0.0;
    return grad;
}

/// 2x2 max pooling with stride 2; ties go to the earliest element in
/// row-major order. `argmax` records flat input indices for the backward pass.
inline Tensor maxpool_forward(const Tensor& in, std::vector<std::size_t>& argmax) {
    conv_detail::expect(in.dims.size() == 3, "maxpool: input must be CxHxW");
    const std::size_t C = in.dims[0], H = in.dims[1], W = in.dims[2];
    conv_detail::expect(H >= 2 && W >= 2, "maxpool: input " + in.shape_str() + " smaller than 2x2");
    const std::size_t Ho = (H - 2) / 2 + 1, Wo = (W - 2) / 2 + 1;
    Tensor out({C, Ho, Wo});
    argmax.assign(C * Ho * Wo, 0);
    for (std::size_t c = 0; c < C; ++c) {
        const double* plane = in.ptr() + c * H * W;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const std::size_t base = (2 * oy) * W + 2 * ox;
                std::size_t best = base;
                double best_v = plane[base];
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = base + dy * W + dx;
                        if (plane[idx] > best_v) {
                            best_v = plane[idx];
                            best = idx;
                        }
                    }
                const std::size_t flat = (c * Ho + oy) * Wo + ox;
                out.data[flat] = best_v;
                argmax[flat] = c * H * W + best;
            }
        }
    }
    return out;
}

inline Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                               const std::vector<std::size_t>& in_dims) {
    Tensor grad(std::vector<std::size_t>(in_dims));
    for (std::size_t i = 0; i < grad_out.data.size(); ++i)
        grad.data[argmax[i]] += grad_out.data[i];
    return grad;
}

/// Per-channel spatial mean: CxHxW -> C.
inline Tensor global_avg_pool_forward(const Tensor& in) {
    conv_detail::expect(in.dims.size() == 3, "gap: input must be CxHxW");
    const std::size_t C = in.dims[0], HW = in.dims[1] * in.dims[2];
    Tensor out({C});
    for (std::size_t c = 0; c < C; ++c) {
        const double* plane = in.ptr() + c * HW;
        double acc = 0.0;
        for (std::size_t i = 0; i < HW; ++i) acc += plane[i];
        out.data[c] = acc / static_cast<double>(HW);
    }
    return out;
}

inline Tensor global_avg_pool_backward(const Tensor& grad_out,
                                       const std::vector<std::size_t>& in_dims) {
    Tensor grad(std::vector<std::size_t>(in_dims));
    const std::size_t HW = in_dims[1] * in_dims[2];
    const double scale = 1.0 / static_cast<double>(HW);
    for (std::size_t c = 0; c < in_dims[0]; ++c) {
        const double g = grad_out.data[c] * scale;
        double* plane = grad.ptr() + c * HW;
        for (std::size_t i = 0; i < HW; ++i) plane[i] = g;
    }
    return grad;
}

/// w: OUTxIN, bias: OUT; input is flattened.
inline Tensor fully_connected_forward(const Tensor& in, const Tensor& w, const Tensor& bias) {
    conv_detail::expect(w.dims.size() == 2, "fc: weights must be OUTxIN");
    const std::size_t out_n = w.dims[0], in_n = w.dims[1];
    conv_detail::expect(in.numel() == in_n, "fc: input size " + std::to_string(in.numel()) +
                                                " != " + std::to_string(in_n));
    conv_detail::expect(bias.numel() == out_n, "fc: bias size mismatch");
    Tensor out({out_n});
    for (std::size_t o = 0; o < out_n; ++o) {
        const double* row = w.ptr() + o * in_n;
        double acc = bias.data[o];
        for (std::size_t i = 0; i < in_n; ++i) acc += row[i] * in.data[i];
        out.data[o] = acc;
    }
    return out;
}

inline void fully_connected_backward(const Tensor& grad_out, const Tensor& in, const Tensor& w,
                                     Tensor& grad_in, Tensor& grad_w, Tensor& grad_b) {
    const std::size_t out_n = w.dims[0], in_n = w.dims[1];
    conv_detail::expect(grad_out.numel() == out_n && grad_in.numel() == in_n &&
                            grad_w.same_shape(w) && grad_b.numel() == out_n,
                        "fc backward: shape mismatch");
    for (std::size_t o = 0; o < out_n; ++o) {
        const double g = grad_out.data[o];
        grad_b.data[o] += g;
        const double* row = w.ptr() + o * in_n;
        double* gw_row = grad_w.ptr() + o * in_n;
        for (std::size_t i = 0; i < in_n; ++i) {
            gw_row[i] += g * in.data[i];
            grad_in.data[i] += g * row[i];
        }
    }
}

/// Numerically stable softmax; output sums to 1 and preserves ordering.
inline std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) throw ConfigError("softmax: empty input");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

} // namespace gtcnn
