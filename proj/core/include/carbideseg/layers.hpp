#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "carbideseg/tensor.hpp"

namespace carbideseg::net {

// ---- 2-D convolution, stride 1, "same" padding (pad = k/2, k odd) ----
// weight layout [out_c, in_c, k, k], bias [out_c].

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& in, const Tensor4<T>& weight,
                          const std::vector<T>& bias) {
    const int k = weight.h;
    const int pad = k / 2;
    if (weight.c != in.c)
        throw std::invalid_argument("conv2d: input channels do not match weight");
    const int H = in.h, W = in.w;
    Tensor4<T> out(in.n, weight.n, H, W);
    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < weight.n; ++oc) {
            T* op = out.plane(n, oc);
            std::fill(op, op + static_cast<std::size_t>(H) * W, bias[oc]);
            for (int ic = 0; ic < in.c; ++ic) {
                const T* ip = in.plane(n, ic);
                const T* wp = weight.plane(oc, ic);
                for (int ky = 0; ky < k; ++ky) {
                    const int dy = ky - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    for (int kx = 0; kx < k; ++kx) {
                        const int dx = kx - pad;
                        const T wv = wp[static_cast<std::size_t>(ky) * k + kx];
                        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                        for (int y = y0; y < y1; ++y) {
                            T* orow = op + static_cast<std::size_t>(y) * W;
                            const T* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
                            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
void conv2d_backward(const Tensor4<T>& in, const Tensor4<T>& weight,
                     const Tensor4<T>& grad_out, Tensor4<T>& grad_in,
                     Tensor4<T>& grad_weight, std::vector<T>& grad_bias) {
    const int k = weight.h;
    const int pad = k / 2;
    const int H = in.h, W = in.w;
    grad_in = Tensor4<T>(in.n, in.c, H, W);
    grad_weight = Tensor4<T>(weight.n, weight.c, k, k);
    grad_bias.assign(weight.n, T(0));

    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < weight.n; ++oc) {
            const T* gp = grad_out.plane(n, oc);
            T acc_b = T(0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i) acc_b += gp[i];
            grad_bias[oc] += acc_b;
            for (int ic = 0; ic < in.c; ++ic) {
                const T* ip = in.plane(n, ic);
                T* gip = grad_in.plane(n, ic);
                const T* wp = weight.plane(oc, ic);
                T* gwp = grad_weight.plane(oc, ic);
                for (int ky = 0; ky < k; ++ky) {
                    const int dy = ky - pad;
                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                    for (int kx = 0; kx < k; ++kx) {
                        const int dx = kx - pad;
                        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                        const T wv = wp[static_cast<std::size_t>(ky) * k + kx];
                        T acc_w = T(0);
                        for (int y = y0; y < y1; ++y) {
                            const T* grow = gp + static_cast<std::size_t>(y) * W;
                            const T* irow = ip + static_cast<std::size_t>(y + dy) * W + dx;
                            T* girow = gip + static_cast<std::size_t>(y + dy) * W + dx;
                            for (int x = x0; x < x1; ++x) {
                                acc_w += grow[x] * irow[x];
                                girow[x] += wv * grow[x];
                            }
                        }
                        gwp[static_cast<std::size_t>(ky) * k + kx] += acc_w;
                    }
                }
            }
        }
    }
}

// ---- transposed convolution 2x2, stride 2 (doubles H and W) ----
// weight layout [in_c, out_c, 2, 2], bias [out_c].

template <typename T>
Tensor4<T> conv_transpose2x2_forward(const Tensor4<T>& in, const Tensor4<T>& weight,
                                     const std::vector<T>& bias) {
    if (weight.n != in.c)
        throw std::invalid_argument("conv_transpose2x2: input channels do not match weight");
    const int H = in.h, W = in.w;
    Tensor4<T> out(in.n, weight.c, 2 * H, 2 * W);
    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < weight.c; ++oc) {
            T* op = out.plane(n, oc);
            std::fill(op, op + static_cast<std::size_t>(4) * H * W, bias[oc]);
            for (int ic = 0; ic < in.c; ++ic) {
                const T* ip = in.plane(n, ic);
                const T* wp = weight.plane(ic, oc);
                for (int ky = 0; ky < 2; ++ky) {
                    for (int kx = 0; kx < 2; ++kx) {
                        const T wv = wp[ky * 2 + kx];
                        for (int y = 0; y < H; ++y) {
                            const T* irow = ip + static_cast<std::size_t>(y) * W;
                            T* orow = op + static_cast<std::size_t>(2 * y + ky) * (2 * W) + kx;
                            for (int x = 0; x < W; ++x) orow[2 * x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

template <typename T>
void conv_transpose2x2_backward(const Tensor4<T>& in, const Tensor4<T>& weight,
                                const Tensor4<T>& grad_out, Tensor4<T>& grad_in,
                                Tensor4<T>& grad_weight, std::vector<T>& grad_bias) {
    const int H = in.h, W = in.w;
    grad_in = Tensor4<T>(in.n, in.c, H, W);
    grad_weight = Tensor4<T>(weight.n, weight.c, 2, 2);
    grad_bias.assign(weight.c, T(0));
    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < weight.c; ++oc) {
            const T* gp = grad_out.plane(n, oc);
            T acc_b = T(0);
            for (std::size_t i = 0; i < static_cast<std::size_t>(4) * H * W; ++i) acc_b += gp[i];
            grad_bias[oc] += acc_b;
            for (int ic = 0; ic < in.c; ++ic) {
                const T* ip = in.plane(n, ic);
                T* gip = grad_in.plane(n, ic);
                const T* wp = weight.plane(ic, oc);
                T* gwp = grad_weight.plane(ic, oc);
                for (int ky = 0; ky < 2; ++ky) {
                    for (int kx = 0; kx < 2; ++kx) {
                        const T wv = wp[ky * 2 + kx];
                        T acc_w = T(0);
                        for (int y = 0; y < H; ++y) {
                            const T* grow = gp + static_cast<std::size_t>(2 * y + ky) * (2 * W) + kx;
                            const T* irow = ip + static_cast<std::size_t>(y) * W;
                            T* girow = gip + static_cast<std::size_t>(y) * W;
                            for (int x = 0; x < W; ++x) {
                                acc_w += grow[2 * x] * irow[x];
                                girow[x] += wv * grow[2 * x];
                            }
                        }
                        gwp[ky * 2 + kx] += acc_w;
                    }
                }
            }
        }
    }
}

// ---- nearest-neighbour x2 upsampling (alternative decoder path) ----

template <typename T>
Tensor4<T> upsample2x_forward(const Tensor4<T>& in) {
    Tensor4<T> out(in.n, in.c, 2 * in.h, 2 * in.w);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c) {
            const T* ip = in.plane(n, c);
            T* op = out.plane(n, c);
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x) {
                    T v = ip[static_cast<std::size_t>(y) * in.w + x];
                    std::size_t o = static_cast<std::size_t>(2 * y) * (2 * in.w) + 2 * x;
                    op[o] = op[o + 1] = v;
                    o += static_cast<std::size_t>(2 * in.w);
                    op[o] = op[o + 1] = v;
                }
        }
    return out;
}

template <typename T>
Tensor4<T> upsample2x_backward(const Tensor4<T>& grad_out) {
    Tensor4<T> grad_in(grad_out.n, grad_out.c, grad_out.h / 2, grad_out.w / 2);
    for (int n = 0; n < grad_in.n; ++n)
        for (int c = 0; c < grad_in.c; ++c) {
            const T* gp = grad_out.plane(n, c);
            T* gip = grad_in.plane(n, c);
            for (int y = 0; y < grad_in.h; ++y)
                for (int x = 0; x < grad_in.w; ++x) {
                    std::size_t o = static_cast<std::size_t>(2 * y) * grad_out.w + 2 * x;
                    gip[static_cast<std::size_t>(y) * grad_in.w + x] =
                        gp[o] + gp[o + 1] + gp[o + grad_out.w] + gp[o + grad_out.w + 1];
                }
        }
    return grad_in;
}

// ---- batch normalization ----

template <typename T>
struct BatchNormCache {
    std::vector<T> mean, inv_std;  // per channel
    Tensor4<T> x_hat;
};

template <typename T>
Tensor4<T> batchnorm_forward(const Tensor4<T>& in, const std::vector<T>& gamma,
                             const std::vector<T>& beta, std::vector<T>& running_mean,
                             std::vector<T>& running_var, bool train, T momentum, T eps,
                             BatchNormCache<T>* cache) {
    const int C = in.c;
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;
    const std::size_t count = static_cast<std::size_t>(in.n) * plane;
    Tensor4<T> out(in.n, in.c, in.h, in.w);
    if (cache) {
        cache->mean.assign(C, T(0));
        cache->inv_std.assign(C, T(0));
        cache->x_hat = Tensor4<T>(in.n, in.c, in.h, in.w);
    }
    for (int c = 0; c < C; ++c) {
        T mean, var;
        if (train) {
            T s = T(0), s2 = T(0);
            for (int n = 0; n < in.n; ++n) {
                const T* ip = in.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) {
                    s += ip[i];
                    s2 += ip[i] * ip[i];
                }
            }
            mean = s / static_cast<T>(count);
            var = s2 / static_cast<T>(count) - mean * mean;
            if (var < T(0)) var = T(0);
            // running stats use the unbiased variance
            T unbiased = count > 1 ? var * static_cast<T>(count) / static_cast<T>(count - 1) : var;
            running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * mean;
            running_var[c] = (T(1) - momentum) * running_var[c] + momentum * unbiased;
        } else {
            mean = running_mean[c];
            var = running_var[c];
        }
        const T inv_std = T(1) / std::sqrt(var + eps);
        for (int n = 0; n < in.n; ++n) {
            const T* ip = in.plane(n, c);
            T* op = out.plane(n, c);
            T* xh = cache ? cache->x_hat.plane(n, c) : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                T x_hat = (ip[i] - mean) * inv_std;
                if (xh) xh[i] = x_hat;
                op[i] = gamma[c] * x_hat + beta[c];
            }
        }
        if (cache) {
            cache->mean[c] = mean;
            cache->inv_std[c] = inv_std;
        }
    }
    return out;
}

template <typename T>
Tensor4<T> batchnorm_backward(const Tensor4<T>& grad_out, const BatchNormCache<T>& cache,
                              const std::vector<T>& gamma, std::vector<T>& grad_gamma,
                              std::vector<T>& grad_beta) {
    const int C = grad_out.c;
    const std::size_t plane = static_cast<std::size_t>(grad_out.h) * grad_out.w;
    const std::size_t count = static_cast<std::size_t>(grad_out.n) * plane;
    grad_gamma.assign(C, T(0));
    grad_beta.assign(C, T(0));
    Tensor4<T> grad_in(grad_out.n, grad_out.c, grad_out.h, grad_out.w);
    for (int c = 0; c < C; ++c) {
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (int n = 0; n < grad_out.n; ++n) {
            const T* gp = grad_out.plane(n, c);
            const T* xh = cache.x_hat.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += gp[i];
                sum_dy_xhat += gp[i] * xh[i];
            }
        }
        grad_beta[c] = sum_dy;
        grad_gamma[c] = sum_dy_xhat;
        const T m = static_cast<T>(count);
        const T scale = gamma[c] * cache.inv_std[c];
        for (int n = 0; n < grad_out.n; ++n) {
            const T* gp = grad_out.plane(n, c);
            const T* xh = cache.x_hat.plane(n, c);
            T* gip = grad_in.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i)
                gip[i] = scale * (gp[i] - sum_dy / m - xh[i] * sum_dy_xhat / m);
        }
    }
    return grad_in;
}

// ---- ReLU ----

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& in) {
    Tensor4<T> out = in;
    for (auto& v : out.data) v = v > T(0) ? v : T(0);
    return out;
}

// uses the forward output to route gradients (zero where output was zero)
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& grad_out, const Tensor4<T>& fwd_out) {
    Tensor4<T> grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.data.size(); ++i)
        if (fwd_out.data[i] <= T(0)) grad_in.data[i] = T(0);
    return grad_in;
}

// ---- 2x2 max pooling, stride 2 ----

template <typename T>
Tensor4<T> maxpool2x2_forward(const Tensor4<T>& in, std::vector<std::uint32_t>* argmax) {
    if (in.h % 2 != 0 || in.w % 2 != 0)
        throw std::invalid_argument("maxpool2x2: spatial dims must be even");
    Tensor4<T> out(in.n, in.c, in.h / 2, in.w / 2);
    if (argmax) argmax->assign(out.size(), 0);
    std::size_t oi = 0;
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c) {
            const T* ip = in.plane(n, c);
            T* op = out.plane(n, c);
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x, ++oi) {
                    std::size_t base = static_cast<std::size_t>(2 * y) * in.w + 2 * x;
                    std::size_t best = base;
                    T bv = ip[base];
                    for (std::size_t cand : {base + 1, base + in.w, base + in.w + 1})
                        if (ip[cand] > bv) {
                            bv = ip[cand];
                            best = cand;
                        }
                    op[static_cast<std::size_t>(y) * out.w + x] = bv;
                    if (argmax) (*argmax)[oi] = static_cast<std::uint32_t>(best);
                }
        }
    return out;
}

template <typename T>
Tensor4<T> maxpool2x2_backward(const Tensor4<T>& grad_out,
                               const std::vector<std::uint32_t>& argmax, int in_h, int in_w) {
    Tensor4<T> grad_in(grad_out.n, grad_out.c, in_h, in_w);
    std::size_t oi = 0;
    const std::size_t oplane = static_cast<std::size_t>(grad_out.h) * grad_out.w;
    for (int n = 0; n < grad_out.n; ++n)
        for (int c = 0; c < grad_out.c; ++c) {
            const T* gp = grad_out.plane(n, c);
            T* gip = grad_in.plane(n, c);
            for (std::size_t i = 0; i < oplane; ++i, ++oi) gip[argmax[oi]] += gp[i];
        }
    return grad_in;
}

// ---- channel concatenation ----

template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::invalid_argument("concat_channels: incompatible shapes");
    Tensor4<T> out(a.n, a.c + b.c, a.h, a.w);
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    for (int n = 0; n < a.n; ++n) {
        for (int c = 0; c < a.c; ++c)
            std::copy_n(a.plane(n, c), plane, out.plane(n, c));
        for (int c = 0; c < b.c; ++c)
            std::copy_n(b.plane(n, c), plane, out.plane(n, a.c + c));
    }
    return out;
}

template <typename T>
void split_channels(const Tensor4<T>& x, int c_first, Tensor4<T>& a, Tensor4<T>& b) {
    a = Tensor4<T>(x.n, c_first, x.h, x.w);
    b = Tensor4<T>(x.n, x.c - c_first, x.h, x.w);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    for (int n = 0; n < x.n; ++n) {
        for (int c = 0; c < c_first; ++c)
            std::copy_n(x.plane(n, c), plane, a.plane(n, c));
        for (int c = c_first; c < x.c; ++c)
            std::copy_n(x.plane(n, c), plane, b.plane(n, c - c_first));
    }
}

// ---- sigmoid ----

template <typename T>
T sigmoid(T z) {
    if (z >= T(0)) {
        T e = std::exp(-z);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(z);
    return e / (T(1) + e);
}

template <typename T>
Tensor4<T> sigmoid_forward(const Tensor4<T>& in) {
    Tensor4<T> out = in;
    for (auto& v : out.data) v = sigmoid(v);
    return out;
}

template <typename T>
Tensor4<T> sigmoid_backward(const Tensor4<T>& grad_out, const Tensor4<T>& fwd_out) {
    Tensor4<T> grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
        T p = fwd_out.data[i];
        grad_in.data[i] *= p * (T(1) - p);
    }
    return grad_in;
}

} // namespace carbideseg::net
