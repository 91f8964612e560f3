#pragma once

#include <algorithm>
#include <cstring>

#include "sddpm/tensor.hpp"

namespace sddpm {

// ---- small GEMM kernels ----------------------------------------------------
// C is always accumulated into; callers zero it when needed.

template <typename T>
void gemm_nn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c) {
    for (int64_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        const T* arow = a + i * k;
        for (int64_t p = 0; p < k; ++p) {
            T av = arow[p];
            if (av == T(0)) continue;
            const T* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += sum_k A[k,m] * B[k,n]
template <typename T>
void gemm_tn(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c) {
    for (int64_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (int64_t i = 0; i < m; ++i) {
            T av = arow[i];
            if (av == T(0)) continue;
            T* crow = c + i * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += sum_k A[m,k] * B[n,k]
template <typename T>
void gemm_nt(int64_t m, int64_t n, int64_t k, const T* a, const T* b, T* c) {
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        for (int64_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T acc = T(0);
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] += acc;
        }
    }
}

// ---- convolution -----------------------------------------------------------

struct ConvDims {
    int64_t n, cin, h, w;
    int64_t cout, kh, kw;
    int64_t stride, pad;
    int64_t oh, ow;
};

template <typename T>
ConvDims conv2d_dims(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& bias, int64_t stride,
                     int64_t pad) {
    check_arg(x.ndim() == 4, strfmt("conv2d: input must be 4-d, got %s", shape_str(x.shape).c_str()));
    check_arg(weight.ndim() == 4, strfmt("conv2d: weight must be 4-d, got %s", shape_str(weight.shape).c_str()));
    check_arg(stride >= 1, strfmt("conv2d: stride must be >= 1, got %lld", static_cast<long long>(stride)));
    check_arg(pad >= 0, strfmt("conv2d: pad must be >= 0, got %lld", static_cast<long long>(pad)));
    ConvDims d{};
    d.n = x.dim(0);
    d.cin = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.cout = weight.dim(0);
    d.kh = weight.dim(2);
    d.kw = weight.dim(3);
    d.stride = stride;
    d.pad = pad;
    check_arg(weight.dim(1) == d.cin,
              strfmt("conv2d: weight in-channels %lld != input channels %lld", static_cast<long long>(weight.dim(1)),
                     static_cast<long long>(d.cin)));
    check_arg(bias.numel() == d.cout,
              strfmt("conv2d: bias size %lld != out-channels %lld", static_cast<long long>(bias.numel()),
                     static_cast<long long>(d.cout)));
    check_arg(d.h + 2 * pad >= d.kh, strfmt("conv2d: padded height %lld < kernel height %lld",
                                            static_cast<long long>(d.h + 2 * pad), static_cast<long long>(d.kh)));
    check_arg(d.w + 2 * pad >= d.kw, strfmt("conv2d: padded width %lld < kernel width %lld",
                                            static_cast<long long>(d.w + 2 * pad), static_cast<long long>(d.kw)));
    d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
    d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
    return d;
}

template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
    // col is [cin*kh*kw, oh*ow]
    int64_t ohw = d.oh * d.ow;
    for (int64_t c = 0; c < d.cin; ++c) {
        for (int64_t ky = 0; ky < d.kh; ++ky) {
            for (int64_t kx = 0; kx < d.kw; ++kx) {
                T* crow = col + ((c * d.kh + ky) * d.kw + kx) * ohw;
                for (int64_t oy = 0; oy < d.oh; ++oy) {
                    int64_t iy = oy * d.stride - d.pad + ky;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(crow + oy * d.ow, crow + (oy + 1) * d.ow, T(0));
                        continue;
                    }
                    const T* xrow = x + (c * d.h + iy) * d.w;
                    for (int64_t ox = 0; ox < d.ow; ++ox) {
                        int64_t ix = ox * d.stride - d.pad + kx;
                        crow[oy * d.ow + ox] = (ix >= 0 && ix < d.w) ? xrow[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const ConvDims& d, T* gx) {
    int64_t ohw = d.oh * d.ow;
    for (int64_t c = 0; c < d.cin; ++c) {
        for (int64_t ky = 0; ky < d.kh; ++ky) {
            for (int64_t kx = 0; kx < d.kw; ++kx) {
                const T* crow = col + ((c * d.kh + ky) * d.kw + kx) * ohw;
                for (int64_t oy = 0; oy < d.oh; ++oy) {
                    int64_t iy = oy * d.stride - d.pad + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    T* xrow = gx + (c * d.h + iy) * d.w;
                    for (int64_t ox = 0; ox < d.ow; ++ox) {
                        int64_t ix = ox * d.stride - d.pad + kx;
                        if (ix >= 0 && ix < d.w) xrow[ix] += crow[oy * d.ow + ox];
                    }
                }
            }
        }
    }
}

// Cross-correlation with bias. weight [cout,cin,kh,kw].
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& bias, int64_t stride,
                          int64_t pad) {
    ConvDims d = conv2d_dims(x, weight, bias, stride, pad);
    TensorT<T> y({d.n, d.cout, d.oh, d.ow});
    int64_t k = d.cin * d.kh * d.kw;
    int64_t ohw = d.oh * d.ow;
    parallel_for(d.n, [&](int64_t n) {
        std::vector<T> col(static_cast<size_t>(k * ohw));
        im2col(x.ptr() + n * d.cin * d.h * d.w, d, col.data());
        T* yn = y.ptr() + n * d.cout * ohw;
        for (int64_t co = 0; co < d.cout; ++co) std::fill(yn + co * ohw, yn + (co + 1) * ohw, bias.data[static_cast<size_t>(co)]);
        gemm_nn(d.cout, ohw, k, weight.ptr(), col.data(), yn);
    });
    check_finite(y, "conv2d output");
    return y;
}

// Accumulates into gw/gb; returns gx. gw/gb must already have the
// weight/bias shapes (zeroed or carrying prior accumulation).
template <typename T>
TensorT<T> conv2d_backward(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& gy, int64_t stride,
                           int64_t pad, TensorT<T>& gw, TensorT<T>& gb) {
    TensorT<T> bias_shape({weight.dim(0)});
    ConvDims d = conv2d_dims(x, weight, bias_shape, stride, pad);
    check_arg(gy.shape == std::vector<int64_t>({d.n, d.cout, d.oh, d.ow}),
              strfmt("conv2d backward: gy shape %s does not match output %s", shape_str(gy.shape).c_str(),
                     shape_str({d.n, d.cout, d.oh, d.ow}).c_str()));
    int64_t k = d.cin * d.kh * d.kw;
    int64_t ohw = d.oh * d.ow;
    TensorT<T> gx(x.shape);

    int chunks = std::max(1, std::min<int>(num_threads(), static_cast<int>(d.n)));
    int64_t per = (d.n + chunks - 1) / chunks;
    std::vector<std::vector<T>> gw_part(static_cast<size_t>(chunks)), gb_part(static_cast<size_t>(chunks));
    parallel_for(chunks, [&](int64_t ci) {
        auto& gwp = gw_part[static_cast<size_t>(ci)];
        auto& gbp = gb_part[static_cast<size_t>(ci)];
        gwp.assign(static_cast<size_t>(weight.numel()), T(0));
        gbp.assign(static_cast<size_t>(d.cout), T(0));
        std::vector<T> col(static_cast<size_t>(k * ohw));
        std::vector<T> gcol(static_cast<size_t>(k * ohw));
        for (int64_t n = ci * per; n < std::min(d.n, (ci + 1) * per); ++n) {
            im2col(x.ptr() + n * d.cin * d.h * d.w, d, col.data());
            const T* gyn = gy.ptr() + n * d.cout * ohw;
            // gx
            std::fill(gcol.begin(), gcol.end(), T(0));
            gemm_tn(k, ohw, d.cout, weight.ptr(), gyn, gcol.data());
            col2im_add(gcol.data(), d, gx.ptr() + n * d.cin * d.h * d.w);
            // gw, gb
            gemm_nt(d.cout, k, ohw, gyn, col.data(), gwp.data());
            for (int64_t co = 0; co < d.cout; ++co) {
                T acc = T(0);
                for (int64_t i = 0; i < ohw; ++i) acc += gyn[co * ohw + i];
                gbp[static_cast<size_t>(co)] += acc;
            }
        }
    });
    for (int ci = 0; ci < chunks; ++ci) {
        for (int64_t i = 0; i < gw.numel(); ++i) gw.data[static_cast<size_t>(i)] += gw_part[static_cast<size_t>(ci)][static_cast<size_t>(i)];
        for (int64_t i = 0; i < gb.numel(); ++i) gb.data[static_cast<size_t>(i)] += gb_part[static_cast<size_t>(ci)][static_cast<size_t>(i)];
    }
    return gx;
}

// ---- batch normalization ---------------------------------------------------

template <typename T>
struct BatchNormCache {
    TensorT<T> xhat;
    std::vector<double> inv_std;  // per channel
    bool training = false;
};

// Per-channel statistics over the (N,H,W) axes; N is the fused T*B batch.
// Training mode also updates running stats (unbiased variance, momentum mom).
template <typename T>
TensorT<T> batch_norm_forward(const TensorT<T>& x, const TensorT<T>& gamma, const TensorT<T>& beta,
                              std::vector<double>& running_mean, std::vector<double>& running_var, bool training,
                              double momentum, double eps, BatchNormCache<T>* cache) {
    check_arg(x.ndim() == 4, strfmt("batch_norm: input must be 4-d, got %s", shape_str(x.shape).c_str()));
    int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    check_arg(gamma.numel() == c && beta.numel() == c, "batch_norm: gamma/beta size must equal channel count");
    int64_t m = n * h * w;
    check_arg(!training || m >= 2, "batch_norm: training mode needs at least 2 values per channel");

    TensorT<T> y(x.shape);
    if (cache) {
        cache->training = training;
        cache->inv_std.assign(static_cast<size_t>(c), 0.0);
        cache->xhat = TensorT<T>(x.shape);
    }
    int64_t hw = h * w;
    for (int64_t ch = 0; ch < c; ++ch) {
        double mean, inv;
        if (training) {
            double sum = 0.0, sq = 0.0;
            for (int64_t b = 0; b < n; ++b) {
                const T* p = x.ptr() + (b * c + ch) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    double v = static_cast<double>(p[i]);
                    sum += v;
                    sq += v * v;
                }
            }
            mean = sum / static_cast<double>(m);
            double var = std::max(0.0, sq / static_cast<double>(m) - mean * mean);
            inv = 1.0 / std::sqrt(var + eps);
            double unbiased = (m > 1) ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
            running_mean[static_cast<size_t>(ch)] = (1.0 - momentum) * running_mean[static_cast<size_t>(ch)] + momentum * mean;
            running_var[static_cast<size_t>(ch)] = (1.0 - momentum) * running_var[static_cast<size_t>(ch)] + momentum * unbiased;
        } else {
            mean = running_mean[static_cast<size_t>(ch)];
            inv = 1.0 / std::sqrt(running_var[static_cast<size_t>(ch)] + eps);
        }
        if (cache) cache->inv_std[static_cast<size_t>(ch)] = inv;
        T g = gamma.data[static_cast<size_t>(ch)], bt = beta.data[static_cast<size_t>(ch)];
        for (int64_t b = 0; b < n; ++b) {
            const T* p = x.ptr() + (b * c + ch) * hw;
            T* q = y.ptr() + (b * c + ch) * hw;
            T* xh = cache ? cache->xhat.ptr() + (b * c + ch) * hw : nullptr;
            for (int64_t i = 0; i < hw; ++i) {
                T xhat = static_cast<T>((static_cast<double>(p[i]) - mean) * inv);
                if (xh) xh[i] = xhat;
                q[i] = g * xhat + bt;
            }
        }
    }
    check_finite(y, "batch_norm output");
    return y;
}

template <typename T>
TensorT<T> batch_norm_backward(const TensorT<T>& gy, const TensorT<T>& gamma, const BatchNormCache<T>& cache,
                               TensorT<T>& ggamma, TensorT<T>& gbeta) {
    int64_t n = gy.dim(0), c = gy.dim(1), hw = gy.dim(2) * gy.dim(3);
    int64_t m = n * hw;
    TensorT<T> gx(gy.shape);
    for (int64_t ch = 0; ch < c; ++ch) {
        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int64_t b = 0; b < n; ++b) {
            const T* g = gy.ptr() + (b * c + ch) * hw;
            const T* xh = cache.xhat.ptr() + (b * c + ch) * hw;
            for (int64_t i = 0; i < hw; ++i) {
                sum_gy += static_cast<double>(g[i]);
                sum_gy_xhat += static_cast<double>(g[i]) * static_cast<double>(xh[i]);
            }
        }
        ggamma.data[static_cast<size_t>(ch)] += static_cast<T>(sum_gy_xhat);
        gbeta.data[static_cast<size_t>(ch)] += static_cast<T>(sum_gy);
        double gscale = static_cast<double>(gamma.data[static_cast<size_t>(ch)]) * cache.inv_std[static_cast<size_t>(ch)];
        if (cache.training) {
            double mean_gy = sum_gy / static_cast<double>(m);
            double mean_gy_xhat = sum_gy_xhat / static_cast<double>(m);
            for (int64_t b = 0; b < n; ++b) {
                const T* g = gy.ptr() + (b * c + ch) * hw;
                const T* xh = cache.xhat.ptr() + (b * c + ch) * hw;
                T* q = gx.ptr() + (b * c + ch) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    q[i] = static_cast<T>(gscale * (static_cast<double>(g[i]) - mean_gy -
                                                    static_cast<double>(xh[i]) * mean_gy_xhat));
                }
            }
        } else {
            for (int64_t b = 0; b < n; ++b) {
                const T* g = gy.ptr() + (b * c + ch) * hw;
                T* q = gx.ptr() + (b * c + ch) * hw;
                for (int64_t i = 0; i < hw; ++i) q[i] = static_cast<T>(gscale * static_cast<double>(g[i]));
            }
        }
    }
    return gx;
}

// ---- fully connected ---------------------------------------------------

// x [n, in], weight [out, in], bias [out] -> y [n, out]
template <typename T>
TensorT<T> linear_forward(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& bias) {
    check_arg(x.ndim() == 2, strfmt("linear: input must be 2-d, got %s", shape_str(x.shape).c_str()));
    int64_t n = x.dim(0), in = x.dim(1), out = weight.dim(0);
    check_arg(weight.dim(1) == in, strfmt("linear: weight in-dim %lld != input dim %lld",
                                          static_cast<long long>(weight.dim(1)), static_cast<long long>(in)));
    check_arg(bias.numel() == out, "linear: bias size mismatch");
    TensorT<T> y({n, out});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t o = 0; o < out; ++o) y.data[static_cast<size_t>(i * out + o)] = bias.data[static_cast<size_t>(o)];
    gemm_nt(n, out, in, x.ptr(), weight.ptr(), y.ptr());
    return y;
}

template <typename T>
TensorT<T> linear_backward(const TensorT<T>& x, const TensorT<T>& weight, const TensorT<T>& gy, TensorT<T>& gw,
                           TensorT<T>& gb) {
    int64_t n = x.dim(0), in = x.dim(1), out = weight.dim(0);
    TensorT<T> gx({n, in});
    gemm_nn(n, in, out, gy.ptr(), weight.ptr(), gx.ptr());
    gemm_tn(out, in, n, gy.ptr(), x.ptr(), gw.ptr());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t o = 0; o < out; ++o) gb.data[static_cast<size_t>(o)] += gy.data[static_cast<size_t>(i * out + o)];
    return gx;
}

// ---- shape/elementwise helpers ----------------------------------------------

template <typename T>
TensorT<T> nearest_upsample_2x(const TensorT<T>& x) {
    check_arg(x.ndim() == 4, "nearest_upsample_2x: input must be 4-d");
    int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    TensorT<T> y({n, c, 2 * h, 2 * w});
    for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* p = x.ptr() + nc * h * w;
        T* q = y.ptr() + nc * 4 * h * w;
        for (int64_t i = 0; i < h; ++i) {
            for (int64_t j = 0; j < w; ++j) {
                T v = p[i * w + j];
                q[(2 * i) * 2 * w + 2 * j] = v;
                q[(2 * i) * 2 * w + 2 * j + 1] = v;
                q[(2 * i + 1) * 2 * w + 2 * j] = v;
                q[(2 * i + 1) * 2 * w + 2 * j + 1] = v;
            }
        }
    }
    return y;
}

template <typename T>
TensorT<T> nearest_upsample_2x_backward(const TensorT<T>& gy) {
    int64_t n = gy.dim(0), c = gy.dim(1), h2 = gy.dim(2), w2 = gy.dim(3);
    int64_t h = h2 / 2, w = w2 / 2;
    TensorT<T> gx({n, c, h, w});
    for (int64_t nc = 0; nc < n * c; ++nc) {
        const T* g = gy.ptr() + nc * h2 * w2;
        T* q = gx.ptr() + nc * h * w;
        for (int64_t i = 0; i < h; ++i)
            for (int64_t j = 0; j < w; ++j)
                q[i * w + j] = g[(2 * i) * w2 + 2 * j] + g[(2 * i) * w2 + 2 * j + 1] + g[(2 * i + 1) * w2 + 2 * j] +
                               g[(2 * i + 1) * w2 + 2 * j + 1];
    }
    return gx;
}

// Mean over the leading time axis of a fused [T*B, ...] tensor (time-major).
template <typename T>
TensorT<T> time_mean(const TensorT<T>& x, int64_t t_steps) {
    check_arg(t_steps >= 1 && x.dim(0) % t_steps == 0,
              strfmt("time_mean: leading dim %lld not divisible by T=%lld", static_cast<long long>(x.dim(0)),
                     static_cast<long long>(t_steps)));
    int64_t b = x.dim(0) / t_steps;
    std::vector<int64_t> oshape = x.shape;
    oshape[0] = b;
    TensorT<T> y(oshape);
    int64_t inner = x.numel() / x.dim(0);
    T scale = T(1) / static_cast<T>(t_steps);
    for (int64_t t = 0; t < t_steps; ++t)
        for (int64_t i = 0; i < b; ++i) {
            const T* p = x.ptr() + (t * b + i) * inner;
            T* q = y.ptr() + i * inner;
            for (int64_t j = 0; j < inner; ++j) q[j] += p[j] * scale;
        }
    return y;
}

template <typename T>
TensorT<T> time_mean_backward(const TensorT<T>& gy, int64_t t_steps) {
    int64_t b = gy.dim(0);
    std::vector<int64_t> xshape = gy.shape;
    xshape[0] = b * t_steps;
    TensorT<T> gx(xshape);
    int64_t inner = gy.numel() / b;
    T scale = T(1) / static_cast<T>(t_steps);
    for (int64_t t = 0; t < t_steps; ++t)
        for (int64_t i = 0; i < b; ++i) {
            const T* g = gy.ptr() + i * inner;
            T* q = gx.ptr() + (t * b + i) * inner;
            for (int64_t j = 0; j < inner; ++j) q[j] = g[j] * scale;
        }
    return gx;
}

// Replicates [B, ...] to fused [T*B, ...] (time-major).
template <typename T>
TensorT<T> replicate_time(const TensorT<T>& x, int64_t t_steps) {
    std::vector<int64_t> oshape = x.shape;
    oshape[0] = x.dim(0) * t_steps;
    TensorT<T> y(oshape);
    for (int64_t t = 0; t < t_steps; ++t)
        std::memcpy(y.ptr() + t * x.numel(), x.ptr(), sizeof(T) * static_cast<size_t>(x.numel()));
    return y;
}

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    check_arg(a.ndim() == 4 && b.ndim() == 4, "concat_channels: inputs must be 4-d");
    check_arg(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
              strfmt("concat_channels: shapes %s and %s differ outside the channel axis", shape_str(a.shape).c_str(),
                     shape_str(b.shape).c_str()));
    int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
    TensorT<T> y({n, ca + cb, a.dim(2), a.dim(3)});
    for (int64_t i = 0; i < n; ++i) {
        std::memcpy(y.ptr() + i * (ca + cb) * hw, a.ptr() + i * ca * hw, sizeof(T) * static_cast<size_t>(ca * hw));
        std::memcpy(y.ptr() + (i * (ca + cb) + ca) * hw, b.ptr() + i * cb * hw, sizeof(T) * static_cast<size_t>(cb * hw));
    }
    return y;
}

template <typename T>
void split_channels_backward(const TensorT<T>& gy, int64_t ca, TensorT<T>& ga, TensorT<T>& gb) {
    int64_t n = gy.dim(0), c = gy.dim(1), hw = gy.dim(2) * gy.dim(3);
    int64_t cb = c - ca;
    ga = TensorT<T>({n, ca, gy.dim(2), gy.dim(3)});
    gb = TensorT<T>({n, cb, gy.dim(2), gy.dim(3)});
    for (int64_t i = 0; i < n; ++i) {
        std::memcpy(ga.ptr() + i * ca * hw, gy.ptr() + i * c * hw, sizeof(T) * static_cast<size_t>(ca * hw));
        std::memcpy(gb.ptr() + i * cb * hw, gy.ptr() + (i * c + ca) * hw, sizeof(T) * static_cast<size_t>(cb * hw));
    }
}

template <typename T>
void add_inplace(TensorT<T>& a, const TensorT<T>& b) {
    check_arg(a.same_shape(b), strfmt("add: shape mismatch %s vs %s", shape_str(a.shape).c_str(), shape_str(b.shape).c_str()));
    for (int64_t i = 0; i < a.numel(); ++i) a.data[static_cast<size_t>(i)] += b.data[static_cast<size_t>(i)];
}

template <typename T>
void mul_inplace(TensorT<T>& a, const TensorT<T>& b) {
    check_arg(a.same_shape(b), strfmt("mul: shape mismatch %s vs %s", shape_str(a.shape).c_str(), shape_str(b.shape).c_str()));
    for (int64_t i = 0; i < a.numel(); ++i) a.data[static_cast<size_t>(i)] *= b.data[static_cast<size_t>(i)];
}

// x is fused [T*B, C, H, W]; bias is per-example per-channel [B, C].
template <typename T>
void add_example_channel_bias(TensorT<T>& x, const TensorT<T>& bias, int64_t t_steps) {
    int64_t nb = x.dim(0) / t_steps, c = x.dim(1), hw = x.dim(2) * x.dim(3);
    check_arg(bias.dim(0) == nb && bias.dim(1) == c, "channel bias: shape mismatch with fused input");
    for (int64_t t = 0; t < t_steps; ++t)
        for (int64_t b = 0; b < nb; ++b)
            for (int64_t ch = 0; ch < c; ++ch) {
                T v = bias.data[static_cast<size_t>(b * c + ch)];
                T* p = x.ptr() + ((t * nb + b) * c + ch) * hw;
                for (int64_t i = 0; i < hw; ++i) p[i] += v;
            }
}

template <typename T>
TensorT<T> example_channel_bias_backward(const TensorT<T>& gy, int64_t t_steps) {
    int64_t nb = gy.dim(0) / t_steps, c = gy.dim(1), hw = gy.dim(2) * gy.dim(3);
    TensorT<T> gbias({nb, c});
    for (int64_t t = 0; t < t_steps; ++t)
        for (int64_t b = 0; b < nb; ++b)
            for (int64_t ch = 0; ch < c; ++ch) {
                const T* p = gy.ptr() + ((t * nb + b) * c + ch) * hw;
                T acc = T(0);
                for (int64_t i = 0; i < hw; ++i) acc += p[i];
                gbias.data[static_cast<size_t>(b * c + ch)] += acc;
            }
    return gbias;
}

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x) {
    TensorT<T> y(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i) y.data[static_cast<size_t>(i)] = std::max(T(0), x.data[static_cast<size_t>(i)]);
    return y;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& gy) {
    TensorT<T> gx(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i)
        gx.data[static_cast<size_t>(i)] = x.data[static_cast<size_t>(i)] > T(0) ? gy.data[static_cast<size_t>(i)] : T(0);
    return gx;
}

}  // namespace sddpm
