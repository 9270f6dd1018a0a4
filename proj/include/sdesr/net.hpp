#pragma once

#include <cblas.h>

#include <cstring>
#include <string>
#include <vector>

#include "sdesr/score.hpp"
#include "sdesr/sde.hpp"
#include "sdesr/tensor.hpp"

namespace sdesr {

/// Shape of the conditional denoiser: a two-level encoder-decoder with an
/// additive skip connection, one residual block per stage, and a sinusoidal
/// time embedding mapped into each block by a learned affine.
struct ArchDescriptor {
    int image_channels = 1;
    std::vector<int> widths = {32, 64};  // level 0 (full res), level 1 (half res)
    int time_embed_dim = 64;

    void validate() const {
        if (image_channels < 1) throw std::invalid_argument("ArchDescriptor: bad image_channels");
        if (widths.size() != 2 || widths[0] < 1 || widths[1] < 1)
            throw std::invalid_argument("ArchDescriptor: exactly two positive level widths");
        if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
            throw std::invalid_argument("ArchDescriptor: time_embed_dim must be even and >= 2");
    }
    int levels() const { return static_cast<int>(widths.size()); }
};

namespace detail {

inline void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m,
                n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m,
                n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <typename T>
inline T silu(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return x * s;
}

template <typename T>
inline T silu_grad(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

// 3x3 patches, pad 1, NHWC input; col rows are K-contiguous with
// k = (ky*3 + kx)*C + ci, matching the [K x Cout] weight layout. Interior
// pixels of stride-1 convolutions take a three-memcpy fast path.
template <typename T>
void im2col_3x3(const T* in, int B, int H, int W, int C, int stride, T* col) {
    const int Ho = (H - 1) / stride + 1;
    const int Wo = (W - 1) / stride + 1;
    const int K = 9 * C;

    auto fill_generic = [&](int b, int y, int x) {
        const T* img = in + static_cast<size_t>(b) * H * W * C;
        T* crow = col + (static_cast<size_t>(b) * Ho * Wo + static_cast<size_t>(y) * Wo + x) * K;
        for (int ky = 0; ky < 3; ++ky) {
            const int sy = y * stride + ky - 1;
            for (int kx = 0; kx < 3; ++kx) {
                const int sx = x * stride + kx - 1;
                T* dst = crow + (ky * 3 + kx) * C;
                if (sy < 0 || sy >= H || sx < 0 || sx >= W) {
                    for (int ci = 0; ci < C; ++ci) dst[ci] = T(0);
                } else {
                    std::memcpy(dst, img + (static_cast<size_t>(sy) * W + sx) * C,
                                sizeof(T) * C);
                }
            }
        }
    };

#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        const T* img = in + static_cast<size_t>(b) * H * W * C;
        for (int y = 0; y < Ho; ++y) {
            if (stride == 1 && y >= 1 && y <= H - 2) {
                fill_generic(b, y, 0);
                T* crow = col + (static_cast<size_t>(b) * Ho * Wo +
                                 static_cast<size_t>(y) * Wo + 1) *
                              K;
                for (int x = 1; x <= W - 2; ++x, crow += K)
                    for (int ky = 0; ky < 3; ++ky)
                        std::memcpy(crow + ky * 3 * C,
                                    img + (static_cast<size_t>(y + ky - 1) * W + x - 1) * C,
                                    sizeof(T) * 3 * C);
                fill_generic(b, y, W - 1);
            } else {
                for (int x = 0; x < Wo; ++x) fill_generic(b, y, x);
            }
        }
    }
}

// Scatter-add of the M x K column gradient back onto the input gradient.
// Each column row contributes nine C-contiguous chunk adds; batches write
// disjoint regions, so the outer loop parallelizes without races.
template <typename T>
void col2im_3x3(const T* dcol, int B, int H, int W, int C, int stride, T* din) {
    const int Ho = (H - 1) / stride + 1;
    const int Wo = (W - 1) / stride + 1;
    const int K = 9 * C;

#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        T* img = din + static_cast<size_t>(b) * H * W * C;
        const T* base = dcol + static_cast<size_t>(b) * Ho * Wo * K;
        for (int y = 0; y < Ho; ++y) {
            for (int x = 0; x < Wo; ++x) {
                const T* crow = base + (static_cast<size_t>(y) * Wo + x) * K;
                for (int ky = 0; ky < 3; ++ky) {
                    const int sy = y * stride + ky - 1;
                    if (sy < 0 || sy >= H) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int sx = x * stride + kx - 1;
                        if (sx < 0 || sx >= W) continue;
                        T* dst = img + (static_cast<size_t>(sy) * W + sx) * C;
                        const T* src = crow + (ky * 3 + kx) * C;
                        for (int c = 0; c < C; ++c) dst[c] += src[c];
                    }
                }
            }
        }
    }
}

}  // namespace detail

template <typename T>
struct ParamT {
    std::string name;
    std::vector<int> dims;
    std::vector<T> value;
    std::vector<T> grad;

    size_t size() const { return value.size(); }
};

/// Conditional denoiser. The network consumes the noisy image scaled by
/// 1/sqrt(std(t)^2 + 1) concatenated with the upsampled condition, and
/// predicts the scaled noise eps_hat; the score estimate is
/// -eps_hat / std(t). The final convolution starts at zero so the initial
/// score estimate is identically zero.
///
/// Residual block: out = in + conv3x3(silu(in + affine(time_embedding))).
template <typename T>
class DenoiserNetT {
public:
    DenoiserNetT(ArchDescriptor arch, SdeModel model) : arch_(arch), model_(model) {
        arch_.validate();
        model_.validate();
        build();
    }

    const ArchDescriptor& arch() const { return arch_; }
    const SdeModel& model() const { return model_; }
    std::vector<ParamT<T>>& params() { return params_; }
    const std::vector<ParamT<T>>& params() const { return params_; }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& p : params_) n += p.size();
        return n;
    }

    /// He-normal hidden weights, zero biases, zero final layer.
    void init_weights(uint64_t seed) {
        RandomSource rng(seed);
        for (auto& p : params_) {
            std::fill(p.value.begin(), p.value.end(), T(0));
            std::fill(p.grad.begin(), p.grad.end(), T(0));
        }
        auto he_fill = [&](const Conv& cv) {
            ParamT<T>& p = params_[cv.w];
            const double s = std::sqrt(2.0 / p.dims[0]);
            for (auto& v : p.value) v = static_cast<T>(s * rng.normal());
        };
        he_fill(in_);
        for (const Block* blk : {&enc_, &mid_, &dec_}) {
            he_fill(blk->conv);
            const double s = 1.0 / std::sqrt(static_cast<double>(arch_.time_embed_dim));
            for (auto& v : params_[blk->emb.w].value) v = static_cast<T>(s * rng.normal());
        }
        he_fill(down_);
        he_fill(up_);
        // out_ stays zero
    }

    void zero_grads() {
        for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
    }

    /// Raw eps predictions for a batch with per-sample times, flat NHWC
    /// output. Set keep_for_backward when backward_eps_flat will follow.
    std::vector<T> eps_batch_flat(const std::vector<Tensor>& xs, const std::vector<Tensor>& ys,
                                  const std::vector<double>& ts, bool keep_for_backward = false);

    /// Backward pass from d(loss)/d(eps); accumulates parameter gradients.
    void backward_eps_flat(const std::vector<T>& deps);

    std::vector<Tensor> eps_batch(const std::vector<Tensor>& xs, const std::vector<Tensor>& ys,
                                  const std::vector<double>& ts) {
        const std::vector<T> flat = eps_batch_flat(xs, ys, ts, false);
        return unflatten(flat, xs);
    }

    std::vector<Tensor> score_batch(const std::vector<Tensor>& xs, const std::vector<Tensor>& ys,
                                    double t) {
        const std::vector<double> ts(xs.size(), t);
        std::vector<T> flat = eps_batch_flat(xs, ys, ts, false);
        const double inv = -1.0 / marginal_prob(model_, t).std;
        for (T& v : flat) v = static_cast<T>(inv * v);
        return unflatten(flat, xs);
    }

    Tensor predict_eps(const Tensor& x, const Tensor& y, double t) {
        return eps_batch({x}, {y}, {t})[0];
    }

    /// Score estimate: -predict_eps / std(t).
    Tensor forward(const Tensor& x, const Tensor& y, double t) {
        Tensor eps = predict_eps(x, y, t);
        const double inv = -1.0 / marginal_prob(model_, t).std;
        for (float& v : eps.data) v = static_cast<float>(inv * v);
        return eps;
    }

    ScoreFn as_score_fn() {
        return [this](const Tensor& x, const Tensor& y, double t) { return forward(x, y, t); };
    }

    BatchScoreFn as_batch_score_fn() {
        return [this](const std::vector<Tensor>& xs, const std::vector<Tensor>& ys, double t) {
            return score_batch(xs, ys, t);
        };
    }

private:
    struct Conv {
        int w = -1, b = -1;
        int cin = 0, cout = 0, stride = 1;
    };
    struct Linear {
        int w = -1, b = -1;
    };
    struct Block {
        Conv conv;
        Linear emb;
        int width = 0;
    };

    int add_param(const std::string& name, std::vector<int> dims) {
        ParamT<T> p;
        p.name = name;
        p.dims = std::move(dims);
        size_t n = 1;
        for (int d : p.dims) n *= static_cast<size_t>(d);
        p.value.assign(n, T(0));
        p.grad.assign(n, T(0));
        params_.push_back(std::move(p));
        return static_cast<int>(params_.size() - 1);
    }

    Conv add_conv(const std::string& name, int cin, int cout, int stride) {
        Conv c;
        c.cin = cin;
        c.cout = cout;
        c.stride = stride;
        c.w = add_param(name + ".weight", {cin * 9, cout});
        c.b = add_param(name + ".bias", {cout});
        return c;
    }

    Block add_block(const std::string& name, int width) {
        Block b;
        b.width = width;
        b.conv = add_conv(name + ".conv", width, width, 1);
        b.emb.w = add_param(name + ".emb.weight", {arch_.time_embed_dim, width});
        b.emb.b = add_param(name + ".emb.bias", {width});
        return b;
    }

    void build() {
        const int c = arch_.image_channels;
        const int w0 = arch_.widths[0];
        const int w1 = arch_.widths[1];
        in_ = add_conv("in", 2 * c, w0, 1);
        enc_ = add_block("enc0", w0);
        down_ = add_conv("down0", w0, w1, 2);
        mid_ = add_block("mid", w1);
        up_ = add_conv("up0", w1, w0, 1);
        dec_ = add_block("dec0", w0);
        out_ = add_conv("out", w0, c, 1);
    }

    // --- layer primitives -------------------------------------------------

    void conv_forward(const Conv& cv, const std::vector<T>& in, int B, int H, int W,
                      std::vector<T>& col, std::vector<T>& out) {
        const int Ho = (H - 1) / cv.stride + 1;
        const int Wo = (W - 1) / cv.stride + 1;
        const int M = B * Ho * Wo;
        const int K = cv.cin * 9;
        col.resize(static_cast<size_t>(M) * K);
        out.resize(static_cast<size_t>(M) * cv.cout);
        detail::im2col_3x3(in.data(), B, H, W, cv.cin, cv.stride, col.data());
        detail::gemm(false, false, M, cv.cout, K, T(1), col.data(), K, params_[cv.w].value.data(),
                     cv.cout, T(0), out.data(), cv.cout);
        const T* bias = params_[cv.b].value.data();
        const int cout = cv.cout;
#pragma omp parallel for schedule(static)
        for (int m = 0; m < M; ++m) {
            T* row = out.data() + static_cast<size_t>(m) * cout;
            for (int cc = 0; cc < cout; ++cc) row[cc] += bias[cc];
        }
    }

    // din (resized and overwritten) gets the input gradient unless
    // need_dinput is false; parameter gradients accumulate.
    void conv_backward(const Conv& cv, const std::vector<T>& col, const std::vector<T>& dout,
                       int B, int H, int W, std::vector<T>& din, bool need_dinput) {
        const int Ho = (H - 1) / cv.stride + 1;
        const int Wo = (W - 1) / cv.stride + 1;
        const int M = B * Ho * Wo;
        const int K = cv.cin * 9;
        detail::gemm(true, false, K, cv.cout, M, T(1), col.data(), K, dout.data(), cv.cout, T(1),
                     params_[cv.w].grad.data(), cv.cout);
        T* db = params_[cv.b].grad.data();
        for (int m = 0; m < M; ++m) {
            const T* row = dout.data() + static_cast<size_t>(m) * cv.cout;
            for (int cc = 0; cc < cv.cout; ++cc) db[cc] += row[cc];
        }
        if (!need_dinput) return;
        dcol_.resize(static_cast<size_t>(M) * K);
        detail::gemm(false, true, M, K, cv.cout, T(1), dout.data(), cv.cout,
                     params_[cv.w].value.data(), cv.cout, T(0), dcol_.data(), K);
        din.assign(static_cast<size_t>(B) * H * W * cv.cin, T(0));
        detail::col2im_3x3(dcol_.data(), B, H, W, cv.cin, cv.stride, din.data());
    }

    struct BlockWs {
        std::vector<T> zpre;  // in + time bias, before the activation
        std::vector<T> col;
        std::vector<T> h;
        std::vector<T> tb;  // per-sample channel bias [B x width]
    };

    void block_forward(const Block& blk, const std::vector<T>& in, int B, int H, int W,
                       const std::vector<T>& emb, BlockWs& ws, std::vector<T>& out) {
        const int C = blk.width;
        const size_t n = static_cast<size_t>(B) * H * W * C;

        ws.tb.resize(static_cast<size_t>(B) * C);
        detail::gemm(false, false, B, C, arch_.time_embed_dim, T(1), emb.data(),
                     arch_.time_embed_dim, params_[blk.emb.w].value.data(), C, T(0), ws.tb.data(),
                     C);
        const T* ebias = params_[blk.emb.b].value.data();
        const int hw = H * W;
        ws.zpre.resize(n);
#pragma omp parallel for schedule(static)
        for (int b = 0; b < B; ++b) {
            const T* tbb = ws.tb.data() + static_cast<size_t>(b) * C;
            const T* src = in.data() + static_cast<size_t>(b) * hw * C;
            T* dst = ws.zpre.data() + static_cast<size_t>(b) * hw * C;
            for (int p = 0; p < hw; ++p)
                for (int cc = 0; cc < C; ++cc) {
                    const size_t i = static_cast<size_t>(p) * C + cc;
                    dst[i] = src[i] + tbb[cc] + ebias[cc];
                }
        }

        act_.resize(n);
        const T* zp = ws.zpre.data();
        T* ap = act_.data();
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); ++i) ap[i] = detail::silu(zp[i]);

        conv_forward(blk.conv, act_, B, H, W, ws.col, ws.h);
        out.resize(n);
        const T* ip = in.data();
        const T* hp = ws.h.data();
        T* op = out.data();
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); ++i) op[i] = ip[i] + hp[i];
    }

    // din = dout + silu'(zpre) * conv^T(dout); emb gradients accumulate.
    void block_backward(const Block& blk, int B, int H, int W, const std::vector<T>& emb,
                        BlockWs& ws, const std::vector<T>& dout, std::vector<T>& din) {
        const int C = blk.width;
        const size_t n = static_cast<size_t>(B) * H * W * C;

        conv_backward(blk.conv, ws.col, dout, B, H, W, dtmp_, true);
        const T* zp = ws.zpre.data();
        T* dp = dtmp_.data();
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); ++i) dp[i] *= detail::silu_grad(zp[i]);

        // time-bias gradients: reduce over spatial positions
        demb_.assign(static_cast<size_t>(B) * C, T(0));
        const int hw = H * W;
        for (int b = 0; b < B; ++b) {
            T* acc = demb_.data() + static_cast<size_t>(b) * C;
            const T* base = dtmp_.data() + static_cast<size_t>(b) * hw * C;
            for (int p = 0; p < hw; ++p)
                for (int cc = 0; cc < C; ++cc) acc[cc] += base[static_cast<size_t>(p) * C + cc];
        }
        detail::gemm(true, false, arch_.time_embed_dim, C, B, T(1), emb.data(),
                     arch_.time_embed_dim, demb_.data(), C, T(1), params_[blk.emb.w].grad.data(),
                     C);
        T* deb = params_[blk.emb.b].grad.data();
        for (int b = 0; b < B; ++b)
            for (int cc = 0; cc < C; ++cc) deb[cc] += demb_[static_cast<size_t>(b) * C + cc];

        din.resize(n);
        const T* dop = dout.data();
        T* dip = din.data();
#pragma omp parallel for schedule(static)
        for (long i = 0; i < static_cast<long>(n); ++i) dip[i] = dop[i] + dp[i];
    }

    std::vector<Tensor> unflatten(const std::vector<T>& flat, const std::vector<Tensor>& like) {
        std::vector<Tensor> out(like.size());
        size_t off = 0;
        for (size_t j = 0; j < like.size(); ++j) {
            out[j] = Tensor(like[j].h, like[j].w, like[j].c);
            for (int k = 0; k < out[j].size(); ++k)
                out[j].data[k] = static_cast<float>(flat[off + k]);
            off += out[j].size();
        }
        return out;
    }

    ArchDescriptor arch_;
    SdeModel model_;
    std::vector<ParamT<T>> params_;
    Conv in_, down_, up_, out_;
    Block enc_, mid_, dec_;

    // forward state kept for backward
    int B_ = 0, H_ = 0, W_ = 0;
    bool keep_ = false;
    std::vector<T> emb_;  // [B x E]
    std::vector<T> xin_, col_in_, hin_, e0_, dmid_in_, mmid_, u_, un_, ssum_, d0_;
    std::vector<T> col_down_, col_up_, col_out_;
    BlockWs enc_ws_, mid_ws_, dec_ws_;
    // scratch
    std::vector<T> act_, dcol_, dtmp_, demb_;
    std::vector<T> d_d0_, d_s_, d_u_, d_m_, d_dmid_, d_e0_, d_hin_, d_xin_;
};

template <typename T>
std::vector<T> DenoiserNetT<T>::eps_batch_flat(const std::vector<Tensor>& xs,
                                               const std::vector<Tensor>& ys,
                                               const std::vector<double>& ts,
                                               bool keep_for_backward) {
    if (xs.empty() || xs.size() != ys.size() || xs.size() != ts.size())
        throw std::invalid_argument("eps_batch: batch size mismatch");
    const int B = static_cast<int>(xs.size());
    const int H = xs[0].h, W = xs[0].w, C = xs[0].c;
    if (C != arch_.image_channels)
        throw std::invalid_argument("eps_batch: channel count does not match the network");
    if (H % 2 != 0 || W % 2 != 0)
        throw std::invalid_argument("eps_batch: height and width must be even");
    for (int j = 0; j < B; ++j) {
        if (xs[j].h != H || xs[j].w != W || xs[j].c != C)
            throw std::invalid_argument("eps_batch: ragged batch");
        require_same_shape(xs[j], ys[j], "eps_batch condition");
    }
    B_ = B;
    H_ = H;
    W_ = W;
    keep_ = keep_for_backward;

    const int E = arch_.time_embed_dim;
    emb_.resize(static_cast<size_t>(B) * E);
    std::vector<double> cin(B);
    for (int j = 0; j < B; ++j) {
        const std::vector<double> e = time_embedding(ts[j], E);
        for (int k = 0; k < E; ++k) emb_[static_cast<size_t>(j) * E + k] = static_cast<T>(e[k]);
        const double sd = marginal_prob(model_, ts[j]).std;
        cin[j] = 1.0 / std::sqrt(sd * sd + 1.0);
    }

    // interleave scaled x and y as channels
    const size_t hw = static_cast<size_t>(H) * W;
    xin_.resize(static_cast<size_t>(B) * hw * 2 * C);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < B; ++j) {
        const float* px = xs[j].data.data();
        const float* py = ys[j].data.data();
        T* dst = xin_.data() + static_cast<size_t>(j) * hw * 2 * C;
        for (size_t p = 0; p < hw; ++p) {
            for (int cc = 0; cc < C; ++cc)
                dst[p * 2 * C + cc] = static_cast<T>(cin[j] * px[p * C + cc]);
            for (int cc = 0; cc < C; ++cc) dst[p * 2 * C + C + cc] = static_cast<T>(py[p * C + cc]);
        }
    }

    conv_forward(in_, xin_, B, H, W, col_in_, hin_);
    block_forward(enc_, hin_, B, H, W, emb_, enc_ws_, e0_);
    conv_forward(down_, e0_, B, H, W, col_down_, dmid_in_);
    const int H2 = H / 2, W2 = W / 2;
    block_forward(mid_, dmid_in_, B, H2, W2, emb_, mid_ws_, mmid_);
    conv_forward(up_, mmid_, B, H2, W2, col_up_, u_);

    const int w0 = arch_.widths[0];
    un_.resize(static_cast<size_t>(B) * hw * w0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const T* src =
                    u_.data() + ((static_cast<size_t>(b) * H2 + y / 2) * W2 + x / 2) * w0;
                T* dst = un_.data() + ((static_cast<size_t>(b) * H + y) * W + x) * w0;
                std::memcpy(dst, src, sizeof(T) * w0);
            }

    ssum_.resize(un_.size());
    {
        const T* up = un_.data();
        const T* ep = e0_.data();
        T* sp = ssum_.data();
        const long n = static_cast<long>(un_.size());
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) sp[i] = up[i] + ep[i];
    }
    block_forward(dec_, ssum_, B, H, W, emb_, dec_ws_, d0_);

    std::vector<T> eps;
    conv_forward(out_, d0_, B, H, W, col_out_, eps);
    return eps;
}

template <typename T>
void DenoiserNetT<T>::backward_eps_flat(const std::vector<T>& deps) {
    if (!keep_) throw std::logic_error("backward_eps_flat: no forward state kept");
    const int B = B_, H = H_, W = W_;
    const int H2 = H / 2, W2 = W / 2;
    const int w0 = arch_.widths[0];

    conv_backward(out_, col_out_, deps, B, H, W, d_d0_, true);
    block_backward(dec_, B, H, W, emb_, dec_ws_, d_d0_, d_s_);

    // skip add: gradient flows to both the upsampled path and e0
    d_u_.assign(static_cast<size_t>(B) * H2 * W2 * w0, T(0));
    for (int b = 0; b < B; ++b)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const T* src = d_s_.data() + ((static_cast<size_t>(b) * H + y) * W + x) * w0;
                T* dst = d_u_.data() + ((static_cast<size_t>(b) * H2 + y / 2) * W2 + x / 2) * w0;
                for (int cc = 0; cc < w0; ++cc) dst[cc] += src[cc];
            }

    conv_backward(up_, col_up_, d_u_, B, H2, W2, d_m_, true);
    block_backward(mid_, B, H2, W2, emb_, mid_ws_, d_m_, d_dmid_);
    conv_backward(down_, col_down_, d_dmid_, B, H, W, d_e0_, true);
    {
        T* dp = d_e0_.data();
        const T* sp = d_s_.data();
        const long n = static_cast<long>(d_e0_.size());
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) dp[i] += sp[i];
    }
    block_backward(enc_, B, H, W, emb_, enc_ws_, d_e0_, d_hin_);
    conv_backward(in_, col_in_, d_hin_, B, H, W, d_xin_, false);
}

using DenoiserNet = DenoiserNetT<float>;

}  // namespace sdesr
