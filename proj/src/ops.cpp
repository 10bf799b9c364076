#include "flearn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace flearn {

namespace {

void check_shape(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void axpy(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

double dot(const double* p, const double* q, int n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += p[i] * q[i];
        s1 += p[i + 1] * q[i + 1];
        s2 += p[i + 2] * q[i + 2];
        s3 += p[i + 3] * q[i + 3];
    }
    for (; i < n; ++i) s0 += p[i] * q[i];
    return (s0 + s1) + (s2 + s3);
}

constexpr int kBlock = 32;  // output pixels kept in registers per 3x3 pass

// One constant-width block of 3x3 interior accumulation: out pixels
// [x0, x0+BW) of row y, summed over all input channels.
template <int BW>
void conv3x3_block(const double* in, std::size_t plane, int cin, int w, int y, int x0,
                   const double* wco, double bias_v, double* dst) {
    double acc[BW];
    for (int j = 0; j < BW; ++j) acc[j] = bias_v;
    const double* wp = wco;
    for (int ci = 0; ci < cin; ++ci, wp += 9) {
        const double* r0 = in + ci * plane + static_cast<std::size_t>(y - 1) * w + (x0 - 1);
        const double* r1 = r0 + w;
        const double* r2 = r1 + w;
        const double w00 = wp[0], w01 = wp[1], w02 = wp[2];
        const double w10 = wp[3], w11 = wp[4], w12 = wp[5];
        const double w20 = wp[6], w21 = wp[7], w22 = wp[8];
        for (int j = 0; j < BW; ++j) {
            double a = acc[j];
            a += w00 * r0[j] + w01 * r0[j + 1] + w02 * r0[j + 2];
            a += w10 * r1[j] + w11 * r1[j + 1] + w12 * r1[j + 2];
            a += w20 * r2[j] + w21 * r2[j + 1] + w22 * r2[j + 2];
            acc[j] = a;
        }
    }
    for (int j = 0; j < BW; ++j) dst[j] = acc[j];
}

// Same but with a runtime width (tiny images where W-2 < kBlock).
void conv3x3_block_n(const double* in, std::size_t plane, int cin, int w, int y, int x0, int bw,
                     const double* wco, double bias_v, double* dst) {
    double acc[kBlock];
    for (int j = 0; j < bw; ++j) acc[j] = bias_v;
    const double* wp = wco;
    for (int ci = 0; ci < cin; ++ci, wp += 9) {
        const double* r0 = in + ci * plane + static_cast<std::size_t>(y - 1) * w + (x0 - 1);
        const double* r1 = r0 + w;
        const double* r2 = r1 + w;
        for (int j = 0; j < bw; ++j) {
            double a = acc[j];
            a += wp[0] * r0[j] + wp[1] * r0[j + 1] + wp[2] * r0[j + 2];
            a += wp[3] * r1[j] + wp[4] * r1[j + 1] + wp[5] * r1[j + 2];
            a += wp[6] * r2[j] + wp[7] * r2[j + 1] + wp[8] * r2[j + 2];
            acc[j] = a;
        }
    }
    for (int j = 0; j < bw; ++j) dst[j] = acc[j];
}

// Scalar single-pixel convolution with bounds checks; used for borders and as
// the generic-kernel fallback.
double conv_pixel(const double* in, std::size_t plane, int cin, int h, int w, int y, int x,
                  const double* wco, int kh, int kw, double bias_v) {
    const int ph = (kh - 1) / 2;
    const int pw = (kw - 1) / 2;
    double acc = bias_v;
    for (int ci = 0; ci < cin; ++ci) {
        const double* ip = in + ci * plane;
        const double* wp = wco + static_cast<std::size_t>(ci) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
            const int yy = y + ky - ph;
            if (yy < 0 || yy >= h) continue;
            const double* row = ip + static_cast<std::size_t>(yy) * w;
            for (int kx = 0; kx < kw; ++kx) {
                const int xx = x + kx - pw;
                if (xx < 0 || xx >= w) continue;
                acc += wp[ky * kw + kx] * row[xx];
            }
        }
    }
    return acc;
}

void conv1x1(const double* in, int cin, int h, int w, const double* weights, const double* bias,
             int cout, double* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int co = 0; co < cout; ++co) {
        double* op = out + co * plane;
        const double bv = bias ? bias[co] : 0.0;
        for (std::size_t j = 0; j < plane; ++j) op[j] = bv;
        const double* wp = weights + static_cast<std::size_t>(co) * cin;
        int ci = 0;
        for (; ci + 4 <= cin; ci += 4) {
            const double* i0 = in + (ci + 0) * plane;
            const double* i1 = in + (ci + 1) * plane;
            const double* i2 = in + (ci + 2) * plane;
            const double* i3 = in + (ci + 3) * plane;
            const double w0 = wp[ci], w1 = wp[ci + 1], w2 = wp[ci + 2], w3 = wp[ci + 3];
            for (std::size_t j = 0; j < plane; ++j) {
                op[j] += w0 * i0[j] + w1 * i1[j] + w2 * i2[j] + w3 * i3[j];
            }
        }
        for (; ci < cin; ++ci) {
            const double* ip = in + ci * plane;
            const double wv = wp[ci];
            for (std::size_t j = 0; j < plane; ++j) op[j] += wv * ip[j];
        }
    }
}

void conv3x3(const double* in, int cin, int h, int w, const double* weights, const double* bias,
             int cout, double* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int co = 0; co < cout; ++co) {
        double* op = out + co * plane;
        const double bv = bias ? bias[co] : 0.0;
        const double* wco = weights + static_cast<std::size_t>(co) * cin * 9;
        for (int y = 1; y + 1 < h; ++y) {
            double* orow = op + static_cast<std::size_t>(y) * w;
            if (w - 2 >= kBlock) {
                int x0 = 1;
                for (; x0 + kBlock <= w - 1; x0 += kBlock) {
                    conv3x3_block<kBlock>(in, plane, cin, w, y, x0, wco, bv, orow + x0);
                }
                if (x0 < w - 1) {
                    // Re-run a full-width block flush against the right edge;
                    // the overlap rewrites identical values.
                    x0 = w - 1 - kBlock;
                    conv3x3_block<kBlock>(in, plane, cin, w, y, x0, wco, bv, orow + x0);
                }
            } else if (w > 2) {
                conv3x3_block_n(in, plane, cin, w, y, 1, w - 2, wco, bv, orow + 1);
            }
        }
        // Borders: top and bottom rows, then left/right columns in between.
        for (int x = 0; x < w; ++x) {
            op[x] = conv_pixel(in, plane, cin, h, w, 0, x, wco, 3, 3, bv);
        }
        if (h > 1) {
            double* brow = op + static_cast<std::size_t>(h - 1) * w;
            for (int x = 0; x < w; ++x) {
                brow[x] = conv_pixel(in, plane, cin, h, w, h - 1, x, wco, 3, 3, bv);
            }
        }
        for (int y = 1; y + 1 < h; ++y) {
            op[static_cast<std::size_t>(y) * w] = conv_pixel(in, plane, cin, h, w, y, 0, wco, 3, 3, bv);
            if (w > 1) {
                op[static_cast<std::size_t>(y) * w + (w - 1)] =
                    conv_pixel(in, plane, cin, h, w, y, w - 1, wco, 3, 3, bv);
            }
        }
    }
}

void conv_generic(const double* in, int cin, int h, int w, const double* weights,
                  const double* bias, int cout, int kh, int kw, double* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int co = 0; co < cout; ++co) {
        double* op = out + co * plane;
        const double bv = bias ? bias[co] : 0.0;
        const double* wco = weights + static_cast<std::size_t>(co) * cin * kh * kw;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                op[static_cast<std::size_t>(y) * w + x] =
                    conv_pixel(in, plane, cin, h, w, y, x, wco, kh, kw, bv);
            }
        }
    }
}

// weights' with output/input channels swapped and the kernel flipped in both
// spatial directions; turns the input-gradient pass into a forward pass.
std::vector<double> transpose_flip(const double* weights, int cout, int cin, int kh, int kw) {
    std::vector<double> t(static_cast<std::size_t>(cout) * cin * kh * kw);
    for (int co = 0; co < cout; ++co) {
        for (int ci = 0; ci < cin; ++ci) {
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    const std::size_t src =
                        ((static_cast<std::size_t>(co) * cin + ci) * kh + ky) * kw + kx;
                    const std::size_t dst =
                        ((static_cast<std::size_t>(ci) * cout + co) * kh + (kh - 1 - ky)) * kw +
                        (kw - 1 - kx);
                    t[dst] = weights[src];
                }
            }
        }
    }
    return t;
}

}  // namespace

namespace detail {

void conv2d_forward(const double* in, int cin, int h, int w_, const double* weights,
                    const double* bias, int cout, int kh, int kw, double* out) {
    if (kh == 1 && kw == 1) {
        conv1x1(in, cin, h, w_, weights, bias, cout, out);
    } else if (kh == 3 && kw == 3) {
        conv3x3(in, cin, h, w_, weights, bias, cout, out);
    } else {
        conv_generic(in, cin, h, w_, weights, bias, cout, kh, kw, out);
    }
}

void conv2d_input_grad(const double* gout, const double* weights, int cin, int cout, int h, int w_,
                       int kh, int kw, double* gin) {
    const std::vector<double> wt = transpose_flip(weights, cout, cin, kh, kw);
    conv2d_forward(gout, cout, h, w_, wt.data(), nullptr, cin, kh, kw, gin);
}

void conv2d_weight_grad(const double* gout, const double* in, int cin, int cout, int h, int w_,
                        int kh, int kw, double* gw, double* gb) {
    const std::size_t plane = static_cast<std::size_t>(h) * w_;
    if (gb) {
        for (int co = 0; co < cout; ++co) {
            const double* gp = gout + co * plane;
            double s = 0;
            for (std::size_t j = 0; j < plane; ++j) s += gp[j];
            gb[co] = s;
        }
    }
    if (kh == 1 && kw == 1) {
        for (int co = 0; co < cout; ++co) {
            for (int ci = 0; ci < cin; ++ci) {
                gw[static_cast<std::size_t>(co) * cin + ci] =
                    dot(gout + co * plane, in + ci * plane, static_cast<int>(plane));
            }
        }
        return;
    }
    if (kh == 3 && kw == 3) {
        for (int co = 0; co < cout; ++co) {
            const double* gp = gout + co * plane;
            for (int ci = 0; ci < cin; ++ci) {
                const double* ip = in + ci * plane;
                double acc[9] = {0};
                for (int y = 0; y < h; ++y) {
                    const double* g = gp + static_cast<std::size_t>(y) * w_;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = y + ky - 1;
                        if (yy < 0 || yy >= h) continue;
                        const double* r = ip + static_cast<std::size_t>(yy) * w_;
                        acc[ky * 3 + 0] += dot(g + 1, r, w_ - 1);
                        acc[ky * 3 + 1] += dot(g, r, w_);
                        acc[ky * 3 + 2] += dot(g, r + 1, w_ - 1);
                    }
                }
                double* wp = gw + (static_cast<std::size_t>(co) * cin + ci) * 9;
                for (int k = 0; k < 9; ++k) wp[k] = acc[k];
            }
        }
        return;
    }
    const int ph = (kh - 1) / 2;
    const int pw = (kw - 1) / 2;
    for (int co = 0; co < cout; ++co) {
        const double* gp = gout + co * plane;
        for (int ci = 0; ci < cin; ++ci) {
            const double* ip = in + ci * plane;
            double* wp = gw + (static_cast<std::size_t>(co) * cin + ci) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
                for (int kx = 0; kx < kw; ++kx) {
                    double s = 0;
                    for (int y = 0; y < h; ++y) {
                        const int yy = y + ky - ph;
                        if (yy < 0 || yy >= h) continue;
                        const int x_lo = std::max(0, pw - kx);
                        const int x_hi = std::min(w_, w_ + pw - kx);
                        const double* g = gp + static_cast<std::size_t>(y) * w_;
                        const double* r = ip + static_cast<std::size_t>(yy) * w_ + (kx - pw);
                        for (int x = x_lo; x < x_hi; ++x) s += g[x] * r[x];
                    }
                    wp[ky * kw + kx] = s;
                }
            }
        }
    }
}

}  // namespace detail

VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int padding) {
    check_shape(x && w && b, "conv2d: null argument");
    check_shape(x->value.rank() == 3, "conv2d: input must be [C,H,W], got " +
                                          shape_to_string(x->value.shape()));
    check_shape(w->value.rank() == 4, "conv2d: weights must be [Cout,Cin,kh,kw], got " +
                                          shape_to_string(w->value.shape()));
    check_shape(b->value.rank() == 1, "conv2d: bias must be [Cout]");
    const int cin = x->value.dim(0), h = x->value.dim(1), wd = x->value.dim(2);
    const int cout = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    check_shape(w->value.dim(1) == cin, "conv2d: weight input channels " +
                                            std::to_string(w->value.dim(1)) +
                                            " do not match input channels " + std::to_string(cin));
    check_shape(b->value.dim(0) == cout, "conv2d: bias size does not match output channels");
    check_shape(kh % 2 == 1 && kw % 2 == 1, "conv2d: kernel sides must be odd");
    check_shape(padding == (kh - 1) / 2 && padding == (kw - 1) / 2,
                "conv2d: padding must be (k-1)/2 (same padding)");

    Tensor out({cout, h, wd});
    detail::conv2d_forward(x->value.data(), cin, h, wd, w->value.data(), b->value.data(), cout, kh,
                           kw, out.data());

    return make_node(std::move(out), {x, w, b}, [cin, h, wd, cout, kh, kw](Var& self) {
        const double* gy = self.grad.data();
        Var& xv = *self.parents[0];
        Var& wv = *self.parents[1];
        Var& bv = *self.parents[2];
        if (xv.requires_grad) {
            Tensor gx({cin, h, wd});
            detail::conv2d_input_grad(gy, wv.value.data(), cin, cout, h, wd, kh, kw, gx.data());
            axpy(xv.ensure_grad().data(), gx.data(), gx.size());
        }
        if (wv.requires_grad || bv.requires_grad) {
            Tensor gw({cout, cin, kh, kw});
            Tensor gb({cout});
            detail::conv2d_weight_grad(gy, xv.value.data(), cin, cout, h, wd, kh, kw, gw.data(),
                                       gb.data());
            if (wv.requires_grad) axpy(wv.ensure_grad().data(), gw.data(), gw.size());
            if (bv.requires_grad) axpy(bv.ensure_grad().data(), gb.data(), gb.size());
        }
    });
}

VarPtr relu(const VarPtr& x) {
    check_shape(static_cast<bool>(x), "relu: null argument");
    Tensor out(x->value.shape());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = x->value[i] > 0.0 ? x->value[i] : 0.0;
    return make_node(std::move(out), {x}, [](Var& self) {
        Var& xv = *self.parents[0];
        if (!xv.requires_grad) return;
        double* gx = xv.ensure_grad().data();
        const double* gy = self.grad.data();
        const double* v = xv.value.data();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (v[i] > 0.0) gx[i] += gy[i];
        }
    });
}

VarPtr sigmoid(const VarPtr& x) {
    check_shape(static_cast<bool>(x), "sigmoid: null argument");
    Tensor out(x->value.shape());
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x->value[i];
        if (v >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            out[i] = e / (1.0 + e);
        }
    }
    return make_node(std::move(out), {x}, [](Var& self) {
        Var& xv = *self.parents[0];
        if (!xv.requires_grad) return;
        double* gx = xv.ensure_grad().data();
        const double* gy = self.grad.data();
        const double* s = self.value.data();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            gx[i] += gy[i] * s[i] * (1.0 - s[i]);
        }
    });
}

BatchNormState::BatchNormState(int channels)
    : running_mean({channels}), running_var(Tensor::full({channels}, 1.0)) {}

VarPtr batch_norm(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta, BatchNormState& state,
                  BnMode mode, double eps, double momentum) {
    check_shape(x && gamma && beta, "batch_norm: null argument");
    check_shape(x->value.rank() == 3, "batch_norm: input must be [C,H,W]");
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    check_shape(gamma->value.shape() == std::vector<int>{c} &&
                    beta->value.shape() == std::vector<int>{c},
                "batch_norm: gamma/beta must be [C]");
    check_shape(state.running_mean.shape() == std::vector<int>{c} &&
                    state.running_var.shape() == std::vector<int>{c},
                "batch_norm: running stats must be [C]");
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const double inv_n = 1.0 / static_cast<double>(plane);

    std::vector<double> mean(c), invstd(c);
    if (mode == BnMode::Train) {
        for (int ci = 0; ci < c; ++ci) {
            const double* ip = x->value.data() + ci * plane;
            double m = 0;
            for (std::size_t j = 0; j < plane; ++j) m += ip[j];
            m *= inv_n;
            double v = 0;
            for (std::size_t j = 0; j < plane; ++j) {
                const double d = ip[j] - m;
                v += d * d;
            }
            v *= inv_n;  // biased variance, also what goes into the buffers
            mean[ci] = m;
            invstd[ci] = 1.0 / std::sqrt(v + eps);
            state.running_mean[ci] = (1.0 - momentum) * state.running_mean[ci] + momentum * m;
            state.running_var[ci] = (1.0 - momentum) * state.running_var[ci] + momentum * v;
        }
    } else {
        for (int ci = 0; ci < c; ++ci) {
            mean[ci] = state.running_mean[ci];
            invstd[ci] = 1.0 / std::sqrt(state.running_var[ci] + eps);
        }
    }

    Tensor out({c, h, w});
    for (int ci = 0; ci < c; ++ci) {
        const double* ip = x->value.data() + ci * plane;
        double* op = out.data() + ci * plane;
        const double g = gamma->value[ci], bta = beta->value[ci];
        const double m = mean[ci], is = invstd[ci];
        for (std::size_t j = 0; j < plane; ++j) op[j] = g * (ip[j] - m) * is + bta;
    }

    const bool train = mode == BnMode::Train;
    return make_node(
        std::move(out), {x, gamma, beta},
        [c, plane, inv_n, train, mean = std::move(mean), invstd = std::move(invstd)](Var& self) {
            Var& xv = *self.parents[0];
            Var& gv = *self.parents[1];
            Var& bv = *self.parents[2];
            const double* gy = self.grad.data();
            double* gx = xv.requires_grad ? xv.ensure_grad().data() : nullptr;
            double* gg = gv.requires_grad ? gv.ensure_grad().data() : nullptr;
            double* gb = bv.requires_grad ? bv.ensure_grad().data() : nullptr;
            for (int ci = 0; ci < c; ++ci) {
                const double* dy = gy + ci * plane;
                const double* ip = xv.value.data() + ci * plane;
                const double m = mean[ci], is = invstd[ci], g = gv.value[ci];
                double sum_dy = 0, sum_dy_xhat = 0;
                for (std::size_t j = 0; j < plane; ++j) {
                    sum_dy += dy[j];
                    sum_dy_xhat += dy[j] * (ip[j] - m) * is;
                }
                if (gb) gb[ci] += sum_dy;
                if (gg) gg[ci] += sum_dy_xhat;
                if (gx) {
                    double* dst = gx + ci * plane;
                    if (train) {
                        const double mean_dy = sum_dy * inv_n;
                        const double mean_dy_xhat = sum_dy_xhat * inv_n;
                        for (std::size_t j = 0; j < plane; ++j) {
                            const double xhat = (ip[j] - m) * is;
                            dst[j] += g * is * (dy[j] - mean_dy - xhat * mean_dy_xhat);
                        }
                    } else {
                        for (std::size_t j = 0; j < plane; ++j) dst[j] += g * is * dy[j];
                    }
                }
            }
        });
}

VarPtr concat_channels(const VarPtr& a, const VarPtr& b) {
    check_shape(a && b, "concat_channels: null argument");
    if (b->value.empty()) return a;  // concat with nothing is the identity
    if (a->value.empty()) return b;
    check_shape(a->value.rank() == 3 && b->value.rank() == 3,
                "concat_channels: inputs must be [C,H,W]");
    check_shape(a->value.dim(1) == b->value.dim(1) && a->value.dim(2) == b->value.dim(2),
                "concat_channels: spatial sizes differ: " + shape_to_string(a->value.shape()) +
                    " vs " + shape_to_string(b->value.shape()));
    const int ca = a->value.dim(0), cb = b->value.dim(0);
    const int h = a->value.dim(1), w = a->value.dim(2);
    Tensor out({ca + cb, h, w});
    std::memcpy(out.data(), a->value.data(), a->value.size() * sizeof(double));
    std::memcpy(out.data() + a->value.size(), b->value.data(), b->value.size() * sizeof(double));
    return make_node(std::move(out), {a, b}, [](Var& self) {
        Var& av = *self.parents[0];
        Var& bv = *self.parents[1];
        const std::size_t na = av.value.size();
        if (av.requires_grad) axpy(av.ensure_grad().data(), self.grad.data(), na);
        if (bv.requires_grad) {
            axpy(bv.ensure_grad().data(), self.grad.data() + na, bv.value.size());
        }
    });
}

VarPtr add(const VarPtr& a, const VarPtr& b) {
    check_shape(a && b, "add: null argument");
    check_shape(a->value.same_shape(b->value), "add: shapes differ: " +
                                                   shape_to_string(a->value.shape()) + " vs " +
                                                   shape_to_string(b->value.shape()));
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
    return make_node(std::move(out), {a, b}, [](Var& self) {
        for (int p = 0; p < 2; ++p) {
            Var& v = *self.parents[p];
            if (v.requires_grad) axpy(v.ensure_grad().data(), self.grad.data(), self.grad.size());
        }
    });
}

VarPtr mul(const VarPtr& a, const VarPtr& b) {
    check_shape(a && b, "mul: null argument");
    check_shape(a->value.same_shape(b->value), "mul: shapes differ: " +
                                                   shape_to_string(a->value.shape()) + " vs " +
                                                   shape_to_string(b->value.shape()));
    Tensor out(a->value.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
    return make_node(std::move(out), {a, b}, [](Var& self) {
        Var& av = *self.parents[0];
        Var& bv = *self.parents[1];
        const double* gy = self.grad.data();
        if (av.requires_grad) {
            double* ga = av.ensure_grad().data();
            for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += gy[i] * bv.value[i];
        }
        if (bv.requires_grad) {
            double* gb = bv.ensure_grad().data();
            for (std::size_t i = 0; i < self.grad.size(); ++i) gb[i] += gy[i] * av.value[i];
        }
    });
}

VarPtr sum(const VarPtr& x) {
    check_shape(static_cast<bool>(x), "sum: null argument");
    double s = 0;
    for (std::size_t i = 0; i < x->value.size(); ++i) s += x->value[i];
    return make_node(Tensor::scalar(s), {x}, [](Var& self) {
        Var& xv = *self.parents[0];
        if (!xv.requires_grad) return;
        const double g = self.grad[0];
        double* gx = xv.ensure_grad().data();
        for (std::size_t i = 0; i < xv.value.size(); ++i) gx[i] += g;
    });
}

}  // namespace flearn
