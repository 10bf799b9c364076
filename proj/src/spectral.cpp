#include "flearn/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace flearn {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_spectral_input(const Tensor& x, const char* op) {
    if (x.rank() != 3) {
        throw std::invalid_argument(std::string(op) + ": input must be [C,M,N], got " +
                                    shape_to_string(x.shape()));
    }
}

// cos/sin of 2 pi k / n for k < n/2, shared by forward and inverse (the
// inverse negates the sine). Cached per size; benchmark trials hit this from
// worker threads, hence the mutex.
struct Twiddles {
    std::vector<double> cos_v;
    std::vector<double> sin_v;
};

const Twiddles& twiddles_for(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Twiddles>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<Twiddles>();
        slot->cos_v.resize(static_cast<std::size_t>(n) / 2);
        slot->sin_v.resize(static_cast<std::size_t>(n) / 2);
        for (int k = 0; k < n / 2; ++k) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            slot->cos_v[k] = std::cos(a);
            slot->sin_v[k] = std::sin(a);
        }
    }
    return *slot;
}

// Direct O(n^2) 1D transform for sizes the radix-2 path cannot take.
void dft1d_direct(double* re, double* im, int n, int sign) {
    std::vector<double> or_(n), oi(n);
    for (int k = 0; k < n; ++k) {
        double sr = 0, si = 0;
        for (int t = 0; t < n; ++t) {
            const double a =
                sign * 2.0 * std::numbers::pi * static_cast<double>(k) * t / static_cast<double>(n);
            const double c = std::cos(a), s = std::sin(a);
            sr += re[t] * c - im[t] * s;
            si += re[t] * s + im[t] * c;
        }
        or_[k] = sr;
        oi[k] = si;
    }
    for (int k = 0; k < n; ++k) {
        re[k] = or_[k];
        im[k] = oi[k];
    }
}

// Radix-2 decimation-in-time on contiguous arrays, no normalization.
void fft1d(double* re, double* im, int n, int sign, const Twiddles& tw) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int step = n / len;
        for (int base = 0; base < n; base += len) {
            for (int k = 0; k < half; ++k) {
                const int tidx = k * step;
                const double wr = tw.cos_v[tidx];
                const double wi = sign * tw.sin_v[tidx];
                const int a = base + k;
                const int b = a + half;
                const double tr = wr * re[b] - wi * im[b];
                const double ti = wr * im[b] + wi * re[b];
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
            }
        }
    }
}

}  // namespace

void fft2_inplace(Tensor& re, Tensor& im, int sign) {
    check_spectral_input(re, "fft2");
    if (!re.same_shape(im)) throw std::invalid_argument("fft2: re/im shapes differ");
    const int c = re.dim(0), m = re.dim(1), n = re.dim(2);
    // Power-of-two axes take the radix-2 path; anything else falls back to a
    // direct per-axis summation so odd sizes stay usable (and slow).
    const Twiddles* tw_rows = is_pow2(n) ? &twiddles_for(n) : nullptr;
    const Twiddles* tw_cols = is_pow2(m) ? &twiddles_for(m) : nullptr;
    const std::size_t plane = static_cast<std::size_t>(m) * n;
    std::vector<double> cr(m), ci(m);
    for (int ch = 0; ch < c; ++ch) {
        double* pr = re.data() + ch * plane;
        double* pi = im.data() + ch * plane;
        for (int y = 0; y < m; ++y) {
            double* rr = pr + static_cast<std::size_t>(y) * n;
            double* ri = pi + static_cast<std::size_t>(y) * n;
            if (tw_rows) {
                fft1d(rr, ri, n, sign, *tw_rows);
            } else {
                dft1d_direct(rr, ri, n, sign);
            }
        }
        for (int x = 0; x < n; ++x) {
            for (int y = 0; y < m; ++y) {
                cr[y] = pr[static_cast<std::size_t>(y) * n + x];
                ci[y] = pi[static_cast<std::size_t>(y) * n + x];
            }
            if (tw_cols) {
                fft1d(cr.data(), ci.data(), m, sign, *tw_cols);
            } else {
                dft1d_direct(cr.data(), ci.data(), m, sign);
            }
            for (int y = 0; y < m; ++y) {
                pr[static_cast<std::size_t>(y) * n + x] = cr[y];
                pi[static_cast<std::size_t>(y) * n + x] = ci[y];
            }
        }
    }
}

ComplexPair dft2(const Tensor& x) {
    check_spectral_input(x, "dft2");
    ComplexPair out{x, Tensor(x.shape())};
    fft2_inplace(out.re, out.im, -1);
    return out;
}

ComplexPair idft2(const Tensor& re, const Tensor& im) {
    check_spectral_input(re, "idft2");
    if (!re.same_shape(im)) throw std::invalid_argument("idft2: re/im shapes differ");
    ComplexPair out{re, im};
    fft2_inplace(out.re, out.im, +1);
    const double scale = 1.0 / (static_cast<double>(re.dim(1)) * static_cast<double>(re.dim(2)));
    for (std::size_t i = 0; i < out.re.size(); ++i) {
        out.re[i] *= scale;
        out.im[i] *= scale;
    }
    return out;
}

ComplexPair dft2_bruteforce(const Tensor& x) {
    check_spectral_input(x, "dft2_bruteforce");
    const int c = x.dim(0), m = x.dim(1), n = x.dim(2);
    ComplexPair out{Tensor(x.shape()), Tensor(x.shape())};
    const std::size_t plane = static_cast<std::size_t>(m) * n;
    for (int ch = 0; ch < c; ++ch) {
        const double* ip = x.data() + ch * plane;
        double* pr = out.re.data() + ch * plane;
        double* pi = out.im.data() + ch * plane;
        for (int u = 0; u < m; ++u) {
            for (int v = 0; v < n; ++v) {
                double sr = 0, si = 0;
                for (int xx = 0; xx < m; ++xx) {
                    for (int yy = 0; yy < n; ++yy) {
                        const double ang =
                            2.0 * std::numbers::pi *
                            (static_cast<double>(u) * xx / m + static_cast<double>(v) * yy / n);
                        const double val = ip[static_cast<std::size_t>(xx) * n + yy];
                        sr += val * std::cos(ang);
                        si -= val * std::sin(ang);
                    }
                }
                pr[static_cast<std::size_t>(u) * n + v] = sr;
                pi[static_cast<std::size_t>(u) * n + v] = si;
            }
        }
    }
    return out;
}

Tensor magnitude(const Tensor& re, const Tensor& im) {
    if (!re.same_shape(im)) throw std::invalid_argument("magnitude: re/im shapes differ");
    Tensor out(re.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(re[i], im[i]);
    return out;
}

std::pair<VarPtr, VarPtr> dft2(const VarPtr& x) {
    if (!x) throw std::invalid_argument("dft2: null argument");
    ComplexPair f = dft2(x->value);

    // d(loss)/dI = Re{ F+[G_re + j G_im] } where F+ is the unnormalized
    // transform with positive exponent. Each output node carries the half of
    // that expression involving its own gradient.
    auto re_node = make_node(std::move(f.re), {x}, [](Var& self) {
        Var& xv = *self.parents[0];
        if (!xv.requires_grad) return;
        Tensor tr = self.grad;
        Tensor ti(self.grad.shape());
        fft2_inplace(tr, ti, +1);
        double* gx = xv.ensure_grad().data();
        for (std::size_t i = 0; i < tr.size(); ++i) gx[i] += tr[i];
    });
    auto im_node = make_node(std::move(f.im), {x}, [](Var& self) {
        Var& xv = *self.parents[0];
        if (!xv.requires_grad) return;
        Tensor tr(self.grad.shape());
        Tensor ti = self.grad;
        fft2_inplace(tr, ti, +1);
        double* gx = xv.ensure_grad().data();
        for (std::size_t i = 0; i < tr.size(); ++i) gx[i] += tr[i];
    });
    return {std::move(re_node), std::move(im_node)};
}

std::pair<VarPtr, VarPtr> idft2(const VarPtr& re, const VarPtr& im) {
    if (!re || !im) throw std::invalid_argument("idft2: null argument");
    ComplexPair p = idft2(re->value, im->value);

    // Adjoint of the scaled inverse: (1/MN) times the negative-exponent
    // transform of the output gradient, distributed over both inputs.
    auto backprop = [](bool grad_is_imag) {
        return [grad_is_imag](Var& self) {
            Var& rev = *self.parents[0];
            Var& imv = *self.parents[1];
            if (!rev.requires_grad && !imv.requires_grad) return;
            Tensor tr, ti;
            if (grad_is_imag) {
                tr = Tensor(self.grad.shape());
                ti = self.grad;
            } else {
                tr = self.grad;
                ti = Tensor(self.grad.shape());
            }
            fft2_inplace(tr, ti, -1);
            const double scale =
                1.0 / (static_cast<double>(tr.dim(1)) * static_cast<double>(tr.dim(2)));
            if (rev.requires_grad) {
                double* g = rev.ensure_grad().data();
                for (std::size_t i = 0; i < tr.size(); ++i) g[i] += scale * tr[i];
            }
            if (imv.requires_grad) {
                double* g = imv.ensure_grad().data();
                for (std::size_t i = 0; i < ti.size(); ++i) g[i] += scale * ti[i];
            }
        };
    };
    auto re_node = make_node(std::move(p.re), {re, im}, backprop(false));
    auto im_node = make_node(std::move(p.im), {re, im}, backprop(true));
    return {std::move(re_node), std::move(im_node)};
}

VarPtr magnitude(const VarPtr& re, const VarPtr& im) {
    if (!re || !im) throw std::invalid_argument("magnitude: null argument");
    Tensor out = magnitude(re->value, im->value);
    return make_node(std::move(out), {re, im}, [](Var& self) {
        Var& rev = *self.parents[0];
        Var& imv = *self.parents[1];
        const double* gy = self.grad.data();
        const double* mag = self.value.data();
        double* gr = rev.requires_grad ? rev.ensure_grad().data() : nullptr;
        double* gi = imv.requires_grad ? imv.ensure_grad().data() : nullptr;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double denom = mag[i] > 1e-12 ? mag[i] : 1e-12;
            const double g = gy[i] / denom;
            if (gr) gr[i] += g * rev.value[i];
            if (gi) gi[i] += g * imv.value[i];
        }
    });
}

}  // namespace flearn
