#pragma once

#include "flearn/autodiff.hpp"

namespace flearn {

/// Same-padded 2D convolution. x: [Cin,H,W], w: [Cout,Cin,kh,kw] with kh, kw
/// odd and equal, b: [Cout]. padding must equal (kh-1)/2 so spatial size is
/// preserved. Output: [Cout,H,W].
VarPtr conv2d(const VarPtr& x, const VarPtr& w, const VarPtr& b, int padding);

/// max(x, 0); the subgradient at exactly 0 is taken as 0.
VarPtr relu(const VarPtr& x);

/// Logistic 1/(1+exp(-x)), numerically stable for large |x|.
VarPtr sigmoid(const VarPtr& x);

struct BatchNormState {
    Tensor running_mean;  // [C]
    Tensor running_var;   // [C]
    explicit BatchNormState(int channels);
};

enum class BnMode { Train, Eval };

/// Per-channel batch norm over the spatial axes of a single [C,H,W] map.
/// Train mode normalizes with batch statistics (biased variance) and updates
/// the running buffers in place; eval mode uses the running buffers.
VarPtr batch_norm(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta, BatchNormState& state,
                  BnMode mode, double eps = 1e-5, double momentum = 0.1);

/// Concatenates two [C,H,W] maps along the channel axis.
VarPtr concat_channels(const VarPtr& a, const VarPtr& b);

VarPtr add(const VarPtr& a, const VarPtr& b);  // elementwise, equal shapes
VarPtr mul(const VarPtr& a, const VarPtr& b);  // elementwise, equal shapes
VarPtr sum(const VarPtr& x);                   // reduction to a scalar

namespace detail {

// Plain-tensor convolution kernels shared by the op and its backward pass.
// All of them overwrite `out`. `bias` may be null.
void conv2d_forward(const double* in, int cin, int h, int w_, const double* weights,
                    const double* bias, int cout, int kh, int kw, double* out);
void conv2d_input_grad(const double* gout, const double* weights, int cin, int cout, int h, int w_,
                       int kh, int kw, double* gin);
void conv2d_weight_grad(const double* gout, const double* in, int cin, int cout, int h, int w_,
                        int kh, int kw, double* gw, double* gb);

}  // namespace detail

}  // namespace flearn
