#pragma once

#include <utility>

#include "flearn/autodiff.hpp"

namespace flearn {

/// Real and imaginary planes of equal shape.
struct ComplexPair {
    Tensor re;
    Tensor im;
};

/// Unnormalized 2D DFT of a real [C,M,N] tensor, transformed per channel:
/// F(u,v) = sum_{x,y} I(x,y) exp(-j 2 pi (u x / M + v y / N)).
/// Power-of-two sides use the radix-2 FFT; other sizes fall back to direct
/// summation. DC sits at (0,0); no quadrant shift is applied anywhere.
ComplexPair dft2(const Tensor& x);

/// Inverse transform of a complex [C,M,N] pair, carrying the 1/(MN) factor:
/// p(x,y) = (1/MN) sum_{u,v} P(u,v) exp(+j 2 pi (u x / M + v y / N)).
ComplexPair idft2(const Tensor& re, const Tensor& im);

/// Direct evaluation of the same sums, O(M^2 N^2) per channel. Any size;
/// intended as an oracle for small inputs.
ComplexPair dft2_bruteforce(const Tensor& x);

/// sqrt(re^2 + im^2), elementwise.
Tensor magnitude(const Tensor& re, const Tensor& im);

/// In-place unnormalized complex transform of every channel of a [C,M,N]
/// pair. sign = -1 applies exp(-j...) (forward), sign = +1 exp(+j...).
void fft2_inplace(Tensor& re, Tensor& im, int sign);

// Differentiable versions. dft2/idft2 return {re, im} node pairs; each node
// backpropagates through one transform of its own gradient, which is exact
// because the transforms are linear.
std::pair<VarPtr, VarPtr> dft2(const VarPtr& x);
std::pair<VarPtr, VarPtr> idft2(const VarPtr& re, const VarPtr& im);

/// Differentiable magnitude; the gradient guards the |z| denominator with
/// 1e-12 so exact zeros do not produce NaNs.
VarPtr magnitude(const VarPtr& re, const VarPtr& im);

}  // namespace flearn
