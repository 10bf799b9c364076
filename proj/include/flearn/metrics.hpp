#pragma once

#include "flearn/tensor.hpp"

namespace flearn {

struct PixelMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Binarizes pred at `pred >= tau` against a {0,1} target and counts pixels.
/// Empty-denominator convention: a metric with zero denominator is 0, and f1
/// is 0 whenever precision + recall == 0.
PixelMetrics f1_at_threshold(const Tensor& pred, const Tensor& target, double tau);

}  // namespace flearn
