#include "flearn/metrics.hpp"

#include <stdexcept>

namespace flearn {

PixelMetrics f1_at_threshold(const Tensor& pred, const Tensor& target, double tau) {
    if (!pred.same_shape(target)) {
        throw std::invalid_argument("f1_at_threshold: shapes differ: " +
                                    shape_to_string(pred.shape()) + " vs " +
                                    shape_to_string(target.shape()));
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("f1_at_threshold: threshold must lie in (0,1)");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] >= tau;
        const bool t = target[i] > 0.5;
        if (p && t) {
            ++tp;
        } else if (p) {
            ++fp;
        } else if (t) {
            ++fn;
        }
    }
    PixelMetrics m;
    const double tpd = static_cast<double>(tp);
    if (tp + fp > 0) m.precision = tpd / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = tpd / static_cast<double>(tp + fn);
    if (m.precision + m.recall > 0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

}  // namespace flearn
