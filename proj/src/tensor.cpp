#include "flearn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace flearn {

std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_to_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ',';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_size(shape_)) {
        throw std::invalid_argument("value count " + std::to_string(values_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.values_.assign(1, v);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

double Tensor::item() const {
    if (values_.size() != 1) {
        throw std::invalid_argument("item() requires a single-element tensor, shape is " +
                                    shape_to_string(shape_));
    }
    return values_[0];
}

void Tensor::fill(double v) {
    for (double& x : values_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : values_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace flearn
