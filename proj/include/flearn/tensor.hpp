#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace flearn {

/// Dense row-major array of 64-bit reals. Rank 0 (empty shape) is a scalar.
/// Feature maps use [C,H,W], conv weights [Cout,Cin,kh,kw].
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor full(std::vector<int> shape, double v);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // [C,H,W] accessors; bounds are the caller's responsibility.
    double& at(int c, int y, int x) {
        return values_[(static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_[1]) +
                        static_cast<std::size_t>(y)) *
                           static_cast<std::size_t>(shape_[2]) +
                       static_cast<std::size_t>(x)];
    }
    double at(int c, int y, int x) const {
        return values_[(static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_[1]) +
                        static_cast<std::size_t>(y)) *
                           static_cast<std::size_t>(shape_[2]) +
                       static_cast<std::size_t>(x)];
    }

    double item() const;

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    bool operator==(const Tensor& other) const = default;

  private:
    std::vector<int> shape_;
    std::vector<double> values_;
};

std::size_t shape_size(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace flearn
