#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lmkg::nn {

/// Row-major array of doubles. Most code uses it as a 2-D (rows x cols) matrix.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }

    const std::vector<std::size_t> &shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t rows() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t cols() const noexcept { return rows() == 0 ? 0 : values_.size() / rows(); }

    double *data() noexcept { return values_.data(); }
    const double *data() const noexcept { return values_.data(); }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double &operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double &operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    std::span<double> row(std::size_t r) { return std::span(values_).subspan(r * cols(), cols()); }
    std::span<const double> row(std::size_t r) const { return std::span(values_).subspan(r * cols(), cols()); }

    void fill(double v);
    /// Reshapes to rows x cols, reusing storage; contents are unspecified afterwards.
    void resize(std::size_t rows, std::size_t cols);

    /// Throws Error(non_finite) naming `where` if any value is NaN or infinite.
    void check_finite(const char *where) const;

    bool operator==(const Tensor &) const = default;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

/// A trainable parameter: value and gradient views of equal size.
struct ParamRef {
    std::span<double> value;
    std::span<double> grad;
};

} // namespace lmkg::nn
