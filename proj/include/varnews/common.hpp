#pragma once

#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace varnews {

/// Input that violates a documented precondition or file schema.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure that could not produce a finite answer.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Rows are time, columns are models or covariates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    [[nodiscard]] std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {values_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }
    void set_column(std::size_t c, std::span<const double> v) {
        if (v.size() != rows_) throw ValidationError("Matrix::set_column: length mismatch");
        for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
    }

    /// Rows [first, first + count).
    [[nodiscard]] Matrix slice_rows(std::size_t first, std::size_t count) const {
        if (first + count > rows_) throw ValidationError("Matrix::slice_rows: out of range");
        Matrix out(count, cols_);
        std::copy(values_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                  values_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_),
                  out.values_.begin());
        return out;
    }

    [[nodiscard]] Matrix select_columns(std::span<const std::size_t> cols) const {
        Matrix out(rows_, cols.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t j = 0; j < cols.size(); ++j) out(r, j) = (*this)(r, cols[j]);
        return out;
    }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Deterministic 64-bit seed for a named stage derived from a root seed.
/// FNV-1a over the name, mixed with the root through splitmix64.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

[[nodiscard]] double mean(std::span<const double> x);
/// Population (1/n) variance.
[[nodiscard]] double population_variance(std::span<const double> x);
/// Empirical quantile with linear interpolation between order statistics (Hyndman-Fan type 7).
[[nodiscard]] double empirical_quantile(std::span<const double> x, double p);

/// Runs `task(i)` for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Rethrows the first exception after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace varnews
