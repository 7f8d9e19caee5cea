#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "sdd/errors.hpp"

namespace sdd {

// Dense row-major array of 64-bit floats. Mostly used rank-1 (vectors) and
// rank-2 (weight matrices, sample batches).
class DenseArray {
public:
    DenseArray() = default;

    explicit DenseArray(std::vector<std::size_t> shape)
        : shape_(std::move(shape)),
          data_(count(shape_), 0.0) {}

    DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size()) {
            throw ShapeError("DenseArray: shape/data length mismatch");
        }
    }

    static DenseArray zeros(std::size_t n) { return DenseArray({n}); }

    static DenseArray vec(std::vector<double> values) {
        std::size_t n = values.size();
        return DenseArray({n}, std::move(values));
    }

    static DenseArray matrix(std::size_t rows, std::size_t cols) {
        return DenseArray({rows, cols});
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::vector<double>::iterator begin() { return data_.begin(); }
    std::vector<double>::iterator end() { return data_.end(); }
    std::vector<double>::const_iterator begin() const { return data_.begin(); }
    std::vector<double>::const_iterator end() const { return data_.end(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    std::size_t dim(std::size_t i) const {
        if (i >= shape_.size()) {
            throw ShapeError("DenseArray: rank too low for axis " + std::to_string(i));
        }
        return shape_[i];
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline void require_same_shape(const DenseArray& a, const DenseArray& b, const char* where) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
    }
}

inline double dot(const DenseArray& a, const DenseArray& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(const DenseArray& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
    return std::sqrt(s);
}

}  // namespace sdd
