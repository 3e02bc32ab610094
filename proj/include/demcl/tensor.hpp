#pragma once

#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace demcl {

/// Dense row-major tensor of doubles. Rank and shape are dynamic.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        values.assign(element_count(shape), 0.0);
    }

    Tensor(std::vector<std::size_t> s, std::vector<double> v)
        : shape(std::move(s)), values(std::move(v)) {
        if (values.size() != element_count(shape))
            throw std::invalid_argument("Tensor: value count does not match shape");
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }

    std::size_t size() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    // (c,h,w) indexing for rank-3 image tensors
    double& at3(std::size_t c, std::size_t h, std::size_t w) {
        return values[(c * shape[1] + h) * shape[2] + w];
    }
    double at3(std::size_t c, std::size_t h, std::size_t w) const {
        return values[(c * shape[1] + h) * shape[2] + w];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double x) { std::fill(values.begin(), values.end(), x); }
};

std::string shape_str(const std::vector<std::size_t>& s);

/// Row-major complex matrix (fast-time x slow-time grids, FFT outputs).
struct ComplexMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::complex<double>> v;

    ComplexMat() = default;
    ComplexMat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c) {}

    std::complex<double>& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    const std::complex<double>& at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

/// Row-major real matrix (RDM magnitudes, TDS profiles).
struct RealMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    RealMat() = default;
    RealMat(std::size_t r, std::size_t c, double init = 0.0) : rows(r), cols(c), v(r * c, init) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

}  // namespace demcl
