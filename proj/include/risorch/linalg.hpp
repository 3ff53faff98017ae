#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace risorch {

using cxd = std::complex<double>;
using CVec = std::vector<cxd>;

// Dense complex matrix, row-major. Dimensions in this project are small
// (N x N_T with N <= 128, N_T = 4), so no external linear algebra is needed.
struct CMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<cxd> data;

    CMat() = default;
    CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cxd& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const cxd& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline cxd dot(const CVec& a, const CVec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    cxd s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// row vector times matrix: (1 x r) * (r x c) -> (1 x c)
inline CVec rowvec_times_mat(const CVec& v, const CMat& m) {
    if (v.size() != m.rows) throw std::invalid_argument("rowvec_times_mat: size mismatch");
    CVec out(m.cols, cxd{0.0, 0.0});
    for (std::size_t i = 0; i < m.rows; ++i) {
        const cxd vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += vi * m(i, j);
    }
    return out;
}

inline double norm2(const CVec& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

inline double norm(const CVec& v) { return std::sqrt(norm2(v)); }

}  // namespace risorch
