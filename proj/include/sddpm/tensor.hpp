#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "sddpm/common.hpp"

namespace sddpm {

inline int64_t numel_of(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

// Dense row-major n-d array. `grad` stays empty until alloc_grad(); layer
// parameters allocate it, activations do not.
template <typename T>
struct TensorT {
    std::vector<int64_t> shape;
    std::vector<T> data;
    std::vector<T> grad;

    TensorT() = default;
    explicit TensorT(std::vector<int64_t> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
    TensorT(std::vector<int64_t> s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        check_arg(static_cast<int64_t>(data.size()) == numel_of(shape),
                  strfmt("tensor data size %zu does not match shape %s", data.size(), shape_str(shape).c_str()));
    }

    static TensorT zeros(std::vector<int64_t> s) { return TensorT(std::move(s)); }
    static TensorT full(std::vector<int64_t> s, T value) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), value);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    void alloc_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }

    TensorT reshaped(std::vector<int64_t> s) const {
        check_arg(numel_of(s) == numel(),
                  strfmt("reshape %s -> %s changes element count", shape_str(shape).c_str(), shape_str(s).c_str()));
        TensorT out;
        out.shape = std::move(s);
        out.data = data;
        return out;
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename To, typename From>
TensorT<To> tensor_cast(const TensorT<From>& x) {
    TensorT<To> out(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i) out.data[static_cast<size_t>(i)] = static_cast<To>(x.data[static_cast<size_t>(i)]);
    return out;
}

template <typename T>
void check_finite(const TensorT<T>& x, const char* what) {
    if (!finite_checks_enabled()) return;
    for (int64_t i = 0; i < x.numel(); ++i) {
        if (!std::isfinite(static_cast<double>(x.data[static_cast<size_t>(i)]))) {
            throw VerificationError(strfmt("non-finite value in %s at flat index %lld", what, static_cast<long long>(i)));
        }
    }
}

}  // namespace sddpm
