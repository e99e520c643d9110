#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fer/errors.hpp"

namespace fer {

using Shape = std::vector<int>;

inline int64_t shape_size(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ')';
    return os.str();
}

// Dense row-major array with a channel-last shape, e.g. [H,W,C] or [N,H,W,C].
// All network math runs on these; the scalar type is a template parameter so
// the gradient-check tests can run the identical code in double precision.
template <typename T>
struct TensorT {
    Shape shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(Shape s, T fill = T(0)) : shape(std::move(s)) {
        for (int d : shape)
            if (d < 1) throw ShapeError("tensor dimension must be >= 1, got " + shape_str(shape));
        data.assign(static_cast<size_t>(shape_size(shape)), fill);
    }

    TensorT(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (shape_size(shape) != static_cast<int64_t>(data.size()))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        for (int d : shape)
            if (d < 1) throw ShapeError("tensor dimension must be >= 1, got " + shape_str(shape));
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int dim(size_t i) const { return shape[i]; }

    T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // [H,W,C] indexing
    T& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c]; }
    const T& at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * shape[1] + x) * shape[2] + c];
    }

    void fill(T v) { data.assign(data.size(), v); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.reserve(data.size());
        for (const T& v : data) out.data.push_back(static_cast<U>(v));
        return out;
    }
};

using Tensor = TensorT<float>;

template <typename T>
bool same_shape(const TensorT<T>& a, const TensorT<T>& b) {
    return a.shape == b.shape;
}

template <typename T>
void require_shape(const TensorT<T>& t, const Shape& want, const char* what) {
    if (t.shape != want)
        throw ShapeError(std::string(what) + ": expected shape " + shape_str(want) + ", got " +
                         shape_str(t.shape));
}

}  // namespace fer
