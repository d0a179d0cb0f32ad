#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace carbideseg::net {

// Batched NCHW activation/parameter storage.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const { return data.size(); }
    std::array<int, 4> shape() const { return {n, c, h, w}; }
    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    T* plane(int i, int j) {
        return data.data() + (static_cast<std::size_t>(i) * c + j) * h * w;
    }
    const T* plane(int i, int j) const {
        return data.data() + (static_cast<std::size_t>(i) * c + j) * h * w;
    }

    T& at(int i, int j, int y, int x) { return plane(i, j)[static_cast<std::size_t>(y) * w + x]; }
    T at(int i, int j, int y, int x) const { return plane(i, j)[static_cast<std::size_t>(y) * w + x]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <typename U>
    Tensor4<U> cast() const {
        Tensor4<U> out(n, c, h, w);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
void check_same_shape(const Tensor4<T>& a, const Tensor4<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

} // namespace carbideseg::net
