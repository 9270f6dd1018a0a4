#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sdesr {

/// H x W x C image-shaped array of 32-bit floats, row-major, channel-minor.
/// Values are nominally in [0,1] for images; intermediate states of the
/// samplers and network activations are unbounded.
struct Tensor {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int h_, int w_, int c_, float fill = 0.0f)
        : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {
        if (h_ < 0 || w_ < 0 || c_ < 0)
            throw std::invalid_argument("Tensor: negative dimension");
    }

    int size() const { return h * w * c; }
    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

    float& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

inline bool all_finite(const Tensor& t) {
    for (float v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Euclidean norm, accumulated in double.
inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (float v : t.data) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

inline double mean_value(const Tensor& t) {
    double s = 0.0;
    for (float v : t.data) s += v;
    return t.size() > 0 ? s / t.size() : 0.0;
}

inline Tensor& clamp01(Tensor& t) {
    for (float& v : t.data) v = std::min(1.0f, std::max(0.0f, v));
    return t;
}

// y += a * x
inline void axpy(double a, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    const float af = static_cast<float>(a);
    for (int i = 0; i < y.size(); ++i) y.data[i] += af * x.data[i];
}

inline Tensor scaled(const Tensor& x, double a) {
    Tensor r = x;
    const float af = static_cast<float>(a);
    for (float& v : r.data) v *= af;
    return r;
}

}  // namespace sdesr
