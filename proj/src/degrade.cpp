#include "sdesr/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdesr {

void DegradationSpec::validate() const {
    if (factor < 2) throw std::invalid_argument("DegradationSpec: factor must be >= 2");
}

namespace {

// Catmull-Rom kernel (a = -0.5).
double cubic_weight(double d) {
    const double a = -0.5;
    const double x = std::fabs(d);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return a * (((x - 5.0) * x + 8.0) * x - 4.0);
    return 0.0;
}

struct Taps {
    int idx[4];
    double w[4];
};

// Pixel-center mapping: output o reads source coordinate (o+0.5)*scale - 0.5.
std::vector<Taps> cubic_taps(int n_out, int n_in, double scale) {
    std::vector<Taps> taps(n_out);
    for (int o = 0; o < n_out; ++o) {
        const double x = (o + 0.5) * scale - 0.5;
        const int base = static_cast<int>(std::floor(x)) - 1;
        for (int k = 0; k < 4; ++k) {
            const int i = base + k;
            taps[o].idx[k] = std::clamp(i, 0, n_in - 1);
            taps[o].w[k] = cubic_weight(x - i);
        }
    }
    return taps;
}

Tensor resample_cubic(const Tensor& x, int h_out, int w_out) {
    const std::vector<Taps> row_taps = cubic_taps(w_out, x.w, static_cast<double>(x.w) / w_out);
    const std::vector<Taps> col_taps = cubic_taps(h_out, x.h, static_cast<double>(x.h) / h_out);

    // horizontal pass, then vertical, accumulating in double
    std::vector<double> tmp(static_cast<size_t>(x.h) * w_out * x.c, 0.0);
    for (int y = 0; y < x.h; ++y)
        for (int o = 0; o < w_out; ++o) {
            const Taps& tp = row_taps[o];
            for (int ch = 0; ch < x.c; ++ch) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k) s += tp.w[k] * x.at(y, tp.idx[k], ch);
                tmp[(static_cast<size_t>(y) * w_out + o) * x.c + ch] = s;
            }
        }

    Tensor out(h_out, w_out, x.c);
    for (int o = 0; o < h_out; ++o) {
        const Taps& tp = col_taps[o];
        for (int xx = 0; xx < w_out; ++xx)
            for (int ch = 0; ch < x.c; ++ch) {
                double s = 0.0;
                for (int k = 0; k < 4; ++k)
                    s += tp.w[k] * tmp[(static_cast<size_t>(tp.idx[k]) * w_out + xx) * x.c + ch];
                out.at(o, xx, ch) = static_cast<float>(s);
            }
    }
    return out;
}

}  // namespace

Tensor downsample(const Tensor& x, const DegradationSpec& spec) {
    spec.validate();
    const int s = spec.factor;
    if (x.h % s != 0 || x.w % s != 0)
        throw std::invalid_argument("downsample: dimensions not divisible by the factor");
    const int ho = x.h / s, wo = x.w / s;

    if (spec.down_method == DownMethod::Bicubic) {
        Tensor out = resample_cubic(x, ho, wo);
        return clamp01(out);
    }

    Tensor out(ho, wo, x.c);
    const double inv = 1.0 / (static_cast<double>(s) * s);
    for (int by = 0; by < ho; ++by)
        for (int bx = 0; bx < wo; ++bx)
            for (int ch = 0; ch < x.c; ++ch) {
                double acc = 0.0;
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx) acc += x.at(by * s + dy, bx * s + dx, ch);
                out.at(by, bx, ch) = static_cast<float>(acc * inv);
            }
    return out;
}

Tensor upsample_bicubic(const Tensor& x, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample_bicubic: factor must be >= 1");
    Tensor out = resample_cubic(x, x.h * factor, x.w * factor);
    return clamp01(out);
}

Degraded degrade(const Tensor& x_hr, const DegradationSpec& spec) {
    Degraded d;
    d.y_lr = downsample(x_hr, spec);
    d.y_up = upsample_bicubic(d.y_lr, spec.factor);
    return d;
}

}  // namespace sdesr
