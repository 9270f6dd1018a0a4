#pragma once

#include "sdesr/tensor.hpp"

namespace sdesr {

enum class DownMethod { Area, Bicubic };
enum class UpMethod { Bicubic };

/// Low-resolution degradation: downsample by an integer factor, then
/// upsample back to the original size for conditioning.
struct DegradationSpec {
    int factor = 4;
    DownMethod down_method = DownMethod::Area;
    UpMethod up_method = UpMethod::Bicubic;

    void validate() const;
};

struct Degraded {
    Tensor y_lr;  // (H/factor) x (W/factor)
    Tensor y_up;  // back at H x W
};

/// Downsample by spec.factor; dimensions must be divisible by the factor.
Tensor downsample(const Tensor& x, const DegradationSpec& spec);

/// Bicubic (Catmull-Rom) upsample by an integer factor.
Tensor upsample_bicubic(const Tensor& x, int factor);

/// Full degradation: y_lr = down(x), y_up = up(y_lr), both clamped to [0,1].
Degraded degrade(const Tensor& x_hr, const DegradationSpec& spec);

}  // namespace sdesr
