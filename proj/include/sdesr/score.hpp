#pragma once

#include <functional>
#include <vector>

#include "sdesr/sde.hpp"
#include "sdesr/tensor.hpp"

namespace sdesr {

/// Score estimate s(x, y, t) ~ grad_x log p_t(x | y). The condition y is an
/// image of the same shape as x; implementations that need no condition
/// ignore it. Output shape equals input shape.
using ScoreFn = std::function<Tensor(const Tensor& x, const Tensor& y, double t)>;

/// Score evaluated on a whole batch at one shared time.
using BatchScoreFn = std::function<std::vector<Tensor>(
    const std::vector<Tensor>& xs, const std::vector<Tensor>& ys, double t)>;

/// Isotropic Gaussian data distribution N(mean, variance * I) used as an
/// exactly solvable verification target. The mean vector is cycled over the
/// flattened tensor, so a length-1 mean broadcasts to every element, a
/// length-c mean is per-channel, and a length-(w*c) mean varies per column.
struct GaussianDataSpec {
    std::vector<double> mean;
    double variance = 1.0;

    void validate() const;
    double mean_at(size_t flat_index) const { return mean[flat_index % mean.size()]; }
};

/// Exact score of the perturbed marginal when the data is Gaussian:
/// x_t ~ N(m(t)*mean, (m(t)^2*variance + std(t)^2) * I), so
/// score = -(x - m*mean) / (m^2*variance + std^2) elementwise.
Tensor analytic_gaussian_score(const GaussianDataSpec& spec, const SdeModel& model,
                               const Tensor& x, double t);

/// Wraps analytic_gaussian_score as a ScoreFn (the condition is ignored).
ScoreFn make_gaussian_score(GaussianDataSpec spec, SdeModel model);

/// Sinusoidal features of t at dim/2 geometrically spaced frequencies,
/// interleaved (sin, cos, sin, cos, ...). dim must be even and >= 2.
std::vector<double> time_embedding(double t, int dim);

}  // namespace sdesr
