#include "sdesr/score.hpp"

#include <cmath>
#include <stdexcept>

namespace sdesr {

void GaussianDataSpec::validate() const {
    if (mean.empty())
        throw std::invalid_argument("GaussianDataSpec: mean vector is empty");
    if (!(variance > 0.0))
        throw std::invalid_argument("GaussianDataSpec: variance must be > 0");
}

Tensor analytic_gaussian_score(const GaussianDataSpec& spec, const SdeModel& model,
                               const Tensor& x, double t) {
    spec.validate();
    const MarginalMoments mm = marginal_prob(model, t);
    const double total_var = mm.mean_coeff * mm.mean_coeff * spec.variance + mm.std * mm.std;

    Tensor score(x.h, x.w, x.c);
    for (size_t i = 0; i < x.data.size(); ++i) {
        const double mu = mm.mean_coeff * spec.mean_at(i);
        score.data[i] = static_cast<float>(-(x.data[i] - mu) / total_var);
    }
    return score;
}

ScoreFn make_gaussian_score(GaussianDataSpec spec, SdeModel model) {
    spec.validate();
    return [spec, model](const Tensor& x, const Tensor& /*y*/, double t) {
        return analytic_gaussian_score(spec, model, x, t);
    };
}

std::vector<double> time_embedding(double t, int dim) {
    if (dim < 2 || dim % 2 != 0)
        throw std::invalid_argument("time_embedding: dim must be even and >= 2");
    const int half = dim / 2;
    const double f_min = 1.0;
    const double f_max = 1000.0;
    std::vector<double> emb(dim);
    for (int j = 0; j < half; ++j) {
        const double freq =
            half == 1 ? f_min : f_min * std::pow(f_max / f_min, static_cast<double>(j) / (half - 1));
        emb[2 * j] = std::sin(freq * t);
        emb[2 * j + 1] = std::cos(freq * t);
    }
    return emb;
}

}  // namespace sdesr
