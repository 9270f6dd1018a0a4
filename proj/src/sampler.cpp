#include "sdesr/sampler.hpp"

#include <cmath>
#include <iostream>

namespace sdesr {

std::string to_string(Predictor p) {
    return p == Predictor::EulerMaruyama ? "euler-maruyama" : "reverse-diffusion";
}

std::string to_string(Corrector c) { return c == Corrector::Identity ? "identity" : "langevin"; }

Predictor predictor_from_string(const std::string& name) {
    if (name == "euler-maruyama" || name == "em") return Predictor::EulerMaruyama;
    if (name == "reverse-diffusion" || name == "rd") return Predictor::ReverseDiffusion;
    throw std::invalid_argument("unknown predictor: " + name);
}

Corrector corrector_from_string(const std::string& name) {
    if (name == "identity" || name == "none") return Corrector::Identity;
    if (name == "langevin") return Corrector::Langevin;
    throw std::invalid_argument("unknown corrector: " + name);
}

void SamplerConfig::validate() const {
    if (n_steps < 1) throw std::invalid_argument("SamplerConfig: n_steps must be >= 1");
    if (m_corrector < 0) throw std::invalid_argument("SamplerConfig: m_corrector must be >= 0");
    if (corrector == Corrector::Langevin && !(snr > 0.0))
        throw std::invalid_argument("SamplerConfig: snr must be > 0 with the Langevin corrector");
}

std::vector<double> time_grid(const SdeModel& model, int n) {
    if (n < 1) throw std::invalid_argument("time_grid: n must be >= 1");
    std::vector<double> t(n);
    if (n == 1) {
        t[0] = model.t_max;
        return t;
    }
    const double h = (model.t_max - model.t_min) / (n - 1);
    for (int i = 0; i < n; ++i) t[i] = model.t_min + i * h;
    t[n - 1] = model.t_max;
    return t;
}

namespace {

Tensor eval_score(const ScoreFn& score, const Tensor& x, const Tensor& y, double t,
                  int step_index) {
    Tensor s = score(x, y, t);
    require_same_shape(s, x, "score output");
    if (!all_finite(s))
        throw NumericalFailure("non-finite score at step " + std::to_string(step_index) +
                                   ", t=" + std::to_string(t),
                               step_index, t);
    return s;
}

}  // namespace

Tensor euler_maruyama_step(const SdeModel& model, const ScoreFn& score, const Tensor& x,
                           const Tensor& y, double t, double dt, RandomSource& rng,
                           int step_index) {
    if (!(dt < 0.0)) throw std::invalid_argument("euler_maruyama_step: dt must be negative");
    const Tensor s = eval_score(score, x, y, t, step_index);
    const double a = drift_coeff(model, t);
    const double g = diffusion(model, t);
    const double noise_scale = g * std::sqrt(-dt);

    Tensor out = x;
    for (int i = 0; i < out.size(); ++i) {
        const double drift_term = (a * x.data[i] - g * g * s.data[i]) * dt;
        out.data[i] = static_cast<float>(x.data[i] + drift_term + noise_scale * rng.normal());
    }
    return out;
}

namespace {

struct DiscreteCoeffs {
    double mean_factor;  // x is scaled by this before adding score/noise terms
    double g2;           // discrete squared diffusion
};

DiscreteCoeffs reverse_diffusion_coeffs(const SdeModel& model, int i, int n_steps,
                                        const std::vector<double>& grid) {
    const double t = grid[i];
    if (model.kind == SdeKind::VE) {
        const double t_adj = i > 0 ? grid[i - 1] : 0.0;
        const double s_hi = sigma_of_t(model.schedule, t);
        const double s_lo = sigma_of_t(model.schedule, t_adj);
        return {1.0, std::max(0.0, s_hi * s_hi - s_lo * s_lo)};
    }
    // per-step integral of beta; capped below 1 so the discrete mean factor
    // stays real for very coarse grids
    const double beta_i = std::min(
        beta_of_t(model.schedule, t) * (model.t_max - model.t_min) / n_steps, 0.999);
    const double mean_factor = 2.0 - std::sqrt(1.0 - beta_i);
    if (model.kind == SdeKind::VP) return {mean_factor, beta_i};
    const double discount = 1.0 - std::exp(-2.0 * beta_integral(model.schedule, t));
    return {mean_factor, beta_i * discount};
}

}  // namespace

Tensor reverse_diffusion_step(const SdeModel& model, const ScoreFn& score, const Tensor& x,
                              const Tensor& y, int i, int n_steps, RandomSource& rng) {
    if (i < 0 || i >= n_steps)
        throw std::invalid_argument("reverse_diffusion_step: step index out of range");
    const std::vector<double> grid = time_grid(model, n_steps);
    const double t = grid[i];
    const Tensor s = eval_score(score, x, y, t, i);
    const DiscreteCoeffs co = reverse_diffusion_coeffs(model, i, n_steps, grid);
    const double g = std::sqrt(co.g2);

    Tensor out = x;
    for (int k = 0; k < out.size(); ++k) {
        out.data[k] = static_cast<float>(co.mean_factor * x.data[k] + co.g2 * s.data[k] +
                                         g * rng.normal());
    }
    return out;
}

double langevin_step_size(double alpha, double snr, double noise_norm, double score_norm) {
    const double ratio = snr * noise_norm / score_norm;
    return 2.0 * alpha * ratio * ratio;
}

namespace {

double corrector_alpha(const SdeModel& model, double t) {
    if (model.kind == SdeKind::VE) return 1.0;
    const double m = marginal_prob(model, t).mean_coeff;
    return m * m;
}

}  // namespace

Tensor langevin_correct(const SdeModel& model, const ScoreFn& score, const Tensor& x,
                        const Tensor& y, double t, double snr, RandomSource& rng,
                        SamplerStats* stats) {
    if (!(snr > 0.0)) throw std::invalid_argument("langevin_correct: snr must be > 0");
    const Tensor s = eval_score(score, x, y, t, -1);

    Tensor z(x.h, x.w, x.c);
    rng.fill_normal(z);

    const double score_norm = l2_norm(s);
    if (score_norm == 0.0) {
        if (stats) ++stats->degenerate_corrector_steps;
        return x;
    }
    const double eps = langevin_step_size(corrector_alpha(model, t), snr, l2_norm(z), score_norm);
    const double noise_scale = std::sqrt(2.0 * eps);

    Tensor out = x;
    for (int k = 0; k < out.size(); ++k)
        out.data[k] =
            static_cast<float>(x.data[k] + eps * s.data[k] + noise_scale * z.data[k]);
    return out;
}

Tensor pc_sample(const SdeModel& model, const ScoreFn& score, const Tensor& y,
                 const SamplerConfig& config, RandomSource& rng, SamplerStats* stats) {
    config.validate();
    model.validate();
    const int n = config.n_steps;
    const std::vector<double> grid = time_grid(model, n);
    const double dt = -(model.t_max - model.t_min) / n;

    Tensor x = prior_sample(model, y.h, y.w, y.c, rng);
    SamplerStats local;
    SamplerStats* st = stats ? stats : &local;

    for (int i = n - 1; i >= 0; --i) {
        const double t = grid[i];
        if (config.predictor == Predictor::EulerMaruyama)
            x = euler_maruyama_step(model, score, x, y, t, dt, rng, i);
        else
            x = reverse_diffusion_step(model, score, x, y, i, n, rng);
        ++st->predictor_steps;
        if (!all_finite(x))
            throw NumericalFailure("non-finite state after predictor step " + std::to_string(i) +
                                       ", t=" + std::to_string(t),
                                   i, t);

        if (config.corrector == Corrector::Langevin) {
            const double tc = i > 0 ? grid[i - 1] : model.t_min;
            for (int j = 0; j < config.m_corrector; ++j) {
                x = langevin_correct(model, score, x, y, tc, config.snr, rng, st);
                ++st->corrector_steps;
                if (!all_finite(x))
                    throw NumericalFailure("non-finite state after corrector at step " +
                                               std::to_string(i) + ", t=" + std::to_string(tc),
                                           i, tc);
            }
        }
    }

    if (config.denoise_final) {
        const double t0 = model.t_min;
        const Tensor s = eval_score(score, x, y, t0, 0);
        const double v = marginal_prob(model, t0).std;
        axpy(v * v, s, x);
    }
    if (st->degenerate_corrector_steps > 0 && stats == nullptr)
        std::clog << "pc_sample: skipped " << st->degenerate_corrector_steps
                  << " zero-score corrector steps\n";
    return clamp01(x);
}

std::vector<Tensor> pc_sample_batch(const SdeModel& model, const BatchScoreFn& score,
                                    const std::vector<Tensor>& ys, const SamplerConfig& config,
                                    uint64_t seed, SamplerStats* stats, size_t index_offset) {
    config.validate();
    model.validate();
    const int n = config.n_steps;
    const size_t b = ys.size();
    const std::vector<double> grid = time_grid(model, n);
    const double dt = -(model.t_max - model.t_min) / n;

    std::vector<RandomSource> rngs;
    rngs.reserve(b);
    RandomSource base(seed);
    for (size_t j = 0; j < b; ++j) rngs.push_back(base.derive(index_offset + j));

    std::vector<Tensor> xs(b);
    for (size_t j = 0; j < b; ++j) xs[j] = prior_sample(model, ys[j].h, ys[j].w, ys[j].c, rngs[j]);
    SamplerStats local;
    SamplerStats* st = stats ? stats : &local;

    auto eval_batch = [&](double t) {
        std::vector<Tensor> ss = score(xs, ys, t);
        if (ss.size() != b) throw std::runtime_error("batch score: wrong batch size");
        for (size_t j = 0; j < b; ++j) {
            require_same_shape(ss[j], xs[j], "batch score output");
            if (!all_finite(ss[j]))
                throw NumericalFailure("non-finite batch score at t=" + std::to_string(t), -1, t);
        }
        return ss;
    };

    for (int i = n - 1; i >= 0; --i) {
        const double t = grid[i];
        const std::vector<Tensor> ss = eval_batch(t);
        if (config.predictor == Predictor::EulerMaruyama) {
            const double a = drift_coeff(model, t);
            const double g = diffusion(model, t);
            const double noise_scale = g * std::sqrt(-dt);
            for (size_t j = 0; j < b; ++j) {
                Tensor& x = xs[j];
                const Tensor& s = ss[j];
                for (int k = 0; k < x.size(); ++k) {
                    const double drift_term = (a * x.data[k] - g * g * s.data[k]) * dt;
                    x.data[k] = static_cast<float>(x.data[k] + drift_term +
                                                   noise_scale * rngs[j].normal());
                }
            }
        } else {
            const DiscreteCoeffs co = reverse_diffusion_coeffs(model, i, n, grid);
            const double g = std::sqrt(co.g2);
            for (size_t j = 0; j < b; ++j) {
                Tensor& x = xs[j];
                const Tensor& s = ss[j];
                for (int k = 0; k < x.size(); ++k)
                    x.data[k] = static_cast<float>(co.mean_factor * x.data[k] +
                                                   co.g2 * s.data[k] + g * rngs[j].normal());
            }
        }
        st->predictor_steps += static_cast<long>(b);

        if (config.corrector == Corrector::Langevin) {
            const double tc = i > 0 ? grid[i - 1] : model.t_min;
            const double alpha = corrector_alpha(model, tc);
            for (int jc = 0; jc < config.m_corrector; ++jc) {
                const std::vector<Tensor> cs = eval_batch(tc);
                for (size_t j = 0; j < b; ++j) {
                    Tensor z(xs[j].h, xs[j].w, xs[j].c);
                    rngs[j].fill_normal(z);
                    const double score_norm = l2_norm(cs[j]);
                    if (score_norm == 0.0) {
                        ++st->degenerate_corrector_steps;
                        continue;
                    }
                    const double eps =
                        langevin_step_size(alpha, config.snr, l2_norm(z), score_norm);
                    const double noise_scale = std::sqrt(2.0 * eps);
                    Tensor& x = xs[j];
                    for (int k = 0; k < x.size(); ++k)
                        x.data[k] = static_cast<float>(x.data[k] + eps * cs[j].data[k] +
                                                       noise_scale * z.data[k]);
                }
                st->corrector_steps += static_cast<long>(b);
            }
        }
        for (size_t j = 0; j < b; ++j)
            if (!all_finite(xs[j]))
                throw NumericalFailure("non-finite state in batch at step " + std::to_string(i) +
                                           ", t=" + std::to_string(t),
                                       i, t);
    }

    if (config.denoise_final) {
        const double t0 = model.t_min;
        const double v = marginal_prob(model, t0).std;
        const std::vector<Tensor> ss = eval_batch(t0);
        for (size_t j = 0; j < b; ++j) axpy(v * v, ss[j], xs[j]);
    }
    for (Tensor& x : xs) clamp01(x);
    return xs;
}

}  // namespace sdesr
