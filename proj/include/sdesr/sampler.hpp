#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sdesr/score.hpp"
#include "sdesr/sde.hpp"

namespace sdesr {

enum class Predictor { EulerMaruyama, ReverseDiffusion };
enum class Corrector { Identity, Langevin };

std::string to_string(Predictor p);
std::string to_string(Corrector c);
Predictor predictor_from_string(const std::string& name);
Corrector corrector_from_string(const std::string& name);

/// Reverse-time sampling parameters. N predictor steps on a uniform grid
/// over [t_min, 1] traversed descending, M corrector iterations per step,
/// snr is the signal-to-noise ratio r of the Langevin correction.
struct SamplerConfig {
    int n_steps = 1000;
    int m_corrector = 0;
    double snr = 0.16;
    Predictor predictor = Predictor::EulerMaruyama;
    Corrector corrector = Corrector::Identity;
    bool denoise_final = true;

    void validate() const;
};

/// Thrown when a score evaluation or an intermediate state stops being
/// finite; the message carries the step index and time.
struct NumericalFailure : std::runtime_error {
    NumericalFailure(const std::string& what, int step, double t)
        : std::runtime_error(what), step_index(step), time(t) {}
    int step_index;
    double time;
};

struct SamplerStats {
    long predictor_steps = 0;
    long corrector_steps = 0;
    long degenerate_corrector_steps = 0;  // zero-score corrections skipped
};

/// Ascending time grid with n points: t_i = t_min + i*(1-t_min)/(n-1)
/// (a single point at t_max when n == 1). The samplers walk it backwards.
std::vector<double> time_grid(const SdeModel& model, int n);

/// One Euler-Maruyama step of the reverse SDE with dt < 0:
/// x' = x + [f(x,t) - g(t)^2 s(x,y,t)] dt + g(t) sqrt(|dt|) z.
Tensor euler_maruyama_step(const SdeModel& model, const ScoreFn& score, const Tensor& x,
                           const Tensor& y, double t, double dt, RandomSource& rng,
                           int step_index = -1);

/// One reverse-diffusion step on the n_steps-point grid. Discrete
/// coefficients per kind, with t_i the grid time at index i and t_adj the
/// next-lower grid time (0 at i == 0):
///   VE:        g_i^2 = sigma^2(t_i) - sigma^2(t_adj),      x' = x + g_i^2 s + g_i z
///   VP/subVP:  beta_i = beta(t_i) * (1 - t_min)/n_steps,
///              x' = (2 - sqrt(1 - beta_i)) x + g_i^2 s + g_i z
/// where g_i^2 = beta_i for VP and beta_i * (1 - exp(-2 B(t_i))) for subVP.
Tensor reverse_diffusion_step(const SdeModel& model, const ScoreFn& score, const Tensor& x,
                              const Tensor& y, int i, int n_steps, RandomSource& rng);

/// Langevin step size: eps = 2 * alpha * (snr * noise_norm / score_norm)^2.
double langevin_step_size(double alpha, double snr, double noise_norm, double score_norm);

/// One Langevin MCMC correction x' = x + eps*s + sqrt(2 eps)*z targeting
/// p_t, with alpha = 1 for VE and mean_coeff(t)^2 for VP/subVP. A zero
/// score norm returns x unchanged (counted in stats when given).
Tensor langevin_correct(const SdeModel& model, const ScoreFn& score, const Tensor& x,
                        const Tensor& y, double t, double snr, RandomSource& rng,
                        SamplerStats* stats = nullptr);

/// Predictor-Corrector sampling: initialize from the prior, then for
/// i = N-1..0 run one predictor step followed by M corrector iterations.
/// If denoise_final is set, the last state is replaced by its conditional
/// expectation x + std^2 * s(x,y,t_min) before output. The result is
/// clamped to [0,1] at the very end only.
Tensor pc_sample(const SdeModel& model, const ScoreFn& score, const Tensor& y,
                 const SamplerConfig& config, RandomSource& rng, SamplerStats* stats = nullptr);

/// Batched PC sampling. Chain j draws all of its noise from a RandomSource
/// derived as rng(seed).derive(index_offset + j), and the Langevin step
/// size is computed per image, so each output depends only on
/// (seed, config, global image index, y_j) and is stable under chunking.
std::vector<Tensor> pc_sample_batch(const SdeModel& model, const BatchScoreFn& score,
                                    const std::vector<Tensor>& ys, const SamplerConfig& config,
                                    uint64_t seed, SamplerStats* stats = nullptr,
                                    size_t index_offset = 0);

}  // namespace sdesr
