#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "sdesr/dataio.hpp"
#include "sdesr/degrade.hpp"
#include "sdesr/net.hpp"
#include "sdesr/score.hpp"
#include "sdesr/sde.hpp"

namespace sdesr {

enum class LambdaMode { StdSquared, Constant };

struct TrainConfig {
    SdeKind kind = SdeKind::VE;
    NoiseSchedule schedule;
    double t_min = 1e-5;
    int steps = 20000;
    int batch_size = 16;
    double learning_rate = 2e-4;
    int warmup_steps = 5000;
    LambdaMode lambda_mode = LambdaMode::StdSquared;
    std::optional<double> grad_clip = 1.0;  // global-norm clip, disabled when empty
    uint64_t seed = 0;
    DegradationSpec degradation;
    int log_every = 50;
    int checkpoint_every = 5000;

    void validate() const;
    SdeModel sde() const { return SdeModel{kind, schedule, t_min, 1.0}; }
};

/// Denoising score-matching objective. Per sample: draw t ~ U[t_min, 1]
/// and z ~ N(0, I), form x_t = mean_coeff * x0 + std * z, and accumulate
///   StdSquared: ||std * s(x_t, y, t) + z||^2          (lambda = std^2)
///   Constant:   ||s(x_t, y, t) + z/std||^2            (lambda = 1)
/// Returns the batch mean of the per-image sums.
double dsm_loss(const ScoreFn& score, const SdeModel& model, const std::vector<Tensor>& x0,
                const std::vector<Tensor>& y_up, RandomSource& rng,
                LambdaMode lambda_mode = LambdaMode::StdSquared);

/// Adam moments, one slot per network parameter.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step = 0;
    std::vector<std::vector<float>> m, v;

    static AdamState for_net(const DenoiserNet& net);
};

/// One Adam update at the given learning rate (moments are bias-corrected).
void adam_update(DenoiserNet& net, AdamState& state, double lr);

/// Scales all gradients so their joint norm is at most max_norm; returns
/// the pre-clip norm.
double clip_global_norm(DenoiserNet& net, double max_norm);

/// Linear warmup: lr * min(1, step/warmup), with step counted from 1.
double warmup_lr(double lr, int warmup_steps, int64_t step);

struct LossTraceRow {
    int64_t step;
    double loss;
    double lr;
};

struct TrainResult {
    std::vector<LossTraceRow> trace;
    int64_t final_step = 0;
};

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Runs the training loop: sample a batch, degrade, DSM loss, backprop,
/// clipped Adam update with warmup. Logs every log_every steps to the
/// trace (and to out_dir/loss.csv when out_dir is set), checkpoints
/// periodically and at the end. Step s draws all randomness from a stream
/// derived from (config.seed, s), so a resumed run reproduces a straight
/// one exactly. Throws TrainingDivergence when the loss goes non-finite
/// or exceeds 1000x the running median.
TrainResult train(const TrainConfig& config, const DatasetHandle& data, DenoiserNet& net,
                  const std::filesystem::path& out_dir = {}, int64_t start_step = 0,
                  AdamState* adam_in = nullptr);

// --- checkpoint glue -------------------------------------------------------

Checkpoint make_checkpoint(const DenoiserNet& net, int64_t step, uint64_t seed,
                           const AdamState* adam = nullptr);
DenoiserNet net_from_checkpoint(const Checkpoint& c);
bool checkpoint_has_adam(const Checkpoint& c);
AdamState adam_from_checkpoint(const Checkpoint& c, const DenoiserNet& net);

}  // namespace sdesr
