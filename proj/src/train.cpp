#include "sdesr/train.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace sdesr {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    schedule.validate();
    degradation.validate();
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (warmup_steps < 0) throw std::invalid_argument("TrainConfig: warmup_steps must be >= 0");
    if (grad_clip && !(*grad_clip > 0.0))
        throw std::invalid_argument("TrainConfig: grad_clip must be > 0 when set");
    if (log_every < 1) throw std::invalid_argument("TrainConfig: log_every must be >= 1");
    if (checkpoint_every < 1) throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 1");
}

double dsm_loss(const ScoreFn& score, const SdeModel& model, const std::vector<Tensor>& x0,
                const std::vector<Tensor>& y_up, RandomSource& rng, LambdaMode lambda_mode) {
    if (x0.empty() || x0.size() != y_up.size())
        throw std::invalid_argument("dsm_loss: batch is empty or sizes mismatch");

    double total = 0.0;
    for (size_t j = 0; j < x0.size(); ++j) {
        const double t = rng.uniform(model.t_min, model.t_max);
        const MarginalMoments mm = marginal_prob(model, t);

        Tensor z(x0[j].h, x0[j].w, x0[j].c);
        rng.fill_normal(z);
        Tensor xt = x0[j];
        for (int k = 0; k < xt.size(); ++k)
            xt.data[k] = static_cast<float>(mm.mean_coeff * xt.data[k] + mm.std * z.data[k]);

        const Tensor s = score(xt, y_up[j], t);
        require_same_shape(s, xt, "dsm_loss score");

        double sum = 0.0;
        if (lambda_mode == LambdaMode::StdSquared) {
            for (int k = 0; k < s.size(); ++k) {
                const double r = mm.std * s.data[k] + z.data[k];
                sum += r * r;
            }
        } else {
            for (int k = 0; k < s.size(); ++k) {
                const double r = s.data[k] + z.data[k] / mm.std;
                sum += r * r;
            }
        }
        if (!std::isfinite(sum)) {
            std::ostringstream msg;
            msg << "dsm_loss: non-finite summand at t=" << t;
            throw std::runtime_error(msg.str());
        }
        total += sum;
    }
    return total / static_cast<double>(x0.size());
}

AdamState AdamState::for_net(const DenoiserNet& net) {
    AdamState s;
    s.m.resize(net.params().size());
    s.v.resize(net.params().size());
    for (size_t i = 0; i < net.params().size(); ++i) {
        s.m[i].assign(net.params()[i].size(), 0.0f);
        s.v[i].assign(net.params()[i].size(), 0.0f);
    }
    return s;
}

void adam_update(DenoiserNet& net, AdamState& st, double lr) {
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    for (size_t i = 0; i < net.params().size(); ++i) {
        auto& p = net.params()[i];
        auto& m = st.m[i];
        auto& v = st.v[i];
        for (size_t k = 0; k < p.size(); ++k) {
            const double g = p.grad[k];
            m[k] = static_cast<float>(st.beta1 * m[k] + (1.0 - st.beta1) * g);
            v[k] = static_cast<float>(st.beta2 * v[k] + (1.0 - st.beta2) * g * g);
            const double mh = m[k] / bc1;
            const double vh = v[k] / bc2;
            p.value[k] -= static_cast<float>(lr * mh / (std::sqrt(vh) + st.eps));
        }
    }
}

double clip_global_norm(DenoiserNet& net, double max_norm) {
    double sq = 0.0;
    for (const auto& p : net.params())
        for (float g : p.grad) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const float scale = static_cast<float>(max_norm / norm);
        for (auto& p : net.params())
            for (float& g : p.grad) g *= scale;
    }
    return norm;
}

double warmup_lr(double lr, int warmup_steps, int64_t step) {
    if (warmup_steps <= 0) return lr;
    return lr * std::min(1.0, static_cast<double>(step) / warmup_steps);
}

namespace {

double running_median(std::deque<double> window) {
    const size_t mid = window.size() / 2;
    std::nth_element(window.begin(), window.begin() + mid, window.end());
    return window[mid];
}

}  // namespace

TrainResult train(const TrainConfig& config, const DatasetHandle& data, DenoiserNet& net,
                  const fs::path& out_dir, int64_t start_step, AdamState* adam_in) {
    config.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
    const SdeModel model = config.sde();
    const int b = config.batch_size;
    const size_t n = data.size();

    // y_up is deterministic per image; build it once
    std::vector<Tensor> y_up_cache(n);
    for (size_t i = 0; i < n; ++i) y_up_cache[i] = degrade(data.images[i], config.degradation).y_up;

    AdamState adam = adam_in ? *adam_in : AdamState::for_net(net);

    std::ofstream csv;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const fs::path csv_path = out_dir / "loss.csv";
        const bool fresh = start_step == 0 || !fs::exists(csv_path);
        csv.open(csv_path, fresh ? std::ios::trunc : std::ios::app);
        if (fresh) csv << "step,loss,lr\n";
    }

    RandomSource master(config.seed);
    TrainResult result;
    std::deque<double> recent;

    std::vector<Tensor> xts(b), yups(b), zs(b);
    std::vector<double> ts(b), weights(b);

    for (int64_t step = start_step + 1; step <= config.steps; ++step) {
        RandomSource rng = master.derive(static_cast<uint64_t>(step));

        for (int j = 0; j < b; ++j) {
            const size_t idx = static_cast<size_t>(rng.below(n));
            const Tensor& x0 = data.images[idx];
            yups[j] = y_up_cache[idx];

            ts[j] = rng.uniform(model.t_min, model.t_max);
            const MarginalMoments mm = marginal_prob(model, ts[j]);
            zs[j] = Tensor(x0.h, x0.w, x0.c);
            rng.fill_normal(zs[j]);
            xts[j] = x0;
            for (int k = 0; k < xts[j].size(); ++k)
                xts[j].data[k] = static_cast<float>(mm.mean_coeff * x0.data[k] +
                                                    mm.std * zs[j].data[k]);
            // with the eps parameterization the summand reduces to
            // ||eps_hat - z||^2 for lambda = std^2, and to that over std^2
            // for lambda = 1
            weights[j] = config.lambda_mode == LambdaMode::StdSquared
                             ? 1.0
                             : 1.0 / (mm.std * mm.std);
        }

        const std::vector<float> eps = net.eps_batch_flat(xts, yups, ts, true);

        double loss = 0.0;
        std::vector<float> deps(eps.size());
        size_t off = 0;
        for (int j = 0; j < b; ++j) {
            const int sz = xts[j].size();
            double sum = 0.0;
            for (int k = 0; k < sz; ++k) {
                const double r = eps[off + k] - zs[j].data[k];
                sum += r * r;
                deps[off + k] = static_cast<float>(2.0 * weights[j] * r / b);
            }
            loss += weights[j] * sum;
            off += sz;
        }
        loss /= b;

        if (!std::isfinite(loss))
            throw TrainingDivergence("training diverged: non-finite loss at step " +
                                     std::to_string(step));
        recent.push_back(loss);
        if (recent.size() > 501) recent.pop_front();
        if (recent.size() >= 25) {
            const double med = running_median(recent);
            if (med > 0.0 && loss > 1e3 * med) {
                std::ostringstream msg;
                msg << "training diverged at step " << step << ": loss " << loss
                    << " exceeds 1000x running median " << med;
                throw TrainingDivergence(msg.str());
            }
        }

        net.zero_grads();
        net.backward_eps_flat(deps);
        if (config.grad_clip) clip_global_norm(net, *config.grad_clip);
        const double lr = warmup_lr(config.learning_rate, config.warmup_steps, step);
        adam_update(net, adam, lr);

        for (const auto& p : net.params())
            for (float vv : p.value)
                if (!std::isfinite(vv))
                    throw TrainingDivergence("non-finite weight in " + p.name + " after step " +
                                             std::to_string(step));

        if (step % config.log_every == 0) {
            result.trace.push_back({step, loss, lr});
            if (csv.is_open()) {
                csv << step << "," << loss << "," << lr << "\n";
                csv.flush();
            }
        }
        if (!out_dir.empty() &&
            (step % config.checkpoint_every == 0 || step == config.steps)) {
            const Checkpoint c = make_checkpoint(net, step, config.seed, &adam);
            save_checkpoint(c, out_dir / ("ckpt_" + std::to_string(step) + ".ckpt"));
            if (step == config.steps) save_checkpoint(c, out_dir / "final.ckpt");
        }
        result.final_step = step;
    }

    if (adam_in) *adam_in = adam;
    return result;
}

// --- checkpoint glue -------------------------------------------------------

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Checkpoint make_checkpoint(const DenoiserNet& net, int64_t step, uint64_t seed,
                           const AdamState* adam) {
    Checkpoint c;
    const SdeModel& model = net.model();
    const ArchDescriptor& arch = net.arch();
    c.meta["kind"] = to_string(model.kind);
    c.meta["sigma_min"] = fmt_double(model.schedule.sigma_min);
    c.meta["sigma_max"] = fmt_double(model.schedule.sigma_max);
    c.meta["beta_min"] = fmt_double(model.schedule.beta_min);
    c.meta["beta_max"] = fmt_double(model.schedule.beta_max);
    c.meta["t_min"] = fmt_double(model.t_min);
    c.meta["image_channels"] = std::to_string(arch.image_channels);
    c.meta["width0"] = std::to_string(arch.widths[0]);
    c.meta["width1"] = std::to_string(arch.widths[1]);
    c.meta["levels"] = std::to_string(arch.levels());
    c.meta["time_embed_dim"] = std::to_string(arch.time_embed_dim);
    c.meta["step"] = std::to_string(step);
    c.meta["seed"] = std::to_string(seed);

    for (const auto& p : net.params()) {
        NamedArray a;
        a.name = p.name;
        a.dims = p.dims;
        a.data.assign(p.value.begin(), p.value.end());
        c.arrays.push_back(std::move(a));
    }
    if (adam) {
        c.meta["adam_step"] = std::to_string(adam->step);
        for (size_t i = 0; i < net.params().size(); ++i) {
            const auto& p = net.params()[i];
            c.arrays.push_back({"adam.m." + p.name, p.dims, adam->m[i]});
            c.arrays.push_back({"adam.v." + p.name, p.dims, adam->v[i]});
        }
    }
    return c;
}

DenoiserNet net_from_checkpoint(const Checkpoint& c) {
    SdeModel model;
    model.kind = sde_kind_from_string(c.meta_at("kind"));
    model.schedule.sigma_min = std::stod(c.meta_at("sigma_min"));
    model.schedule.sigma_max = std::stod(c.meta_at("sigma_max"));
    model.schedule.beta_min = std::stod(c.meta_at("beta_min"));
    model.schedule.beta_max = std::stod(c.meta_at("beta_max"));
    model.t_min = std::stod(c.meta_at("t_min"));

    ArchDescriptor arch;
    arch.image_channels = std::stoi(c.meta_at("image_channels"));
    arch.widths = {std::stoi(c.meta_at("width0")), std::stoi(c.meta_at("width1"))};
    arch.time_embed_dim = std::stoi(c.meta_at("time_embed_dim"));

    DenoiserNet net(arch, model);
    for (auto& p : net.params()) {
        const NamedArray* a = c.find(p.name);
        if (!a) throw std::runtime_error("checkpoint missing array " + p.name);
        if (a->data.size() != p.size())
            throw std::runtime_error("checkpoint array size mismatch for " + p.name);
        std::copy(a->data.begin(), a->data.end(), p.value.begin());
    }
    return net;
}

bool checkpoint_has_adam(const Checkpoint& c) { return c.meta.count("adam_step") > 0; }

AdamState adam_from_checkpoint(const Checkpoint& c, const DenoiserNet& net) {
    AdamState st = AdamState::for_net(net);
    st.step = std::stoll(c.meta_at("adam_step"));
    for (size_t i = 0; i < net.params().size(); ++i) {
        const auto& p = net.params()[i];
        const NamedArray* m = c.find("adam.m." + p.name);
        const NamedArray* v = c.find("adam.v." + p.name);
        if (!m || !v) throw std::runtime_error("checkpoint missing Adam state for " + p.name);
        st.m[i] = m->data;
        st.v[i] = v->data;
    }
    return st;
}

}  // namespace sdesr
