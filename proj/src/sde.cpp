#include "sdesr/sde.hpp"

#include <cmath>
#include <stdexcept>

extern "C" int sdesr_blas_select_anchor;

namespace sdesr {

namespace {
[[gnu::used]] const int* const kBlasSelectLinked = &sdesr_blas_select_anchor;
}

std::string to_string(SdeKind kind) {
    switch (kind) {
        case SdeKind::VE: return "ve";
        case SdeKind::VP: return "vp";
        case SdeKind::SubVP: return "subvp";
    }
    return "?";
}

SdeKind sde_kind_from_string(const std::string& name) {
    if (name == "ve" || name == "VE") return SdeKind::VE;
    if (name == "vp" || name == "VP") return SdeKind::VP;
    if (name == "subvp" || name == "subVP" || name == "SubVP") return SdeKind::SubVP;
    throw std::invalid_argument("unknown SDE kind: " + name);
}

void NoiseSchedule::validate() const {
    if (!(sigma_min > 0.0) || !(sigma_max > 0.0) || !(beta_min > 0.0) || !(beta_max > 0.0))
        throw std::invalid_argument("NoiseSchedule: parameters must be strictly positive");
    if (!(sigma_min < sigma_max))
        throw std::invalid_argument("NoiseSchedule: requires sigma_min < sigma_max");
    if (!(beta_min < beta_max))
        throw std::invalid_argument("NoiseSchedule: requires beta_min < beta_max");
}

void SdeModel::validate() const {
    schedule.validate();
    if (!(t_min > 0.0) || !(t_min < t_max) || !(t_max <= 1.0))
        throw std::invalid_argument("SdeModel: requires 0 < t_min < t_max <= 1");
}

namespace {

void check_unit_interval(double t, const char* what) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::domain_error(std::string(what) + ": t outside [0,1]");
}

}  // namespace

double sigma_of_t(const NoiseSchedule& schedule, double t) {
    check_unit_interval(t, "sigma_of_t");
    return schedule.sigma_min * std::pow(schedule.sigma_max / schedule.sigma_min, t);
}

double beta_of_t(const NoiseSchedule& schedule, double t) {
    check_unit_interval(t, "beta_of_t");
    return schedule.beta_min + (schedule.beta_max - schedule.beta_min) * t;
}

double beta_integral(const NoiseSchedule& schedule, double t) {
    return schedule.beta_min * t + 0.5 * (schedule.beta_max - schedule.beta_min) * t * t;
}

double drift_coeff(const SdeModel& model, double t) {
    if (model.kind == SdeKind::VE) return 0.0;
    return -0.5 * beta_of_t(model.schedule, t);
}

Tensor drift(const SdeModel& model, const Tensor& x, double t) {
    const double a = drift_coeff(model, t);
    return scaled(x, a);
}

double diffusion(const SdeModel& model, double t) {
    check_unit_interval(t, "diffusion");
    const NoiseSchedule& s = model.schedule;
    switch (model.kind) {
        case SdeKind::VE: {
            const double log_ratio = std::log(s.sigma_max / s.sigma_min);
            return sigma_of_t(s, t) * std::sqrt(2.0 * log_ratio);
        }
        case SdeKind::VP:
            return std::sqrt(beta_of_t(s, t));
        case SdeKind::SubVP: {
            const double b = beta_of_t(s, t);
            const double discount = 1.0 - std::exp(-2.0 * beta_integral(s, t));
            return std::sqrt(b * discount);
        }
    }
    return 0.0;
}

MarginalMoments marginal_prob(const SdeModel& model, double t) {
    check_unit_interval(t, "marginal_prob");
    const NoiseSchedule& s = model.schedule;
    MarginalMoments m;
    switch (model.kind) {
        case SdeKind::VE: {
            const double s2t = sigma_of_t(s, t) * sigma_of_t(s, t);
            const double s20 = s.sigma_min * s.sigma_min;
            m.mean_coeff = 1.0;
            m.std = std::sqrt(std::max(0.0, s2t - s20));
            break;
        }
        case SdeKind::VP: {
            const double b = beta_integral(s, t);
            m.mean_coeff = std::exp(-0.5 * b);
            m.std = std::sqrt(1.0 - std::exp(-b));
            break;
        }
        case SdeKind::SubVP: {
            const double b = beta_integral(s, t);
            m.mean_coeff = std::exp(-0.5 * b);
            m.std = 1.0 - std::exp(-b);
            break;
        }
    }
    return m;
}

MarginalMoments integrate_moment_odes(const SdeModel& model, double t, int n_steps) {
    check_unit_interval(t, "integrate_moment_odes");
    if (n_steps < 100)
        throw std::invalid_argument("integrate_moment_odes: n_steps must be >= 100");

    // Evaluates a(t) and g(t)^2 directly from the schedule formulas so the
    // oracle does not share the closed-form kernel code it is checking.
    const NoiseSchedule& s = model.schedule;
    const double log_ratio = std::log(s.sigma_max / s.sigma_min);
    auto a_of = [&](double u) -> double {
        if (model.kind == SdeKind::VE) return 0.0;
        return -0.5 * (s.beta_min + (s.beta_max - s.beta_min) * u);
    };
    auto g2_of = [&](double u) -> double {
        const double beta = s.beta_min + (s.beta_max - s.beta_min) * u;
        switch (model.kind) {
            case SdeKind::VE: {
                const double sig = s.sigma_min * std::pow(s.sigma_max / s.sigma_min, u);
                return 2.0 * log_ratio * sig * sig;
            }
            case SdeKind::VP:
                return beta;
            case SdeKind::SubVP: {
                const double bint = s.beta_min * u + 0.5 * (s.beta_max - s.beta_min) * u * u;
                return beta * (1.0 - std::exp(-2.0 * bint));
            }
        }
        return 0.0;
    };

    double m = 1.0;  // mean coefficient
    double v = 0.0;  // variance
    const double h = t / n_steps;
    for (int i = 0; i < n_steps; ++i) {
        const double u = i * h;
        auto fm = [&](double uu, double mm) { return a_of(uu) * mm; };
        auto fv = [&](double uu, double vv) { return 2.0 * a_of(uu) * vv + g2_of(uu); };

        const double k1m = fm(u, m), k1v = fv(u, v);
        const double k2m = fm(u + 0.5 * h, m + 0.5 * h * k1m), k2v = fv(u + 0.5 * h, v + 0.5 * h * k1v);
        const double k3m = fm(u + 0.5 * h, m + 0.5 * h * k2m), k3v = fv(u + 0.5 * h, v + 0.5 * h * k2v);
        const double k4m = fm(u + h, m + h * k3m), k4v = fv(u + h, v + h * k3v);

        m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return MarginalMoments{m, std::sqrt(std::max(0.0, v))};
}

double prior_std(const SdeModel& model) {
    return model.kind == SdeKind::VE ? model.schedule.sigma_max : 1.0;
}

Tensor prior_sample(const SdeModel& model, int h, int w, int c, RandomSource& rng) {
    Tensor x(h, w, c);
    rng.fill_normal(x, prior_std(model));
    return x;
}

}  // namespace sdesr
