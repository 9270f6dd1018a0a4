#pragma once

#include <string>

#include "sdesr/random.hpp"
#include "sdesr/tensor.hpp"

namespace sdesr {

enum class SdeKind { VE, VP, SubVP };

std::string to_string(SdeKind kind);
SdeKind sde_kind_from_string(const std::string& name);

/// Noise-level schedule parameters. sigma_* drive the VE geometric schedule
/// sigma(t) = sigma_min * (sigma_max/sigma_min)^t; beta_* drive the affine
/// schedule beta(t) = beta_min + (beta_max - beta_min) * t used by VP/subVP.
struct NoiseSchedule {
    double sigma_min = 0.01;
    double sigma_max = 348.0;
    double beta_min = 0.1;
    double beta_max = 20.0;

    void validate() const;
};

/// One forward diffusion x' = f(x,t) dt + g(t) dw, t in [t_min, t_max].
/// t_min stays strictly positive so the perturbation std never reaches zero.
struct SdeModel {
    SdeKind kind = SdeKind::VE;
    NoiseSchedule schedule;
    double t_min = 1e-5;
    double t_max = 1.0;

    void validate() const;
};

/// Moments of the Gaussian perturbation kernel p(x_t | x_0):
/// mean = mean_coeff * x_0, per-pixel standard deviation = std.
struct MarginalMoments {
    double mean_coeff = 1.0;
    double std = 0.0;
};

/// sigma(t) = sigma_min * (sigma_max/sigma_min)^t. Throws std::domain_error
/// outside [0,1].
double sigma_of_t(const NoiseSchedule& schedule, double t);

/// beta(t) = beta_min + (beta_max - beta_min) * t. Throws std::domain_error
/// outside [0,1].
double beta_of_t(const NoiseSchedule& schedule, double t);

/// Closed form of int_0^t beta(s) ds for the affine schedule.
double beta_integral(const NoiseSchedule& schedule, double t);

/// The drift is affine and elementwise for all three kinds: f(x,t) = a(t)*x
/// with a(t) = 0 for VE and a(t) = -beta(t)/2 for VP/subVP. This returns a(t).
double drift_coeff(const SdeModel& model, double t);

/// f(x, t), same shape as x.
Tensor drift(const SdeModel& model, const Tensor& x, double t);

/// Scalar diffusion coefficient g(t):
///   VE:    sqrt(d sigma^2/dt) = sigma(t) * sqrt(2 ln(sigma_max/sigma_min))
///   VP:    sqrt(beta(t))
///   subVP: sqrt(beta(t) * (1 - exp(-2 int_0^t beta)))
double diffusion(const SdeModel& model, double t);

/// Closed-form moments of p(x_t | x_0). The variances are the solutions of
/// the moment equations dv/dt = 2 a(t) v + g(t)^2 with v(0) = 0:
///   VE:    mean_coeff = 1,                 std^2 = sigma^2(t) - sigma^2(0)
///   VP:    mean_coeff = exp(-B(t)/2),      std^2 = 1 - exp(-B(t))
///   subVP: mean_coeff = exp(-B(t)/2),      std^2 = (1 - exp(-B(t)))^2
/// where B(t) = int_0^t beta(s) ds.
MarginalMoments marginal_prob(const SdeModel& model, double t);

/// Independent oracle: RK4 integration of the scalar moment equations
///   dm/dt = a(t) m,   dv/dt = 2 a(t) v + g(t)^2
/// from (m,v) = (1,0) at t=0. Must agree with marginal_prob; kept separate
/// from the closed forms on purpose. Requires n_steps >= 100.
MarginalMoments integrate_moment_odes(const SdeModel& model, double t, int n_steps);

/// Standard deviation of the stationary prior p_T: sigma_max for VE, 1 for
/// VP/subVP.
double prior_std(const SdeModel& model);

/// Draw x_T ~ p_T as an h x w x c tensor of i.i.d. normals.
Tensor prior_sample(const SdeModel& model, int h, int w, int c, RandomSource& rng);

}  // namespace sdesr
