#pragma once

// Shared test helpers: statistical checks and independent brute-force
// oracles kept deliberately separate from the library implementations.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sdesr/sde.hpp"
#include "sdesr/tensor.hpp"

namespace testsup {

inline double normal_cdf(double x, double mean = 0.0, double std = 1.0) {
    return 0.5 * std::erfc(-(x - mean) / (std * std::sqrt(2.0)));
}

/// Kolmogorov-Smirnov statistic of samples against N(mean, std^2).
inline double ks_statistic(std::vector<double> samples, double mean, double std) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double f = normal_cdf(samples[i], mean, std);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

struct MomentEstimate {
    double mean = 0.0;
    double std = 0.0;
};

/// Forward Euler-Maruyama simulation of dx = f(x,t)dt + g(t)dw from a
/// scalar x0, with antithetic path pairs (z, -z) so the empirical mean
/// estimator is exact for these affine drifts. Returns moment estimates at
/// the requested snapshot times (which must be on the step grid).
inline std::vector<MomentEstimate> forward_em_moments(const sdesr::SdeModel& model, double x0,
                                                      int n_pairs, int n_steps,
                                                      const std::vector<double>& snapshot_ts,
                                                      uint64_t seed) {
    const double t_end = snapshot_ts.back();
    const double dt = t_end / n_steps;
    std::vector<double> xp(n_pairs, x0), xm(n_pairs, x0);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<MomentEstimate> out;
    size_t next_snap = 0;
    for (int k = 0; k < n_steps && next_snap < snapshot_ts.size(); ++k) {
        const double t = k * dt;
        const double a = drift_coeff(model, t);
        const double g = diffusion(model, t);
        const double ns = g * std::sqrt(dt);
        for (int j = 0; j < n_pairs; ++j) {
            const double z = gauss(eng);
            xp[j] += a * xp[j] * dt + ns * z;
            xm[j] += a * xm[j] * dt - ns * z;
        }
        const double t_next = (k + 1) * dt;
        if (t_next + 1e-12 >= snapshot_ts[next_snap]) {
            double sum = 0.0, sq = 0.0;
            const double n = 2.0 * n_pairs;
            for (int j = 0; j < n_pairs; ++j) sum += xp[j] + xm[j];
            const double mean = sum / n;
            for (int j = 0; j < n_pairs; ++j)
                sq += (xp[j] - mean) * (xp[j] - mean) + (xm[j] - mean) * (xm[j] - mean);
            out.push_back({mean, std::sqrt(sq / (n - 1.0))});
            ++next_snap;
        }
    }
    return out;
}

// --- brute-force metric oracles -------------------------------------------

inline double mse_oracle(const sdesr::Tensor& a, const sdesr::Tensor& b) {
    long double acc = 0.0L;
    for (int i = a.size() - 1; i >= 0; --i) {
        const long double d = static_cast<long double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return static_cast<double>(acc / a.size());
}

inline double psnr_oracle(const sdesr::Tensor& a, const sdesr::Tensor& b) {
    const double mse = mse_oracle(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

/// Direct SSIM evaluation: explicit Gaussian weights recomputed per window,
/// accumulation order different from the library path.
inline double ssim_oracle(const sdesr::Tensor& a, const sdesr::Tensor& b) {
    const int win = 11, r = 5;
    const double sigma = 1.5, k1 = 0.01, k2 = 0.03;
    const double c1 = k1 * k1, c2 = k2 * k2;

    double wsum = 0.0;
    std::vector<double> wts(win * win);
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            wsum += wts[(dy + r) * win + dx + r] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));

    double total = 0.0;
    long count = 0;
    for (int ch = 0; ch < a.c; ++ch)
        for (int y = r; y < a.h - r; ++y)
            for (int x = r; x < a.w - r; ++x) {
                double mu_a = 0, mu_b = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = wts[(dy + r) * win + dx + r] / wsum;
                        mu_a += w * a.at(y + dy, x + dx, ch);
                        mu_b += w * b.at(y + dy, x + dx, ch);
                    }
                double va = 0, vb = 0, cov = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = wts[(dy + r) * win + dx + r] / wsum;
                        va += w * a.at(y + dy, x + dx, ch) * a.at(y + dy, x + dx, ch);
                        vb += w * b.at(y + dy, x + dx, ch) * b.at(y + dy, x + dx, ch);
                        cov += w * a.at(y + dy, x + dx, ch) * b.at(y + dy, x + dx, ch);
                    }
                va -= mu_a * mu_a;
                vb -= mu_b * mu_b;
                cov -= mu_a * mu_b;
                total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                         ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
                ++count;
            }
    return total / count;
}

inline double cosine_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

inline sdesr::Tensor random_image(int h, int w, int c, uint64_t seed) {
    sdesr::Tensor t(h, w, c);
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    for (float& v : t.data) v = uni(eng);
    return t;
}

inline sdesr::SdeModel make_model(sdesr::SdeKind kind) {
    sdesr::SdeModel m;
    m.kind = kind;
    return m;
}

/// Unique scratch directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 eng(std::random_device{}());
    const auto p = std::filesystem::temp_directory_path() /
                   ("sdesr_" + tag + "_" + std::to_string(eng()));
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testsup
