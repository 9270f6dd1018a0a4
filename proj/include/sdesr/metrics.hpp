#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdesr/degrade.hpp"
#include "sdesr/tensor.hpp"

namespace sdesr {

/// 10*log10(1/MSE) on [0,1] data; +infinity for identical inputs (capped
/// at 100 dB in CSV output).
double psnr(const Tensor& a, const Tensor& b);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, data range 1. Channels are averaged. Windows are evaluated at
/// every position fully inside the image; images smaller than the window
/// are rejected.
double ssim(const Tensor& a, const Tensor& b);

/// MSE between downsample(sr) and the low-resolution input, on the [0,1]
/// scale. CSV output reports this value scaled by 1e4.
double consistency(const Tensor& sr, const Tensor& y_lr, const DegradationSpec& spec);

struct FeatureVector {
    std::vector<double> values;
};

double cosine_similarity(const FeatureVector& a, const FeatureVector& b);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample std (n-1), 0 for a single element
};

/// CS = mean cosine similarity over pairs, with its std.
MeanStd average_cs(const std::vector<std::pair<FeatureVector, FeatureVector>>& pairs);

/// Deterministic feature embedding standing in for a learned extractor:
/// 8x8-grid block means and standard deviations plus orientation-binned
/// gradient histograms, mapped to F dimensions by a fixed seeded random
/// projection and unit-normalized.
FeatureVector default_feature_extract(const Tensor& img, int f = 512);

/// Mean squared 3x3 Laplacian response over interior pixels; an inverse
/// smoothness proxy (0 for constant images).
double high_frequency_energy(const Tensor& img);

struct Correlation {
    double pearson = 0.0;
    double spearman = 0.0;
};

/// Pearson and Spearman coefficients; NaN sentinels when either input has
/// zero variance. Requires equal lengths >= 3.
Correlation metric_correlation(const std::vector<double>& xs, const std::vector<double>& ys);

// --- reports and file formats ---------------------------------------------

struct PerImageMetrics {
    std::string image_id;
    double psnr_db = 0.0;
    double ssim_value = 0.0;
    double consistency_value = 0.0;  // unscaled MSE
    double cosine = 0.0;
};

struct MetricReport {
    std::vector<PerImageMetrics> rows;
    MeanStd psnr_agg, ssim_agg, consistency_agg, cosine_agg;

    void finalize();  // computes the aggregates and validates ranges
};

/// Columns: image_id, psnr_db (capped at 100), ssim, consistency_x1e4, cosine.
void write_metrics_csv(const MetricReport& report, const std::filesystem::path& path);
/// Columns: metric, mean, std.
void write_summary_csv(const MetricReport& report, const std::filesystem::path& path);

inline constexpr uint32_t kFeatureFileVersion = 1;

/// Feature-vector file: 16-byte header (magic "FVEC", version u32, F u32,
/// reserved u32) followed by F little-endian float32 values.
void write_feature_file(const FeatureVector& v, const std::filesystem::path& path);
FeatureVector read_feature_file(const std::filesystem::path& path);

}  // namespace sdesr
