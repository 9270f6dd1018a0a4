#include "sdesr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "sdesr/random.hpp"

namespace sdesr {

namespace fs = std::filesystem;

double psnr(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= a.size();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

const std::vector<double>& ssim_window() {
    static const std::vector<double> win = [] {
        std::vector<double> w(kSsimWindow * kSsimWindow);
        const int r = kSsimWindow / 2;
        double sum = 0.0;
        for (int y = -r; y <= r; ++y)
            for (int x = -r; x <= r; ++x) {
                const double v = std::exp(-(x * x + y * y) / (2.0 * kSsimSigma * kSsimSigma));
                w[(y + r) * kSsimWindow + x + r] = v;
                sum += v;
            }
        for (double& v : w) v /= sum;
        return w;
    }();
    return win;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.h < kSsimWindow || a.w < kSsimWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const std::vector<double>& win = ssim_window();
    const double c1 = kSsimK1 * kSsimK1;
    const double c2 = kSsimK2 * kSsimK2;
    const int r = kSsimWindow / 2;

    double total = 0.0;
    long count = 0;
    for (int ch = 0; ch < a.c; ++ch) {
        for (int y = r; y < a.h - r; ++y) {
            for (int x = r; x < a.w - r; ++x) {
                double mu_a = 0.0, mu_b = 0.0;
                double aa = 0.0, bb = 0.0, ab = 0.0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = win[(dy + r) * kSsimWindow + dx + r];
                        const double va = a.at(y + dy, x + dx, ch);
                        const double vb = b.at(y + dy, x + dx, ch);
                        mu_a += w * va;
                        mu_b += w * vb;
                        aa += w * va * va;
                        bb += w * vb * vb;
                        ab += w * va * vb;
                    }
                const double var_a = aa - mu_a * mu_a;
                const double var_b = bb - mu_b * mu_b;
                const double cov = ab - mu_a * mu_b;
                // written as sums of identical terms so that a == b gives
                // exactly 1 in floating point
                const double mu_ab = mu_a * mu_b;
                const double num = (mu_ab + mu_ab + c1) * (cov + cov + c2);
                const double den =
                    (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                total += num / den;
                ++count;
            }
        }
    }
    return total / count;
}

double consistency(const Tensor& sr, const Tensor& y_lr, const DegradationSpec& spec) {
    const Tensor down = downsample(sr, spec);
    require_same_shape(down, y_lr, "consistency");
    double mse = 0.0;
    for (int i = 0; i < down.size(); ++i) {
        const double d = static_cast<double>(down.data[i]) - y_lr.data[i];
        mse += d * d;
    }
    return mse / down.size();
}

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
    if (a.values.size() != b.values.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("cosine_similarity: zero vector");
    // sqrt(na*nb) rather than sqrt(na)*sqrt(nb): identical vectors give
    // exactly 1 under round-to-nearest
    return dot / std::sqrt(na * nb);
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd r;
    if (xs.empty()) return r;
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (xs.size() > 1) {
        double sq = 0.0;
        for (double x : xs) sq += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(sq / (xs.size() - 1));
    }
    return r;
}

}  // namespace

MeanStd average_cs(const std::vector<std::pair<FeatureVector, FeatureVector>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("average_cs: empty pair list");
    std::vector<double> sims;
    sims.reserve(pairs.size());
    for (const auto& [a, b] : pairs) sims.push_back(cosine_similarity(a, b));
    return mean_std(sims);
}

namespace {

// fixed seed of the random projection; part of the embedding definition
constexpr uint64_t kFeatureProjectionSeed = 0x5DE5FEA7u;
constexpr int kGrid = 8;           // block grid for means/stds
constexpr int kCells = 4;          // spatial cells per axis for gradients
constexpr int kOrientBins = 8;

std::vector<double> raw_features(const Tensor& img) {
    const int h = img.h, w = img.w;
    // channel-averaged grayscale view
    std::vector<double> gray(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int ch = 0; ch < img.c; ++ch) s += img.at(y, x, ch);
            gray[static_cast<size_t>(y) * w + x] = s / img.c;
        }

    std::vector<double> feat;
    feat.reserve(2 * kGrid * kGrid + kCells * kCells * kOrientBins);

    // block means and stds on an 8x8 grid
    std::vector<double> means(kGrid * kGrid), stds(kGrid * kGrid);
    for (int by = 0; by < kGrid; ++by)
        for (int bx = 0; bx < kGrid; ++bx) {
            const int y0 = by * h / kGrid, y1 = (by + 1) * h / kGrid;
            const int x0 = bx * w / kGrid, x1 = (bx + 1) * w / kGrid;
            double sum = 0.0, sq = 0.0;
            const int n = (y1 - y0) * (x1 - x0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const double v = gray[static_cast<size_t>(y) * w + x];
                    sum += v;
                    sq += v * v;
                }
            const double mu = sum / n;
            means[by * kGrid + bx] = mu;
            stds[by * kGrid + bx] = std::sqrt(std::max(0.0, sq / n - mu * mu));
        }
    feat.insert(feat.end(), means.begin(), means.end());
    feat.insert(feat.end(), stds.begin(), stds.end());

    // magnitude-weighted orientation histograms over a 4x4 cell grid
    std::vector<double> hog(kCells * kCells * kOrientBins, 0.0);
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double gx = gray[static_cast<size_t>(y) * w + x + 1] -
                              gray[static_cast<size_t>(y) * w + x - 1];
            const double gy = gray[static_cast<size_t>(y + 1) * w + x] -
                              gray[static_cast<size_t>(y - 1) * w + x];
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            const double theta = std::atan2(gy, gx);  // [-pi, pi]
            int bin = static_cast<int>((theta + 3.14159265358979323846) /
                                       (2.0 * 3.14159265358979323846) * kOrientBins);
            bin = std::clamp(bin, 0, kOrientBins - 1);
            const int cy = std::min(kCells - 1, y * kCells / h);
            const int cx = std::min(kCells - 1, x * kCells / w);
            hog[(cy * kCells + cx) * kOrientBins + bin] += mag;
        }
    feat.insert(feat.end(), hog.begin(), hog.end());
    return feat;
}

}  // namespace

FeatureVector default_feature_extract(const Tensor& img, int f) {
    if (f < 1) throw std::invalid_argument("default_feature_extract: F must be >= 1");
    if (img.h < kGrid || img.w < kGrid)
        throw std::invalid_argument("default_feature_extract: image must be at least 8x8");

    const std::vector<double> raw = raw_features(img);
    const int d = static_cast<int>(raw.size());

    // fixed seeded Gaussian projection, generated from the portable stream
    RandomSource rng(kFeatureProjectionSeed + static_cast<uint64_t>(f));
    FeatureVector out;
    out.values.assign(f, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int i = 0; i < f; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += rng.normal() * raw[j];
        out.values[i] = scale * acc;
    }
    double norm = 0.0;
    for (double v : out.values) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& v : out.values) v /= norm;
    return out;
}

double high_frequency_energy(const Tensor& img) {
    if (img.h < 3 || img.w < 3) return 0.0;
    double total = 0.0;
    long count = 0;
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 1; y < img.h - 1; ++y)
            for (int x = 1; x < img.w - 1; ++x) {
                const double lap = img.at(y - 1, x, ch) + img.at(y + 1, x, ch) +
                                   img.at(y, x - 1, ch) + img.at(y, x + 1, ch) -
                                   4.0 * img.at(y, x, ch);
                total += lap * lap;
                ++count;
            }
    return total / count;
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& xs) {
    const size_t n = xs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const size_t n = xs.size();
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Correlation metric_correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("metric_correlation: needs equal lengths >= 3");
    Correlation c;
    c.pearson = pearson(xs, ys);
    c.spearman = pearson(ranks_with_ties(xs), ranks_with_ties(ys));
    return c;
}

// --- reports and file formats ---------------------------------------------

void MetricReport::finalize() {
    if (rows.empty()) throw std::invalid_argument("MetricReport: no rows");
    std::vector<double> ps, ss, cs, co;
    for (const auto& r : rows) {
        if (r.ssim_value < -1.0 - 1e-9 || r.ssim_value > 1.0 + 1e-9)
            throw std::logic_error("MetricReport: ssim out of [-1,1]");
        if (r.cosine < -1.0 - 1e-9 || r.cosine > 1.0 + 1e-9)
            throw std::logic_error("MetricReport: cosine out of [-1,1]");
        if (r.consistency_value < 0.0)
            throw std::logic_error("MetricReport: negative consistency");
        ps.push_back(std::min(r.psnr_db, 100.0));
        ss.push_back(r.ssim_value);
        cs.push_back(r.consistency_value);
        co.push_back(r.cosine);
    }
    psnr_agg = mean_std(ps);
    ssim_agg = mean_std(ss);
    consistency_agg = mean_std(cs);
    cosine_agg = mean_std(co);
}

void write_metrics_csv(const MetricReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "image_id,psnr_db,ssim,consistency_x1e4,cosine\n";
    out.precision(10);
    for (const auto& r : report.rows)
        out << r.image_id << "," << std::min(r.psnr_db, 100.0) << "," << r.ssim_value << ","
            << r.consistency_value * 1e4 << "," << r.cosine << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_summary_csv(const MetricReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(10);
    out << "metric,mean,std\n";
    out << "psnr_db," << report.psnr_agg.mean << "," << report.psnr_agg.std << "\n";
    out << "ssim," << report.ssim_agg.mean << "," << report.ssim_agg.std << "\n";
    out << "consistency_x1e4," << report.consistency_agg.mean * 1e4 << ","
        << report.consistency_agg.std * 1e4 << "\n";
    out << "cosine," << report.cosine_agg.mean << "," << report.cosine_agg.std << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_feature_file(const FeatureVector& v, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write("FVEC", 4);
    const uint32_t version = kFeatureFileVersion;
    const uint32_t f = static_cast<uint32_t>(v.values.size());
    const uint32_t reserved = 0;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&f), 4);
    out.write(reinterpret_cast<const char*>(&reserved), 4);
    for (double d : v.values) {
        const float x = static_cast<float>(d);
        out.write(reinterpret_cast<const char*>(&x), 4);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

FeatureVector read_feature_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "FVEC", 4) != 0)
        throw std::runtime_error("bad feature-file magic: " + path.string());
    uint32_t version = 0, f = 0, reserved = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&f), 4);
    in.read(reinterpret_cast<char*>(&reserved), 4);
    if (!in) throw std::runtime_error("truncated feature-file header: " + path.string());
    if (version != kFeatureFileVersion)
        throw std::runtime_error("unsupported feature-file version: " + path.string());
    FeatureVector v;
    v.values.resize(f);
    for (uint32_t i = 0; i < f; ++i) {
        float x = 0.0f;
        in.read(reinterpret_cast<char*>(&x), 4);
        if (in.gcount() != 4)
            throw std::runtime_error("truncated feature-file payload: " + path.string());
        v.values[i] = x;
    }
    return v;
}

}  // namespace sdesr
