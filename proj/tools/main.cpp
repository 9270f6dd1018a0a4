// Command-line front end: data generation, training, sampling, the r-sweep
// and evaluation. Every command writes its resolved configuration next to
// its outputs so a run can be reproduced from that file alone.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <iostream>

#include "sdesr/dataio.hpp"
#include "sdesr/metrics.hpp"
#include "sdesr/sampler.hpp"
#include "sdesr/train.hpp"

using namespace sdesr;
namespace fs = std::filesystem;

namespace {

// Resolved configuration as a flat key=value block under a [command]
// section; `sdesr <command> --config <file>` reproduces the run. Options
// whose value is the empty string are unset and are omitted.
void write_run_config(CLI::App* cmd, const fs::path& out_dir,
                      const std::vector<std::string>& drop_keys = {},
                      const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    std::ofstream out(out_dir / "run_config.ini", std::ios::trunc);
    out << "[" << cmd->get_name() << "]\n";
    std::istringstream body(cmd->config_to_str(true, false));
    std::string line;
    while (std::getline(body, line)) {
        if (line.find("=\"\"") != std::string::npos || line.find("=''") != std::string::npos)
            continue;
        bool dropped = false;
        for (const auto& k : drop_keys) dropped |= line.rfind(k + "=", 0) == 0;
        for (const auto& [k, v] : overrides) dropped |= line.rfind(k + "=", 0) == 0;
        if (!dropped) out << line << "\n";
    }
    for (const auto& [k, v] : overrides) out << k << "=" << v << "\n";
    if (!out) throw std::runtime_error("cannot write run_config.ini");
}

std::string replace_extension(const std::string& name, const std::string& ext) {
    return fs::path(name).stem().string() + ext;
}

// side-by-side montage: one row per image, columns separated by a 2-px bar
Tensor make_grid(const std::vector<std::vector<Tensor>>& rows) {
    const int h = rows[0][0].h, w = rows[0][0].w, c = rows[0][0].c;
    const int cols = static_cast<int>(rows[0].size());
    const int sep = 2;
    Tensor grid(static_cast<int>(rows.size()) * (h + sep) - sep,
                cols * (w + sep) - sep, c, 1.0f);
    for (size_t r = 0; r < rows.size(); ++r)
        for (int col = 0; col < cols; ++col) {
            const Tensor& img = rows[r][col];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int ch = 0; ch < c; ++ch)
                        grid.at(static_cast<int>(r) * (h + sep) + y, col * (w + sep) + x, ch) =
                            img.at(y, x, ch);
        }
    return grid;
}

struct LoadedImages {
    std::vector<Tensor> images;
    std::vector<std::string> names;
};

// when prefer_prefix is set and matching files exist, only those are used
// (lets eval point at a sample output directory that also holds the montage)
LoadedImages load_dir_any_shape(const fs::path& dir, const std::string& prefer_prefix = "") {
    LoadedImages out;
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".pgm") files.push_back(e.path().filename().string());
    }
    if (!prefer_prefix.empty()) {
        std::vector<std::string> pref;
        for (const auto& f : files)
            if (f.rfind(prefer_prefix, 0) == 0) pref.push_back(f);
        if (!pref.empty()) files = std::move(pref);
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        out.images.push_back(load_image(dir / f));
        out.names.push_back(f);
        if (out.images.back().h != out.images[0].h || out.images.back().w != out.images[0].w ||
            out.images.back().c != out.images[0].c)
            throw std::runtime_error("mixed image shapes in " + dir.string());
    }
    if (out.images.empty()) throw std::runtime_error("no images in " + dir.string());
    return out;
}

// sampling in fixed-size chunks; per-image streams are derived from the
// global index so the chunk size does not affect the output
std::vector<Tensor> sample_chunked(DenoiserNet& net, const std::vector<Tensor>& yups,
                                   const SamplerConfig& cfg, uint64_t seed, int chunk = 64) {
    const BatchScoreFn score = net.as_batch_score_fn();
    std::vector<Tensor> out;
    out.reserve(yups.size());
    for (size_t off = 0; off < yups.size(); off += chunk) {
        const size_t end = std::min(yups.size(), off + static_cast<size_t>(chunk));
        std::vector<Tensor> part(yups.begin() + off, yups.begin() + end);
        std::vector<Tensor> sr = pc_sample_batch(net.model(), score, part, cfg, seed, nullptr, off);
        for (auto& t : sr) out.push_back(std::move(t));
    }
    return out;
}

FeatureVector feature_for(const Tensor& img, const std::string& name, const fs::path& fvec_dir) {
    if (!fvec_dir.empty()) {
        const fs::path f = fvec_dir / (fs::path(name).stem().string() + ".fvec");
        if (fs::exists(f)) return read_feature_file(f);
        throw std::runtime_error("missing feature file " + f.string());
    }
    return default_feature_extract(img);
}

// --- gen-data ---------------------------------------------------------------

struct GenDataOpts {
    int n = 2000;
    int height = 32, width = 32;
    uint64_t seed = 0;
    std::string out;
    std::string format = "png";
    bool no_noise = false;
};

int cmd_gen_data(const GenDataOpts& o, CLI::App* cmd) {
    fs::create_directories(o.out);
    const DatasetHandle data = synth_faces(o.n, o.height, o.width, o.seed, !o.no_noise);
    std::ofstream manifest(fs::path(o.out) / "manifest.txt", std::ios::trunc);
    for (size_t i = 0; i < data.size(); ++i) {
        const std::string name = replace_extension(data.names[i], "." + o.format);
        save_image(data.images[i], fs::path(o.out) / name);
        manifest << name << "\n";
    }
    if (!manifest) throw std::runtime_error("cannot write manifest.txt");
    write_run_config(cmd, o.out);
    std::cout << "wrote " << data.size() << " images to " << o.out << "\n";
    return 0;
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
    std::string kind = "ve";
    int steps = 20000;
    int batch_size = 16;
    double lr = 2e-4;
    int warmup = 5000;
    uint64_t seed = 0;
    std::string out = "train_out";
    std::string data_dir;
    int synthetic_n = 2000;
    uint64_t data_seed = 1000;
    int height = 32, width = 32;
    int factor = 4;
    std::string down = "area";
    std::string lambda = "std2";
    double grad_clip = 1.0;
    bool no_grad_clip = false;
    int log_every = 50;
    int ckpt_every = 5000;
    std::string resume;
    int width0 = 32, width1 = 64, emb_dim = 64;
    double sigma_min = 0.01, sigma_max = 348.0, beta_min = 0.1, beta_max = 20.0;
    double t_min = 1e-5;
};

int cmd_train(const TrainOpts& o, CLI::App* cmd) {
    TrainConfig cfg;
    cfg.kind = sde_kind_from_string(o.kind);
    cfg.schedule = {o.sigma_min, o.sigma_max, o.beta_min, o.beta_max};
    cfg.t_min = o.t_min;
    cfg.steps = o.steps;
    cfg.batch_size = o.batch_size;
    cfg.learning_rate = o.lr;
    cfg.warmup_steps = o.warmup;
    cfg.lambda_mode = o.lambda == "const" ? LambdaMode::Constant : LambdaMode::StdSquared;
    if (o.no_grad_clip)
        cfg.grad_clip.reset();
    else
        cfg.grad_clip = o.grad_clip;
    cfg.seed = o.seed;
    cfg.degradation.factor = o.factor;
    cfg.degradation.down_method = o.down == "bicubic" ? DownMethod::Bicubic : DownMethod::Area;
    cfg.log_every = o.log_every;
    cfg.checkpoint_every = o.ckpt_every;
    cfg.validate();

    const DatasetHandle data = o.data_dir.empty()
                                   ? synth_faces(o.synthetic_n, o.height, o.width, o.data_seed)
                                   : load_image_dir(o.data_dir, o.height, o.width, 1);
    for (const auto& r : data.rejected) std::cerr << "rejected: " << r << "\n";

    fs::create_directories(o.out);
    write_run_config(cmd, o.out);

    if (!o.resume.empty()) {
        const Checkpoint c = load_checkpoint(o.resume);
        DenoiserNet net = net_from_checkpoint(c);
        if (net.model().kind != cfg.kind)
            throw std::runtime_error("checkpoint kind " + to_string(net.model().kind) +
                                     " does not match --kind " + o.kind);
        const int64_t start = std::stoll(c.meta_at("step"));
        AdamState adam = checkpoint_has_adam(c) ? adam_from_checkpoint(c, net)
                                                : AdamState::for_net(net);
        std::cout << "resuming from step " << start << "\n";
        train(cfg, data, net, o.out, start, &adam);
    } else {
        ArchDescriptor arch;
        arch.widths = {o.width0, o.width1};
        arch.time_embed_dim = o.emb_dim;
        DenoiserNet net(arch, cfg.sde());
        net.init_weights(splitmix64(cfg.seed ^ 0xA11CE));
        train(cfg, data, net, o.out);
    }
    std::cout << "training complete; outputs in " << o.out << "\n";
    return 0;
}

// --- sample -----------------------------------------------------------------

struct SampleOpts {
    std::string checkpoint;
    std::string kind;  // optional cross-check
    int n_steps = 2000;
    int m_corrector = -1;  // -1: 0 for identity, 2 for langevin
    double r = 0.16;
    bool r_given = false;
    std::string predictor;  // default chosen by kind
    std::string corrector = "identity";
    uint64_t seed = 0;
    std::string lr_dir, hr_dir;
    int factor = 4;
    std::string out = "samples";
    std::string format = "png";
    bool no_denoise = false;
    bool no_grid = false;
};

int cmd_sample(const SampleOpts& o, CLI::App* cmd) {
    const Checkpoint c = load_checkpoint(o.checkpoint);
    DenoiserNet net = net_from_checkpoint(c);
    if (!o.kind.empty() && sde_kind_from_string(o.kind) != net.model().kind)
        throw std::runtime_error("checkpoint kind " + to_string(net.model().kind) +
                                 " does not match --kind " + o.kind);

    SamplerConfig cfg;
    cfg.n_steps = o.n_steps;
    cfg.corrector = corrector_from_string(o.corrector);
    if (o.r_given && cfg.corrector != Corrector::Langevin)
        throw std::runtime_error("--r requires --corrector langevin");
    cfg.snr = o.r;
    cfg.m_corrector = o.m_corrector >= 0 ? o.m_corrector
                                         : (cfg.corrector == Corrector::Langevin ? 2 : 0);
    cfg.predictor = o.predictor.empty()
                        ? (net.model().kind == SdeKind::VE ? Predictor::EulerMaruyama
                                                           : Predictor::ReverseDiffusion)
                        : predictor_from_string(o.predictor);
    cfg.denoise_final = !o.no_denoise;
    cfg.validate();
    if (cfg.corrector == Corrector::Langevin && net.model().kind != SdeKind::VE)
        std::cerr << "note: the Langevin corrector is experimental for "
                  << to_string(net.model().kind) << "\n";

    if (o.lr_dir.empty() == o.hr_dir.empty())
        throw std::runtime_error("exactly one of --lr-dir or --hr-dir is required");

    std::vector<Tensor> yups, ylrs, hrs;
    std::vector<std::string> names;
    DegradationSpec spec;
    spec.factor = o.factor;
    if (!o.hr_dir.empty()) {
        const LoadedImages hr = load_dir_any_shape(o.hr_dir);
        names = hr.names;
        for (const Tensor& img : hr.images) {
            const Degraded d = degrade(img, spec);
            ylrs.push_back(d.y_lr);
            yups.push_back(d.y_up);
            hrs.push_back(img);
        }
    } else {
        const LoadedImages lr = load_dir_any_shape(o.lr_dir);
        names = lr.names;
        for (const Tensor& img : lr.images) {
            ylrs.push_back(img);
            yups.push_back(upsample_bicubic(img, o.factor));
        }
    }

    fs::create_directories(o.out);
    // r applies only to the Langevin corrector; leaving it out of the record
    // keeps the file re-parseable under the flag-validation rules. The
    // resolved corrector-step count and predictor replace their sentinels.
    write_run_config(cmd, o.out,
                     cfg.corrector == Corrector::Langevin ? std::vector<std::string>{}
                                                          : std::vector<std::string>{"r"},
                     {{"m", std::to_string(cfg.m_corrector)},
                      {"predictor", to_string(cfg.predictor)}});

    fs::create_directories(fs::path(o.out) / "lr");
    const std::vector<Tensor> sr = sample_chunked(net, yups, cfg, o.seed);
    std::vector<std::vector<Tensor>> grid_rows;
    for (size_t i = 0; i < sr.size(); ++i) {
        save_image(sr[i], fs::path(o.out) / ("sr_" + replace_extension(names[i], "." + o.format)));
        save_image(ylrs[i], fs::path(o.out) / "lr" / replace_extension(names[i], "." + o.format));
        if (grid_rows.size() < 16) {
            std::vector<Tensor> row = {yups[i], sr[i]};
            if (!hrs.empty()) row.push_back(hrs[i]);
            grid_rows.push_back(std::move(row));
        }
    }
    if (!o.no_grid) save_image(make_grid(grid_rows), fs::path(o.out) / ("grid." + o.format));
    std::cout << "wrote " << sr.size() << " super-resolved images to " << o.out << "\n";
    return 0;
}

// --- sweep-r ----------------------------------------------------------------

struct SweepOpts {
    std::string checkpoint;
    std::vector<double> r_list = {0.05, 0.1, 0.16, 0.3, 0.5};
    int L = 16;
    int n_steps = 1000;
    int m_corrector = 2;
    uint64_t seed = 0;
    std::string hr_dir;
    int synthetic_n = 64;
    uint64_t data_seed = 2000;
    int height = 32, width = 32;
    int factor = 4;
    std::string out = "sweep_out";
};

int cmd_sweep_r(const SweepOpts& o, CLI::App* cmd) {
    const Checkpoint c = load_checkpoint(o.checkpoint);
    DenoiserNet net = net_from_checkpoint(c);
    if (net.model().kind != SdeKind::VE)
        throw std::runtime_error("sweep-r applies the Langevin corrector and requires a VE "
                                 "checkpoint; got " + to_string(net.model().kind));

    std::vector<Tensor> hrs;
    if (!o.hr_dir.empty()) {
        LoadedImages li = load_dir_any_shape(o.hr_dir);
        hrs = std::move(li.images);
        if (static_cast<int>(hrs.size()) > o.L) hrs.resize(o.L);
    } else {
        const DatasetHandle pool = synth_faces(o.synthetic_n, o.height, o.width, o.data_seed);
        hrs = sample_test_set(pool, o.L, o.seed + 1);
    }

    DegradationSpec spec;
    spec.factor = o.factor;
    std::vector<Tensor> yups, ylrs;
    for (const Tensor& hr : hrs) {
        const Degraded d = degrade(hr, spec);
        ylrs.push_back(d.y_lr);
        yups.push_back(d.y_up);
    }

    fs::create_directories(o.out);
    write_run_config(cmd, o.out);

    std::ofstream csv(fs::path(o.out) / "sweep.csv", std::ios::trunc);
    csv.precision(10);
    csv << "r,psnr_mean,psnr_std,ssim_mean,ssim_std,consistency_x1e4_mean,consistency_x1e4_std,"
           "cs_mean,cs_std,hf_energy_mean,reference_point\n";

    std::vector<double> psnr_means, cs_means, hf_means;
    for (size_t ri = 0; ri < o.r_list.size(); ++ri) {
        SamplerConfig cfg;
        cfg.n_steps = o.n_steps;
        cfg.m_corrector = o.m_corrector;
        cfg.snr = o.r_list[ri];
        cfg.predictor = Predictor::EulerMaruyama;
        cfg.corrector = Corrector::Langevin;
        const std::vector<Tensor> sr =
            sample_chunked(net, yups, cfg, splitmix64(o.seed ^ (0xABC0 + ri)));

        MetricReport rep;
        std::vector<std::pair<FeatureVector, FeatureVector>> pairs;
        double hf = 0.0;
        for (size_t i = 0; i < sr.size(); ++i) {
            PerImageMetrics row;
            row.image_id = "img" + std::to_string(i);
            row.psnr_db = psnr(sr[i], hrs[i]);
            row.ssim_value = ssim(sr[i], hrs[i]);
            row.consistency_value = consistency(sr[i], ylrs[i], spec);
            const FeatureVector fsr = default_feature_extract(sr[i]);
            const FeatureVector fhr = default_feature_extract(hrs[i]);
            row.cosine = cosine_similarity(fsr, fhr);
            pairs.push_back({fsr, fhr});
            hf += high_frequency_energy(sr[i]);
            rep.rows.push_back(row);
        }
        rep.finalize();
        hf /= static_cast<double>(sr.size());
        const MeanStd cs = average_cs(pairs);
        const bool ref = std::fabs(o.r_list[ri] - 0.16) < 1e-12;
        csv << o.r_list[ri] << "," << rep.psnr_agg.mean << "," << rep.psnr_agg.std << ","
            << rep.ssim_agg.mean << "," << rep.ssim_agg.std << ","
            << rep.consistency_agg.mean * 1e4 << "," << rep.consistency_agg.std * 1e4 << ","
            << cs.mean << "," << cs.std << "," << hf << "," << (ref ? 1 : 0) << "\n";
        psnr_means.push_back(rep.psnr_agg.mean);
        cs_means.push_back(cs.mean);
        hf_means.push_back(hf);
        std::cout << "r=" << o.r_list[ri] << " psnr=" << rep.psnr_agg.mean << " cs=" << cs.mean
                  << " hf=" << hf << "\n";
    }
    if (!csv) throw std::runtime_error("cannot write sweep.csv");

    std::ofstream corr(fs::path(o.out) / "correlation.csv", std::ios::trunc);
    corr.precision(10);
    corr << "pair,pearson,spearman\n";
    if (o.r_list.size() >= 3) {
        const Correlation cs_psnr = metric_correlation(cs_means, psnr_means);
        const Correlation r_hf = metric_correlation(o.r_list, hf_means);
        corr << "cs_vs_psnr," << cs_psnr.pearson << "," << cs_psnr.spearman << "\n";
        corr << "r_vs_hf_energy," << r_hf.pearson << "," << r_hf.spearman << "\n";
    } else {
        std::cerr << "note: correlations need at least 3 r values; skipped\n";
    }
    if (!corr) throw std::runtime_error("cannot write correlation.csv");
    return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalOpts {
    std::string sr_dir, hr_dir, lr_dir;
    int factor = 4;
    std::string down = "area";
    std::string out = "eval_out";
    std::string features_sr, features_hr;
};

int cmd_eval(const EvalOpts& o, CLI::App* cmd) {
    DegradationSpec spec;
    spec.factor = o.factor;
    spec.down_method = o.down == "bicubic" ? DownMethod::Bicubic : DownMethod::Area;

    LoadedImages sr = load_dir_any_shape(o.sr_dir, /*prefer_prefix=*/"sr_");
    fs::create_directories(o.out);
    write_run_config(cmd, o.out);

    MetricReport rep;
    std::vector<std::string> missing;
    for (size_t i = 0; i < sr.images.size(); ++i) {
        const std::string& name = sr.names[i];
        // accept the same stem with or without the sr_ prefix, either format
        auto find_in = [&](const fs::path& dir) -> fs::path {
            std::string stem = fs::path(name).stem().string();
            if (stem.rfind("sr_", 0) == 0) stem = stem.substr(3);
            for (const char* ext : {".png", ".pgm"}) {
                if (fs::exists(dir / (stem + ext))) return dir / (stem + ext);
            }
            return {};
        };
        const fs::path hr_path = find_in(o.hr_dir);
        const fs::path lr_path = find_in(o.lr_dir);
        if (hr_path.empty() || lr_path.empty()) {
            missing.push_back(name);
            continue;
        }
        const Tensor hr = load_image(hr_path);
        const Tensor lr = load_image(lr_path);

        PerImageMetrics row;
        row.image_id = name;
        row.psnr_db = psnr(sr.images[i], hr);
        row.ssim_value = ssim(sr.images[i], hr);
        row.consistency_value = consistency(sr.images[i], lr, spec);
        row.cosine = cosine_similarity(feature_for(sr.images[i], name, o.features_sr),
                                       feature_for(hr, name, o.features_hr));
        rep.rows.push_back(row);
    }
    if (!rep.rows.empty()) {
        rep.finalize();
        write_metrics_csv(rep, fs::path(o.out) / "per_image.csv");
        write_summary_csv(rep, fs::path(o.out) / "summary.csv");
        std::cout << "evaluated " << rep.rows.size() << " images; psnr " << rep.psnr_agg.mean
                  << " +- " << rep.psnr_agg.std << " dB, ssim " << rep.ssim_agg.mean
                  << ", consistency(x1e4) " << rep.consistency_agg.mean * 1e4 << ", cs "
                  << rep.cosine_agg.mean << "\n";
    }
    if (!missing.empty()) {
        std::cerr << "unmatched files (no HR/LR counterpart):\n";
        for (const auto& m : missing) std::cerr << "  " << m << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous-time score-based diffusion for face super-resolution"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a run_config.ini");

    GenDataOpts gd;
    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic toy-face dataset");
    gen->option_defaults()->always_capture_default(true);
    gen->add_option("--n", gd.n, "Number of images");
    gen->add_option("--height", gd.height);
    gen->add_option("--width", gd.width);
    gen->add_option("--seed", gd.seed);
    gen->add_option("--out", gd.out, "Output directory")->required();
    gen->add_option("--format", gd.format)->check(CLI::IsMember({"png", "pgm"}));
    gen->add_flag("--no-noise", gd.no_noise, "Disable additive pixel noise");

    TrainOpts tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a conditional denoiser");
    train_cmd->option_defaults()->always_capture_default(true);
    train_cmd->add_option("--kind", tr.kind)->check(CLI::IsMember({"ve", "vp", "subvp"}));
    train_cmd->add_option("--steps", tr.steps);
    train_cmd->add_option("--batch-size", tr.batch_size);
    train_cmd->add_option("--lr", tr.lr);
    train_cmd->add_option("--warmup", tr.warmup);
    train_cmd->add_option("--seed", tr.seed);
    train_cmd->add_option("--out", tr.out);
    train_cmd->add_option("--data-dir", tr.data_dir, "Directory of training images");
    train_cmd->add_option("--synthetic-n", tr.synthetic_n,
                          "Synthetic dataset size when no --data-dir is given");
    train_cmd->add_option("--data-seed", tr.data_seed);
    train_cmd->add_option("--height", tr.height);
    train_cmd->add_option("--width", tr.width);
    train_cmd->add_option("--factor", tr.factor);
    train_cmd->add_option("--down", tr.down)->check(CLI::IsMember({"area", "bicubic"}));
    train_cmd->add_option("--lambda", tr.lambda)->check(CLI::IsMember({"std2", "const"}));
    train_cmd->add_option("--grad-clip", tr.grad_clip);
    train_cmd->add_flag("--no-grad-clip", tr.no_grad_clip);
    train_cmd->add_option("--log-every", tr.log_every);
    train_cmd->add_option("--ckpt-every", tr.ckpt_every);
    train_cmd->add_option("--resume", tr.resume, "Checkpoint to resume from");
    train_cmd->add_option("--width0", tr.width0);
    train_cmd->add_option("--width1", tr.width1);
    train_cmd->add_option("--emb-dim", tr.emb_dim);
    train_cmd->add_option("--sigma-min", tr.sigma_min);
    train_cmd->add_option("--sigma-max", tr.sigma_max);
    train_cmd->add_option("--beta-min", tr.beta_min);
    train_cmd->add_option("--beta-max", tr.beta_max);
    train_cmd->add_option("--t-min", tr.t_min);

    SampleOpts sm;
    CLI::App* sample_cmd = app.add_subcommand("sample", "Super-resolve images with PC sampling");
    sample_cmd->option_defaults()->always_capture_default(true);
    sample_cmd->add_option("--checkpoint", sm.checkpoint)->required();
    sample_cmd->add_option("--kind", sm.kind, "Cross-check the checkpoint kind");
    sample_cmd->add_option("--n-steps,-N", sm.n_steps, "Discretization steps");
    sample_cmd->add_option("--m,-M", sm.m_corrector, "Corrector iterations per step");
    sample_cmd->add_option("--r", sm.r, "Langevin signal-to-noise ratio")
        ->each([&sm](const std::string&) { sm.r_given = true; });
    sample_cmd->add_option("--predictor", sm.predictor)
        ->check(CLI::IsMember({"euler-maruyama", "em", "reverse-diffusion", "rd"}));
    sample_cmd->add_option("--corrector", sm.corrector)
        ->check(CLI::IsMember({"identity", "langevin"}));
    sample_cmd->add_option("--seed", sm.seed);
    sample_cmd->add_option("--lr-dir", sm.lr_dir, "Low-resolution inputs");
    sample_cmd->add_option("--hr-dir", sm.hr_dir, "High-resolution inputs to degrade first");
    sample_cmd->add_option("--factor", sm.factor);
    sample_cmd->add_option("--out", sm.out);
    sample_cmd->add_option("--format", sm.format)->check(CLI::IsMember({"png", "pgm"}));
    sample_cmd->add_flag("--no-denoise", sm.no_denoise, "Skip the final denoising step");
    sample_cmd->add_flag("--no-grid", sm.no_grid);

    SweepOpts sw;
    CLI::App* sweep_cmd = app.add_subcommand("sweep-r", "Sample over a grid of r values");
    sweep_cmd->option_defaults()->always_capture_default(true);
    sweep_cmd->add_option("--checkpoint", sw.checkpoint)->required();
    sweep_cmd->add_option("--r-list", sw.r_list);
    sweep_cmd->add_option("--L", sw.L, "Test images per r");
    sweep_cmd->add_option("--n-steps,-N", sw.n_steps);
    sweep_cmd->add_option("--m,-M", sw.m_corrector);
    sweep_cmd->add_option("--seed", sw.seed);
    sweep_cmd->add_option("--hr-dir", sw.hr_dir);
    sweep_cmd->add_option("--synthetic-n", sw.synthetic_n);
    sweep_cmd->add_option("--data-seed", sw.data_seed);
    sweep_cmd->add_option("--height", sw.height);
    sweep_cmd->add_option("--width", sw.width);
    sweep_cmd->add_option("--factor", sw.factor);
    sweep_cmd->add_option("--out", sw.out);

    EvalOpts ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Compute the metric table for SR outputs");
    eval_cmd->option_defaults()->always_capture_default(true);
    eval_cmd->add_option("--sr-dir", ev.sr_dir)->required();
    eval_cmd->add_option("--hr-dir", ev.hr_dir)->required();
    eval_cmd->add_option("--lr-dir", ev.lr_dir)->required();
    eval_cmd->add_option("--factor", ev.factor);
    eval_cmd->add_option("--down", ev.down)->check(CLI::IsMember({"area", "bicubic"}));
    eval_cmd->add_option("--out", ev.out);
    eval_cmd->add_option("--features-sr", ev.features_sr, "Directory of precomputed .fvec files");
    eval_cmd->add_option("--features-hr", ev.features_hr);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(gd, gen);
        if (train_cmd->parsed()) return cmd_train(tr, train_cmd);
        if (sample_cmd->parsed()) return cmd_sample(sm, sample_cmd);
        if (sweep_cmd->parsed()) return cmd_sweep_r(sw, sweep_cmd);
        if (eval_cmd->parsed()) return cmd_eval(ev, eval_cmd);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
