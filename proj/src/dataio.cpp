#include "sdesr/dataio.hpp"

#include <png.h>

#include <bit>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sdesr {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& path) {
    std::string e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

Tensor from_bytes(const unsigned char* bytes, int h, int w, int c) {
    Tensor img(h, w, c);
    const size_t n = static_cast<size_t>(h) * w * c;
    for (size_t i = 0; i < n; ++i) img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

Tensor load_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
    auto next_int = [&]() {
        // skip whitespace and # comments between header fields
        for (;;) {
            int ch = in.peek();
            if (ch == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) throw std::runtime_error("bad PGM header: " + path.string());
        return static_cast<int>(v);
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (maxval != 255) throw std::runtime_error("PGM maxval must be 255: " + path.string());
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<size_t>(in.gcount()) != bytes.size())
        throw std::runtime_error("truncated PGM: " + path.string());
    return from_bytes(bytes.data(), h, w, 1);
}

void save_pgm(const Tensor& img, const fs::path& path) {
    if (img.c != 1) throw std::invalid_argument("PGM output requires a single channel");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> bytes(static_cast<size_t>(img.w) * img.h);
    for (size_t i = 0; i < bytes.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, img.data[i]));
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Tensor load_png(const fs::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        throw std::runtime_error("cannot read PNG " + path.string() + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int c = color ? 3 : 1;
    std::vector<unsigned char> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        png_image_free(&image);
        throw std::runtime_error("corrupt PNG " + path.string() + ": " + image.message);
    }
    Tensor img = from_bytes(bytes.data(), static_cast<int>(image.height),
                            static_cast<int>(image.width), c);
    return img;
}

void save_png(const Tensor& img, const fs::path& path) {
    if (img.c != 1 && img.c != 3)
        throw std::invalid_argument("PNG output requires 1 or 3 channels");
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.w);
    image.height = static_cast<png_uint_32>(img.h);
    image.format = img.c == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<unsigned char> bytes(static_cast<size_t>(img.size()));
    for (size_t i = 0; i < bytes.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, img.data[i]));
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace

Tensor load_image(const fs::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".pgm") return load_pgm(path);
    if (ext == ".png") return load_png(path);
    throw std::runtime_error("unsupported image format: " + path.string());
}

void save_image(const Tensor& img, const fs::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".pgm") return save_pgm(img, path);
    if (ext == ".png") return save_png(img, path);
    throw std::runtime_error("unsupported image format: " + path.string());
}

DatasetHandle load_image_dir(const fs::path& dir, int h, int w, int c) {
    DatasetHandle handle;
    handle.source = DataSource::Directory;
    handle.h = h;
    handle.w = w;
    handle.c = c;

    std::vector<std::string> files;
    const fs::path manifest = dir / "manifest.txt";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) files.push_back(line);
    } else {
        if (!fs::is_directory(dir))
            throw std::runtime_error("not a directory: " + dir.string());
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string ext = lower_ext(entry.path());
            if (ext == ".png" || ext == ".pgm") files.push_back(entry.path().filename().string());
        }
        std::sort(files.begin(), files.end());
    }

    for (const std::string& name : files) {
        try {
            Tensor img = load_image(dir / name);
            if (img.h != h || img.w != w || img.c != c) {
                std::ostringstream msg;
                msg << name << ": shape " << img.h << "x" << img.w << "x" << img.c
                    << " does not match expected " << h << "x" << w << "x" << c;
                handle.rejected.push_back(msg.str());
                continue;
            }
            handle.images.push_back(std::move(img));
            handle.names.push_back(name);
        } catch (const std::exception& e) {
            handle.rejected.push_back(name + ": " + e.what());
        }
    }
    if (handle.images.empty()) {
        std::string detail;
        for (const auto& r : handle.rejected) detail += "\n  " + r;
        throw std::runtime_error("no usable images in " + dir.string() + detail);
    }
    return handle;
}

namespace {

void draw_face(Tensor& img, RandomSource& rng, bool add_noise) {
    const int h = img.h, w = img.w;

    // background gradient
    const double base = 0.10 + 0.12 * rng.uniform();
    const double amp = 0.05 + 0.10 * rng.uniform();
    const double phi = rng.uniform(0.0, 6.283185307179586);
    const double gx = std::cos(phi), gy = std::sin(phi);

    // head ellipse
    const double cx = w * (0.5 + 0.10 * (rng.uniform() - 0.5));
    const double cy = h * (0.5 + 0.10 * (rng.uniform() - 0.5));
    const double rx = w * (0.28 + 0.10 * rng.uniform());
    const double ry = h * (0.33 + 0.11 * rng.uniform());
    const double rot = 0.25 * (rng.uniform() - 0.5);
    const double head = 0.55 + 0.25 * rng.uniform();
    const double cr = std::cos(rot), sr = std::sin(rot);

    // eyes and mouth, placed relative to the head
    const double eye_dx = 0.38 * rx;
    const double eye_dy = 0.25 * ry;
    const double eye_r = (0.10 + 0.06 * rng.uniform()) * rx;
    const double eye_v = 0.05 + 0.20 * rng.uniform();
    const double mouth_cy = cy + 0.45 * ry;
    const double mouth_rx = (0.40 + 0.15 * rng.uniform()) * rx;
    const double mouth_ry = (0.16 + 0.10 * rng.uniform()) * ry;
    const double mouth_th = 0.5 + 1.8 * rng.uniform();  // arc thickness in pixels
    const double mouth_v = 0.10 + 0.20 * rng.uniform();

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double xf = (x + 0.5), yf = (y + 0.5);
            double v = base + amp * 0.5 * (1.0 + gx * (xf / w - 0.5) * 2.0 + gy * (yf / h - 0.5) * 2.0);

            const double dx = xf - cx, dy = yf - cy;
            const double ex = (dx * cr + dy * sr) / rx;
            const double ey = (-dx * sr + dy * cr) / ry;
            const double rho2 = ex * ex + ey * ey;
            if (rho2 <= 1.0) {
                v = head * (1.0 - 0.15 * rho2);

                // eyes: soft-edged disks
                for (int side = -1; side <= 1; side += 2) {
                    const double ddx = xf - (cx + side * eye_dx);
                    const double ddy = yf - (cy - eye_dy);
                    const double d = std::sqrt(ddx * ddx + ddy * ddy);
                    const double cov = std::clamp(eye_r + 0.5 - d, 0.0, 1.0);
                    v = v * (1.0 - cov) + eye_v * cov;
                }

                // mouth: lower half of an elliptical ring
                if (yf >= mouth_cy) {
                    const double mx = dx / mouth_rx;
                    const double my = (yf - mouth_cy) / mouth_ry;
                    const double rho = std::sqrt(mx * mx + my * my);
                    const double dist = std::fabs(rho - 1.0) * std::min(mouth_rx, mouth_ry);
                    const double cov = std::clamp(mouth_th - dist, 0.0, 1.0);
                    v = v * (1.0 - cov) + mouth_v * cov;
                }
            }
            if (add_noise) v += 0.01 * rng.normal();
            img.at(y, x, 0) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
}

}  // namespace

DatasetHandle synth_faces(int n, int h, int w, uint64_t seed, bool add_noise) {
    if (h < 16 || w < 16) throw std::invalid_argument("synth_faces: shape must be at least 16x16");
    if (n < 1) throw std::invalid_argument("synth_faces: n must be >= 1");
    DatasetHandle handle;
    handle.source = DataSource::Synthetic;
    handle.h = h;
    handle.w = w;
    handle.c = 1;
    handle.seed = seed;
    handle.images.reserve(n);
    RandomSource base(seed);
    for (int i = 0; i < n; ++i) {
        RandomSource rng = base.derive(static_cast<uint64_t>(i));
        Tensor img(h, w, 1);
        draw_face(img, rng, add_noise);
        handle.images.push_back(std::move(img));
        char name[32];
        std::snprintf(name, sizeof(name), "face_%05d.png", i);
        handle.names.emplace_back(name);
    }
    return handle;
}

std::vector<Tensor> sample_test_set(const DatasetHandle& handle, int L, uint64_t seed) {
    const int n = static_cast<int>(handle.size());
    if (L < 1 || L > n) throw std::invalid_argument("sample_test_set: L out of range");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    RandomSource rng(seed);
    for (int k = 0; k < L; ++k) {
        const int j = k + static_cast<int>(rng.below(static_cast<uint64_t>(n - k)));
        std::swap(idx[k], idx[j]);
    }
    std::vector<Tensor> out;
    out.reserve(L);
    for (int k = 0; k < L; ++k) out.push_back(handle.images[idx[k]]);
    return out;
}

// --- checkpoints ---------------------------------------------------------

const NamedArray* Checkpoint::find(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error("checkpoint metadata missing key: " + key);
    return it->second;
}

namespace {

void write_u32(std::ofstream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::ifstream& in, const std::string& path) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (in.gcount() != 4) throw CheckpointTruncatedError("truncated checkpoint: " + path);
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const fs::path& path) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint format assumes a little-endian host");
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        write_u32(out, c.version);

        std::string meta;
        for (const auto& [k, v] : c.meta) meta += k + "=" + v + "\n";
        write_u32(out, static_cast<uint32_t>(meta.size()));
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));

        for (const auto& a : c.arrays) {
            write_u32(out, static_cast<uint32_t>(a.name.size()));
            out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
            write_u32(out, static_cast<uint32_t>(a.dims.size()));
            size_t n = 1;
            for (int d : a.dims) {
                write_u32(out, static_cast<uint32_t>(d));
                n *= static_cast<size_t>(d);
            }
            if (n != a.data.size())
                throw std::invalid_argument("checkpoint array dims do not match data: " + a.name);
            out.write(reinterpret_cast<const char*>(a.data.data()),
                      static_cast<std::streamsize>(n * 4));
        }
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    const std::string pstr = path.string();

    char magic[6];
    in.read(magic, 6);
    if (in.gcount() != 6 || std::memcmp(magic, kCheckpointMagic, 6) != 0)
        throw CheckpointMagicError("bad checkpoint magic: " + pstr);

    Checkpoint c;
    c.version = read_u32(in, pstr);
    if (c.version != kCheckpointVersion)
        throw CheckpointVersionError("unsupported checkpoint version " +
                                     std::to_string(c.version) + ": " + pstr);

    const uint32_t meta_len = read_u32(in, pstr);
    std::string meta(meta_len, '\0');
    in.read(meta.data(), meta_len);
    if (static_cast<uint32_t>(in.gcount()) != meta_len)
        throw CheckpointTruncatedError("truncated checkpoint metadata: " + pstr);
    std::istringstream ms(meta);
    std::string line;
    while (std::getline(ms, line)) {
        const size_t eq = line.find('=');
        if (eq != std::string::npos) c.meta[line.substr(0, eq)] = line.substr(eq + 1);
    }

    while (in.peek() != EOF) {
        NamedArray a;
        const uint32_t name_len = read_u32(in, pstr);
        if (name_len > 4096) throw CheckpointTruncatedError("corrupt array name length: " + pstr);
        a.name.resize(name_len);
        in.read(a.name.data(), name_len);
        if (static_cast<uint32_t>(in.gcount()) != name_len)
            throw CheckpointTruncatedError("truncated array name: " + pstr);
        const uint32_t rank = read_u32(in, pstr);
        if (rank > 8) throw CheckpointTruncatedError("corrupt array rank: " + pstr);
        size_t n = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            const uint32_t d = read_u32(in, pstr);
            a.dims.push_back(static_cast<int>(d));
            n *= d;
        }
        a.data.resize(n);
        in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(n * 4));
        if (static_cast<size_t>(in.gcount()) != n * 4)
            throw CheckpointTruncatedError("truncated array payload for " + a.name + ": " + pstr);
        c.arrays.push_back(std::move(a));
    }
    return c;
}

}  // namespace sdesr
