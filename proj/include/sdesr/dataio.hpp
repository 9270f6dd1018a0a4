#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdesr/random.hpp"
#include "sdesr/tensor.hpp"

namespace sdesr {

/// Load an 8-bit PNG or binary PGM as floats in [0,1] (byte 255 -> 1.0).
Tensor load_image(const std::filesystem::path& path);

/// Save as 8-bit PNG (c = 1 or 3) or PGM (c = 1), rounding clamped values.
void save_image(const Tensor& img, const std::filesystem::path& path);

enum class DataSource { Directory, Synthetic };

struct DatasetHandle {
    DataSource source = DataSource::Synthetic;
    int h = 0, w = 0, c = 1;
    std::vector<Tensor> images;
    std::vector<std::string> names;
    std::vector<std::string> rejected;  // "name: reason" for files that failed to load
    uint64_t seed = 0;

    size_t size() const { return images.size(); }
};

/// Load every .png/.pgm in a directory (or the files named by an optional
/// manifest.txt, one relative path per line). Files that fail to load or
/// whose shape differs from the expected one are listed in `rejected` and
/// skipped; an empty result throws.
DatasetHandle load_image_dir(const std::filesystem::path& dir, int h, int w, int c);

/// Procedural grayscale toy faces: ellipse head, two eye blobs, a mouth
/// arc over a soft background gradient, plus optional additive noise of
/// std 0.01. Image i depends only on (seed, i). Requires h, w >= 16.
DatasetHandle synth_faces(int n, int h, int w, uint64_t seed, bool add_noise = true);

/// Uniform sample of L images without replacement, deterministic in seed.
std::vector<Tensor> sample_test_set(const DatasetHandle& handle, int L, uint64_t seed);

// --- checkpoints ---------------------------------------------------------

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[6] = {'S', 'D', 'E', 'S', 'R', '1'};

struct NamedArray {
    std::string name;
    std::vector<int> dims;
    std::vector<float> data;
};

/// Binary container: magic "SDESR1", version u32, a length-prefixed
/// key=value metadata block, then named float32 arrays
/// (name length u32, name bytes, rank u32, dims u32 x rank, payload).
struct Checkpoint {
    uint32_t version = kCheckpointVersion;
    std::map<std::string, std::string> meta;
    std::vector<NamedArray> arrays;

    const NamedArray* find(const std::string& name) const;
    const std::string& meta_at(const std::string& key) const;
};

struct CheckpointMagicError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointTruncatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Writes to a temporary file and renames on completion.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sdesr
