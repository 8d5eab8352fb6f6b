#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flsim {

// One labeled feature vector. Features live in [0,1].
struct Example {
    std::vector<double> features;
    int label = 0;
};

struct Dataset {
    std::vector<Example> examples;
    int num_classes = 0;
    int feature_dim = 0;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

// Non-IID partition knobs. q in [1/L, 1]: q = 1/L is IID, q = 1 fully skewed.
struct PartitionParams {
    int num_clients = 0;
    double noniid_degree = 0.0;
    std::uint64_t seed = 0;
};

// Backdoor trigger: set the given feature positions to pixel_value and
// relabel to target_label.
struct TriggerSpec {
    std::vector<int> pixel_positions;
    double pixel_value = 1.0;
    int target_label = 0;
};

enum class LabelFlipMode { remap, to_target };

// Gaussian-mixture classification data: class c drawn from an isotropic
// Gaussian around a class-specific mean on the unit sphere (positive
// orthant), clipped to [0,1]. Deterministic per seed.
Dataset generate_synthetic(int num_classes, int feature_dim, int per_class, std::uint64_t seed);

// Rows/cols of the image file, needed to place image-shaped triggers.
struct IdxImageMeta {
    int rows = 0;
    int cols = 0;
};

// Reads an IDX image/label file pair (big-endian; magic 0x00000803 for
// images, 0x00000801 for labels). Pixels are scaled by 1/255.
// Throws format_error on a bad magic number, consistency_error when image
// and label counts disagree, io_error on missing/truncated files.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 IdxImageMeta* meta = nullptr);

// Writes a dataset back to the IDX pair format (features rounded to the
// 1/255 grid). Inverse of load_idx for on-grid data.
void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path, int rows, int cols);

// Splits ds into num_clients shards. Clients are divided into L equal groups
// (client i belongs to group i mod L); an example with label l goes to a
// uniform client of group l with probability q and to a uniform client of
// one of the other groups otherwise. Throws config_error when
// num_clients < num_classes.
std::vector<Dataset> partition_noniid(const Dataset& ds, const PartitionParams& params);

// Draws `size` examples without replacement; each draw comes from class 0
// with probability bias_p and from a uniformly random other class otherwise.
// Throws sampling_error when the required class runs out of examples.
Dataset sample_root_dataset(const Dataset& ds, int size, double bias_p, std::uint64_t seed);

// Label flips; features untouched.
Dataset flip_labels_remap(const Dataset& ds);                 // l -> L-1-l
Dataset flip_labels_to_target(const Dataset& ds, int target); // l -> target

// Applies the trigger to a seeded subset of ceil(fraction * |ds|) examples.
Dataset embed_trigger(const Dataset& ds, const TriggerSpec& trig, double fraction,
                      std::uint64_t seed);

// Applies the trigger pixels to a single feature vector (no relabeling).
std::vector<double> apply_trigger_pixels(const std::vector<double>& features,
                                         const TriggerSpec& trig);

// Conventional default trigger. For image-shaped data (rows/cols known): a
// 3x3 patch in the bottom-right corner. For flat features: the last three
// positions. Value 1.0, target label 0.
TriggerSpec default_trigger(int feature_dim, int rows = 0, int cols = 0);

} // namespace flsim
