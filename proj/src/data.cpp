#include "flsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "flsim/errors.hpp"
#include "flsim/rng.hpp"

namespace flsim {

namespace {

constexpr double kSyntheticSigma = 0.15;

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw io_error("truncated IDX header in " + path);
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

} // namespace

Dataset generate_synthetic(int num_classes, int feature_dim, int per_class,
                           std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Class means: random unit vectors.
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(feature_dim));
    for (auto& mean : means) {
        double ss = 0.0;
        for (double& m : mean) {
            m = gauss(rng);
            ss += m * m;
        }
        const double inv = 1.0 / std::sqrt(ss);
        for (double& m : mean) {
            m *= inv;
        }
    }

    Dataset ds;
    ds.num_classes = num_classes;
    ds.feature_dim = feature_dim;
    ds.examples.reserve(static_cast<std::size_t>(num_classes) * per_class);
    for (int c = 0; c < num_classes; ++c) {
        for (int k = 0; k < per_class; ++k) {
            Example ex;
            ex.label = c;
            ex.features.resize(feature_dim);
            for (int j = 0; j < feature_dim; ++j) {
                ex.features[j] = std::clamp(means[c][j] + kSyntheticSigma * gauss(rng), 0.0, 1.0);
            }
            ds.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 IdxImageMeta* meta) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw io_error("cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw io_error("cannot open " + labels_path);

    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != kIdxImagesMagic) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "0x%08x", img_magic);
        throw format_error("bad image magic " + std::string(buf) + " in " + images_path);
    }
    const std::uint32_t n_images = read_be_u32(img, images_path);
    const std::uint32_t rows = read_be_u32(img, images_path);
    const std::uint32_t cols = read_be_u32(img, images_path);

    const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
    if (lab_magic != kIdxLabelsMagic) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "0x%08x", lab_magic);
        throw format_error("bad label magic " + std::string(buf) + " in " + labels_path);
    }
    const std::uint32_t n_labels = read_be_u32(lab, labels_path);
    if (n_images != n_labels) {
        throw consistency_error("image count " + std::to_string(n_images) +
                                " != label count " + std::to_string(n_labels));
    }

    const std::size_t dim = std::size_t(rows) * cols;
    std::vector<unsigned char> pixels(dim);
    std::vector<unsigned char> labels(n_labels);
    if (!lab.read(reinterpret_cast<char*>(labels.data()), n_labels)) {
        throw io_error("truncated label data in " + labels_path);
    }

    Dataset ds;
    ds.feature_dim = static_cast<int>(dim);
    ds.examples.reserve(n_images);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(dim))) {
            throw io_error("truncated image data in " + images_path);
        }
        Example ex;
        ex.label = labels[i];
        max_label = std::max(max_label, ex.label);
        ex.features.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            ex.features[j] = pixels[j] / 255.0;
        }
        ds.examples.push_back(std::move(ex));
    }
    ds.num_classes = max_label + 1;
    if (meta) {
        meta->rows = static_cast<int>(rows);
        meta->cols = static_cast<int>(cols);
    }
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path, int rows, int cols) {
    if (rows * cols != ds.feature_dim) {
        throw dimension_error("save_idx: rows*cols != feature_dim");
    }
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw io_error("cannot open " + images_path + " for writing");
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw io_error("cannot open " + labels_path + " for writing");

    write_be_u32(img, kIdxImagesMagic);
    write_be_u32(img, static_cast<std::uint32_t>(ds.size()));
    write_be_u32(img, static_cast<std::uint32_t>(rows));
    write_be_u32(img, static_cast<std::uint32_t>(cols));
    write_be_u32(lab, kIdxLabelsMagic);
    write_be_u32(lab, static_cast<std::uint32_t>(ds.size()));

    std::vector<unsigned char> pixels(ds.feature_dim);
    for (const Example& ex : ds.examples) {
        for (int j = 0; j < ds.feature_dim; ++j) {
            const double v = std::clamp(ex.features[j], 0.0, 1.0);
            pixels[j] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        img.write(reinterpret_cast<const char*>(pixels.data()), ds.feature_dim);
        lab.put(static_cast<char>(ex.label));
    }
    if (!img || !lab) throw io_error("short write in save_idx");
}

std::vector<Dataset> partition_noniid(const Dataset& ds, const PartitionParams& params) {
    const int n = params.num_clients;
    const int L = ds.num_classes;
    if (n < L) {
        throw config_error("partition_noniid: num_clients (" + std::to_string(n) +
                           ") < num_classes (" + std::to_string(L) + ")");
    }
    const double q = params.noniid_degree;

    // group(i) = i mod L, so group sizes differ by at most one.
    std::vector<std::vector<int>> group_members(L);
    for (int i = 0; i < n; ++i) {
        group_members[i % L].push_back(i);
    }

    std::vector<Dataset> shards(n);
    for (auto& shard : shards) {
        shard.num_classes = ds.num_classes;
        shard.feature_dim = ds.feature_dim;
    }

    auto rng = make_rng(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const Example& ex : ds.examples) {
        int group = ex.label;
        if (unit(rng) >= q) {
            // One of the other L-1 groups, each equally likely.
            std::uniform_int_distribution<int> other(0, L - 2);
            int g = other(rng);
            group = g >= ex.label ? g + 1 : g;
        }
        const auto& members = group_members[group];
        std::uniform_int_distribution<int> pick(0, static_cast<int>(members.size()) - 1);
        shards[members[pick(rng)]].examples.push_back(ex);
    }
    return shards;
}

Dataset sample_root_dataset(const Dataset& ds, int size, double bias_p, std::uint64_t seed) {
    if (size > static_cast<int>(ds.size())) {
        throw precondition_error("sample_root_dataset: size exceeds dataset");
    }
    const int L = ds.num_classes;
    std::vector<std::vector<int>> by_class(L);
    for (int i = 0; i < static_cast<int>(ds.size()); ++i) {
        by_class[ds.examples[i].label].push_back(i);
    }

    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset root;
    root.num_classes = ds.num_classes;
    root.feature_dim = ds.feature_dim;
    root.examples.reserve(size);
    for (int k = 0; k < size; ++k) {
        int cls = 0;
        if (!(unit(rng) < bias_p)) {
            std::uniform_int_distribution<int> other(1, L - 1);
            cls = other(rng);
        }
        auto& pool = by_class[cls];
        if (pool.empty()) {
            throw sampling_error("sample_root_dataset: class " + std::to_string(cls) +
                                 " exhausted after " + std::to_string(k) + " draws");
        }
        std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
        const int slot = pick(rng);
        root.examples.push_back(ds.examples[pool[slot]]);
        pool[slot] = pool.back();
        pool.pop_back();
    }
    return root;
}

Dataset flip_labels_remap(const Dataset& ds) {
    Dataset out = ds;
    for (Example& ex : out.examples) {
        ex.label = ds.num_classes - 1 - ex.label;
    }
    return out;
}

Dataset flip_labels_to_target(const Dataset& ds, int target) {
    Dataset out = ds;
    for (Example& ex : out.examples) {
        ex.label = target;
    }
    return out;
}

std::vector<double> apply_trigger_pixels(const std::vector<double>& features,
                                         const TriggerSpec& trig) {
    std::vector<double> out = features;
    for (int pos : trig.pixel_positions) {
        out[pos] = trig.pixel_value;
    }
    return out;
}

Dataset embed_trigger(const Dataset& ds, const TriggerSpec& trig, double fraction,
                      std::uint64_t seed) {
    Dataset out = ds;
    const auto count =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ds.size())));
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < count && k < order.size(); ++k) {
        Example& ex = out.examples[order[k]];
        ex.features = apply_trigger_pixels(ex.features, trig);
        ex.label = trig.target_label;
    }
    return out;
}

TriggerSpec default_trigger(int feature_dim, int rows, int cols) {
    TriggerSpec trig;
    trig.pixel_value = 1.0;
    trig.target_label = 0;
    if (rows >= 3 && cols >= 3 && rows * cols == feature_dim) {
        for (int r = rows - 3; r < rows; ++r) {
            for (int c = cols - 3; c < cols; ++c) {
                trig.pixel_positions.push_back(r * cols + c);
            }
        }
    } else {
        for (int j = std::max(0, feature_dim - 3); j < feature_dim; ++j) {
            trig.pixel_positions.push_back(j);
        }
    }
    return trig;
}

} // namespace flsim
