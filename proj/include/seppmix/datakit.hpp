#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "seppmix/types.hpp"

namespace seppmix::datakit {

enum class DatasetRole { base, novel };

struct DatasetItem {
    Image image;
    int class_id = 0;
    std::string instance_id; // stable across loads, unique within a dataset
};

struct LabeledDataset {
    std::vector<std::string> class_names;
    std::vector<DatasetItem> items;
    std::vector<std::vector<int>> by_class; // item indices per class id
    DatasetRole role = DatasetRole::base;

    int class_count() const { return static_cast<int>(class_names.size()); }
    int size() const { return static_cast<int>(items.size()); }
    void rebuild_index();
};

// {name, image_size, train: [class...], val: [class...], test: [class...]};
// the three class lists must be pairwise disjoint and nonempty.
struct SplitManifest {
    std::string name;
    int image_size = 84;
    std::vector<std::string> train, val, test;

    const std::vector<std::string>& split(const std::string& which) const;
};

SplitManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const SplitManifest& m);

// Loads root/<class>/<image files> for every class in the chosen split, in
// manifest order; files sort lexicographically within a class. Images are
// decoded, resized (bilinear) to the manifest size and scaled to [0, 1].
LabeledDataset load_image_folder(const std::filesystem::path& root, const SplitManifest& manifest,
                                 const std::string& split);

// Deterministic synthetic dataset: each class is a distinct (blob position,
// blob color, background texture frequency) triple; images jitter the blob
// and add pixel noise. Generation is pure integer/rational arithmetic on
// top of the seeded stream, so outputs are bit-reproducible.
LabeledDataset make_synthetic(int num_classes, int per_class, int image_size, std::uint64_t seed);

// Class-level partition by class order: the first floor(fraction * classes)
// classes become the base set, the rest the novel set. Class ids are
// re-indexed within each side; instance ids are preserved.
std::pair<LabeledDataset, LabeledDataset> split_base_novel(const LabeledDataset& ds,
                                                           double base_fraction);

// Materializes a dataset as a PNG tree plus manifest (train/val/test class
// counts chosen by the caller).
void write_image_folder(const std::filesystem::path& root, const LabeledDataset& ds,
                        int train_classes, int val_classes, int test_classes,
                        const std::string& name);

} // namespace seppmix::datakit
