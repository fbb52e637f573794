#include "seppmix/datakit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "seppmix/imageio.hpp"
#include "seppmix/interp.hpp"
#include "seppmix/random.hpp"

namespace seppmix::datakit {
namespace {

using nlohmann::json;

// Triangle wave with period 1 mapped to [0, 1].
double tri(double t) {
    const double u = t - std::floor(t);
    return u < 0.5 ? 2.0 * u : 2.0 * (1.0 - u);
}

// Piecewise hue/saturation/value to RGB; pure arithmetic.
void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
    const double h6 = (h - std::floor(h)) * 6.0;
    const int i = static_cast<int>(h6) % 6;
    const double f = h6 - std::floor(h6);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (i) {
        case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
        case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
        case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
        case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
        case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
        default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
    }
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

void check_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const char* la, const char* lb) {
    std::set<std::string> sa(a.begin(), a.end());
    for (const auto& name : b)
        if (sa.count(name))
            throw IngestError(std::string("manifest: class '") + name + "' appears in both " + la +
                              " and " + lb);
}

void validate_manifest(const SplitManifest& m) {
    if (m.train.empty() || m.val.empty() || m.test.empty())
        throw IngestError("manifest: train/val/test class lists must be nonempty");
    check_disjoint(m.train, m.val, "train", "val");
    check_disjoint(m.train, m.test, "train", "test");
    check_disjoint(m.val, m.test, "val", "test");
    if (m.image_size < 4) throw IngestError("manifest: image_size too small");
}

} // namespace

void LabeledDataset::rebuild_index() {
    by_class.assign(class_names.size(), {});
    for (int i = 0; i < size(); ++i)
        by_class[static_cast<std::size_t>(items[static_cast<std::size_t>(i)].class_id)].push_back(i);
}

const std::vector<std::string>& SplitManifest::split(const std::string& which) const {
    if (which == "train") return train;
    if (which == "val") return val;
    if (which == "test") return test;
    throw InputDomainError("unknown split '" + which + "'");
}

SplitManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open manifest '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IngestError("invalid manifest '" + path.string() + "': " + e.what());
    }
    SplitManifest m;
    try {
        m.name = j.at("name").get<std::string>();
        m.image_size = j.at("image_size").get<int>();
        m.train = j.at("train").get<std::vector<std::string>>();
        m.val = j.at("val").get<std::vector<std::string>>();
        m.test = j.at("test").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw IngestError("invalid manifest '" + path.string() + "': " + e.what());
    }
    validate_manifest(m);
    return m;
}

void save_manifest(const std::filesystem::path& path, const SplitManifest& m) {
    validate_manifest(m);
    json j;
    j["name"] = m.name;
    j["image_size"] = m.image_size;
    j["train"] = m.train;
    j["val"] = m.val;
    j["test"] = m.test;
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

LabeledDataset load_image_folder(const std::filesystem::path& root, const SplitManifest& manifest,
                                 const std::string& split) {
    validate_manifest(manifest);
    const auto& classes = manifest.split(split);
    LabeledDataset ds;
    ds.class_names = classes;
    ds.role = split == "train" ? DatasetRole::base : DatasetRole::novel;
    for (int c = 0; c < static_cast<int>(classes.size()); ++c) {
        const auto dir = root / classes[static_cast<std::size_t>(c)];
        if (!std::filesystem::is_directory(dir))
            throw IngestError("missing class directory for class '" + classes[static_cast<std::size_t>(c)] +
                              "' (expected " + dir.string() + ")");
        std::vector<std::string> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path().filename().string());
        std::sort(files.begin(), files.end());
        for (const auto& fname : files) {
            Image img = imageio::load_image(dir / fname);
            if (img.height != manifest.image_size || img.width != manifest.image_size)
                img = bilinear_resize(img, manifest.image_size, manifest.image_size);
            DatasetItem item;
            item.image = std::move(img);
            item.class_id = c;
            item.instance_id = classes[static_cast<std::size_t>(c)] + "/" + fname;
            ds.items.push_back(std::move(item));
        }
    }
    ds.rebuild_index();
    return ds;
}

LabeledDataset make_synthetic(int num_classes, int per_class, int image_size, std::uint64_t seed) {
    if (num_classes < 2 || per_class < 2)
        throw InputDomainError("make_synthetic: need at least 2 classes and 2 images per class");
    if (image_size < 8) throw InputDomainError("make_synthetic: image_size must be >= 8");

    LabeledDataset ds;
    ds.role = DatasetRole::base;
    const double hue_jitter = SeededRng(derive_seed(seed, {kStreamSynthetic, 0})).uniform01();

    for (int c = 0; c < num_classes; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "class%03d", c);
        ds.class_names.emplace_back(name);

        SeededRng crng(derive_seed(seed, {kStreamSynthetic, 1, static_cast<std::uint64_t>(c)}));
        // Golden-ratio hue spacing keeps class colors distinct; the rest of
        // the class signature is drawn freely.
        const double hue = hue_jitter + 0.61803398874989 * (c + 1);
        double color[3];
        hsv_to_rgb(hue, 0.55 + 0.4 * crng.uniform01(), 0.7 + 0.3 * crng.uniform01(), color);
        const double cx = 0.25 + 0.5 * crng.uniform01();
        const double cy = 0.25 + 0.5 * crng.uniform01();
        const double radius = 0.12 + 0.1 * crng.uniform01();
        const double freq = 1.0 + static_cast<double>(crng.uniform_int(4));
        const double phase = crng.uniform01();
        double bg[3];
        for (double& v : bg) v = 0.1 + 0.3 * crng.uniform01();

        for (int i = 0; i < per_class; ++i) {
            SeededRng irng(derive_seed(
                seed, {kStreamSynthetic, 2, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i)}));
            const double jx = cx + 0.16 * (irng.uniform01() - 0.5);
            const double jy = cy + 0.16 * (irng.uniform01() - 0.5);
            const double jr = radius * (0.85 + 0.3 * irng.uniform01());

            DatasetItem item;
            item.class_id = c;
            char iid[48];
            std::snprintf(iid, sizeof(iid), "%s/img%04d", name, i);
            item.instance_id = iid;
            item.image = Image(image_size, image_size);
            const double inv = 1.0 / static_cast<double>(image_size);
            for (int ch = 0; ch < 3; ++ch) {
                for (int y = 0; y < image_size; ++y) {
                    for (int x = 0; x < image_size; ++x) {
                        const double fx = (x + 0.5) * inv;
                        const double fy = (y + 0.5) * inv;
                        const double texture = 0.2 * tri(freq * (fx + fy) + phase + 0.13 * ch);
                        const double dx = (fx - jx) / jr;
                        const double dy = (fy - jy) / jr;
                        const double q = dx * dx + dy * dy;
                        const double blob = 1.0 / ((1.0 + q) * (1.0 + q));
                        const double base = bg[ch] + texture;
                        const double v = base + (color[ch] - base) * blob +
                                         0.08 * (irng.uniform01() - 0.5);
                        item.image.at(ch, y, x) = clamp01(v);
                    }
                }
            }
            ds.items.push_back(std::move(item));
        }
    }
    ds.rebuild_index();
    return ds;
}

std::pair<LabeledDataset, LabeledDataset> split_base_novel(const LabeledDataset& ds,
                                                           double base_fraction) {
    const int n = ds.class_count();
    const int nb = static_cast<int>(std::floor(n * base_fraction));
    if (nb < 2 || n - nb < 2)
        throw InputDomainError("split_base_novel: need at least 2 classes on each side");

    LabeledDataset base, novel;
    base.role = DatasetRole::base;
    novel.role = DatasetRole::novel;
    base.class_names.assign(ds.class_names.begin(), ds.class_names.begin() + nb);
    novel.class_names.assign(ds.class_names.begin() + nb, ds.class_names.end());
    for (const auto& item : ds.items) {
        if (item.class_id < nb) {
            base.items.push_back(item);
        } else {
            DatasetItem moved = item;
            moved.class_id = item.class_id - nb;
            novel.items.push_back(std::move(moved));
        }
    }
    base.rebuild_index();
    novel.rebuild_index();
    return {std::move(base), std::move(novel)};
}

void write_image_folder(const std::filesystem::path& root, const LabeledDataset& ds,
                        int train_classes, int val_classes, int test_classes,
                        const std::string& name) {
    if (train_classes + val_classes + test_classes != ds.class_count())
        throw InputDomainError("write_image_folder: split counts must cover every class");
    if (train_classes < 1 || val_classes < 1 || test_classes < 1)
        throw InputDomainError("write_image_folder: each split needs at least one class");

    std::filesystem::create_directories(root);
    SplitManifest m;
    m.name = name;
    m.image_size = ds.items.empty() ? 0 : ds.items.front().image.height;
    for (int c = 0; c < ds.class_count(); ++c) {
        const auto& cname = ds.class_names[static_cast<std::size_t>(c)];
        if (c < train_classes)
            m.train.push_back(cname);
        else if (c < train_classes + val_classes)
            m.val.push_back(cname);
        else
            m.test.push_back(cname);
        std::filesystem::create_directories(root / cname);
    }
    for (const auto& item : ds.items) {
        const auto slash = item.instance_id.find('/');
        const std::string fname =
            (slash == std::string::npos ? item.instance_id : item.instance_id.substr(slash + 1)) + ".png";
        imageio::save_png(root / ds.class_names[static_cast<std::size_t>(item.class_id)] / fname,
                          item.image);
    }
    save_manifest(root / "manifest.json", m);
}

} // namespace seppmix::datakit
