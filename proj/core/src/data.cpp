#include "seqlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "seqlab/errors.hpp"
#include "seqlab/rng.hpp"

namespace seqlab::data {

void Dataset::validate() const {
    if (images.size() != labels.size())
        throw DataError("dataset '" + name + "': image/label count mismatch");
    if (num_classes < 1 && !images.empty())
        throw DataError("dataset '" + name + "': class count must be positive");
    for (int l : labels)
        if (l < 0 || l >= num_classes)
            throw DataError("dataset '" + name + "': label " + std::to_string(l) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    for (std::size_t i = 1; i < images.size(); ++i)
        if (!images[i].same_shape(images.front()))
            throw DataError("dataset '" + name + "': inconsistent image shapes");
}

void LongTailSpec::validate() const {
    if (lambda_imb <= 1.0) throw ParameterError("imbalance ratio must exceed 1");
    if (head_count < 1) throw ParameterError("head class count must be positive");
    if (num_classes < 2) throw ParameterError("long tail needs at least 2 classes");
    if (beta <= 0.0 || beta > 1.0) throw ParameterError("beta must be in (0, 1]");
}

namespace {

// Deterministic Fisher-Yates.
void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.next_int(0, static_cast<std::int64_t>(i) - 1))]);
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
        by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    return by_class;
}

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& idx, const std::string& name) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.name = name;
    out.images.reserve(idx.size());
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) {
        out.images.push_back(ds.images[i]);
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> make_split(const Dataset& ds, const SplitSpec& spec) {
    ds.validate();
    if (spec.n_labels < 0 || spec.n_labels > static_cast<int>(ds.size()))
        throw ParameterError("n_labels out of range");

    RngStream rng(spec.seed);
    std::vector<std::size_t> chosen;

    if (spec.balanced) {
        if (ds.num_classes == 0 || spec.n_labels % ds.num_classes != 0)
            throw ParameterError("balanced split needs n_labels divisible by the class count");
        const int per_class = spec.n_labels / ds.num_classes;
        auto by_class = indices_by_class(ds);
        for (int k = 0; k < ds.num_classes; ++k) {
            auto& pool = by_class[static_cast<std::size_t>(k)];
            if (static_cast<int>(pool.size()) < per_class)
                throw DataError("class " + std::to_string(k) + " has only " +
                                std::to_string(pool.size()) + " examples, need " +
                                std::to_string(per_class));
            shuffle_indices(pool, rng);
            chosen.insert(chosen.end(), pool.begin(), pool.begin() + per_class);
        }
    } else {
        std::vector<std::size_t> all(ds.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        shuffle_indices(all, rng);
        chosen.assign(all.begin(), all.begin() + spec.n_labels);
    }

    std::sort(chosen.begin(), chosen.end());
    std::vector<char> is_labeled(ds.size(), 0);
    for (std::size_t i : chosen) is_labeled[i] = 1;

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (!is_labeled[i]) rest.push_back(i);
    if (spec.include_labeled_in_unlabeled) rest.insert(rest.end(), chosen.begin(), chosen.end());

    return {gather(ds, chosen, ds.name + "/labeled"), gather(ds, rest, ds.name + "/unlabeled")};
}

std::vector<int> long_tail_counts(const LongTailSpec& spec) {
    spec.validate();
    std::vector<int> counts(static_cast<std::size_t>(spec.num_classes));
    for (int k = 1; k <= spec.num_classes; ++k) {
        const double exponent = -static_cast<double>(k - 1) / (spec.num_classes - 1);
        const double nk = spec.head_count * std::pow(spec.lambda_imb, exponent);
        counts[static_cast<std::size_t>(k - 1)] = std::max(1, static_cast<int>(std::lround(nk)));
    }
    return counts;
}

std::pair<Dataset, Dataset> make_long_tail(const Dataset& ds, const LongTailSpec& spec,
                                           std::uint64_t seed) {
    ds.validate();
    if (ds.num_classes != spec.num_classes)
        throw ParameterError("long-tail spec class count does not match dataset");
    const auto counts = long_tail_counts(spec);

    RngStream rng(seed);
    auto by_class = indices_by_class(ds);
    std::vector<std::size_t> labeled_idx, unlabeled_idx;
    for (int k = 0; k < spec.num_classes; ++k) {
        auto& pool = by_class[static_cast<std::size_t>(k)];
        const int want = counts[static_cast<std::size_t>(k)];
        if (static_cast<int>(pool.size()) < want)
            throw DataError("class " + std::to_string(k) + " has only " +
                            std::to_string(pool.size()) + " examples, need " +
                            std::to_string(want));
        shuffle_indices(pool, rng);
        const int n_lab = std::max(1, static_cast<int>(std::lround(spec.beta * want)));
        for (int i = 0; i < want; ++i)
            (i < n_lab ? labeled_idx : unlabeled_idx).push_back(pool[static_cast<std::size_t>(i)]);
    }
    return {gather(ds, labeled_idx, ds.name + "/lt-labeled"),
            gather(ds, unlabeled_idx, ds.name + "/lt-unlabeled")};
}

Image synth_template(int class_index, int num_classes, int side) {
    if (side < 4) throw ParameterError("synthetic images need side >= 4");
    if (class_index < 0 || class_index >= num_classes)
        throw ParameterError("template class out of range");

    constexpr std::uint8_t kBackground = 35;
    constexpr std::uint8_t kForeground = 220;
    Image img(side, side, 1, kBackground);

    // Classes pair a vertical band position with a narrow/wide block so that
    // horizontal flips and one-pixel shifts keep classes apart.
    const int n_bands = (num_classes + 1) / 2;
    const int band = class_index / 2;
    const bool wide = class_index % 2 == 1;

    const int row_c = static_cast<int>(std::lround((band + 0.5) * side / n_bands - 0.5));
    const int half_h = std::max(1, side / (3 * n_bands));
    const int y0 = std::clamp(row_c - half_h + 1, 0, side - 1);
    const int y1 = std::clamp(row_c + half_h, 1, side);

    const int narrow_w = std::max(2, side / 4);
    const int wide_w = std::max(narrow_w + 2, (3 * side) / 4);
    const int w = wide ? wide_w : narrow_w;
    const int x0 = (side - w) / 2;

    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x0 + w; ++x) img.at(y, x, 0) = kForeground;
    return img;
}

Dataset synth_blobs(int num_classes, int per_class, int side, double noise, std::uint64_t seed) {
    if (num_classes < 1) throw ParameterError("need at least one class");
    if (per_class < 0) throw ParameterError("per_class must be >= 0");
    if (noise < 0.0) throw ParameterError("noise must be >= 0");

    Dataset ds;
    ds.num_classes = num_classes;
    ds.name = "synth-blobs";
    const double amplitude = noise * 255.0;
    for (int k = 0; k < num_classes; ++k) {
        const Image base = synth_template(k, num_classes, side);
        for (int i = 0; i < per_class; ++i) {
            RngStream rng(RngStream::mix4(seed, 0xB10B5ULL, static_cast<std::uint64_t>(k),
                                          static_cast<std::uint64_t>(i)));
            Image img = base;
            if (amplitude > 0.0)
                for (auto& p : img.pixels) {
                    const double v = p + rng.next_uniform(-amplitude, amplitude);
                    p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                }
            ds.images.push_back(std::move(img));
            ds.labels.push_back(k);
        }
    }
    return ds;
}

Dataset load_directory(const std::filesystem::path& path) {
    const auto tsv = path / "labels.tsv";
    std::ifstream in(tsv);
    if (!in) throw DataError(tsv.string() + ": cannot open");

    std::string line;
    if (!std::getline(in, line)) throw DataError(tsv.string() + ": missing header line");
    constexpr const char* kHeader = "#classes=";
    if (line.rfind(kHeader, 0) != 0)
        throw DataError(tsv.string() + ": first line must be '#classes=<L>'");
    Dataset ds;
    ds.name = path.filename().string();
    try {
        ds.num_classes = std::stoi(line.substr(std::string(kHeader).size()));
    } catch (const std::exception&) {
        throw DataError(tsv.string() + ": unparseable class count in header");
    }
    if (ds.num_classes < 1) throw DataError(tsv.string() + ": class count must be positive");

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(tsv.string() + ":" + std::to_string(line_no) +
                            ": expected 'filename<TAB>label'");
        const std::string fname = line.substr(0, tab);
        int label = 0;
        try {
            label = std::stoi(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw DataError(tsv.string() + ":" + std::to_string(line_no) + ": bad label for '" +
                            fname + "'");
        }
        if (label < 0 || label >= ds.num_classes)
            throw DataError(tsv.string() + ":" + std::to_string(line_no) + ": label " +
                            std::to_string(label) + " outside [0, " +
                            std::to_string(ds.num_classes) + ") for '" + fname + "'");
        Image img = read_pnm(path / fname);
        if (!ds.images.empty() && !img.same_shape(ds.images.front()))
            throw DataError(path.string() + "/" + fname + ": image shape differs from '" +
                            "first file in the set'");
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
    }
    ds.validate();
    return ds;
}

void save_directory(const Dataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::filesystem::create_directories(path);
    std::ofstream tsv(path / "labels.tsv", std::ios::binary);
    if (!tsv) throw DataError((path / "labels.tsv").string() + ": cannot open for writing");
    tsv << "#classes=" << ds.num_classes << "\n";
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        std::ostringstream name;
        name << "img_" << std::setw(5) << std::setfill('0') << i
             << (ds.images[i].channels == 1 ? ".pgm" : ".ppm");
        write_pnm(ds.images[i], path / name.str());
        tsv << name.str() << "\t" << ds.labels[i] << "\n";
    }
    if (!tsv) throw DataError((path / "labels.tsv").string() + ": write failed");
}

}  // namespace seqlab::data
