#include "csae/data.hpp"

#include <zlib.h>

#include <random>

#include "csae/rng.hpp"

namespace csae {

namespace {

// whole file through zlib's gz layer, which passes plain files through
// unchanged; so .gz and uncompressed IDX files both work here
std::vector<unsigned char> read_file_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IdxError(IdxError::Kind::io, "cannot open " + path);
    std::vector<unsigned char> out;
    unsigned char buf[1 << 16];
    int got;
    while ((got = gzread(f, buf, sizeof(buf))) > 0)
        out.insert(out.end(), buf, buf + got);
    const bool failed = got < 0;
    gzclose(f);
    if (failed) throw IdxError(IdxError::Kind::io, "read error on " + path);
    return out;
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

constexpr std::uint32_t kImagesMagic = 2051;  // 0x00000803
constexpr std::uint32_t kLabelsMagic = 2049;  // 0x00000801

}  // namespace

Tensor load_idx_images(const std::string& path) {
    const auto bytes = read_file_maybe_gz(path);
    if (bytes.size() < 4) throw IdxError(IdxError::Kind::truncated, path + ": no header");
    if (be32(bytes.data()) != kImagesMagic)
        throw IdxError(IdxError::Kind::bad_magic,
                       path + ": bad magic " + std::to_string(be32(bytes.data())) +
                           " (expected 2051 for an IDX image file)");
    if (bytes.size() < 16) throw IdxError(IdxError::Kind::truncated, path + ": header truncated");
    const int n = static_cast<int>(be32(bytes.data() + 4));
    const int h = static_cast<int>(be32(bytes.data() + 8));
    const int w = static_cast<int>(be32(bytes.data() + 12));
    const std::size_t expected = 16 + static_cast<std::size_t>(n) * h * w;
    if (bytes.size() < expected)
        throw IdxError(IdxError::Kind::truncated,
                       path + ": expected " + std::to_string(expected) + " bytes, got " +
                           std::to_string(bytes.size()));
    Tensor images({n, h, w, 1});
    for (std::int64_t i = 0; i < images.size(); ++i)
        images[i] = static_cast<float>(bytes[16 + static_cast<std::size_t>(i)]);
    return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
    const auto bytes = read_file_maybe_gz(path);
    if (bytes.size() < 4) throw IdxError(IdxError::Kind::truncated, path + ": no header");
    if (be32(bytes.data()) != kLabelsMagic)
        throw IdxError(IdxError::Kind::bad_magic,
                       path + ": bad magic " + std::to_string(be32(bytes.data())) +
                           " (expected 2049 for an IDX label file)");
    if (bytes.size() < 8) throw IdxError(IdxError::Kind::truncated, path + ": header truncated");
    const std::size_t n = be32(bytes.data() + 4);
    if (bytes.size() < 8 + n)
        throw IdxError(IdxError::Kind::truncated, path + ": label data truncated");
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = bytes[8 + i];
    return labels;
}

RawDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    RawDataset raw;
    raw.images = load_idx_images(images_path);
    raw.labels = load_idx_labels(labels_path);
    if (raw.images.dim(0) != static_cast<int>(raw.labels.size()))
        throw IdxError(IdxError::Kind::count_mismatch,
                       "image/label count mismatch: " + std::to_string(raw.images.dim(0)) +
                           " images vs " + std::to_string(raw.labels.size()) + " labels");
    return raw;
}

Tensor normalize01(const Tensor& raw) {
    Tensor out = raw;
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] *= (1.0f / 255.0f);
    return out;
}

LabeledDataset to_labeled(const RawDataset& raw) {
    return LabeledDataset{normalize01(raw.images), raw.labels};
}

Tensor nn_resize(const Tensor& image, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1)
        throw std::invalid_argument("nn_resize: target dimensions must be positive");
    if (image.rank() != 2) throw std::invalid_argument("nn_resize: expected a rank-2 image");
    const int h = image.dim(0), w = image.dim(1);
    Tensor out({target_h, target_w});
    for (int i = 0; i < target_h; ++i) {
        const int si = static_cast<int>(static_cast<std::int64_t>(i) * h / target_h);
        for (int j = 0; j < target_w; ++j) {
            const int sj = static_cast<int>(static_cast<std::int64_t>(j) * w / target_w);
            out.at2(i, j) = image.at2(si, sj);
        }
    }
    return out;
}

Tensor nn_resize_batch(const Tensor& images, int target_h, int target_w) {
    if (images.rank() != 4) throw std::invalid_argument("nn_resize_batch: expected [n,h,w,1]");
    const int n = images.dim(0), h = images.dim(1), w = images.dim(2);
    Tensor out({n, target_h, target_w, 1});
    for (int b = 0; b < n; ++b) {
        for (int i = 0; i < target_h; ++i) {
            const int si = static_cast<int>(static_cast<std::int64_t>(i) * h / target_h);
            for (int j = 0; j < target_w; ++j) {
                const int sj = static_cast<int>(static_cast<std::int64_t>(j) * w / target_w);
                out.at4(b, i, j, 0) = images.at4(b, si, sj, 0);
            }
        }
    }
    return out;
}

LabeledDataset gather(const LabeledDataset& dataset, const std::vector<int>& indices) {
    const int h = dataset.images.dim(1), w = dataset.images.dim(2);
    const std::int64_t px = static_cast<std::int64_t>(h) * w;
    LabeledDataset out;
    out.images = Tensor({static_cast<int>(indices.size()), h, w, 1});
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int src = indices[i];
        std::copy(dataset.images.data() + src * px, dataset.images.data() + (src + 1) * px,
                  out.images.data() + static_cast<std::int64_t>(i) * px);
        out.labels[i] = dataset.labels[static_cast<std::size_t>(src)];
    }
    return out;
}

LabeledDataset take(const LabeledDataset& dataset, int n) {
    n = std::min(n, dataset.count());
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    return gather(dataset, idx);
}

Splits split(const LabeledDataset& dataset, const SplitSpec& spec) {
    if (spec.val_fraction <= 0.0f || spec.val_fraction >= 1.0f)
        throw std::invalid_argument("split: val_fraction must be in (0,1)");
    const int n = dataset.count();
    const int n_val = static_cast<int>(n * spec.val_fraction);
    const int n_test = spec.with_test ? static_cast<int>(n * spec.test_fraction) : 0;
    const int n_train = n - n_val - n_test;
    if (n_val < 1 || n_train < 1 || (spec.with_test && n_test < 1))
        throw std::invalid_argument("split: a part would be empty for n=" + std::to_string(n));

    std::mt19937 rng(spec.seed);
    const std::vector<int> order = shuffled_indices(n, rng);

    Splits out;
    out.train = gather(dataset, {order.begin(), order.begin() + n_train});
    out.val = gather(dataset, {order.begin() + n_train, order.begin() + n_train + n_val});
    if (spec.with_test)
        out.test = gather(dataset, {order.begin() + n_train + n_val, order.end()});
    return out;
}

}  // namespace csae
