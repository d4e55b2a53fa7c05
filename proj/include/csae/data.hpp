// Dataset ingestion (IDX files, gzip accepted transparently), [0,1]
// normalization, nearest-neighbor resizing, and seeded split generation.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "csae/tensor.hpp"

namespace csae {

// byte-valued images straight from disk, 0..255
struct RawDataset {
    Tensor images;            // [n, h, w, 1]
    std::vector<int> labels;  // length n
};

// images normalized for the network, paired with labels
struct LabeledDataset {
    Tensor images;            // [n, h, w, 1] in [0,1]
    std::vector<int> labels;

    int count() const { return images.dim(0); }
};

class IdxError : public std::runtime_error {
public:
    enum class Kind { bad_magic, count_mismatch, truncated, io };

    IdxError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// IDX readers (big-endian headers; images magic 2051, labels magic 2049)
Tensor load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
RawDataset load_idx(const std::string& images_path, const std::string& labels_path);

// byte values scaled to [0,1]
Tensor normalize01(const Tensor& raw);

LabeledDataset to_labeled(const RawDataset& raw);

// out[i,j] = in[floor(i*h/H), floor(j*w/W)]; works on a single [h,w] image
Tensor nn_resize(const Tensor& image, int target_h, int target_w);

// same mapping applied to every image of an [n,h,w,1] batch
Tensor nn_resize_batch(const Tensor& images, int target_h, int target_w);

struct SplitSpec {
    float val_fraction = 0.10f;
    float test_fraction = 0.20f;   // only used when with_test is set
    std::uint32_t seed = 0;
    bool with_test = false;
};

struct Splits {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;  // empty unless requested
};

// seeded permutation split; each fraction gets floor(n*frac) samples and the
// remainder goes to train
Splits split(const LabeledDataset& dataset, const SplitSpec& spec);

// first n samples (used for --subset runs)
LabeledDataset take(const LabeledDataset& dataset, int n);

// row subset by index list
LabeledDataset gather(const LabeledDataset& dataset, const std::vector<int>& indices);

}  // namespace csae
