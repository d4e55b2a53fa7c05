// The CSAE model: encoder + decoder + classifier head built from one of the
// two architecture presets, with forward passes and checkpoint persistence.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "csae/layers.hpp"
#include "csae/tensor.hpp"

namespace csae {

struct ArchPreset {
    std::string name;               // "small28" or "large128"
    std::vector<int> conv_filters;
    std::vector<int> conv_kernels;
    int input_side = 28;
    int latent_dim = 2;             // lambda
    int num_classes = 10;
};

// the two supported presets: small28 (2 conv layers, 3x3, 32/64 filters) and
// large128 (4 conv layers, 5x5/5x5/3x3/3x3, 32/64/128/256 filters)
ArchPreset make_preset(const std::string& name, int latent_dim, int num_classes);

struct CsaeModel {
    Sequential encoder;
    Sequential decoder;
    Sequential classifier;
    ArchPreset preset;

    // spatial side after the conv stack (each stride-2 layer halves it)
    int conv_out_side() const {
        int side = preset.input_side;
        for (std::size_t i = 0; i < preset.conv_filters.size(); ++i) side = (side + 1) / 2;
        return side;
    }
    int flatten_size() const {
        return conv_out_side() * conv_out_side() * preset.conv_filters.back();
    }
};

// Glorot-uniform weights from the seeded generator, zero biases; the same
// seed reproduces the model bitwise
CsaeModel build_csae(const ArchPreset& preset, std::uint32_t seed);

std::int64_t parameter_count(const CsaeModel& model);

// images [b, side, side, 1] -> latent codes [b, lambda]
Tensor encode(const CsaeModel& model, const Tensor& images);

// latent codes [b, lambda] -> reconstructions [b, side, side, 1] in (0,1)
Tensor decode(const CsaeModel& model, const Tensor& z);

// images -> class probabilities [b, k]; the classifier head sees only the
// latent code
Tensor classify(const CsaeModel& model, const Tensor& images);

// classifier head alone on latent codes [b, lambda] -> probabilities [b, k]
Tensor classify_latent(const CsaeModel& model, const Tensor& z);

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { bad_magic, version_mismatch, truncated, malformed };

    CheckpointError(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// binary "CSAE1" checkpoint: magic "CSAE", u32 version, u32 tensor count,
// then per tensor: u32 name length, name, u32 rank, rank x u64 dims, f32
// values; all integers and floats little-endian
void save_checkpoint(const CsaeModel& model, const std::string& path);
CsaeModel load_checkpoint(const std::string& path);

}  // namespace csae
