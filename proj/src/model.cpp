#include "csae/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>

#include "csae/rng.hpp"

namespace csae {

ArchPreset make_preset(const std::string& name, int latent_dim, int num_classes) {
    ArchPreset p;
    p.name = name;
    p.latent_dim = latent_dim;
    p.num_classes = num_classes;
    if (name == "small28") {
        p.conv_filters = {32, 64};
        p.conv_kernels = {3, 3};
        p.input_side = 28;
    } else if (name == "large128") {
        p.conv_filters = {32, 64, 128, 256};
        p.conv_kernels = {5, 5, 3, 3};
        p.input_side = 128;
    } else {
        throw std::invalid_argument("unknown preset '" + name + "' (expected small28 or large128)");
    }
    return p;
}

namespace {

// Glorot-uniform fill; fans follow the [..., in, out] convention, so the
// receptive field is the product of all leading kernel dims
void glorot_fill(Tensor& w, std::mt19937& rng) {
    std::int64_t rf = 1;
    for (int i = 0; i + 2 < w.rank(); ++i) rf *= w.dim(i);
    const double fan_in = static_cast<double>(rf * w.dim(w.rank() - 2));
    const double fan_out = static_cast<double>(rf * w.dim(w.rank() - 1));
    const float limit = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));
    for (std::int64_t i = 0; i < w.size(); ++i)
        w[i] = (2.0f * uniform_float(rng) - 1.0f) * limit;
}

void init_params(Sequential& net, std::mt19937& rng) {
    for (int i = 0; i < net.layer_count(); ++i) {
        const LayerSpec& spec = net.specs[static_cast<std::size_t>(i)];
        if (!spec.has_params()) continue;
        auto& p = net.params[static_cast<std::size_t>(i)];
        glorot_fill(p.w, rng);
        p.init_moments();
    }
}

void add_dense(Sequential& net, int in, int units, const std::string& name) {
    net.add(LayerSpec::dense(units, name));
    auto& p = net.params.back();
    p.w = Tensor({in, units});
    p.b = Tensor({units});
}

void add_conv(Sequential& net, int kernel, int in_ch, int out_ch, const std::string& name) {
    net.add(LayerSpec::conv2d(kernel, out_ch, 2, name));
    auto& p = net.params.back();
    p.w = Tensor({kernel, kernel, in_ch, out_ch});
    p.b = Tensor({out_ch});
}

void add_tconv(Sequential& net, int kernel, int in_ch, int out_ch, const std::string& name) {
    net.add(LayerSpec::conv2d_transpose(kernel, out_ch, 2, name));
    auto& p = net.params.back();
    p.w = Tensor({kernel, kernel, out_ch, in_ch});
    p.b = Tensor({out_ch});
}

}  // namespace

CsaeModel build_csae(const ArchPreset& preset, std::uint32_t seed) {
    if (preset.latent_dim < 1) throw std::invalid_argument("build_csae: latent_dim must be >= 1");
    if (preset.num_classes < 2) throw std::invalid_argument("build_csae: num_classes must be >= 2");
    if (preset.input_side != 28 && preset.input_side != 128)
        throw std::invalid_argument("build_csae: unsupported input side " +
                                    std::to_string(preset.input_side));

    CsaeModel m;
    m.preset = preset;
    const int nconv = static_cast<int>(preset.conv_filters.size());

    // encoder: conv stack -> flatten -> 128 -> 128 -> lambda (linear)
    int ch = 1;
    for (int i = 0; i < nconv; ++i) {
        add_conv(m.encoder, preset.conv_kernels[static_cast<std::size_t>(i)], ch,
                 preset.conv_filters[static_cast<std::size_t>(i)],
                 "enc.conv" + std::to_string(i));
        m.encoder.add(LayerSpec::activation(LayerKind::relu));
        ch = preset.conv_filters[static_cast<std::size_t>(i)];
    }
    m.encoder.add(LayerSpec::flatten());
    const int flat = m.flatten_size();
    add_dense(m.encoder, flat, 128, "enc.fc0");
    m.encoder.add(LayerSpec::activation(LayerKind::relu));
    add_dense(m.encoder, 128, 128, "enc.fc1");
    m.encoder.add(LayerSpec::activation(LayerKind::relu));
    add_dense(m.encoder, 128, preset.latent_dim, "enc.fc2");

    // decoder mirrors the encoder: 128 -> 128 -> flatten size -> reshape ->
    // transposed conv stack, sigmoid output
    add_dense(m.decoder, preset.latent_dim, 128, "dec.fc0");
    m.decoder.add(LayerSpec::activation(LayerKind::relu));
    add_dense(m.decoder, 128, 128, "dec.fc1");
    m.decoder.add(LayerSpec::activation(LayerKind::relu));
    add_dense(m.decoder, 128, flat, "dec.fc2");
    m.decoder.add(LayerSpec::activation(LayerKind::relu));
    const int side = m.conv_out_side();
    m.decoder.add(LayerSpec::reshape(side, side, preset.conv_filters.back()));
    for (int j = 0; j < nconv; ++j) {
        const int enc_idx = nconv - 1 - j;  // encoder conv this layer inverts
        const int in_ch = preset.conv_filters[static_cast<std::size_t>(enc_idx)];
        const int out_ch =
            enc_idx > 0 ? preset.conv_filters[static_cast<std::size_t>(enc_idx - 1)] : 1;
        add_tconv(m.decoder, preset.conv_kernels[static_cast<std::size_t>(enc_idx)], in_ch, out_ch,
                  "dec.tconv" + std::to_string(j));
        m.decoder.add(LayerSpec::activation(j + 1 < nconv ? LayerKind::relu : LayerKind::sigmoid));
    }

    // classifier head on the latent code
    add_dense(m.classifier, preset.latent_dim, 128, "cls.fc0");
    m.classifier.add(LayerSpec::activation(LayerKind::relu));
    add_dense(m.classifier, 128, 128, "cls.fc1");
    m.classifier.add(LayerSpec::activation(LayerKind::relu));
    add_dense(m.classifier, 128, preset.num_classes, "cls.out");
    m.classifier.add(LayerSpec::activation(LayerKind::softmax));

    std::mt19937 rng(seed);
    init_params(m.encoder, rng);
    init_params(m.decoder, rng);
    init_params(m.classifier, rng);
    return m;
}

std::int64_t parameter_count(const CsaeModel& model) {
    std::int64_t n = 0;
    for (const Sequential* net : {&model.encoder, &model.decoder, &model.classifier})
        for (const auto& p : net->params) n += p.w.size() + p.b.size();
    return n;
}

namespace {

void check_images(const CsaeModel& model, const Tensor& images) {
    if (images.rank() != 4 || images.dim(1) != model.preset.input_side ||
        images.dim(2) != model.preset.input_side || images.dim(3) != 1)
        throw std::invalid_argument("expected images [b," +
                                    std::to_string(model.preset.input_side) + "," +
                                    std::to_string(model.preset.input_side) + ",1], got " +
                                    images.shape_string());
}

void check_latent(const CsaeModel& model, const Tensor& z) {
    if (z.rank() != 2 || z.dim(1) != model.preset.latent_dim)
        throw std::invalid_argument("expected latent codes [b," +
                                    std::to_string(model.preset.latent_dim) + "], got " +
                                    z.shape_string());
}

}  // namespace

Tensor encode(const CsaeModel& model, const Tensor& images) {
    check_images(model, images);
    return seq_forward(model.encoder, images);
}

Tensor decode(const CsaeModel& model, const Tensor& z) {
    check_latent(model, z);
    return seq_forward(model.decoder, z);
}

Tensor classify(const CsaeModel& model, const Tensor& images) {
    return classify_latent(model, encode(model, images));
}

Tensor classify_latent(const CsaeModel& model, const Tensor& z) {
    check_latent(model, z);
    return seq_forward(model.classifier, z);
}

// ------------------------------------------------------------ checkpoint ---

namespace {

constexpr char kMagic[4] = {'C', 'S', 'A', 'E'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, 8);
}

void put_f32(std::ostream& os, float f) { put_u32(os, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::istream& is) {
    unsigned char buf[4];
    if (!is.read(reinterpret_cast<char*>(buf), 4))
        throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8))
        throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

// canonical (name, tensor) listing; mutable variant used when loading
template <typename Model, typename Fn>
void for_each_param_tensor(Model& model, Fn&& fn) {
    for (auto* net : {&model.encoder, &model.decoder, &model.classifier}) {
        for (int i = 0; i < net->layer_count(); ++i) {
            auto& spec = net->specs[static_cast<std::size_t>(i)];
            if (!spec.has_params()) continue;
            auto& p = net->params[static_cast<std::size_t>(i)];
            fn(spec.name + ".w", p.w);
            fn(spec.name + ".b", p.b);
        }
    }
}

}  // namespace

void save_checkpoint(const CsaeModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    std::uint32_t count = 0;
    for_each_param_tensor(model, [&](const std::string&, const Tensor&) { ++count; });
    put_u32(os, count);
    for_each_param_tensor(model, [&](const std::string& name, const Tensor& t) {
        put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (int d = 0; d < t.rank(); ++d) put_u64(os, static_cast<std::uint64_t>(t.dim(d)));
        for (std::int64_t i = 0; i < t.size(); ++i) put_f32(os, t[i]);
    });
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

CsaeModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[4];
    if (!is.read(magic, 4))
        throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint shorter than header");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError(CheckpointError::Kind::bad_magic, "bad magic bytes in " + path);
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw CheckpointError(CheckpointError::Kind::version_mismatch,
                              "unsupported checkpoint version " + std::to_string(version));

    const std::uint32_t count = get_u32(is);
    std::map<std::string, Tensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = get_u32(is);
        if (name_len == 0 || name_len > 256)
            throw CheckpointError(CheckpointError::Kind::malformed, "implausible tensor name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint truncated in name");
        const std::uint32_t rank = get_u32(is);
        if (rank == 0 || rank > 8)
            throw CheckpointError(CheckpointError::Kind::malformed, "implausible tensor rank");
        std::vector<int> dims(rank);
        std::int64_t n = 1;
        for (auto& d : dims) {
            const std::uint64_t v = get_u64(is);
            if (v == 0 || v > (1u << 30))
                throw CheckpointError(CheckpointError::Kind::malformed, "implausible dimension");
            d = static_cast<int>(v);
            n *= d;
        }
        std::vector<float> data(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            data[static_cast<std::size_t>(i)] = std::bit_cast<float>(get_u32(is));
        tensors.emplace(std::move(name), Tensor(std::move(dims), std::move(data)));
    }

    // the architecture is recoverable from the stored tensors: the conv-layer
    // count picks the preset, fc shapes give lambda and the class count
    int nconv = 0;
    while (tensors.count("enc.conv" + std::to_string(nconv) + ".w")) ++nconv;
    const char* preset_name = nconv == 2 ? "small28" : nconv == 4 ? "large128" : nullptr;
    if (!preset_name)
        throw CheckpointError(CheckpointError::Kind::malformed,
                              "unrecognized architecture: " + std::to_string(nconv) +
                                  " encoder conv layers");
    auto fc2 = tensors.find("enc.fc2.w");
    auto out = tensors.find("cls.out.w");
    if (fc2 == tensors.end() || out == tensors.end() || fc2->second.rank() != 2 ||
        out->second.rank() != 2)
        throw CheckpointError(CheckpointError::Kind::malformed, "missing architecture tensors");

    CsaeModel model = build_csae(
        make_preset(preset_name, fc2->second.dim(1), out->second.dim(1)), /*seed=*/0);

    std::size_t used = 0;
    for_each_param_tensor(model, [&](const std::string& name, Tensor& dst) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw CheckpointError(CheckpointError::Kind::malformed, "missing tensor " + name);
        if (!(it->second.shape() == dst.shape()))
            throw CheckpointError(CheckpointError::Kind::malformed,
                                  "tensor " + name + " has shape " + it->second.shape_string() +
                                      ", expected " + dst.shape_string());
        dst = it->second;
        ++used;
    });
    if (used != tensors.size())
        throw CheckpointError(CheckpointError::Kind::malformed, "checkpoint holds unexpected tensors");
    return model;
}

}  // namespace csae
