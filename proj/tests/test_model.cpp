#include <cstdio>
#include <fstream>
#include <random>

#include "csae/model.hpp"
#include "csae/rng.hpp"
#include "doctest.h"

using namespace csae;

namespace {

Tensor random_images(int n, int side, std::mt19937& rng) {
    Tensor x({n, side, side, 1});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = uniform_float(rng);
    return x;
}

CsaeModel zero_weight_model(int lambda, int classes) {
    CsaeModel m = build_csae(make_preset("small28", lambda, classes), 1);
    for (Sequential* net : {&m.encoder, &m.decoder, &m.classifier})
        for (auto& p : net->params)
            for (std::int64_t i = 0; i < p.w.size(); ++i) p.w[i] = 0.0f;
    return m;
}

CheckpointError::Kind load_error_kind(const std::string& path) {
    try {
        load_checkpoint(path);
    } catch (const CheckpointError& e) {
        return e.kind();
    }
    FAIL("expected a CheckpointError");
    return CheckpointError::Kind::malformed;
}

}  // namespace

TEST_CASE("small28 preset shape arithmetic and parameter count") {
    const CsaeModel m = build_csae(make_preset("small28", 10, 10), 42);
    CHECK(m.conv_out_side() == 7);              // 28 -> 14 -> 7
    CHECK(m.flatten_size() == 7 * 7 * 64);

    // independent hand count of every weight and bias tensor
    const std::int64_t expected =
        (3 * 3 * 1 * 32 + 32) + (3 * 3 * 32 * 64 + 64) +              // enc convs
        (3136 * 128 + 128) + (128 * 128 + 128) + (128 * 10 + 10) +    // enc fcs
        (10 * 128 + 128) + (128 * 128 + 128) + (128 * 3136 + 3136) +  // dec fcs
        (3 * 3 * 32 * 64 + 32) + (3 * 3 * 1 * 32 + 1) +               // dec tconvs
        (10 * 128 + 128) + (128 * 128 + 128) + (128 * 10 + 10);       // classifier
    CHECK(parameter_count(m) == expected);
}

TEST_CASE("large128 preset chain") {
    const CsaeModel m = build_csae(make_preset("large128", 2, 3), 0);
    CHECK(m.conv_out_side() == 8);              // 128 -> 64 -> 32 -> 16 -> 8
    CHECK(m.flatten_size() == 8 * 8 * 256);
    CHECK(m.preset.conv_kernels == std::vector<int>{5, 5, 3, 3});

    // decoder transposed convs mirror the encoder: channels reversed, the
    // final one lands back on 1 channel
    std::vector<int> enc_filters, dec_filters, dec_kernels;
    for (const auto& s : m.encoder.specs)
        if (s.kind == LayerKind::conv2d) enc_filters.push_back(s.filters);
    for (const auto& s : m.decoder.specs)
        if (s.kind == LayerKind::conv2d_transpose) {
            dec_filters.push_back(s.filters);
            dec_kernels.push_back(s.kernel_h);
        }
    CHECK(enc_filters == std::vector<int>{32, 64, 128, 256});
    CHECK(dec_filters == std::vector<int>{128, 64, 32, 1});
    CHECK(dec_kernels == std::vector<int>{3, 3, 5, 5});
}

TEST_CASE("same seed builds the identical model") {
    const CsaeModel a = build_csae(make_preset("small28", 4, 5), 7);
    const CsaeModel b = build_csae(make_preset("small28", 4, 5), 7);
    const CsaeModel c = build_csae(make_preset("small28", 4, 5), 8);

    bool all_equal = true, any_diff_from_c = false;
    for (std::size_t n = 0; n < a.encoder.params.size(); ++n) {
        all_equal = all_equal &&
                    a.encoder.params[n].w.values() == b.encoder.params[n].w.values();
        any_diff_from_c = any_diff_from_c ||
                          a.encoder.params[n].w.values() != c.encoder.params[n].w.values();
    }
    CHECK(all_equal);
    CHECK(any_diff_from_c);
}

TEST_CASE("build_csae input validation") {
    CHECK_THROWS_AS(make_preset("tiny", 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_csae(make_preset("small28", 0, 10), 0), std::invalid_argument);
    CHECK_THROWS_AS(build_csae(make_preset("small28", 2, 1), 0), std::invalid_argument);
    ArchPreset odd = make_preset("small28", 2, 2);
    odd.input_side = 32;
    CHECK_THROWS_AS(build_csae(odd, 0), std::invalid_argument);
}

TEST_CASE("encode shape, determinism and the zero-image oracle") {
    const CsaeModel m = build_csae(make_preset("small28", 6, 10), 3);
    std::mt19937 rng(9);
    const Tensor x = random_images(4, 28, rng);

    const Tensor z1 = encode(m, x);
    const Tensor z2 = encode(m, x);
    CHECK(z1.shape() == std::vector<int>{4, 6});
    CHECK(z1.values() == z2.values());

    // all-zero image through zero biases: every pre-activation is zero, so
    // the latent code is exactly zero
    const Tensor z0 = encode(m, Tensor({2, 28, 28, 1}));
    for (std::int64_t i = 0; i < z0.size(); ++i) CHECK(z0[i] == 0.0f);

    CHECK_THROWS_AS(encode(m, Tensor({1, 27, 27, 1})), std::invalid_argument);
}

TEST_CASE("decode range and the zero-weight oracle") {
    const CsaeModel m = build_csae(make_preset("small28", 3, 10), 5);
    std::mt19937 rng(2);
    Tensor z({5, 3});
    for (std::int64_t i = 0; i < z.size(); ++i) z[i] = 6.0f * uniform_float(rng) - 3.0f;

    const Tensor x_hat = decode(m, z);
    CHECK(x_hat.shape() == std::vector<int>{5, 28, 28, 1});
    for (std::int64_t i = 0; i < x_hat.size(); ++i) {
        CHECK(x_hat[i] > 0.0f);
        CHECK(x_hat[i] < 1.0f);
    }

    const CsaeModel zero = zero_weight_model(3, 10);
    const Tensor flat = decode(zero, z);
    for (std::int64_t i = 0; i < flat.size(); ++i) CHECK(flat[i] == 0.5f);

    CHECK_THROWS_AS(decode(m, Tensor({2, 4})), std::invalid_argument);
}

TEST_CASE("classify is softmax over the latent-only head") {
    const CsaeModel m = build_csae(make_preset("small28", 5, 7), 11);
    std::mt19937 rng(13);
    const Tensor x = random_images(3, 28, rng);

    const Tensor probs = classify(m, x);
    REQUIRE(probs.shape() == std::vector<int>{3, 7});
    for (int b = 0; b < 3; ++b) {
        float sum = 0.0f;
        for (int j = 0; j < 7; ++j) sum += probs.at2(b, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }

    // identical to running the head on the latent code
    const Tensor via_latent = classify_latent(m, encode(m, x));
    CHECK(probs.values() == via_latent.values());

    // zero weights give the uniform distribution
    const Tensor uniform = classify(zero_weight_model(5, 7), x);
    for (std::int64_t i = 0; i < uniform.size(); ++i)
        CHECK(uniform[i] == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("checkpoint round-trip is bitwise lossless") {
    const std::string path = "ckpt_roundtrip.bin";
    const CsaeModel m = build_csae(make_preset("small28", 4, 6), 77);
    save_checkpoint(m, path);
    const CsaeModel loaded = load_checkpoint(path);

    CHECK(loaded.preset.name == "small28");
    CHECK(loaded.preset.latent_dim == 4);
    CHECK(loaded.preset.num_classes == 6);

    std::mt19937 rng(1);
    const Tensor x = random_images(2, 28, rng);
    CHECK(encode(m, x).values() == encode(loaded, x).values());
    CHECK(classify(m, x).values() == classify(loaded, x).values());
    const Tensor z = encode(m, x);
    CHECK(decode(m, z).values() == decode(loaded, z).values());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint corruption raises distinct error kinds") {
    const std::string path = "ckpt_corrupt.bin";
    const CsaeModel m = build_csae(make_preset("small28", 2, 3), 123);
    save_checkpoint(m, path);

    std::ifstream is(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), {});
    is.close();

    SUBCASE("bad magic") {
        auto broken = bytes;
        broken[0] = 'X';
        std::ofstream(path, std::ios::binary).write(broken.data(), static_cast<std::streamsize>(broken.size()));
        CHECK(load_error_kind(path) == CheckpointError::Kind::bad_magic);
    }
    SUBCASE("version mismatch") {
        auto broken = bytes;
        broken[4] = 9;
        std::ofstream(path, std::ios::binary).write(broken.data(), static_cast<std::streamsize>(broken.size()));
        CHECK(load_error_kind(path) == CheckpointError::Kind::version_mismatch);
    }
    SUBCASE("truncated mid-tensor") {
        std::ofstream(path, std::ios::binary)
            .write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        CHECK(load_error_kind(path) == CheckpointError::Kind::truncated);
    }
    std::remove(path.c_str());
}
