#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "csae/rng.hpp"
#include "csae/viz.hpp"
#include "doctest.h"

using namespace csae;

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), {}};
}

CsaeModel lambda2_model(std::uint32_t seed = 10) {
    return build_csae(make_preset("small28", 2, 4), seed);
}

}  // namespace

TEST_CASE("ppm and pgm writers") {
    const std::vector<std::uint8_t> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255, 9, 9, 9};
    write_ppm("tiny.ppm", 2, 2, rgb);
    const auto ppm = slurp("tiny.ppm");
    const std::string header(ppm.begin(), ppm.begin() + 11);
    CHECK(header == "P6\n2 2\n255\n");
    CHECK(ppm.size() == 11 + 12);
    CHECK(ppm[11] == 255);

    write_pgm("tiny.pgm", 3, 1, {0, 128, 255});
    const auto pgm = slurp("tiny.pgm");
    CHECK(std::string(pgm.begin(), pgm.begin() + 11) == "P5\n3 1\n255\n");
    CHECK(pgm.back() == 255);

    CHECK_THROWS_AS(write_ppm("bad.ppm", 2, 2, {1, 2, 3}), std::invalid_argument);
    std::remove("tiny.ppm");
    std::remove("tiny.pgm");
}

TEST_CASE("grid derivation adds a 10 percent margin") {
    const Tensor z({2, 2}, {-1.0f, 0.0f, 1.0f, 4.0f});
    const GridSpec g = grid_from_latents(z, 0.10, 100);
    CHECK(g.x_min == doctest::Approx(-1.2));
    CHECK(g.x_max == doctest::Approx(1.2));
    CHECK(g.y_min == doctest::Approx(-0.4));
    CHECK(g.y_max == doctest::Approx(4.4));

    CHECK_THROWS_AS(grid_from_latents(Tensor({2, 3}), 0.1, 10), std::invalid_argument);
}

TEST_CASE("decision boundary render is deterministic and class-consistent") {
    const CsaeModel model = lambda2_model();
    GridSpec grid;
    grid.x_min = -2.0;
    grid.x_max = 2.0;
    grid.y_min = -2.0;
    grid.y_max = 2.0;
    grid.resolution = 32;

    const auto a = render_decision_boundary(model, grid);
    const auto b = render_decision_boundary(model, grid);
    CHECK(a == b);
    CHECK(a.size() == 32u * 32u * 3u);

    // probe: the pixel at a grid-center point carries that point's
    // predicted class color
    const auto& palette = class_palette();
    const double sx = (grid.x_max - grid.x_min) / grid.resolution;
    const double sy = (grid.y_max - grid.y_min) / grid.resolution;
    std::mt19937 rng(3);
    for (int probe = 0; probe < 10; ++probe) {
        const int row = static_cast<int>(uniform_index(rng, 32));
        const int col = static_cast<int>(uniform_index(rng, 32));
        Tensor point({1, 2});
        point[0] = static_cast<float>(grid.x_min + (col + 0.5) * sx);
        point[1] = static_cast<float>(grid.y_max - (row + 0.5) * sy);
        const int cls = argmax_rows(classify_latent(model, point))[0];
        const std::size_t at = (static_cast<std::size_t>(row) * 32 + col) * 3;
        CHECK(a[at] == palette[static_cast<std::size_t>(cls % 10)][0]);
        CHECK(a[at + 1] == palette[static_cast<std::size_t>(cls % 10)][1]);
        CHECK(a[at + 2] == palette[static_cast<std::size_t>(cls % 10)][2]);
    }
}

TEST_CASE("decision boundary image requires lambda == 2") {
    const CsaeModel wide = build_csae(make_preset("small28", 10, 4), 0);
    GridSpec grid;
    grid.resolution = 8;
    CHECK_THROWS_AS(decision_boundary_image(wide, Tensor({3, 10}), grid, "nope.ppm"),
                    std::invalid_argument);
}

TEST_CASE("decoder grid mosaic dimensions and determinism") {
    const CsaeModel model = lambda2_model(4);
    GridSpec grid;
    grid.x_min = -1.0;
    grid.x_max = 1.0;
    grid.y_min = -1.0;
    grid.y_max = 1.0;
    grid.resolution = 4;

    const auto mosaic = render_decoder_grid(model, grid, 28);
    CHECK(mosaic.size() == 4u * 28u * 4u * 28u);
    CHECK(mosaic == render_decoder_grid(model, grid, 28));

    decoder_grid_image(model, grid, 28, "mosaic.pgm");
    const auto file = slurp("mosaic.pgm");
    CHECK(std::string(file.begin(), file.begin() + 15) == "P5\n112 112\n255\n");
    CHECK(file.size() == 15 + mosaic.size());
    std::remove("mosaic.pgm");

    // tiles can be resized
    CHECK(render_decoder_grid(model, grid, 10).size() == 40u * 40u);
}

TEST_CASE("latent scatter export") {
    const CsaeModel model = lambda2_model(6);
    std::mt19937 rng(12);
    LabeledDataset ds;
    ds.images = Tensor({9, 28, 28, 1});
    for (std::int64_t i = 0; i < ds.images.size(); ++i) ds.images[i] = uniform_float(rng);
    ds.labels = {0, 1, 2, 3, 0, 1, 2, 3, 0};

    export_latent_scatter(model, ds, "scatter.csv");
    std::ifstream is("scatter.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "x0,x1,true_label,predicted_label");

    const Tensor z = encode(model, ds.images);
    const std::vector<int> pred = argmax_rows(classify_latent(model, z));
    int rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string x0, x1, t, p;
        std::getline(ss, x0, ',');
        std::getline(ss, x1, ',');
        std::getline(ss, t, ',');
        std::getline(ss, p, ',');
        CHECK(std::stof(x0) == z.at2(rows, 0));
        CHECK(std::stof(x1) == z.at2(rows, 1));
        CHECK(std::stoi(t) == ds.labels[static_cast<std::size_t>(rows)]);
        CHECK(std::stoi(p) == pred[static_cast<std::size_t>(rows)]);
        ++rows;
    }
    CHECK(rows == 9);
    std::remove("scatter.csv");

    // lambda > 2 exports raw coordinates behind a note
    const CsaeModel wide = build_csae(make_preset("small28", 5, 4), 2);
    export_latent_scatter(wide, ds, "scatter5.csv");
    std::ifstream is5("scatter5.csv");
    std::getline(is5, header);
    CHECK(header.rfind("#", 0) == 0);
    std::getline(is5, header);
    CHECK(header == "x0,x1,x2,x3,x4,true_label,predicted_label");
    std::remove("scatter5.csv");
}
