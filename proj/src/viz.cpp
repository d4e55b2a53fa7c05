#include "csae/viz.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace csae {

GridSpec grid_from_latents(const Tensor& z, double margin, int resolution) {
    if (z.rank() != 2 || z.dim(1) != 2)
        throw std::invalid_argument("grid_from_latents: expected [n,2] latents");
    GridSpec g;
    g.resolution = resolution;
    g.x_min = g.x_max = z.at2(0, 0);
    g.y_min = g.y_max = z.at2(0, 1);
    for (int i = 0; i < z.dim(0); ++i) {
        g.x_min = std::min(g.x_min, static_cast<double>(z.at2(i, 0)));
        g.x_max = std::max(g.x_max, static_cast<double>(z.at2(i, 0)));
        g.y_min = std::min(g.y_min, static_cast<double>(z.at2(i, 1)));
        g.y_max = std::max(g.y_max, static_cast<double>(z.at2(i, 1)));
    }
    const double dx = (g.x_max - g.x_min) * margin, dy = (g.y_max - g.y_min) * margin;
    g.x_min -= dx;
    g.x_max += dx;
    g.y_min -= dy;
    g.y_max += dy;
    if (!(g.x_max > g.x_min)) {  // degenerate spread still needs a finite box
        g.x_min -= 0.5;
        g.x_max += 0.5;
    }
    if (!(g.y_max > g.y_min)) {
        g.y_min -= 0.5;
        g.y_max += 0.5;
    }
    return g;
}

const std::array<std::array<std::uint8_t, 3>, 10>& class_palette() {
    static const std::array<std::array<std::uint8_t, 3>, 10> palette = {{
        {31, 119, 180},
        {255, 127, 14},
        {44, 160, 44},
        {214, 39, 40},
        {148, 103, 189},
        {140, 86, 75},
        {227, 119, 194},
        {127, 127, 127},
        {188, 189, 34},
        {23, 190, 207},
    }};
    return palette;
}

void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw std::invalid_argument("write_ppm: buffer size does not match dimensions");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "P6\n" << width << " " << height << "\n255\n";
    os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_pgm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& gray) {
    if (gray.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_pgm: buffer size does not match dimensions");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "P5\n" << width << " " << height << "\n255\n";
    os.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

void export_latent_scatter(const CsaeModel& model, const LabeledDataset& dataset,
                           const std::string& path) {
    constexpr int kBatch = 256;
    const int n = dataset.count();
    const int d = model.preset.latent_dim;

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    if (d > 2)
        os << "# raw " << d << "-dimensional latent coordinates; apply external dimensionality "
              "reduction for 2-d plots\n";
    for (int j = 0; j < d; ++j) os << "x" << j << ",";
    os << "true_label,predicted_label\n";

    char buf[48];
    for (int start = 0; start < n; start += kBatch) {
        const int end = std::min(n, start + kBatch);
        std::vector<int> idx(static_cast<std::size_t>(end - start));
        for (int i = start; i < end; ++i) idx[static_cast<std::size_t>(i - start)] = i;
        const LabeledDataset part = gather(dataset, idx);
        const Tensor z = encode(model, part.images);
        const std::vector<int> pred = argmax_rows(classify_latent(model, z));
        for (int i = 0; i < end - start; ++i) {
            for (int j = 0; j < d; ++j) {
                std::snprintf(buf, sizeof(buf), "%.9g,", static_cast<double>(z.at2(i, j)));
                os << buf;
            }
            os << part.labels[static_cast<std::size_t>(i)] << ","
               << pred[static_cast<std::size_t>(i)] << "\n";
        }
    }
}

namespace {

void require_lambda2(const CsaeModel& model, const char* what) {
    if (model.preset.latent_dim != 2)
        throw std::invalid_argument(std::string(what) +
                                    " needs a 2-d latent space (lambda=2); this model has lambda=" +
                                    std::to_string(model.preset.latent_dim) +
                                    ". Train with --lambda 2 to produce plane visualizations.");
}

void require_ranges(const GridSpec& g) {
    if (!(g.x_max > g.x_min) || !(g.y_max > g.y_min) || !std::isfinite(g.x_min) ||
        !std::isfinite(g.x_max) || !std::isfinite(g.y_min) || !std::isfinite(g.y_max))
        throw std::invalid_argument("grid ranges are not finite and ordered");
    if (g.resolution < 2) throw std::invalid_argument("grid resolution must be >= 2");
}

}  // namespace

std::vector<std::uint8_t> render_decision_boundary(const CsaeModel& model, const GridSpec& grid) {
    require_lambda2(model, "decision boundary rendering");
    require_ranges(grid);
    const int res = grid.resolution;
    const double sx = (grid.x_max - grid.x_min) / res;
    const double sy = (grid.y_max - grid.y_min) / res;
    const auto& palette = class_palette();

    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(res) * res * 3);
    Tensor points({res, 2});
    for (int row = 0; row < res; ++row) {
        for (int col = 0; col < res; ++col) {
            points.at2(col, 0) = static_cast<float>(grid.x_min + (col + 0.5) * sx);
            points.at2(col, 1) = static_cast<float>(grid.y_max - (row + 0.5) * sy);
        }
        const std::vector<int> pred = argmax_rows(classify_latent(model, points));
        for (int col = 0; col < res; ++col) {
            const auto& color = palette[static_cast<std::size_t>(pred[static_cast<std::size_t>(col)] % 10)];
            const std::size_t at = (static_cast<std::size_t>(row) * res + col) * 3;
            rgb[at] = color[0];
            rgb[at + 1] = color[1];
            rgb[at + 2] = color[2];
        }
    }
    return rgb;
}

void decision_boundary_image(const CsaeModel& model, const Tensor& test_latents, GridSpec grid,
                             const std::string& path) {
    require_lambda2(model, "decision boundary rendering");
    if (!(grid.x_max > grid.x_min))
        grid = grid_from_latents(test_latents, 0.10, grid.resolution);
    write_ppm(path, grid.resolution, grid.resolution, render_decision_boundary(model, grid));
}

std::vector<std::uint8_t> render_decoder_grid(const CsaeModel& model, const GridSpec& grid,
                                              int tile) {
    require_lambda2(model, "decoder grid rendering");
    require_ranges(grid);
    if (tile < 1) throw std::invalid_argument("tile size must be >= 1");
    const int res = grid.resolution;
    const int side = model.preset.input_side;
    const double sx = (grid.x_max - grid.x_min) / res;
    const double sy = (grid.y_max - grid.y_min) / res;

    const std::size_t out_side = static_cast<std::size_t>(res) * tile;
    std::vector<std::uint8_t> gray(out_side * out_side);
    for (int gr = 0; gr < res; ++gr) {
        Tensor points({res, 2});
        for (int gc = 0; gc < res; ++gc) {
            points.at2(gc, 0) = static_cast<float>(grid.x_min + (gc + 0.5) * sx);
            points.at2(gc, 1) = static_cast<float>(grid.y_max - (gr + 0.5) * sy);
        }
        const Tensor decoded = decode(model, points);
        for (int gc = 0; gc < res; ++gc) {
            Tensor img({side, side});
            for (int i = 0; i < side; ++i)
                for (int j = 0; j < side; ++j) img.at2(i, j) = decoded.at4(gc, i, j, 0);
            if (tile != side) img = nn_resize(img, tile, tile);
            for (int i = 0; i < tile; ++i)
                for (int j = 0; j < tile; ++j) {
                    const float v = std::min(1.0f, std::max(0.0f, img.at2(i, j)));
                    gray[(static_cast<std::size_t>(gr) * tile + i) * out_side +
                         static_cast<std::size_t>(gc) * tile + j] =
                        static_cast<std::uint8_t>(std::lround(v * 255.0f));
                }
        }
    }
    return gray;
}

void decoder_grid_image(const CsaeModel& model, const GridSpec& grid, int tile,
                        const std::string& path) {
    const int out_side = grid.resolution * tile;
    write_pgm(path, out_side, out_side, render_decoder_grid(model, grid, tile));
}

}  // namespace csae
