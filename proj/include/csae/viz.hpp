// Visual artifact export: latent scatter CSV, decision-boundary raster (PPM)
// and decoder-grid mosaic (PGM). Rasters are dependency-free binary PPM/PGM
// so outputs stay byte-exact reproducible.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "csae/data.hpp"
#include "csae/model.hpp"
#include "csae/tensor.hpp"

namespace csae {

struct GridSpec {
    double x_min = 0.0, x_max = 0.0;   // equal bounds mean "derive from data"
    double y_min = 0.0, y_max = 0.0;
    int resolution = 400;              // pixels (or tiles) per axis
};

// bounding box of 2-d latents, widened by `margin` of each span per side
GridSpec grid_from_latents(const Tensor& z, double margin = 0.10, int resolution = 400);

// fixed 10-color class palette (classes beyond 10 cycle)
const std::array<std::array<std::uint8_t, 3>, 10>& class_palette();

void write_ppm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& rgb);
void write_pgm(const std::string& path, int width, int height,
               const std::vector<std::uint8_t>& gray);

// CSV of latent coordinates with true and predicted labels; lambda > 2 gets
// a comment line noting the columns are raw (unreduced) coordinates
void export_latent_scatter(const CsaeModel& model, const LabeledDataset& dataset,
                           const std::string& path);

// argmax class of the classifier head over an x/y grid, one palette color
// per pixel; row 0 is the top of the image (largest y). Requires lambda == 2.
// Unset grid ranges are derived from test_latents.
std::vector<std::uint8_t> render_decision_boundary(const CsaeModel& model, const GridSpec& grid);
void decision_boundary_image(const CsaeModel& model, const Tensor& test_latents, GridSpec grid,
                             const std::string& path);

// mosaic of decoded grid points, resolution x resolution tiles of tile^2
// pixels each, arranged row-major with y decreasing down the image
std::vector<std::uint8_t> render_decoder_grid(const CsaeModel& model, const GridSpec& grid,
                                              int tile);
void decoder_grid_image(const CsaeModel& model, const GridSpec& grid, int tile,
                        const std::string& path);

}  // namespace csae
