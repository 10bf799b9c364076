#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "flearn/tensor.hpp"

namespace flearn {

enum class StrokeMode { Filled, Outline };

std::string to_string(StrokeMode mode);
StrokeMode parse_stroke_mode(const std::string& name);

/// Geometry of the synthetic scene: a circle and a square drawn into an
/// image-size x image-size binary mask, then cut into an overlapping
/// grid of fragments. Coordinates are (x  = column, y = row).
struct SceneConfig {
    int image_size = 128;
    double circle_cx = 48;
    double circle_cy = 48;
    double circle_r = 30;
    int square_x = 50;  // top-left column
    int square_y = 50;  // top-left row
    int square_side = 56;
    int grid_rows = 2;
    int grid_cols = 2;
    int overlap = 8;  // dilation of each tile across interior seams, pixels
    StrokeMode stroke = StrokeMode::Outline;
    int thickness = 3;  // outline stroke width

    int fragment_count() const { return grid_rows * grid_cols; }
    void validate() const;  // throws std::invalid_argument on bad geometry
};

/// Non-fatal degenerate configuration: if the overlap is so large that some
/// dilated tile covers the whole image, fragments degenerate toward copies
/// of the target. Returns a warning message in that case.
std::optional<std::string> degenerate_overlap_warning(const SceneConfig& cfg);

struct FragmentScene {
    SceneConfig config;
    Tensor target;     // [1,M,N], values in {0,1}
    Tensor fragments;  // [K,M,N], values in {0,1}

    int fragment_count() const { return fragments.dim(0); }
};

/// Union of the circle and square masks. A pixel is inside the circle iff
/// (x-cx)^2 + (y-cy)^2 <= r^2; outline mode subtracts the shrunken shape.
Tensor render_structure(const SceneConfig& cfg);

/// Cuts the mask into grid tiles, dilating every tile by `overlap` pixels
/// across interior seams. Fragment k (row-major tile order) is the mask
/// restricted to its dilated tile.
Tensor decompose(const Tensor& mask, const SceneConfig& cfg);

FragmentScene make_scene(const SceneConfig& cfg);

/// Writes target.pgm, fragment_<k>.pgm ({0,1} -> {0,255}) and scene.json
/// into the directory (created if missing). load_scene inverts exactly and
/// throws std::runtime_error naming the offending file on any mismatch.
void save_scene(const FragmentScene& scene, const std::filesystem::path& dir);
FragmentScene load_scene(const std::filesystem::path& dir);

}  // namespace flearn
