#include "flearn/scene.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "flearn/pgm.hpp"

namespace flearn {

using nlohmann::json;

std::string to_string(StrokeMode mode) { return mode == StrokeMode::Filled ? "filled" : "outline"; }

StrokeMode parse_stroke_mode(const std::string& name) {
    if (name == "filled") return StrokeMode::Filled;
    if (name == "outline") return StrokeMode::Outline;
    throw std::invalid_argument("unknown stroke mode '" + name + "' (valid: filled, outline)");
}

void SceneConfig::validate() const {
    if (image_size < 2) throw std::invalid_argument("scene: image_size must be >= 2");
    if (grid_rows < 1 || grid_cols < 1) {
        throw std::invalid_argument("scene: grid must have at least one row and column");
    }
    if (grid_rows * grid_cols < 2) {
        throw std::invalid_argument("scene: need at least 2 fragments (the task is fusion)");
    }
    if (grid_rows > image_size || grid_cols > image_size) {
        throw std::invalid_argument("scene: more grid tiles than pixels");
    }
    if (overlap < 1) {
        throw std::invalid_argument("scene: overlap must be >= 1 (fragments must overlap)");
    }
    if (circle_r < 0) throw std::invalid_argument("scene: circle radius must be >= 0");
    const double lo = 0.0, hi = static_cast<double>(image_size - 1);
    if (circle_cx - circle_r < lo || circle_cx + circle_r > hi || circle_cy - circle_r < lo ||
        circle_cy + circle_r > hi) {
        throw std::invalid_argument("scene: circle extends outside the image");
    }
    if (square_side < 1) throw std::invalid_argument("scene: square side must be >= 1");
    if (square_x < 0 || square_y < 0 || square_x + square_side > image_size ||
        square_y + square_side > image_size) {
        throw std::invalid_argument("scene: square extends outside the image");
    }
    if (stroke == StrokeMode::Outline && thickness < 1) {
        throw std::invalid_argument("scene: outline thickness must be >= 1");
    }
}

namespace {

// Dilated pixel bounds [lo, hi) of tile (ti, tj); interior seams get the
// overlap margin, image borders do not.
struct TileBox {
    int r0, r1, c0, c1;
    bool covers_all;  // before clamping, the box spanned the whole image
};

TileBox tile_box(const SceneConfig& cfg, int ti, int tj) {
    const int n = cfg.image_size;
    const int r_lo = ti * n / cfg.grid_rows - (ti > 0 ? cfg.overlap : 0);
    const int r_hi = (ti + 1) * n / cfg.grid_rows + (ti + 1 < cfg.grid_rows ? cfg.overlap : 0);
    const int c_lo = tj * n / cfg.grid_cols - (tj > 0 ? cfg.overlap : 0);
    const int c_hi = (tj + 1) * n / cfg.grid_cols + (tj + 1 < cfg.grid_cols ? cfg.overlap : 0);
    TileBox box;
    box.covers_all = r_lo <= 0 && r_hi >= n && c_lo <= 0 && c_hi >= n;
    box.r0 = std::max(0, r_lo);
    box.r1 = std::min(n, r_hi);
    box.c0 = std::max(0, c_lo);
    box.c1 = std::min(n, c_hi);
    return box;
}

bool in_square(const SceneConfig& cfg, int x, int y, int inset) {
    return x >= cfg.square_x + inset && x < cfg.square_x + cfg.square_side - inset &&
           y >= cfg.square_y + inset && y < cfg.square_y + cfg.square_side - inset;
}

}  // namespace

std::optional<std::string> degenerate_overlap_warning(const SceneConfig& cfg) {
    for (int ti = 0; ti < cfg.grid_rows; ++ti) {
        for (int tj = 0; tj < cfg.grid_cols; ++tj) {
            if (tile_box(cfg, ti, tj).covers_all) {
                return "overlap " + std::to_string(cfg.overlap) + " makes tile (" +
                       std::to_string(ti) + "," + std::to_string(tj) +
                       ") cover the whole image; fragments degenerate toward copies of the target";
            }
        }
    }
    return std::nullopt;
}

Tensor render_structure(const SceneConfig& cfg) {
    cfg.validate();
    const int n = cfg.image_size;
    Tensor mask({1, n, n});
    const double r2 = cfg.circle_r * cfg.circle_r;
    const double rin = cfg.circle_r - cfg.thickness;
    const double rin2 = rin > 0 ? rin * rin : -1.0;  // negative: no hole
    const bool outline = cfg.stroke == StrokeMode::Outline;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double dx = x - cfg.circle_cx;
            const double dy = y - cfg.circle_cy;
            const double d2 = dx * dx + dy * dy;
            bool on = d2 <= r2 && !(outline && d2 <= rin2);
            if (!on) {
                on = in_square(cfg, x, y, 0) && !(outline && in_square(cfg, x, y, cfg.thickness));
            }
            if (on) mask.at(0, y, x) = 1.0;
        }
    }
    return mask;
}

Tensor decompose(const Tensor& mask, const SceneConfig& cfg) {
    cfg.validate();
    const int n = cfg.image_size;
    if (mask.shape() != std::vector<int>{1, n, n}) {
        throw std::invalid_argument("decompose: mask shape " + shape_to_string(mask.shape()) +
                                    " does not match scene size " + std::to_string(n));
    }
    Tensor fragments({cfg.fragment_count(), n, n});
    for (int ti = 0; ti < cfg.grid_rows; ++ti) {
        for (int tj = 0; tj < cfg.grid_cols; ++tj) {
            const int k = ti * cfg.grid_cols + tj;
            const TileBox box = tile_box(cfg, ti, tj);
            for (int y = box.r0; y < box.r1; ++y) {
                for (int x = box.c0; x < box.c1; ++x) {
                    fragments.at(k, y, x) = mask.at(0, y, x);
                }
            }
        }
    }
    return fragments;
}

FragmentScene make_scene(const SceneConfig& cfg) {
    FragmentScene scene;
    scene.config = cfg;
    scene.target = render_structure(cfg);
    scene.fragments = decompose(scene.target, cfg);
    return scene;
}

namespace {

PgmImage to_pgm(const Tensor& t, int channel) {
    const int h = t.dim(1), w = t.dim(2);
    PgmImage img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.pixels[static_cast<std::size_t>(y) * w + x] =
                t.at(channel, y, x) > 0.5 ? 255 : 0;
        }
    }
    return img;
}

void from_pgm(const std::filesystem::path& file, const PgmImage& img, int size, Tensor& t,
              int channel) {
    if (img.width != size || img.height != size) {
        throw std::runtime_error("scene: " + file.string() + ": expected " + std::to_string(size) +
                                 "x" + std::to_string(size) + ", got " +
                                 std::to_string(img.width) + "x" + std::to_string(img.height));
    }
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const unsigned char v = img.pixels[static_cast<std::size_t>(y) * size + x];
            if (v != 0 && v != 255) {
                throw std::runtime_error("scene: " + file.string() +
                                         ": non-binary pixel value " + std::to_string(v));
            }
            t.at(channel, y, x) = v == 255 ? 1.0 : 0.0;
        }
    }
}

}  // namespace

void save_scene(const FragmentScene& scene, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const SceneConfig& cfg = scene.config;
    write_pgm(dir / "target.pgm", to_pgm(scene.target, 0));
    json manifest;
    manifest["version"] = 1;
    manifest["image_size"] = cfg.image_size;
    manifest["circle"] = {{"cx", cfg.circle_cx}, {"cy", cfg.circle_cy}, {"r", cfg.circle_r}};
    manifest["square"] = {{"x", cfg.square_x}, {"y", cfg.square_y}, {"side", cfg.square_side}};
    manifest["grid_rows"] = cfg.grid_rows;
    manifest["grid_cols"] = cfg.grid_cols;
    manifest["overlap"] = cfg.overlap;
    manifest["stroke"] = to_string(cfg.stroke);
    manifest["thickness"] = cfg.thickness;
    manifest["target_file"] = "target.pgm";
    std::vector<std::string> files;
    for (int k = 0; k < scene.fragment_count(); ++k) {
        const std::string name = "fragment_" + std::to_string(k) + ".pgm";
        write_pgm(dir / name, to_pgm(scene.fragments, k));
        files.push_back(name);
    }
    manifest["fragment_files"] = files;
    std::ofstream out(dir / "scene.json");
    if (!out) throw std::runtime_error("scene: cannot write " + (dir / "scene.json").string());
    out << manifest.dump(2) << "\n";
}

FragmentScene load_scene(const std::filesystem::path& dir) {
    const std::filesystem::path manifest_path = dir / "scene.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("scene: cannot open " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("scene: " + manifest_path.string() + ": " + e.what());
    }
    try {
        if (manifest.at("version").get<int>() != 1) {
            throw std::runtime_error("scene: " + manifest_path.string() +
                                     ": unsupported manifest version");
        }
        FragmentScene scene;
        SceneConfig& cfg = scene.config;
        cfg.image_size = manifest.at("image_size").get<int>();
        cfg.circle_cx = manifest.at("circle").at("cx").get<double>();
        cfg.circle_cy = manifest.at("circle").at("cy").get<double>();
        cfg.circle_r = manifest.at("circle").at("r").get<double>();
        cfg.square_x = manifest.at("square").at("x").get<int>();
        cfg.square_y = manifest.at("square").at("y").get<int>();
        cfg.square_side = manifest.at("square").at("side").get<int>();
        cfg.grid_rows = manifest.at("grid_rows").get<int>();
        cfg.grid_cols = manifest.at("grid_cols").get<int>();
        cfg.overlap = manifest.at("overlap").get<int>();
        cfg.stroke = parse_stroke_mode(manifest.at("stroke").get<std::string>());
        cfg.thickness = manifest.at("thickness").get<int>();
        const auto files = manifest.at("fragment_files").get<std::vector<std::string>>();
        if (static_cast<int>(files.size()) != cfg.fragment_count()) {
            throw std::runtime_error("scene: " + manifest_path.string() + ": manifest lists " +
                                     std::to_string(files.size()) + " fragments but grid needs " +
                                     std::to_string(cfg.fragment_count()));
        }
        const int n = cfg.image_size;
        scene.target = Tensor({1, n, n});
        const std::filesystem::path target_file =
            dir / manifest.at("target_file").get<std::string>();
        from_pgm(target_file, read_pgm(target_file), n, scene.target, 0);
        scene.fragments = Tensor({cfg.fragment_count(), n, n});
        for (std::size_t k = 0; k < files.size(); ++k) {
            const std::filesystem::path file = dir / files[k];
            from_pgm(file, read_pgm(file), n, scene.fragments, static_cast<int>(k));
        }
        return scene;
    } catch (const json::exception& e) {
        throw std::runtime_error("scene: " + manifest_path.string() + ": " + e.what());
    }
}

}  // namespace flearn
