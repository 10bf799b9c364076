#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "flearn/bench.hpp"
#include "flearn/metrics.hpp"
#include "flearn/ops.hpp"
#include "flearn/spectral.hpp"
#include "flearn/version.hpp"

namespace py = pybind11;

namespace {

using flearn::Tensor;

Tensor to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    std::vector<int> shape(arr.ndim());
    for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape[i] = static_cast<int>(arr.shape(i));
    Tensor t(shape);
    const double* src = arr.data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = src[i];
    return t;
}

py::array_t<double> to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> arr(shape);
    double* dst = arr.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) dst[i] = t[i];
    return arr;
}

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;

// The spectral core works on [C,M,N] stacks; accept bare [M,N] planes too
// and remember to squeeze the channel axis back off the result.
Tensor as_cmn(const Arr& arr, const char* who, bool& was_2d) {
    Tensor t = to_tensor(arr);
    was_2d = t.rank() == 2;
    if (was_2d) return Tensor({1, t.dim(0), t.dim(1)}, t.values());
    if (t.rank() != 3) {
        throw std::invalid_argument(std::string(who) + ": expected a 2-d or 3-d array");
    }
    return t;
}

py::array_t<double> squeeze_to(const Tensor& t, bool was_2d) {
    if (!was_2d) return to_array(t);
    return to_array(Tensor({t.dim(1), t.dim(2)}, t.values()));
}

flearn::SceneConfig scene_config(int image_size, double circle_cx, double circle_cy,
                                 double circle_r, int square_x, int square_y, int square_side,
                                 int grid_rows, int grid_cols, int overlap,
                                 const std::string& stroke, int thickness) {
    flearn::SceneConfig cfg;
    cfg.image_size = image_size;
    cfg.circle_cx = circle_cx;
    cfg.circle_cy = circle_cy;
    cfg.circle_r = circle_r;
    cfg.square_x = square_x;
    cfg.square_y = square_y;
    cfg.square_side = square_side;
    cfg.grid_rows = grid_rows;
    cfg.grid_cols = grid_cols;
    cfg.overlap = overlap;
    cfg.stroke = flearn::parse_stroke_mode(stroke);
    cfg.thickness = thickness;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "frequency-domain feature fusion core: DFT/IDFT, convolution, scene "
              "synthesis, metrics and single-trial training";
    m.attr("__version__") = flearn::kVersion;

    m.def(
        "dft2",
        [](const Arr& image) {
            bool was_2d = false;
            const auto out = flearn::dft2(as_cmn(image, "dft2", was_2d));
            return py::make_tuple(squeeze_to(out.re, was_2d), squeeze_to(out.im, was_2d));
        },
        py::arg("image"),
        "Unnormalized 2-d DFT of a real [M,N] or [C,M,N] input; returns (real, imag).");

    m.def(
        "idft2",
        [](const Arr& re, const Arr& im) {
            bool re_2d = false, im_2d = false;
            const auto out =
                flearn::idft2(as_cmn(re, "idft2", re_2d), as_cmn(im, "idft2", im_2d));
            return py::make_tuple(squeeze_to(out.re, re_2d), squeeze_to(out.im, im_2d));
        },
        py::arg("re"), py::arg("im"),
        "Inverse 2-d DFT carrying the 1/(M*N) factor; returns (real, imag).");

    m.def(
        "magnitude",
        [](const Arr& re, const Arr& im) {
            return to_array(flearn::magnitude(to_tensor(re), to_tensor(im)));
        },
        py::arg("re"), py::arg("im"), "Elementwise sqrt(re^2 + im^2).");

    m.def(
        "conv2d",
        [](const Arr& input, const Arr& weight, const Arr& bias) {
            const Tensor x = to_tensor(input);
            const Tensor w = to_tensor(weight);
            const Tensor b = to_tensor(bias);
            if (x.rank() != 3 || w.rank() != 4 || b.rank() != 1) {
                throw std::invalid_argument(
                    "conv2d: expected input [C,H,W], weight [O,C,kh,kw], bias [O]");
            }
            const int pad = (w.dim(2) - 1) / 2;
            flearn::NoGradGuard no_grad;
            return to_array(flearn::conv2d(flearn::constant(x), flearn::constant(w),
                                           flearn::constant(b), pad)
                                ->value);
        },
        py::arg("input"), py::arg("weight"), py::arg("bias"),
        "Same-padding 2-d convolution of a [C,H,W] input with [O,C,k,k] weights.");

    m.def("render_structure",
          [](int image_size, double circle_cx, double circle_cy, double circle_r, int square_x,
             int square_y, int square_side, int grid_rows, int grid_cols, int overlap,
             const std::string& stroke, int thickness) {
              const auto cfg =
                  scene_config(image_size, circle_cx, circle_cy, circle_r, square_x, square_y,
                               square_side, grid_rows, grid_cols, overlap, stroke, thickness);
              cfg.validate();
              return to_array(flearn::render_structure(cfg));
          },
          py::arg("image_size") = 128, py::arg("circle_cx") = 48.0, py::arg("circle_cy") = 48.0,
          py::arg("circle_r") = 30.0, py::arg("square_x") = 50, py::arg("square_y") = 50,
          py::arg("square_side") = 56, py::arg("grid_rows") = 2, py::arg("grid_cols") = 2,
          py::arg("overlap") = 8, py::arg("stroke") = "outline", py::arg("thickness") = 3,
          "Binary [1,M,N] mask of the circle+square structure.");

    m.def(
        "decompose",
        [](const Arr& mask, int grid_rows, int grid_cols, int overlap) {
            Tensor t = to_tensor(mask);
            flearn::SceneConfig cfg;
            cfg.image_size = t.rank() == 3 ? t.dim(1) : 0;
            cfg.grid_rows = grid_rows;
            cfg.grid_cols = grid_cols;
            cfg.overlap = overlap;
            // decompose only reads the grid; collapse the shapes so the
            // config validates at any mask size
            cfg.circle_cx = cfg.circle_cy = cfg.circle_r = 0;
            cfg.square_x = cfg.square_y = 0;
            cfg.square_side = 1;
            return to_array(flearn::decompose(t, cfg));
        },
        py::arg("mask"), py::arg("grid_rows") = 2, py::arg("grid_cols") = 2,
        py::arg("overlap") = 8,
        "Cuts a [1,M,N] mask into a row-major [K,M,N] stack of overlapping fragments.");

    m.def("make_scene",
          [](int image_size, double circle_cx, double circle_cy, double circle_r, int square_x,
             int square_y, int square_side, int grid_rows, int grid_cols, int overlap,
             const std::string& stroke, int thickness) {
              const auto cfg =
                  scene_config(image_size, circle_cx, circle_cy, circle_r, square_x, square_y,
                               square_side, grid_rows, grid_cols, overlap, stroke, thickness);
              const flearn::FragmentScene scene = flearn::make_scene(cfg);
              py::dict out;
              out["target"] = to_array(scene.target);
              out["fragments"] = to_array(scene.fragments);
              return out;
          },
          py::arg("image_size") = 128, py::arg("circle_cx") = 48.0, py::arg("circle_cy") = 48.0,
          py::arg("circle_r") = 30.0, py::arg("square_x") = 50, py::arg("square_y") = 50,
          py::arg("square_side") = 56, py::arg("grid_rows") = 2, py::arg("grid_cols") = 2,
          py::arg("overlap") = 8, py::arg("stroke") = "outline", py::arg("thickness") = 3,
          "Renders the structure and its fragments; returns {'target', 'fragments'}.");

    m.def(
        "f1_at_threshold",
        [](const Arr& pred, const Arr& target, double threshold) {
            const flearn::PixelMetrics pm =
                flearn::f1_at_threshold(to_tensor(pred), to_tensor(target), threshold);
            return py::make_tuple(pm.precision, pm.recall, pm.f1);
        },
        py::arg("pred"), py::arg("target"), py::arg("threshold") = 0.5,
        "Pixelwise (precision, recall, f1) of pred >= threshold against a binary target.");

    m.def("model_kinds", [] {
        std::vector<std::string> names;
        for (flearn::ModelKind k : flearn::all_model_kinds()) names.push_back(to_string(k));
        return names;
    });

    m.def(
        "parameter_count",
        [](const std::string& kind, int in_channels, int hidden_channels) {
            flearn::ModelConfig cfg;
            cfg.kind = flearn::parse_model_kind(kind);
            cfg.in_channels = in_channels;
            cfg.hidden_channels = hidden_channels;
            return flearn::build_model(cfg).parameter_count();
        },
        py::arg("kind"), py::arg("in_channels") = 4, py::arg("hidden_channels") = 64,
        "Total trainable parameters of a model kind.");

    m.def(
        "train_trial",
        [](const std::string& kind, int image_size, int epochs, double lr, std::uint64_t seed,
           int hidden_channels) {
            flearn::SceneConfig scene_cfg;
            scene_cfg.image_size = image_size;
            if (image_size != 128) {
                // scale the default 128-px geometry down/up with the image
                const double s = image_size / 128.0;
                scene_cfg.circle_cx *= s;
                scene_cfg.circle_cy *= s;
                scene_cfg.circle_r *= s;
                scene_cfg.square_x = static_cast<int>(scene_cfg.square_x * s);
                scene_cfg.square_y = static_cast<int>(scene_cfg.square_y * s);
                scene_cfg.square_side = std::max(1, static_cast<int>(scene_cfg.square_side * s));
                scene_cfg.overlap = std::max(1, static_cast<int>(scene_cfg.overlap * s));
                scene_cfg.thickness = std::max(1, static_cast<int>(scene_cfg.thickness * s));
            }
            const flearn::FragmentScene scene = flearn::make_scene(scene_cfg);
            flearn::ModelConfig mc;
            mc.kind = flearn::parse_model_kind(kind);
            mc.hidden_channels = hidden_channels;
            flearn::TrainConfig tc;
            tc.epochs = epochs;
            tc.learning_rate = lr;
            tc.seed = seed;
            const flearn::EpochSeries series = flearn::train_one_trial(mc, scene, tc);
            py::list rows;
            for (const flearn::EpochRecord& r : series.epochs) {
                py::dict row;
                row["epoch"] = r.epoch;
                row["loss"] = r.loss;
                row["precision"] = r.precision;
                row["recall"] = r.recall;
                row["f1"] = r.f1;
                rows.append(std::move(row));
            }
            py::dict out;
            out["epochs"] = std::move(rows);
            out["diverged_at"] = series.diverged_at;
            return out;
        },
        py::arg("kind"), py::arg("image_size") = 32, py::arg("epochs") = 5,
        py::arg("lr") = 0.1, py::arg("seed") = 42, py::arg("hidden_channels") = 64,
        "One seeded training trial on the built-in scene scaled to image_size; returns "
        "per-epoch metrics.");
}
