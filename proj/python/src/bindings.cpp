/*
 * Copyright 2026 The pfbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python bindings. Images cross the boundary as float32 arrays shaped
// (H, W) or (H, W, C) with values in [0, 1]; structured data crosses as
// JSON text and is decoded on the Python side.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "json.hpp"
#include "pf/degrade.hpp"
#include "pf/diffusion.hpp"
#include "pf/error.hpp"
#include "pf/harness.hpp"
#include "pf/losses.hpp"
#include "pf/metrics.hpp"
#include "pf/restorers.hpp"
#include "pf/rng.hpp"
#include "pf/tiling.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

pf::ImageF32 ToImage(const FloatArray& a) {
  if (a.ndim() != 2 && a.ndim() != 3) {
    throw pf::Error(pf::ErrorCode::kShapeMismatch, "expected an (H, W) or (H, W, C) array");
  }
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  pf::ImageF32 img(w, h, c);
  const float* src = a.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) img.at(x, y, ch) = src[(y * w + x) * c + ch];
    }
  }
  return img;
}

py::array_t<float> FromImage(const pf::ImageF32& img, bool squeeze = true) {
  const int h = img.height(), w = img.width(), c = img.channels();
  std::vector<py::ssize_t> shape = {h, w};
  if (c != 1 || !squeeze) shape.push_back(c);
  py::array_t<float> out(shape);
  float* dst = out.mutable_data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) dst[(y * w + x) * c + ch] = img.at(x, y, ch);
    }
  }
  return out;
}

pf::TileGrid Grid(int width, int height, int tile, int overlap) {
  return pf::PlanTiles(width, height, tile, overlap);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Image restoration benchmark core";

  static py::exception<pf::Error> error(m, "PfError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pf::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(py::str(e.what()));
      exc.attr("code") = std::string(pf::ErrorCodeName(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  // metrics
  m.def("psnr", [](const FloatArray& a, const FloatArray& b) {
    return pf::Psnr(ToImage(a), ToImage(b));
  });
  m.def("ssim", [](const FloatArray& a, const FloatArray& b) {
    return pf::Ssim(ToImage(a), ToImage(b));
  });
  m.def("mae", [](const FloatArray& a, const FloatArray& b) {
    return pf::MseMae(ToImage(a), ToImage(b), true).mae;
  });
  m.def("bootstrap_ci",
        [](const std::vector<double>& samples, double level, int iterations,
           std::uint64_t seed) {
          const pf::Interval ci = pf::BootstrapCi(samples, level, iterations, seed);
          return py::make_tuple(ci.lo, ci.hi);
        },
        py::arg("samples"), py::arg("level") = 0.95,
        py::arg("iterations") = pf::kDefaultBootstrapIterations, py::arg("seed") = 0);

  // degradation
  m.def("gaussian_kernel",
        [](int size, double sigma1, double sigma2, double theta) {
          const pf::BlurKernel k = pf::BuildGaussianKernel({size, sigma1, sigma2, theta});
          py::array_t<double> out({size, size});
          std::copy(k.weights.begin(), k.weights.end(), out.mutable_data());
          return out;
        },
        py::arg("size"), py::arg("sigma1"), py::arg("sigma2"), py::arg("theta") = 0.0);
  m.def("blur",
        [](const FloatArray& img, int size, double sigma1, double sigma2, double theta) {
          return FromImage(
              pf::Convolve(ToImage(img), pf::BuildGaussianKernel({size, sigma1, sigma2, theta})),
              img.ndim() == 2);
        },
        py::arg("image"), py::arg("size"), py::arg("sigma1"), py::arg("sigma2"),
        py::arg("theta") = 0.0);
  m.def("resample",
        [](const FloatArray& img, int width, int height, const std::string& method) {
          return FromImage(
              pf::Resample(ToImage(img), width, height, pf::ParseResampleMethod(method)),
              img.ndim() == 2);
        },
        py::arg("image"), py::arg("width"), py::arg("height"), py::arg("method") = "bicubic");
  m.def("degrade_json",
        [](const FloatArray& img, const std::string& spec_json) {
          const pf::DegradeResult r =
              pf::DegradePipeline(ToImage(img), pf::SpecFromJson(nlohmann::json::parse(spec_json)));
          return py::make_tuple(FromImage(r.image, img.ndim() == 2),
                                pf::ProvenanceToJson(r.provenance).dump());
        },
        py::arg("image"), py::arg("spec_json"));

  // tiling
  m.def("extract_tiles",
        [](const FloatArray& img, int tile, int overlap) {
          const pf::ImageF32 image = ToImage(img);
          const pf::TileGrid grid = Grid(image.width(), image.height(), tile, overlap);
          py::list out;
          for (const pf::Tile& t : pf::ExtractTiles(image, grid)) {
            out.append(py::make_tuple(t.rect.x, t.rect.y, FromImage(t.pixels, img.ndim() == 2)));
          }
          return out;
        },
        py::arg("image"), py::arg("tile") = pf::kDefaultTile,
        py::arg("overlap") = pf::kDefaultOverlap);
  m.def("stitch_tiles",
        [](const std::vector<FloatArray>& pixels, int width, int height, int tile, int overlap) {
          const pf::TileGrid grid = Grid(width, height, tile, overlap);
          if (pixels.size() != grid.count()) {
            throw pf::Error(pf::ErrorCode::kMissingTile,
                            "expected " + std::to_string(grid.count()) + " tiles");
          }
          std::vector<pf::Tile> tiles;
          std::size_t k = 0;
          for (int iy = 0; iy < static_cast<int>(grid.ys.size()); ++iy) {
            for (int ix = 0; ix < static_cast<int>(grid.xs.size()); ++ix) {
              tiles.push_back({ix, iy, grid.rect(ix, iy), ToImage(pixels[k++])});
            }
          }
          return FromImage(pf::StitchTiles(tiles, grid), pixels.front().ndim() == 2);
        },
        py::arg("tiles"), py::arg("width"), py::arg("height"), py::arg("tile") = pf::kDefaultTile,
        py::arg("overlap") = pf::kDefaultOverlap);

  // losses
  m.def("info_nce",
        [](const std::vector<double>& anchor, const std::vector<double>& positive,
           const std::vector<std::vector<double>>& negatives, double tau, bool normalize) {
          const pf::InfoNceResult r = pf::InfoNce(anchor, positive, negatives, tau, normalize);
          return py::make_tuple(r.loss, r.grad_anchor, r.grad_positive, r.grad_negatives);
        },
        py::arg("anchor"), py::arg("positive"), py::arg("negatives"), py::arg("tau"),
        py::arg("normalize") = true);
  m.def("adversarial", [](const std::vector<double>& d_real, const std::vector<double>& d_fake) {
    const pf::AdversarialTerms t = pf::Adversarial(d_real, d_fake);
    py::dict out;
    out["disc_objective"] = t.disc_objective;
    out["disc_loss"] = t.disc_loss;
    out["gen_loss"] = t.gen_loss;
    return out;
  });

  // diffusion
  m.def("ddim_sample_gaussian",
        [](int count, double mu, double sigma0, int steps, double eta, std::uint64_t seed) {
          const pf::NoiseSchedule s = pf::MakeSchedule();
          const pf::NoisePredictor f = pf::MakeAnalyticPredictor(
              s, pf::Tensor({1}, {mu}), pf::Tensor({1}, {sigma0 * sigma0}));
          const std::vector<std::size_t> shape = {static_cast<std::size_t>(count)};
          const pf::Tensor x_T =
              pf::GaussianTensor(shape, pf::DeriveSeed(seed, pf::HashString("x_T")));
          return pf::DdimSample(x_T, f, {}, s, {steps, eta},
                                pf::DeriveSeed(seed, pf::HashString("sampler")))
              .data;
        },
        py::arg("count"), py::arg("mu") = 0.5, py::arg("sigma0") = 0.1, py::arg("steps") = 50,
        py::arg("eta") = 0.0, py::arg("seed") = 0);

  // harness
  m.def("task_key", [](const std::string& task_json) {
    return pf::TaskKey(pf::TaskFromJson(nlohmann::json::parse(task_json)));
  });
  m.def("generate_benchmark",
        [](const std::string& clean_dir, const std::string& grid_json, std::uint64_t seed,
           const std::string& out_dir, int threads) {
          const auto manifests = pf::GenerateBenchmark(
              clean_dir, pf::TaskGridFromJson(nlohmann::json::parse(grid_json)), seed, out_dir,
              threads);
          std::vector<std::string> keys;
          for (const auto& mf : manifests) keys.push_back(pf::TaskKey(mf.task));
          return keys;
        },
        py::arg("clean_dir"), py::arg("grid_json"), py::arg("seed"), py::arg("out_dir"),
        py::arg("threads") = 1);
  m.def("evaluate_json",
        [](const std::string& manifest_path, const std::string& restorer, int threads) {
          pf::EvalOptions options;
          options.threads = threads;
          const pf::RunReport report =
              pf::Evaluate(pf::LoadManifest(manifest_path), pf::ParseRestorer(restorer), options);
          return pf::RunReportToJson(report).dump();
        },
        py::arg("manifest"), py::arg("restorer"), py::arg("threads") = 1);
  m.def("rank_csv", [](const std::string& reports_dir) {
    return pf::RankTableToCsv(pf::AggregateAndRank(pf::LoadReports(reports_dir)));
  });
}
