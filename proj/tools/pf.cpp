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

// Command-line front end. Exit codes: 0 success, 2 usage error, 3 data
// error, 4 external-restorer failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pf/diffusion.hpp"
#include "pf/error.hpp"
#include "pf/harness.hpp"
#include "pf/image_io.hpp"
#include "pf/metrics.hpp"
#include "pf/parallel.hpp"
#include "pf/rng.hpp"
#include "pf/tiling.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitExternal = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto AsUsage(F&& f) {
  try {
    return f();
  } catch (const pf::Error& e) {
    throw UsageError(e.message());
  }
}

nlohmann::json ReadJsonFile(const fs::path& path) {
  try {
    return nlohmann::json::parse(pf::ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw pf::Error(pf::ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

// ------------------------------------------------------------------ degrade

struct DegradeArgs {
  std::string in, tasks, out;
  std::uint64_t seed = 0;
};

int RunDegrade(const DegradeArgs& a) {
  const auto tasks = pf::TaskGridFromJson(ReadJsonFile(a.tasks));
  const auto manifests =
      pf::GenerateBenchmark(a.in, tasks, a.seed, a.out, pf::ThreadsFromEnv());
  for (const auto& m : manifests) {
    std::printf("%s: %zu pairs -> %s\n", pf::TaskKey(m.task).c_str(), m.pairs.size(),
                (m.root / "manifest.json").string().c_str());
  }
  return 0;
}

// ------------------------------------------------------------------ tiling

struct TileArgs {
  std::string in, out;
  int tile = pf::kDefaultTile;
  int overlap = pf::kDefaultOverlap;
};

int RunTile(const TileArgs& a) {
  const pf::ImageF32 img = pf::U8ToF32(pf::ReadImage(a.in));
  const pf::TileGrid grid = pf::PlanTiles(img.width(), img.height(), a.tile, a.overlap);
  pf::WriteTileSet(a.out, pf::ExtractTiles(img, grid), grid);
  std::printf("%zu tiles (%zux%zu) -> %s\n", grid.count(), grid.xs.size(), grid.ys.size(),
              a.out.c_str());
  return 0;
}

int RunStitch(const std::string& in, const std::string& out) {
  const auto [grid, tiles] = pf::ReadTileSet(in);
  pf::WritePng(out, pf::F32ToU8(pf::StitchTiles(tiles, grid)));
  std::printf("%dx%d -> %s\n", grid.image_w, grid.image_h, out.c_str());
  return 0;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string manifest, restorer, out;
  bool tile = false;
  int tile_size = pf::kDefaultTile;
  int tile_overlap = pf::kDefaultOverlap;
  double timeout = 300.0;
  std::vector<std::string> profiles;
  int iterations = pf::kDefaultBootstrapIterations;
  double level = 0.95;
  std::uint64_t seed = 0;
};

pf::ProfileLine ParseProfile(const std::string& text) {
  pf::ProfileLine line;
  double n = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf,%lf", &line.start.x, &line.start.y,
                  &line.end.x, &line.end.y, &n) != 5 ||
      n < 2 || n != std::floor(n)) {
    throw UsageError("--profile expects x0,y0,x1,y1,samples with samples >= 2");
  }
  line.samples = static_cast<int>(n);
  return line;
}

int RunEval(const EvalArgs& a) {
  const pf::RestorerHandle handle = AsUsage([&] { return pf::ParseRestorer(a.restorer, a.timeout); });
  pf::EvalOptions options;
  if (a.tile) {
    if (a.tile_size < 1 || a.tile_overlap < 0 || a.tile_overlap >= a.tile_size) {
      throw UsageError("--tile-overlap must be in [0, --tile-size)");
    }
    options.tile_mode = pf::TileMode{a.tile_size, a.tile_overlap};
  }
  for (const std::string& p : a.profiles) options.profiles.push_back(ParseProfile(p));
  options.threads = pf::ThreadsFromEnv();
  options.aggregate = {a.level, a.iterations, a.seed};

  const pf::DatasetManifest manifest = pf::LoadManifest(a.manifest);
  const pf::RunReport report = pf::Evaluate(manifest, handle, options);
  const fs::path path = fs::path(a.out) / pf::ReportFileName(report);
  pf::WriteTextFile(path, pf::RunReportToJson(report).dump(2) + "\n");
  std::string csv_name = pf::ReportFileName(report);
  csv_name.replace(csv_name.size() - 12, 12, ".images.csv");
  pf::WriteTextFile(fs::path(a.out) / csv_name, pf::MetricReportToCsv(report.metrics));

  const auto& agg = report.metrics.aggregates;
  std::printf("%s %s: psnr_db %s ssim %s mae %s (n=%zu) -> %s\n",
              pf::TaskKey(report.task).c_str(), report.restorer.c_str(),
              pf::FormatNumber(agg.at("psnr_db").mean).c_str(),
              pf::FormatNumber(agg.at("ssim").mean).c_str(),
              pf::FormatNumber(agg.at("mae").mean).c_str(), report.metrics.per_image.size(),
              path.string().c_str());
  return 0;
}

// ------------------------------------------------------------------ rank / report

int RunRank(const std::string& reports, const std::string& out) {
  const pf::RankTable table = pf::AggregateAndRank(pf::LoadReports(reports));
  const std::string csv = pf::RankTableToCsv(table);
  pf::WriteTextFile(out, csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int RunReport(const std::string& reports, const std::string& format, const std::string& out) {
  const pf::ReportFormat f = format == "json" ? pf::ReportFormat::kJson : pf::ReportFormat::kCsv;
  for (const fs::path& p : pf::EmitReport(pf::LoadReports(reports), f, out)) {
    std::printf("%s\n", p.string().c_str());
  }
  return 0;
}

// ------------------------------------------------------------------ diffusion demo

struct DiffuseArgs {
  std::string schedule, out;
  int steps = 50;
  double eta = 0.0;
  std::uint64_t seed = 0;
  int side = 64;
  double mu = 0.5;
  double sigma0 = 0.1;
  int snapshot_every = 0;
};

pf::ImageU8 SnapshotImage(const pf::Tensor& x, int side) {
  pf::ImageF32 img(side, side, 1);
  for (int i = 0; i < side * side; ++i) img.plane(0)[i] = static_cast<float>(x.data[i]);
  return pf::F32ToU8(img);
}

int RunDiffuseDemo(const DiffuseArgs& a) {
  if (a.steps < 1 || a.side < 2 || !(a.sigma0 > 0.0) || a.eta < 0.0) {
    throw UsageError("need --steps >= 1, --side >= 2, --sigma0 > 0, --eta >= 0");
  }
  const pf::NoiseSchedule s =
      a.schedule.empty() ? pf::MakeSchedule() : pf::ScheduleFromJson(ReadJsonFile(a.schedule));
  if (a.steps > s.T) throw UsageError("--steps exceeds the schedule length");
  const fs::path out = a.out;
  pf::WriteTextFile(out / "schedule.json", pf::ScheduleToJson(s).dump(2) + "\n");

  const std::vector<std::size_t> shape = {static_cast<std::size_t>(a.side),
                                          static_cast<std::size_t>(a.side)};
  const pf::NoisePredictor f = pf::MakeAnalyticPredictor(
      s, pf::Tensor({1}, {a.mu}), pf::Tensor({1}, {a.sigma0 * a.sigma0}));
  const pf::Tensor x_T = pf::GaussianTensor(shape, pf::DeriveSeed(a.seed, pf::HashString("x_T")));
  pf::TrajectoryCallback on_step;
  if (a.snapshot_every > 0) {
    on_step = [&](int step, int t, const pf::Tensor& x) {
      if ((step + 1) % a.snapshot_every == 0 || t == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "steps/step_%04d_t%04d.png", step + 1, t);
        pf::WritePng(out / name, SnapshotImage(x, a.side));
      }
    };
  }
  const pf::Tensor x0 = pf::DdimSample(x_T, f, {}, s, {a.steps, a.eta},
                                       pf::DeriveSeed(a.seed, pf::HashString("sampler")), on_step);
  pf::WritePng(out / "final.png", SnapshotImage(x0, a.side));

  const double n = static_cast<double>(x0.size());
  const double mean = pf::PairwiseSum(x0.data) / n;
  std::vector<double> sq(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) sq[i] = (x0.data[i] - mean) * (x0.data[i] - mean);
  const double std_dev = std::sqrt(pf::PairwiseSum(sq) / (n - 1.0));
  const double ks = pf::KsStatisticNormal(x0.data, a.mu, a.sigma0);
  // Asymptotic 1% critical value of the one-sample KS test.
  const double ks_critical = 1.628 / std::sqrt(n);
  const nlohmann::json diag = {{"samples", x0.size()},
                               {"steps", a.steps},
                               {"eta", a.eta},
                               {"seed", a.seed},
                               {"target_mean", a.mu},
                               {"target_std", a.sigma0},
                               {"mean", mean},
                               {"std", std_dev},
                               {"ks_statistic", ks},
                               {"ks_critical_1pct", ks_critical},
                               {"ks_pass", ks < ks_critical}};
  pf::WriteTextFile(out / "diagnostics.json", diag.dump(2) + "\n");
  std::printf("mean %.6f std %.6f ks %.6f (1%% critical %.6f)\n", mean, std_dev, ks, ks_critical);
  return 0;
}

// ------------------------------------------------------------------ corpus helpers

int RunSynth(const std::string& out, int count, int size, std::uint64_t seed) {
  if (count < 1 || size < 1) throw UsageError("--count and --size must be positive");
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%02d.png", i);
    pf::WritePng(fs::path(out) / name,
                 pf::SynthesizeSmoothImage(size, size, pf::DeriveSeed(seed, i)));
  }
  std::printf("%d images -> %s\n", count, out.c_str());
  return 0;
}

int RunPair(const std::string& gt, const std::string& input, const std::string& source,
            const std::string& target, const std::string& out) {
  const pf::DatasetManifest m = pf::MakePairedManifest(gt, input, {source, target}, out);
  std::printf("%s: %zu pairs -> %s\n", pf::TaskKey(m.task).c_str(), m.pairs.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degradation, tiling and evaluation tools for image restoration benchmarks"};
  app.require_subcommand(1);

  DegradeArgs degrade;
  auto* c_degrade = app.add_subcommand("degrade", "Generate degraded benchmark sets");
  c_degrade->add_option("--in", degrade.in, "Clean image directory")->required();
  c_degrade->add_option("--tasks", degrade.tasks, "Task grid JSON")->required();
  c_degrade->add_option("--seed", degrade.seed, "Base seed")->required();
  c_degrade->add_option("--out", degrade.out, "Output directory")->required();

  TileArgs tile;
  auto* c_tile = app.add_subcommand("tile", "Split an image into overlapping tiles");
  c_tile->add_option("--in", tile.in, "Input image")->required();
  c_tile->add_option("--tile", tile.tile, "Tile side")->check(CLI::PositiveNumber);
  c_tile->add_option("--overlap", tile.overlap, "Overlap between neighbours")
      ->check(CLI::NonNegativeNumber);
  c_tile->add_option("--out", tile.out, "Output directory")->required();

  std::string stitch_in, stitch_out;
  auto* c_stitch = app.add_subcommand("stitch", "Blend a tile directory back into one image");
  c_stitch->add_option("--in", stitch_in, "Tile directory")->required();
  c_stitch->add_option("--out", stitch_out, "Output PNG")->required();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a restorer on a manifest");
  c_eval->add_option("--manifest", eval.manifest, "Manifest JSON")->required();
  c_eval->add_option("--restorer", eval.restorer, "identity | bicubic | bilinear | area | exec:CMD")
      ->required();
  c_eval->add_flag("--tile", eval.tile, "Restore tile by tile and stitch");
  c_eval->add_option("--tile-size", eval.tile_size, "Tile side for --tile");
  c_eval->add_option("--tile-overlap", eval.tile_overlap, "Tile overlap for --tile");
  c_eval->add_option("--timeout", eval.timeout, "Seconds per external restorer call")
      ->check(CLI::PositiveNumber);
  c_eval->add_option("--profile", eval.profiles, "Intensity profile x0,y0,x1,y1,samples");
  c_eval->add_option("--bootstrap-iterations", eval.iterations)->check(CLI::PositiveNumber);
  c_eval->add_option("--ci-level", eval.level)->check(CLI::Range(0.5, 0.999999));
  c_eval->add_option("--bootstrap-seed", eval.seed);
  c_eval->add_option("--out", eval.out, "Report directory")->required();

  std::string rank_reports, rank_out;
  auto* c_rank = app.add_subcommand("rank", "Average-rank table over task x restorer reports");
  c_rank->add_option("--reports", rank_reports, "Report directory")->required();
  c_rank->add_option("--out", rank_out, "Output CSV")->required();

  std::string rep_reports, rep_format = "csv", rep_out;
  auto* c_report = app.add_subcommand("report", "Write aggregate tables");
  c_report->add_option("--reports", rep_reports, "Report directory")->required();
  c_report->add_option("--format", rep_format)->check(CLI::IsMember({"csv", "json"}));
  c_report->add_option("--out", rep_out, "Output directory")->required();

  DiffuseArgs diffuse;
  auto* c_diffuse =
      app.add_subcommand("diffuse-demo", "Sample a Gaussian target with the analytic predictor");
  c_diffuse->add_option("--schedule", diffuse.schedule, "Schedule JSON (default linear 1e-4..2e-2, T=1000)");
  c_diffuse->add_option("--steps", diffuse.steps);
  c_diffuse->add_option("--eta", diffuse.eta);
  c_diffuse->add_option("--seed", diffuse.seed);
  c_diffuse->add_option("--side", diffuse.side, "Sample grid side (side^2 samples)");
  c_diffuse->add_option("--mu", diffuse.mu);
  c_diffuse->add_option("--sigma0", diffuse.sigma0);
  c_diffuse->add_option("--snapshot-every", diffuse.snapshot_every, "Write a PNG every N steps");
  c_diffuse->add_option("--out", diffuse.out, "Output directory")->required();

  std::string synth_out;
  int synth_count = 10, synth_size = 256;
  std::uint64_t synth_seed = 0;
  auto* c_synth = app.add_subcommand("synth", "Write a smooth synthetic corpus");
  c_synth->add_option("--out", synth_out)->required();
  c_synth->add_option("--count", synth_count);
  c_synth->add_option("--size", synth_size);
  c_synth->add_option("--seed", synth_seed);

  std::string pair_gt, pair_input, pair_source, pair_target, pair_out;
  auto* c_pair = app.add_subcommand("pair", "Manifest for paired images (virtual staining)");
  c_pair->add_option("--gt", pair_gt, "Target-stain directory")->required();
  c_pair->add_option("--input", pair_input, "Source-stain directory")->required();
  c_pair->add_option("--source-stain", pair_source)->required();
  c_pair->add_option("--target-stain", pair_target)->required();
  c_pair->add_option("--out", pair_out, "Manifest path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (c_degrade->parsed()) return RunDegrade(degrade);
    if (c_tile->parsed()) return RunTile(tile);
    if (c_stitch->parsed()) return RunStitch(stitch_in, stitch_out);
    if (c_eval->parsed()) return RunEval(eval);
    if (c_rank->parsed()) return RunRank(rank_reports, rank_out);
    if (c_report->parsed()) return RunReport(rep_reports, rep_format, rep_out);
    if (c_diffuse->parsed()) return RunDiffuseDemo(diffuse);
    if (c_synth->parsed()) return RunSynth(synth_out, synth_count, synth_size, synth_seed);
    if (c_pair->parsed()) return RunPair(pair_gt, pair_input, pair_source, pair_target, pair_out);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "pf: usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const pf::Error& e) {
    std::fprintf(stderr, "pf: %s\n", e.what());
    return e.code() == pf::ErrorCode::kExternalFailure ? kExitExternal : kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pf: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
