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

#include "pf/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <set>

#include "pf/error.hpp"
#include "pf/image_io.hpp"
#include "pf/parallel.hpp"
#include "pf/rng.hpp"
#include "pf/tiling.hpp"

namespace fs = std::filesystem;

namespace pf {
namespace {

nlohmann::json ParseJson(const std::string& text, const fs::path& path) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

std::string Hex64(std::uint64_t v) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(v));
  return buffer;
}

std::uint64_t HashBytes(const std::vector<std::uint8_t>& bytes) {
  return HashString(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string SafeName(const std::string& label) {
  if (label.rfind("exec:", 0) == 0) {
    return "exec-" + Hex64(HashString(label)).substr(0, 8);
  }
  std::string out;
  for (const unsigned char ch : label) {
    out += std::isalnum(ch) || ch == '-' || ch == '_' ? static_cast<char>(ch) : '_';
  }
  return out;
}

std::string CsvField(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (const char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

bool SameTask(const TaskKind& a, const TaskKind& b) { return TaskToJson(a) == TaskToJson(b); }

Error Tagged(const Error& e, const std::string& image_id) {
  return Error(e.code(), "image '" + image_id + "': " + e.message());
}

}  // namespace

// ------------------------------------------------------------------ manifests

void ValidateManifest(const DatasetManifest& manifest) {
  if (manifest.version != kManifestVersion) {
    throw Error(ErrorCode::kMalformedFile, "unknown manifest version '" + manifest.version + "'");
  }
  if (manifest.pairs.empty()) throw Error(ErrorCode::kEmptyInput, "manifest has no pairs");
  std::set<std::string> ids;
  for (const ManifestPair& p : manifest.pairs) {
    if (!ids.insert(p.image_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate image_id '" + p.image_id + "'");
    }
    for (const std::string& rel : {p.gt_path, p.degraded_path, p.provenance_path}) {
      if (rel.empty()) continue;
      if (!fs::exists(manifest.root / rel)) {
        throw Error(ErrorCode::kIoFailure,
                    "image '" + p.image_id + "': missing file " + (manifest.root / rel).string());
      }
    }
  }
}

DatasetManifest LoadManifest(const fs::path& path) {
  const nlohmann::json j = ParseJson(ReadTextFile(path), path);
  DatasetManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.root = fs::absolute(path).parent_path() / j.value("root", std::string("."));
    m.root = m.root.lexically_normal();
    bool first = true;
    for (const auto& item : j.at("pairs")) {
      const TaskKind task = TaskFromJson(item.at("task"));
      if (first) {
        m.task = task;
        first = false;
      } else if (!SameTask(task, m.task)) {
        throw Error(ErrorCode::kInvalidArgument, "manifest mixes tasks " + TaskKey(m.task) +
                                                     " and " + TaskKey(task));
      }
      m.pairs.push_back({item.at("image_id").get<std::string>(), item.at("gt").get<std::string>(),
                         item.at("degraded").get<std::string>(),
                         item.value("provenance", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  ValidateManifest(m);
  return m;
}

void SaveManifest(const DatasetManifest& manifest, const fs::path& path) {
  nlohmann::json pairs = nlohmann::json::array();
  const nlohmann::json task = TaskToJson(manifest.task);
  for (const ManifestPair& p : manifest.pairs) {
    nlohmann::json item = {{"image_id", p.image_id},
                           {"gt", p.gt_path},
                           {"degraded", p.degraded_path},
                           {"task", task}};
    if (!p.provenance_path.empty()) item["provenance"] = p.provenance_path;
    pairs.push_back(std::move(item));
  }
  const fs::path base = fs::absolute(path).parent_path();
  const fs::path root = fs::absolute(manifest.root).lexically_relative(base);
  const nlohmann::json j = {{"version", manifest.version},
                            {"task_key", TaskKey(manifest.task)},
                            {"root", root.empty() ? std::string(".") : root.generic_string()},
                            {"pairs", pairs}};
  WriteTextFile(path, j.dump(2) + "\n");
}

std::vector<std::pair<std::string, fs::path>> ListCorpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoFailure, "not a directory: " + dir.string());
  }
  std::vector<std::pair<std::string, fs::path>> items;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && IsImagePath(entry.path())) {
      items.emplace_back(entry.path().stem().string(), entry.path());
    }
  }
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.second.filename() < b.second.filename(); });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].first == items[i - 1].first) {
      throw Error(ErrorCode::kInvalidArgument, "two images share the id '" + items[i].first + "'");
    }
  }
  std::sort(items.begin(), items.end());
  return items;
}

std::uint64_t PairSeed(std::uint64_t seed, const TaskKind& task, const std::string& image_id) {
  return DeriveSeed(DeriveSeed(seed, HashString(TaskKey(task))), HashString(image_id));
}

std::vector<TaskKind> TaskGridFromJson(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("tasks") ? j.at("tasks") : j;
  if (!list.is_array()) throw Error(ErrorCode::kMalformedFile, "task grid must be a list");
  std::vector<TaskKind> tasks;
  std::set<std::string> keys;
  for (const auto& item : list) {
    tasks.push_back(TaskFromJson(item));
    if (!keys.insert(TaskKey(tasks.back())).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate task " + TaskKey(tasks.back()));
    }
  }
  if (tasks.empty()) throw Error(ErrorCode::kEmptyInput, "task grid is empty");
  return tasks;
}

std::vector<DatasetManifest> GenerateBenchmark(const fs::path& clean_dir,
                                               const std::vector<TaskKind>& tasks,
                                               std::uint64_t seed, const fs::path& out_dir,
                                               int threads) {
  const auto corpus = ListCorpus(clean_dir);
  if (corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no decodable images in " + clean_dir.string());
  }
  std::vector<ImageF32> clean(corpus.size());
  ParallelFor(corpus.size(), threads, [&](std::size_t i) {
    const ImageU8 img = ReadImage(corpus[i].second);
    if (img.width() < kMinCorpusSide || img.height() < kMinCorpusSide) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image '" + corpus[i].first + "' is " + std::to_string(img.width()) + "x" +
                      std::to_string(img.height()) + ", below the " +
                      std::to_string(kMinCorpusSide) + " px minimum");
    }
    clean[i] = U8ToF32(img);
  });

  std::vector<DatasetManifest> manifests;
  for (const TaskKind& task : tasks) {
    const DegradationSpec base = TaskDegradation(task);
    const int factor = std::max(1, TotalDownscale(base));
    const std::string key = TaskKey(task);
    const fs::path task_dir = out_dir / key;
    DatasetManifest manifest;
    manifest.task = task;
    manifest.root = fs::absolute(task_dir).lexically_normal();
    manifest.pairs.resize(corpus.size());
    ParallelFor(corpus.size(), threads, [&](std::size_t i) {
      const std::string& id = corpus[i].first;
      try {
        const ImageF32& src = clean[i];
        const ImageF32 gt = Crop(src, {0, 0, src.width() / factor * factor,
                                       src.height() / factor * factor});
        DegradationSpec spec = base;
        spec.seed = PairSeed(seed, task, id);
        const DegradeResult result = DegradePipeline(gt, spec);
        ManifestPair& pair = manifest.pairs[i];
        pair = {id, "gt/" + id + ".png", "degraded/" + id + ".png",
                "degraded/" + id + ".prov.json"};
        WritePng(task_dir / pair.gt_path, F32ToU8(gt));
        WritePng(task_dir / pair.degraded_path, F32ToU8(result.image));
        WriteTextFile(task_dir / pair.provenance_path,
                      ProvenanceToJson(result.provenance).dump(2) + "\n");
      } catch (const Error& e) {
        throw Tagged(e, id);
      }
    });
    SaveManifest(manifest, task_dir / "manifest.json");
    manifests.push_back(std::move(manifest));
  }
  return manifests;
}

DatasetManifest MakePairedManifest(const fs::path& target_dir, const fs::path& source_dir,
                                   const VirtualStainTask& task, const fs::path& manifest_path) {
  const auto targets = ListCorpus(target_dir);
  const auto sources = ListCorpus(source_dir);
  std::map<std::string, fs::path> by_id(sources.begin(), sources.end());
  const fs::path base = fs::absolute(manifest_path).parent_path();
  DatasetManifest m;
  m.task = task;
  m.root = base.lexically_normal();
  for (const auto& [id, path] : targets) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    m.pairs.push_back({id, fs::absolute(path).lexically_relative(base).generic_string(),
                       fs::absolute(it->second).lexically_relative(base).generic_string(), ""});
  }
  if (m.pairs.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "no image ids shared by " + target_dir.string() +
                                             " and " + source_dir.string());
  }
  SaveManifest(m, manifest_path);
  return m;
}

ImageU8 SynthesizeSmoothImage(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) throw Error(ErrorCode::kInvalidArgument, "empty image size");
  constexpr double kTwoPi = 6.283185307179586;
  CounterRng rng(seed);
  struct Wave {
    double fx, fy, phase, amp;
  };
  struct Blob {
    double x, y, s, amp;
  };
  // Two stain densities, each a few waves and blobs.
  std::array<std::vector<Wave>, 2> waves;
  std::array<std::vector<Blob>, 2> blobs;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 5; ++i) {
      waves[k].push_back({(rng.Uniform() * 8.0 - 4.0) / width, (rng.Uniform() * 8.0 - 4.0) / height,
                          rng.Uniform() * kTwoPi, 0.05 + 0.1 * rng.Uniform()});
    }
    for (int i = 0; i < 10; ++i) {
      blobs[k].push_back({rng.Uniform() * width, rng.Uniform() * height, 8.0 + 24.0 * rng.Uniform(),
                          0.2 + 0.5 * rng.Uniform()});
    }
  }
  const double absorb[2][3] = {{0.60, 0.75, 0.25}, {0.10, 0.55, 0.30}};
  ImageU8 img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double density[2];
      for (int k = 0; k < 2; ++k) {
        double d = 0.3;
        for (const Wave& w : waves[k]) d += w.amp * std::cos(kTwoPi * (w.fx * x + w.fy * y) + w.phase);
        for (const Blob& b : blobs[k]) {
          const double r2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
          d += b.amp * std::exp(-r2 / (2.0 * b.s * b.s));
        }
        density[k] = std::max(0.0, d);
      }
      for (int c = 0; c < 3; ++c) {
        const double v = std::exp(-(absorb[0][c] * density[0] + absorb[1][c] * density[1]));
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return img;
}

// ------------------------------------------------------------------ evaluation

ImageF32 RestoreForEval(const RestorerHandle& handle, const ImageF32& degraded,
                        const TaskKind& task, const std::string& image_id,
                        const std::optional<TileMode>& tile_mode) {
  ImageF32 out;
  if (!tile_mode) {
    out = Restore(handle, degraded, task, image_id);
  } else {
    // Inputs smaller than the tile (e.g. x8 SR inputs) use one tile per axis.
    const int tile = std::min({tile_mode->tile, degraded.width(), degraded.height()});
    const int overlap = std::clamp(tile_mode->overlap, 0, tile - 1);
    const TileGrid grid = PlanTiles(degraded.width(), degraded.height(), tile, overlap);
    std::vector<Tile> tiles = ExtractTiles(degraded, grid);
    for (Tile& t : tiles) t.pixels = Restore(handle, t.pixels, task, image_id);
    out = StitchTiles(tiles, grid.Scaled(TaskScale(task)));
  }
  return U8ToF32(F32ToU8(out));
}

RunReport Evaluate(const DatasetManifest& manifest, const RestorerHandle& handle,
                   const EvalOptions& options) {
  ValidateManifest(manifest);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = manifest.pairs.size();
  std::vector<ImageMetrics> per_image(n);
  std::vector<std::vector<ProfileRecord>> profiles(n);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> hashes(n);

  ParallelFor(n, std::max(1, options.threads), [&](std::size_t i) {
    const ManifestPair& pair = manifest.pairs[i];
    try {
      const auto gt_bytes = ReadFileBytes(manifest.root / pair.gt_path);
      const auto deg_bytes = ReadFileBytes(manifest.root / pair.degraded_path);
      hashes[i] = {HashBytes(gt_bytes), HashBytes(deg_bytes)};
      const ImageF32 gt = U8ToF32(DecodeImage(gt_bytes));
      const ImageF32 degraded = U8ToF32(DecodeImage(deg_bytes));
      const ImageF32 restored =
          RestoreForEval(handle, degraded, manifest.task, pair.image_id, options.tile_mode);
      if (!restored.same_shape(gt)) {
        throw Error(ErrorCode::kShapeViolation,
                    "restored " + std::to_string(restored.width()) + "x" +
                        std::to_string(restored.height()) + " does not match GT " +
                        std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
      }
      ImageMetrics& m = per_image[i];
      m.image_id = pair.image_id;
      m.psnr_db = Psnr(restored, gt);
      m.ssim = Ssim(restored, gt);
      m.mae = MseMae(restored, gt, true).mae;
      if (options.features) {
        m.lpips = LpipsFromFeatures(options.features(restored), options.features(gt),
                                    options.lpips_weights);
      }
      for (std::size_t k = 0; k < options.profiles.size(); ++k) {
        ProfileRecord rec{pair.image_id, static_cast<int>(k),
                          ExtractProfile(gt, options.profiles[k]),
                          ExtractProfile(restored, options.profiles[k])};
        m.profile_pcc.push_back(Pearson(rec.restored, rec.gt));
        profiles[i].push_back(std::move(rec));
      }
    } catch (const Error& e) {
      throw Tagged(e, pair.image_id);
    }
  });

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return manifest.pairs[a].image_id < manifest.pairs[b].image_id;
  });

  RunReport report;
  report.task = manifest.task;
  report.restorer = RestorerLabel(handle);
  std::vector<ImageMetrics> sorted;
  nlohmann::json files = nlohmann::json::array();
  for (const std::size_t i : order) {
    sorted.push_back(per_image[i]);
    for (ProfileRecord& rec : profiles[i]) report.profiles.push_back(std::move(rec));
    files.push_back({manifest.pairs[i].image_id, Hex64(hashes[i].first), Hex64(hashes[i].second)});
  }
  report.metrics = BuildMetricReport(std::move(sorted), options.aggregate);

  nlohmann::json lines = nlohmann::json::array();
  for (const ProfileLine& l : options.profiles) {
    lines.push_back({l.start.x, l.start.y, l.end.x, l.end.y, l.samples});
  }
  const nlohmann::json config = {
      {"version", kReportVersion},
      {"task", TaskToJson(manifest.task)},
      {"restorer", report.restorer},
      {"tile", options.tile_mode ? nlohmann::json{options.tile_mode->tile, options.tile_mode->overlap}
                                 : nlohmann::json()},
      {"profiles", lines},
      {"aggregate",
       {options.aggregate.level, options.aggregate.iterations, options.aggregate.seed}},
      {"lpips", static_cast<bool>(options.features)},
      {"files", files}};
  report.config_fingerprint = Hex64(HashString(config.dump()));
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

bool SameReport(const RunReport& a, const RunReport& b) {
  return SameTask(a.task, b.task) && a.restorer == b.restorer && a.metrics == b.metrics &&
         a.wall_time == b.wall_time && a.config_fingerprint == b.config_fingerprint &&
         a.profiles == b.profiles;
}

nlohmann::json RunReportToJson(const RunReport& report) {
  nlohmann::json profiles = nlohmann::json::array();
  for (const ProfileRecord& rec : report.profiles) {
    nlohmann::json gt = nlohmann::json::array(), restored = nlohmann::json::array();
    for (double v : rec.gt) gt.push_back(NumberToJson(v));
    for (double v : rec.restored) restored.push_back(NumberToJson(v));
    profiles.push_back(
        {{"image_id", rec.image_id}, {"line", rec.line}, {"gt", gt}, {"restored", restored}});
  }
  return {{"version", kReportVersion},
          {"task", TaskToJson(report.task)},
          {"task_key", TaskKey(report.task)},
          {"restorer", report.restorer},
          {"wall_time_seconds", report.wall_time},
          {"config_fingerprint", report.config_fingerprint},
          {"metrics", MetricReportToJson(report.metrics)},
          {"profiles", profiles}};
}

RunReport RunReportFromJson(const nlohmann::json& j) {
  try {
    if (j.at("version").get<std::string>() != kReportVersion) {
      throw Error(ErrorCode::kMalformedFile, "unknown report version");
    }
    RunReport r;
    r.task = TaskFromJson(j.at("task"));
    r.restorer = j.at("restorer").get<std::string>();
    r.wall_time = j.at("wall_time_seconds").get<double>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.metrics = MetricReportFromJson(j.at("metrics"));
    for (const auto& item : j.at("profiles")) {
      ProfileRecord rec;
      rec.image_id = item.at("image_id").get<std::string>();
      rec.line = item.at("line").get<int>();
      for (const auto& v : item.at("gt")) rec.gt.push_back(NumberFromJson(v));
      for (const auto& v : item.at("restored")) rec.restored.push_back(NumberFromJson(v));
      r.profiles.push_back(std::move(rec));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("report: ") + e.what());
  }
}

std::string ReportFileName(const RunReport& report) {
  return TaskKey(report.task) + "." + SafeName(report.restorer) + ".report.json";
}

std::vector<RunReport> LoadReports(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoFailure, "not a directory: " + dir.string());
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 12 &&
        name.compare(name.size() - 12, 12, ".report.json") == 0) {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<RunReport> reports;
  for (const fs::path& p : paths) {
    try {
      reports.push_back(RunReportFromJson(ParseJson(ReadTextFile(p), p)));
    } catch (const Error& e) {
      throw Error(e.code(), p.string() + ": " + e.message());
    }
  }
  return reports;
}

// ------------------------------------------------------------------ ranking

namespace {

std::vector<const RunReport*> SortedReports(const std::vector<RunReport>& reports) {
  std::vector<const RunReport*> sorted;
  for (const RunReport& r : reports) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunReport* a, const RunReport* b) {
    return std::make_pair(TaskKey(a->task), a->restorer) <
           std::make_pair(TaskKey(b->task), b->restorer);
  });
  return sorted;
}

}  // namespace

RankTable AggregateAndRank(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no reports to rank");
  std::set<std::string> task_set, restorer_set;
  std::map<std::pair<std::string, std::string>, const RunReport*> grid;
  bool all_lpips = true;
  for (const RunReport* r : SortedReports(reports)) {
    const std::string key = TaskKey(r->task);
    task_set.insert(key);
    restorer_set.insert(r->restorer);
    if (!grid.emplace(std::make_pair(key, r->restorer), r).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "two reports for task " + key + " and restorer " + r->restorer);
    }
    all_lpips = all_lpips && r->metrics.aggregates.count("lpips") > 0;
  }
  const std::vector<std::string> tasks(task_set.begin(), task_set.end());
  const std::vector<std::string> restorers(restorer_set.begin(), restorer_set.end());
  for (const std::string& t : tasks) {
    for (const std::string& m : restorers) {
      if (grid.count({t, m}) == 0) {
        throw Error(ErrorCode::kMissingCell, "no report for task " + t + " and restorer " + m);
      }
    }
  }

  RankTable table;
  table.metrics = {"psnr_db", "ssim", "mae"};
  if (all_lpips) table.metrics.push_back("lpips");
  const auto direction = [](const std::string& metric) {
    return metric == "mae" || metric == "lpips" ? Direction::kLowerBetter
                                                : Direction::kHigherBetter;
  };

  std::map<std::string, std::vector<RankCell>> cells_by_task;
  std::vector<RankCell> all_cells;
  for (const std::string& t : tasks) {
    for (const std::string& metric : table.metrics) {
      RankCell cell{t, metric, direction(metric), {}};
      for (const std::string& m : restorers) {
        cell.values[m] = grid.at({t, m})->metrics.aggregates.at(metric).mean;
      }
      cells_by_task[t].push_back(cell);
      all_cells.push_back(cell);
    }
  }

  const auto add_scope = [&](const std::string& scope, const std::vector<RankCell>& cells,
                             const std::vector<std::string>& scope_tasks) {
    const auto ranks = AverageRank(restorers, cells);
    for (const std::string& m : restorers) {
      RankRow row{scope, m, ranks.at(m), {}};
      for (const std::string& metric : table.metrics) {
        std::vector<double> means;
        for (const std::string& t : scope_tasks) {
          means.push_back(grid.at({t, m})->metrics.aggregates.at(metric).mean);
        }
        row.metric_means[metric] = PairwiseSum(means) / static_cast<double>(means.size());
      }
      table.rows.push_back(std::move(row));
    }
  };
  add_scope("overall", all_cells, tasks);
  for (const std::string& t : tasks) add_scope(t, cells_by_task[t], {t});
  return table;
}

std::string RankTableToCsv(const RankTable& table) {
  std::string out = "scope,restorer,mean_rank";
  for (const std::string& m : table.metrics) out += "," + m;
  out += "\n";
  for (const RankRow& row : table.rows) {
    out += CsvField(row.scope) + "," + CsvField(row.restorer) + "," + FormatNumber(row.mean_rank);
    for (const std::string& m : table.metrics) out += "," + FormatNumber(row.metric_means.at(m));
    out += "\n";
  }
  return out;
}

// ------------------------------------------------------------------ reports

std::string ReportCsv(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no reports to emit");
  std::string out = "task,restorer,metric,mean,ci_lo,ci_hi,n,n_excluded_inf\n";
  for (const RunReport* r : SortedReports(reports)) {
    if (r->metrics.aggregates.empty()) {
      throw Error(ErrorCode::kEmptyInput, "report for " + TaskKey(r->task) + " has no metrics");
    }
    for (const auto& [metric, agg] : r->metrics.aggregates) {
      out += CsvField(TaskKey(r->task)) + "," + CsvField(r->restorer) + "," + metric + "," +
             FormatNumber(agg.mean) + "," + FormatNumber(agg.ci_lo) + "," +
             FormatNumber(agg.ci_hi) + "," + std::to_string(agg.n) + "," +
             std::to_string(agg.n_excluded_inf) + "\n";
    }
  }
  return out;
}

std::vector<fs::path> EmitReport(const std::vector<RunReport>& reports, ReportFormat format,
                                 const fs::path& out_dir) {
  std::vector<fs::path> written;
  if (format == ReportFormat::kCsv) {
    const std::string csv = ReportCsv(reports);
    written.push_back(out_dir / "report.csv");
    WriteTextFile(written.back(), csv);
  } else {
    if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no reports to emit");
    nlohmann::json list = nlohmann::json::array();
    for (const RunReport* r : SortedReports(reports)) list.push_back(RunReportToJson(*r));
    written.push_back(out_dir / "report.json");
    WriteTextFile(written.back(),
                  nlohmann::json{{"version", kReportVersion}, {"reports", list}}.dump(2) + "\n");
  }
  for (const RunReport* r : SortedReports(reports)) {
    for (const ProfileRecord& rec : r->profiles) {
      std::string csv = "index,gt,restored\n";
      for (std::size_t i = 0; i < rec.gt.size(); ++i) {
        csv += std::to_string(i) + "," + FormatNumber(rec.gt[i]) + "," +
               FormatNumber(rec.restored[i]) + "\n";
      }
      written.push_back(out_dir / "profiles" / TaskKey(r->task) / SafeName(r->restorer) /
                        (rec.image_id + "_line" + std::to_string(rec.line) + ".csv"));
      WriteTextFile(written.back(), csv);
    }
  }
  return written;
}

}  // namespace pf
