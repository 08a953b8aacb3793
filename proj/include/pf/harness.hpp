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

#ifndef PF_HARNESS_HPP_
#define PF_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pf/metrics.hpp"
#include "pf/restorers.hpp"
#include "pf/tensor.hpp"

namespace pf {

inline constexpr const char* kManifestVersion = "pf-manifest/1";
inline constexpr const char* kReportVersion = "pf-report/1";
inline constexpr int kMinCorpusSide = 256;

// Paths are relative to the manifest root. provenance_path is empty for
// paired (not generated) data.
struct ManifestPair {
  std::string image_id;
  std::string gt_path;
  std::string degraded_path;
  std::string provenance_path;

  friend bool operator==(const ManifestPair&, const ManifestPair&) = default;
};

struct DatasetManifest {
  std::string version = kManifestVersion;
  TaskKind task;
  std::filesystem::path root;  // absolute once loaded
  std::vector<ManifestPair> pairs;
};

// Every pair stores its task on disk; loading rejects mixed tasks,
// duplicate image ids and missing files. `root` resolves against the
// manifest's directory.
DatasetManifest LoadManifest(const std::filesystem::path& path);
void SaveManifest(const DatasetManifest& manifest, const std::filesystem::path& path);
void ValidateManifest(const DatasetManifest& manifest);

// Clean images in `dir` sorted by file name, keyed by file stem.
std::vector<std::pair<std::string, std::filesystem::path>> ListCorpus(
    const std::filesystem::path& dir);

// Per-image degradation seed, keyed by content identity only.
std::uint64_t PairSeed(std::uint64_t seed, const TaskKind& task, const std::string& image_id);

// Writes out_dir/<task_key>/{gt,degraded}/<id>.png, degraded/<id>.prov.json
// and out_dir/<task_key>/manifest.json for each task. GT is the clean image
// cropped at the top-left to a multiple of the task's total downscale.
std::vector<DatasetManifest> GenerateBenchmark(const std::filesystem::path& clean_dir,
                                               const std::vector<TaskKind>& tasks,
                                               std::uint64_t seed,
                                               const std::filesystem::path& out_dir,
                                               int threads);

// Pairs same-stem images from two directories for virtual-staining tasks.
DatasetManifest MakePairedManifest(const std::filesystem::path& target_dir,
                                   const std::filesystem::path& source_dir,
                                   const VirtualStainTask& task,
                                   const std::filesystem::path& manifest_path);

// Smooth, band-limited RGB image with stain-like colours: low-frequency
// cosines plus soft blobs. Used to build the bundled test corpus.
ImageU8 SynthesizeSmoothImage(int width, int height, std::uint64_t seed);

std::vector<TaskKind> TaskGridFromJson(const nlohmann::json& j);

struct TileMode {
  int tile = 256;
  int overlap = 32;
};

// Maps an image to feature maps for LPIPS; must be safe to call concurrently.
using FeatureProvider = std::function<FeatureStack(const ImageF32&)>;

struct EvalOptions {
  std::optional<TileMode> tile_mode;
  std::vector<ProfileLine> profiles;  // in GT pixel coordinates
  int threads = 1;
  AggregateOptions aggregate;
  FeatureProvider features;
  std::vector<std::vector<double>> lpips_weights;
};

struct ProfileRecord {
  std::string image_id;
  int line = 0;
  std::vector<double> gt;
  std::vector<double> restored;

  friend bool operator==(const ProfileRecord&, const ProfileRecord&) = default;
};

struct RunReport {
  TaskKind task;
  std::string restorer;
  MetricReport metrics;
  double wall_time = 0.0;  // seconds
  std::string config_fingerprint;
  std::vector<ProfileRecord> profiles;
};

bool SameReport(const RunReport& a, const RunReport& b);

// Restores one degraded image, whole or tile by tile, and quantizes the
// result to 8 bits as a written output would be.
ImageF32 RestoreForEval(const RestorerHandle& handle, const ImageF32& degraded,
                        const TaskKind& task, const std::string& image_id,
                        const std::optional<TileMode>& tile_mode);

// Errors carry the failing image_id; the first failure aborts the run.
RunReport Evaluate(const DatasetManifest& manifest, const RestorerHandle& handle,
                   const EvalOptions& options = {});

nlohmann::json RunReportToJson(const RunReport& report);
RunReport RunReportFromJson(const nlohmann::json& j);

// All *.report.json files under `dir`, in path order.
std::vector<RunReport> LoadReports(const std::filesystem::path& dir);
// "<task_key>.<restorer>.report.json" with the restorer made file-safe.
std::string ReportFileName(const RunReport& report);

struct RankRow {
  std::string scope;  // "overall" or a task key
  std::string restorer;
  double mean_rank = 0.0;
  std::map<std::string, double> metric_means;  // mean over the scope's tasks
};

struct RankTable {
  std::vector<std::string> metrics;
  std::vector<RankRow> rows;  // overall first, then tasks; restorers sorted
};

// Requires the complete task x restorer grid (kMissingCell otherwise).
// Directions: psnr_db, ssim higher is better; mae, lpips lower is better.
RankTable AggregateAndRank(const std::vector<RunReport>& reports);
std::string RankTableToCsv(const RankTable& table);

enum class ReportFormat { kCsv, kJson };

// CSV: report.csv with one row per (task, restorer, metric). JSON:
// report.json with the full reports. Both write profiles/ when present.
// Returns the written paths.
std::vector<std::filesystem::path> EmitReport(const std::vector<RunReport>& reports,
                                              ReportFormat format,
                                              const std::filesystem::path& out_dir);
std::string ReportCsv(const std::vector<RunReport>& reports);

}  // namespace pf

#endif  // PF_HARNESS_HPP_
