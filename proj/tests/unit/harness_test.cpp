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

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "pf/harness.hpp"
#include "pf/image_io.hpp"
#include "test_util.hpp"

namespace pf {
namespace {

namespace fs = std::filesystem;
using ::pf::testing::TempDir;

constexpr double kInf = std::numeric_limits<double>::infinity();

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = TempDir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    corpus_ = dir_ / "corpus";
    for (int i = 0; i < 3; ++i) {
      WritePng(corpus_ / ("img" + std::to_string(i) + ".png"),
               SynthesizeSmoothImage(i == 2 ? 300 : 256, 260, 40 + i));
    }
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  fs::path corpus_;
};

TEST_F(HarnessTest, GenerateShapesAndFiles) {
  const auto ms = GenerateBenchmark(corpus_, {SrTask{2}, SrTask{8}}, 1, dir_ / "out", 2);
  ASSERT_EQ(ms.size(), 2u);
  for (const auto& m : ms) {
    const int s = TaskScale(m.task);
    for (const ManifestPair& p : m.pairs) {
      const ImageU8 gt = ReadImage(m.root / p.gt_path);
      const ImageU8 deg = ReadImage(m.root / p.degraded_path);
      EXPECT_EQ(gt.width() % s, 0);
      EXPECT_EQ(gt.height() % s, 0);
      EXPECT_EQ(deg.width() * s, gt.width());
      EXPECT_EQ(deg.height() * s, gt.height());
      EXPECT_TRUE(fs::exists(m.root / p.provenance_path));
    }
  }
  // 260 is not a multiple of 8, so x8 GT is cropped to 256 rows.
  EXPECT_EQ(ReadImage(ms[1].root / "gt/img0.png").height(), 256);
  const DatasetManifest loaded = LoadManifest(dir_ / "out/sr_x2/manifest.json");
  EXPECT_EQ(loaded.pairs, ms[0].pairs);
  EXPECT_EQ(TaskKey(loaded.task), "sr_x2");
}

TEST_F(HarnessTest, GenerateIsDeterministicAcrossThreadCounts) {
  const std::vector<TaskKind> tasks = {DenoiseTask{21}, DeblurTask{7, 1.5, 2.5, 0.0, true}};
  GenerateBenchmark(corpus_, tasks, 5, dir_ / "a", 1);
  GenerateBenchmark(corpus_, tasks, 5, dir_ / "b", 3);
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir_ / "a");
    EXPECT_EQ(ReadFileBytes(e.path()), ReadFileBytes(dir_ / "b" / rel)) << rel;
  }
  GenerateBenchmark(corpus_, tasks, 6, dir_ / "c", 1);
  EXPECT_NE(ReadFileBytes(dir_ / "a/denoise_s21/degraded/img0.png"),
            ReadFileBytes(dir_ / "c/denoise_s21/degraded/img0.png"));
}

TEST_F(HarnessTest, GenerateErrors) {
  fs::create_directories(dir_ / "empty");
  EXPECT_PF_ERROR(GenerateBenchmark(dir_ / "empty", {SrTask{2}}, 1, dir_ / "o", 1),
                  ErrorCode::kEmptyCorpus);
  WritePng(corpus_ / "tiny.png", SynthesizeSmoothImage(64, 64, 1));
  EXPECT_PF_ERROR(GenerateBenchmark(corpus_, {SrTask{2}}, 1, dir_ / "o", 1),
                  ErrorCode::kInvalidArgument);
}

TEST_F(HarnessTest, NullTaskIsPerfect) {
  const DatasetManifest m =
      MakePairedManifest(corpus_, corpus_, {"HE", "HE"}, dir_ / "null.json");
  const RunReport r = Evaluate(LoadManifest(dir_ / "null.json"), IdentityRestorer{});
  for (const ImageMetrics& im : r.metrics.per_image) {
    EXPECT_EQ(im.psnr_db, kInf);
    EXPECT_DOUBLE_EQ(im.ssim, 1.0);
    EXPECT_EQ(im.mae, 0.0);
  }
  EXPECT_EQ(r.metrics.aggregates.at("psnr_db").n_excluded_inf, 3);
}

TEST_F(HarnessTest, BicubicBeatsReplicationOnSmoothContent) {
  const auto ms = GenerateBenchmark(corpus_, {SrTask{2}}, 1, dir_ / "out", 1);
  const RunReport id = Evaluate(ms[0], IdentityRestorer{});
  const RunReport bic = Evaluate(ms[0], ResampleRestorer{ResampleMethod::kBicubic});
  EXPECT_GT(bic.metrics.aggregates.at("psnr_db").mean, id.metrics.aggregates.at("psnr_db").mean);
}

TEST_F(HarnessTest, TiledIdentityEqualsWholeImage) {
  const auto ms = GenerateBenchmark(corpus_, {SrTask{2}, DenoiseTask{31}}, 1, dir_ / "out", 1);
  for (const auto& m : ms) {
    for (const ManifestPair& p : m.pairs) {
      const ImageF32 deg = U8ToF32(ReadImage(m.root / p.degraded_path));
      const ImageF32 whole = RestoreForEval(IdentityRestorer{}, deg, m.task, p.image_id, {});
      const ImageF32 tiled =
          RestoreForEval(IdentityRestorer{}, deg, m.task, p.image_id, TileMode{64, 16});
      EXPECT_EQ(whole, tiled) << p.image_id;
    }
  }
}

TEST_F(HarnessTest, ReportFingerprintStableAndJsonRoundTrip) {
  const auto ms = GenerateBenchmark(corpus_, {DenoiseTask{21}}, 1, dir_ / "out", 1);
  EvalOptions opt;
  opt.profiles = {{{0, 0}, {200, 200}, 50}};
  const RunReport a = Evaluate(ms[0], IdentityRestorer{}, opt);
  opt.threads = 3;
  const RunReport b = Evaluate(ms[0], IdentityRestorer{}, opt);
  EXPECT_EQ(a.config_fingerprint, b.config_fingerprint);
  EXPECT_EQ(a.metrics, b.metrics);
  ASSERT_EQ(a.profiles.size(), 3u);
  EXPECT_EQ(a.metrics.per_image[0].profile_pcc.size(), 1u);
  const RunReport back = RunReportFromJson(nlohmann::json::parse(RunReportToJson(a).dump()));
  EXPECT_TRUE(SameReport(a, back));
  const RunReport other = Evaluate(ms[0], ResampleRestorer{}, {});
  EXPECT_NE(a.config_fingerprint, other.config_fingerprint);
}

TEST_F(HarnessTest, FailingImageIsNamed) {
  const auto ms = GenerateBenchmark(corpus_, {DenoiseTask{21}}, 1, dir_ / "out", 1);
  EvalOptions opt;
  opt.threads = 2;
  try {
    Evaluate(ms[0], ExternalRestorer{std::string(PF_ECHO_RESTORER) + " --fail-on img1", 30}, opt);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExternalFailure);
    EXPECT_NE(e.message().find("img1"), std::string::npos);
  }
}

RunReport FakeReport(const TaskKind& task, const std::string& restorer,
                     std::vector<ImageMetrics> images) {
  RunReport r;
  r.task = task;
  r.restorer = restorer;
  r.metrics = BuildMetricReport(std::move(images), {0.95, 100, 0});
  r.config_fingerprint = "0";
  return r;
}

std::vector<RunReport> DominanceGrid() {
  std::vector<RunReport> rs;
  for (const TaskKind& t : std::vector<TaskKind>{SrTask{2}, DenoiseTask{21}}) {
    rs.push_back(FakeReport(t, "good", {{"a", 35, 0.95, 1.0, std::nullopt, {}}}));
    rs.push_back(FakeReport(t, "bad", {{"a", 25, 0.75, 5.0, std::nullopt, {}}}));
  }
  return rs;
}

TEST(RankTableTest, OneRestorerRanksFirst) {
  const RankTable t = AggregateAndRank({FakeReport(SrTask{2}, "only", {{"a", 30, 0.9, 1, {}, {}}})});
  for (const RankRow& row : t.rows) EXPECT_DOUBLE_EQ(row.mean_rank, 1.0);
}

TEST(RankTableTest, DominanceAndOrderInvariance) {
  auto rs = DominanceGrid();
  const RankTable t = AggregateAndRank(rs);
  for (const RankRow& row : t.rows) {
    EXPECT_DOUBLE_EQ(row.mean_rank, row.restorer == "good" ? 1.0 : 2.0) << row.scope;
  }
  EXPECT_EQ(t.rows.front().scope, "overall");
  std::reverse(rs.begin(), rs.end());
  EXPECT_EQ(RankTableToCsv(AggregateAndRank(rs)), RankTableToCsv(t));
  std::rotate(rs.begin(), rs.begin() + 1, rs.end());
  EXPECT_EQ(RankTableToCsv(AggregateAndRank(rs)), RankTableToCsv(t));
}

TEST(RankTableTest, IncompleteGridIsMissingCell) {
  auto rs = DominanceGrid();
  rs.pop_back();
  EXPECT_PF_ERROR(AggregateAndRank(rs), ErrorCode::kMissingCell);
  EXPECT_PF_ERROR(AggregateAndRank({}), ErrorCode::kEmptyInput);
}

TEST(EmitReportTest, EmptyIsAnErrorAndWritesNothing) {
  const fs::path out = TempDir("emit_empty");
  EXPECT_PF_ERROR(EmitReport({}, ReportFormat::kCsv, out), ErrorCode::kEmptyInput);
  EXPECT_FALSE(fs::exists(out / "report.csv"));
  fs::remove_all(out);
}

TEST(EmitReportTest, CsvMatchesGoldenFile) {
  const std::vector<RunReport> rs = {
      FakeReport(SrTask{2}, "exec:restore --fast, v2", {{"x", 30.5, 0.9, 2.25, std::nullopt, {}}}),
      FakeReport(DenoiseTask{21}, "identity", {{"x", kInf, 1.0, 0.0, std::nullopt, {}}}),
  };
  std::ifstream golden(std::string(PF_TEST_DATA_DIR) + "/golden_report.csv");
  std::stringstream expected;
  expected << golden.rdbuf();
  EXPECT_EQ(ReportCsv(rs), expected.str());
}

TEST(EmitReportTest, JsonAndProfilesFiles) {
  const fs::path out = TempDir("emit_json");
  RunReport r = FakeReport(SrTask{2}, "bicubic", {{"x", 30, 0.9, 2, std::nullopt, {0.5}}});
  r.profiles.push_back({"x", 0, {0.1, 0.2}, {0.1, 0.25}});
  const auto paths = EmitReport({r}, ReportFormat::kJson, out);
  ASSERT_EQ(paths.size(), 2u);
  const auto j = nlohmann::json::parse(ReadTextFile(out / "report.json"));
  EXPECT_TRUE(SameReport(RunReportFromJson(j["reports"][0]), r));
  EXPECT_EQ(ReadTextFile(out / "profiles/sr_x2/bicubic/x_line0.csv"),
            "index,gt,restored\n0,0.100000,0.100000\n1,0.200000,0.250000\n");
  fs::remove_all(out);
}

TEST(TaskGridTest, ParsesAndRejectsDuplicates) {
  const auto grid = TaskGridFromJson(nlohmann::json::parse(
      R"({"tasks": [{"kind": "sr", "scale": 2}, {"kind": "denoise", "sigma": 21}]})"));
  EXPECT_EQ(grid.size(), 2u);
  EXPECT_PF_ERROR(TaskGridFromJson(nlohmann::json::parse(
                      R"([{"kind": "sr", "scale": 2}, {"kind": "sr", "scale": 2}])")),
                  ErrorCode::kInvalidArgument);
  EXPECT_PF_ERROR(TaskGridFromJson(nlohmann::json::array()), ErrorCode::kEmptyInput);
}

}  // namespace
}  // namespace pf
