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

#include "pf/image_io.hpp"
#include "pf/restorers.hpp"
#include "test_util.hpp"

namespace pf {
namespace {

using ::pf::testing::RandomImage8;

const std::string kEcho = PF_ECHO_RESTORER;

TEST(TaskTest, KeysAndScales) {
  EXPECT_EQ(TaskKey(SrTask{4}), "sr_x4");
  EXPECT_EQ(TaskKey(DeblurTask{11, 2.5, 2.5, 0.0, false}), "deblur_k11_s2.5_2.5");
  EXPECT_EQ(TaskKey(DeblurTask{11, 3.5, 1.5, 0.0, true}), "deblur_k11_s3.5_1.5_rot");
  EXPECT_EQ(TaskKey(DenoiseTask{31}), "denoise_s31");
  EXPECT_EQ(TaskKey(VirtualStainTask{"H&E", "PAS-AB"}), "vs_H_E_to_PAS-AB");
  EXPECT_EQ(TaskScale(SrTask{8}), 8);
  EXPECT_EQ(TaskScale(DenoiseTask{21}), 1);
  CoupledTask coupled;
  coupled.spec.steps = {BlurStep{}, DownscaleStep{4}, NoiseStep{{31.0}}};
  EXPECT_EQ(TaskScale(coupled), 4);
  EXPECT_PF_ERROR(TaskDegradation(VirtualStainTask{"a", "b"}), ErrorCode::kInvalidArgument);
}

TEST(TaskTest, JsonRoundTrip) {
  CoupledTask coupled;
  coupled.name = "mix";
  coupled.spec.steps = {BlurStep{{11, 2.5, 2.5, 0.0}}, DownscaleStep{4}, NoiseStep{{31.0}}};
  for (const TaskKind& t : std::vector<TaskKind>{SrTask{2}, DeblurTask{7, 1.5, 2.0, 0.0, true},
                                                 DenoiseTask{41}, coupled,
                                                 VirtualStainTask{"HE", "IHC"}}) {
    EXPECT_EQ(TaskToJson(TaskFromJson(TaskToJson(t))), TaskToJson(t));
  }
  EXPECT_PF_ERROR(TaskFromJson({{"kind", "inpaint"}}), ErrorCode::kInvalidArgument);
}

TEST(RestoreTest, BuiltinShapes) {
  const ImageF32 in = RandomImage8(64, 48, 3, 1);
  EXPECT_EQ(Restore(IdentityRestorer{}, in, DenoiseTask{21}), in);
  const ImageF32 up = Restore(IdentityRestorer{}, in, SrTask{2});
  EXPECT_EQ(up, ReplicateUpscale(in, 2));
  const ImageF32 bic = Restore(ResampleRestorer{ResampleMethod::kBicubic}, in, SrTask{2});
  EXPECT_EQ(bic.width(), 128);
  EXPECT_EQ(bic.height(), 96);
}

TEST(RestoreTest, ParseRestorer) {
  EXPECT_TRUE(std::holds_alternative<IdentityRestorer>(ParseRestorer("identity")));
  EXPECT_EQ(std::get<ResampleRestorer>(ParseRestorer("bilinear")).method, ResampleMethod::kBilinear);
  EXPECT_EQ(std::get<ExternalRestorer>(ParseRestorer("exec:cat")).command, "cat");
  EXPECT_EQ(RestorerLabel(ParseRestorer("bicubic")), "bicubic");
  EXPECT_PF_ERROR(ParseRestorer("exec:"), ErrorCode::kInvalidArgument);
  EXPECT_PF_ERROR(ParseRestorer("exec:cat", 0.0), ErrorCode::kInvalidArgument);
  EXPECT_PF_ERROR(ParseRestorer("lanczos"), ErrorCode::kInvalidArgument);
}

TEST(ExternalTest, CatRoundTripIsPixelExact) {
  const ImageF32 in = RandomImage8(40, 30, 3, 2);
  EXPECT_EQ(Restore(ExternalRestorer{"cat", 30}, in, DenoiseTask{21}, "img"), in);
}

TEST(ExternalTest, EchoHelperSeesTaskOnFd3AndEnvironment) {
  const ImageF32 in = RandomImage8(20, 10, 1, 3);
  const ImageF32 out =
      Restore(ExternalRestorer{kEcho + " --check-task", 30}, in, SrTask{4}, "img");
  EXPECT_EQ(out, ReplicateUpscale(in, 4));
}

TEST(ExternalTest, TaskDocument) {
  const nlohmann::json doc = RestorerTaskDocument(SrTask{2}, "id7", ImageF32(5, 4, 3));
  EXPECT_EQ(doc["protocol"], kRestorerProtocol);
  EXPECT_EQ(doc["image_id"], "id7");
  EXPECT_EQ(doc["output"]["width"], 10);
  EXPECT_EQ(doc["output"]["height"], 8);
  EXPECT_EQ(doc["task"]["kind"], "sr");
}

TEST(ExternalTest, FailuresAreExternalFailures) {
  const ImageF32 in = RandomImage8(16, 16, 3, 4);
  try {
    Restore(ExternalRestorer{"echo oops >&2; exit 3", 30}, in, DenoiseTask{21});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExternalFailure);
    EXPECT_NE(e.message().find("status 3"), std::string::npos);
    EXPECT_NE(e.message().find("oops"), std::string::npos);
  }
  EXPECT_PF_ERROR(Restore(ExternalRestorer{"echo notapng", 30}, in, DenoiseTask{21}),
                  ErrorCode::kExternalFailure);
  EXPECT_PF_ERROR(Restore(ExternalRestorer{"kill -9 $$", 30}, in, DenoiseTask{21}),
                  ErrorCode::kExternalFailure);
  EXPECT_PF_ERROR(Restore(ExternalRestorer{"sleep 5", 0.3}, in, DenoiseTask{21}),
                  ErrorCode::kExternalFailure);
}

TEST(ExternalTest, WrongOutputSizeIsShapeViolation) {
  // cat returns the input unchanged where a x2 output is required.
  EXPECT_PF_ERROR(Restore(ExternalRestorer{"cat", 30}, RandomImage8(16, 16, 3, 5), SrTask{2}),
                  ErrorCode::kShapeViolation);
}

TEST(ProcessTest, ChildThatIgnoresStdinDoesNotHang) {
  const std::vector<std::uint8_t> big(4 << 20, 7);
  const ProcessResult r = RunProcess("printf hi", big, "{}", "PF_TASK_JSON", "{}", 10);
  EXPECT_EQ(r.exit_status, 0);
  EXPECT_EQ(std::string(r.stdout_bytes.begin(), r.stdout_bytes.end()), "hi");
}

TEST(ProcessTest, EnvironmentAndFd3) {
  const ProcessResult r =
      RunProcess("printf \"$PF_TASK_JSON\"; cat <&3", {}, "-fd3", "PF_TASK_JSON", "env", 10);
  EXPECT_EQ(std::string(r.stdout_bytes.begin(), r.stdout_bytes.end()), "env-fd3");
}

}  // namespace
}  // namespace pf
