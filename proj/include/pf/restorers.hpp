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

#ifndef PF_RESTORERS_HPP_
#define PF_RESTORERS_HPP_

#include <string>
#include <variant>

#include "json.hpp"
#include "pf/degrade.hpp"
#include "pf/image.hpp"

namespace pf {

struct SrTask {
  int scale = 2;
};

struct DeblurTask {
  int kernel_size = 7;
  double sigma1 = 1.5;
  double sigma2 = 1.5;
  double theta = 0.0;
  bool random_theta = false;
};

struct DenoiseTask {
  double sigma_255 = 21.0;
};

struct CoupledTask {
  std::string name = "coupled";
  DegradationSpec spec;  // spec.seed is ignored; the harness derives seeds
};

struct VirtualStainTask {
  std::string source_stain;
  std::string target_stain;
};

using TaskKind =
    std::variant<SrTask, DeblurTask, DenoiseTask, CoupledTask, VirtualStainTask>;

// Stable identifier used for directory names, report rows and seeding.
std::string TaskKey(const TaskKind& task);

// Factor between restorer output and input dimensions.
int TaskScale(const TaskKind& task);

// Degradation recipe that produces the task's input from a clean image.
// Virtual staining has none and throws kInvalidArgument.
DegradationSpec TaskDegradation(const TaskKind& task);

nlohmann::json TaskToJson(const TaskKind& task);
TaskKind TaskFromJson(const nlohmann::json& j);

struct IdentityRestorer {};

struct ResampleRestorer {
  ResampleMethod method = ResampleMethod::kBicubic;
};

struct ExternalRestorer {
  std::string command;  // run through /bin/sh -c
  double timeout_seconds = 300.0;
};

using RestorerHandle = std::variant<IdentityRestorer, ResampleRestorer, ExternalRestorer>;

// "identity", "bicubic" / "bilinear" / "area", or "exec:CMD".
RestorerHandle ParseRestorer(const std::string& text, double timeout_seconds = 300.0);
std::string RestorerLabel(const RestorerHandle& handle);

// Output dims always equal input dims times TaskScale(task); anything else is
// a kShapeViolation. Identity upscales by pixel replication for SR-like
// tasks. External restorers go through the subprocess protocol below.
ImageF32 Restore(const RestorerHandle& handle, const ImageF32& input,
                 const TaskKind& task, const std::string& image_id = "");

// Subprocess protocol. The child runs under /bin/sh -c with
//   stdin         the degraded image as an 8-bit PNG,
//   fd 3          the task document (JSON, below), then EOF,
//   PF_TASK_JSON  the same document,
// and must write exactly one 8-bit PNG to stdout and exit with status 0.
// Task document:
//   {"protocol": "pf-restorer/1", "image_id": ..., "task": {...},
//    "input":  {"width": W, "height": H, "channels": C},
//    "output": {"width": W*s, "height": H*s, "channels": C}}
inline constexpr const char* kRestorerProtocol = "pf-restorer/1";

nlohmann::json RestorerTaskDocument(const TaskKind& task, const std::string& image_id,
                                    const ImageF32& input);

struct ProcessResult {
  int exit_status = 0;  // exit code, or 128 + signal number
  bool timed_out = false;
  std::vector<std::uint8_t> stdout_bytes;
  std::string stderr_text;
};

// Runs `command` with the given stdin and fd-3 payloads and extra
// environment entry. Never throws for child failures; inspect the result.
ProcessResult RunProcess(const std::string& command,
                         const std::vector<std::uint8_t>& stdin_bytes,
                         const std::string& fd3_text, const std::string& env_name,
                         const std::string& env_value, double timeout_seconds);

}  // namespace pf

#endif  // PF_RESTORERS_HPP_
