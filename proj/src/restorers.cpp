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

#include "pf/restorers.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <mutex>

#include "pf/error.hpp"
#include "pf/image_io.hpp"

extern char** environ;

namespace pf {
namespace {

std::string Compact(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", v);
  return buffer;
}

std::string Sanitize(const std::string& text) {
  std::string out;
  for (const unsigned char ch : text) {
    out += std::isalnum(ch) || ch == '-' || ch == '.' ? static_cast<char>(ch) : '_';
  }
  return out;
}

int SafeFd(int fd) {
  // Keep pipe ends away from 0..3 so dup2 in the child cannot clobber them.
  const int moved = fcntl(fd, F_DUPFD_CLOEXEC, 10);
  close(fd);
  if (moved < 0) throw Error(ErrorCode::kExternalFailure, "fcntl failed");
  return moved;
}

struct Pipe {
  int read = -1;
  int write = -1;
};

Pipe MakePipe() {
  int fds[2];
  if (pipe2(fds, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kExternalFailure, std::string("pipe: ") + std::strerror(errno));
  }
  return {SafeFd(fds[0]), SafeFd(fds[1])};
}

void CloseFd(int& fd) {
  if (fd >= 0) close(fd);
  fd = -1;
}

}  // namespace

// ------------------------------------------------------------------ tasks

std::string TaskKey(const TaskKind& task) {
  return std::visit(
      [](const auto& t) -> std::string {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SrTask>) {
          return "sr_x" + std::to_string(t.scale);
        } else if constexpr (std::is_same_v<T, DeblurTask>) {
          std::string key = "deblur_k" + std::to_string(t.kernel_size) + "_s" +
                            Compact(t.sigma1) + "_" + Compact(t.sigma2);
          if (t.random_theta) {
            key += "_rot";
          } else if (t.theta != 0.0) {
            key += "_t" + Compact(t.theta);
          }
          return key;
        } else if constexpr (std::is_same_v<T, DenoiseTask>) {
          return "denoise_s" + Compact(t.sigma_255);
        } else if constexpr (std::is_same_v<T, CoupledTask>) {
          return Sanitize(t.name);
        } else {
          return "vs_" + Sanitize(t.source_stain) + "_to_" + Sanitize(t.target_stain);
        }
      },
      task);
}

int TaskScale(const TaskKind& task) {
  if (const auto* sr = std::get_if<SrTask>(&task)) return sr->scale;
  if (const auto* coupled = std::get_if<CoupledTask>(&task)) {
    return TotalDownscale(coupled->spec);
  }
  return 1;
}

DegradationSpec TaskDegradation(const TaskKind& task) {
  DegradationSpec spec;
  if (const auto* sr = std::get_if<SrTask>(&task)) {
    // The resampling method is drawn per image.
    spec.steps.push_back(DownscaleStep{sr->scale, ResampleMethod::kBicubic, true});
  } else if (const auto* blur = std::get_if<DeblurTask>(&task)) {
    spec.steps.push_back(BlurStep{
        {blur->kernel_size, blur->sigma1, blur->sigma2, blur->theta}, blur->random_theta});
  } else if (const auto* noise = std::get_if<DenoiseTask>(&task)) {
    spec.steps.push_back(NoiseStep{{noise->sigma_255, std::nullopt, true}, false});
  } else if (const auto* coupled = std::get_if<CoupledTask>(&task)) {
    spec = coupled->spec;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "virtual-staining tasks use paired images, not a degradation");
  }
  return spec;
}

nlohmann::json TaskToJson(const TaskKind& task) {
  return std::visit(
      [](const auto& t) -> nlohmann::json {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SrTask>) {
          return {{"kind", "sr"}, {"scale", t.scale}};
        } else if constexpr (std::is_same_v<T, DeblurTask>) {
          nlohmann::json j = {{"kind", "deblur"},
                              {"kernel_size", t.kernel_size},
                              {"sigma1", t.sigma1},
                              {"sigma2", t.sigma2}};
          if (t.random_theta) {
            j["theta"] = "random";
          } else {
            j["theta"] = t.theta;
          }
          return j;
        } else if constexpr (std::is_same_v<T, DenoiseTask>) {
          return {{"kind", "denoise"}, {"sigma", t.sigma_255}};
        } else if constexpr (std::is_same_v<T, CoupledTask>) {
          nlohmann::json steps = SpecToJson(t.spec)["steps"];
          return {{"kind", "coupled"}, {"name", t.name}, {"steps", steps}};
        } else {
          return {{"kind", "virtual_stain"},
                  {"source_stain", t.source_stain},
                  {"target_stain", t.target_stain}};
        }
      },
      task);
}

TaskKind TaskFromJson(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sr") {
      SrTask t{j.at("scale").get<int>()};
      if (t.scale < 1) throw Error(ErrorCode::kInvalidArgument, "scale must be >= 1");
      return t;
    }
    if (kind == "deblur") {
      DeblurTask t;
      t.kernel_size = j.at("kernel_size").get<int>();
      t.sigma1 = j.at("sigma1").get<double>();
      t.sigma2 = j.value("sigma2", t.sigma1);
      if (j.contains("theta")) {
        if (j["theta"].is_string()) {
          if (j["theta"] != "random") {
            throw Error(ErrorCode::kInvalidArgument, "theta must be a number or \"random\"");
          }
          t.random_theta = true;
        } else {
          t.theta = j["theta"].get<double>();
        }
      }
      return t;
    }
    if (kind == "denoise") return DenoiseTask{j.at("sigma").get<double>()};
    if (kind == "coupled") {
      CoupledTask t;
      t.name = j.value("name", std::string("coupled"));
      t.spec = SpecFromJson({{"steps", j.at("steps")}});
      return t;
    }
    if (kind == "virtual_stain") {
      return VirtualStainTask{j.at("source_stain").get<std::string>(),
                              j.at("target_stain").get<std::string>()};
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown task kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("task: ") + e.what());
  }
}

// ------------------------------------------------------------------ restorers

RestorerHandle ParseRestorer(const std::string& text, double timeout_seconds) {
  if (text == "identity") return IdentityRestorer{};
  if (text.rfind("exec:", 0) == 0) {
    ExternalRestorer ext{text.substr(5), timeout_seconds};
    if (ext.command.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "exec: restorer needs a command");
    }
    if (!(timeout_seconds > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "restorer timeout must be > 0");
    }
    return ext;
  }
  return ResampleRestorer{ParseResampleMethod(text)};
}

std::string RestorerLabel(const RestorerHandle& handle) {
  if (std::holds_alternative<IdentityRestorer>(handle)) return "identity";
  if (const auto* r = std::get_if<ResampleRestorer>(&handle)) {
    return ResampleMethodName(r->method);
  }
  return "exec:" + std::get<ExternalRestorer>(handle).command;
}

nlohmann::json RestorerTaskDocument(const TaskKind& task, const std::string& image_id,
                                    const ImageF32& input) {
  const int s = TaskScale(task);
  return {{"protocol", kRestorerProtocol},
          {"image_id", image_id},
          {"task", TaskToJson(task)},
          {"input",
           {{"width", input.width()},
            {"height", input.height()},
            {"channels", input.channels()}}},
          {"output",
           {{"width", input.width() * s},
            {"height", input.height() * s},
            {"channels", input.channels()}}}};
}

ProcessResult RunProcess(const std::string& command,
                         const std::vector<std::uint8_t>& stdin_bytes,
                         const std::string& fd3_text, const std::string& env_name,
                         const std::string& env_value, double timeout_seconds) {
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { signal(SIGPIPE, SIG_IGN); });

  // Build argv/envp before fork; only async-signal-safe calls follow it.
  std::vector<std::string> env_strings;
  const std::string prefix = env_name + "=";
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    if (std::strncmp(*e, prefix.c_str(), prefix.size()) != 0) env_strings.emplace_back(*e);
  }
  env_strings.push_back(prefix + env_value);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};

  Pipe in = MakePipe();
  Pipe out = MakePipe();
  Pipe err = MakePipe();
  Pipe task = MakePipe();

  const pid_t pid = fork();
  if (pid < 0) {
    for (int* fd : {&in.read, &in.write, &out.read, &out.write, &err.read, &err.write,
                    &task.read, &task.write}) {
      CloseFd(*fd);
    }
    throw Error(ErrorCode::kExternalFailure, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    if (dup2(in.read, 0) < 0 || dup2(out.write, 1) < 0 || dup2(err.write, 2) < 0 ||
        dup2(task.read, 3) < 0) {
      _exit(127);
    }
    execve("/bin/sh", argv, envp.data());
    _exit(127);
  }
  CloseFd(in.read);
  CloseFd(out.write);
  CloseFd(err.write);
  CloseFd(task.read);
  for (int fd : {in.write, task.write}) fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) | O_NONBLOCK);

  ProcessResult result;
  std::size_t in_off = 0, task_off = 0;
  if (stdin_bytes.empty()) CloseFd(in.write);
  if (fd3_text.empty()) CloseFd(task.write);
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_seconds));
  char buffer[65536];
  while (out.read >= 0 || err.read >= 0) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    std::vector<pollfd> fds;
    for (int fd : {out.read, err.read}) {
      if (fd >= 0) fds.push_back({fd, POLLIN, 0});
    }
    for (int fd : {in.write, task.write}) {
      if (fd >= 0) fds.push_back({fd, POLLOUT, 0});
    }
    const auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int ready = poll(fds.data(), fds.size(), static_cast<int>(std::min<long long>(wait_ms + 1, 1000)));
    if (ready < 0 && errno != EINTR) break;
    for (const pollfd& p : fds) {
      if (p.revents == 0) continue;
      if (p.fd == out.read || p.fd == err.read) {
        const ssize_t n = read(p.fd, buffer, sizeof(buffer));
        if (n > 0) {
          if (p.fd == out.read) {
            result.stdout_bytes.insert(result.stdout_bytes.end(), buffer, buffer + n);
          } else {
            result.stderr_text.append(buffer, static_cast<std::size_t>(n));
          }
        } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
          CloseFd(p.fd == out.read ? out.read : err.read);
        }
      } else {
        const bool is_in = p.fd == in.write;
        const std::uint8_t* data = is_in
            ? stdin_bytes.data() + in_off
            : reinterpret_cast<const std::uint8_t*>(fd3_text.data()) + task_off;
        const std::size_t left = is_in ? stdin_bytes.size() - in_off : fd3_text.size() - task_off;
        const ssize_t n = write(p.fd, data, left);
        if (n > 0) {
          (is_in ? in_off : task_off) += static_cast<std::size_t>(n);
          if (static_cast<std::size_t>(n) == left) CloseFd(is_in ? in.write : task.write);
        } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
          // The child closed its end (EPIPE); it simply did not read it all.
          CloseFd(is_in ? in.write : task.write);
        }
      }
    }
  }
  for (int* fd : {&in.write, &out.read, &err.read, &task.write}) CloseFd(*fd);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (WIFEXITED(status)) {
    result.exit_status = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_status = 128 + WTERMSIG(status);
  }
  return result;
}

namespace {

ImageF32 RunExternal(const ExternalRestorer& ext, const ImageF32& input,
                     const TaskKind& task, const std::string& image_id) {
  const std::string doc = RestorerTaskDocument(task, image_id, input).dump();
  const ProcessResult r = RunProcess(ext.command, EncodePng(F32ToU8(input)), doc,
                                     "PF_TASK_JSON", doc, ext.timeout_seconds);
  std::string tail = r.stderr_text.size() > 400
                         ? r.stderr_text.substr(r.stderr_text.size() - 400)
                         : r.stderr_text;
  if (!tail.empty() && tail.back() == '\n') tail.pop_back();
  const std::string who = "restorer '" + ext.command + "'";
  if (r.timed_out) {
    throw Error(ErrorCode::kExternalFailure,
                who + " timed out after " + Compact(ext.timeout_seconds) + " s");
  }
  if (r.exit_status != 0) {
    throw Error(ErrorCode::kExternalFailure,
                who + " exited with status " + std::to_string(r.exit_status) +
                    (tail.empty() ? "" : ": " + tail));
  }
  try {
    return U8ToF32(DecodeImage(r.stdout_bytes));
  } catch (const Error& e) {
    throw Error(ErrorCode::kExternalFailure, who + " wrote malformed output: " + e.message());
  }
}

}  // namespace

ImageF32 Restore(const RestorerHandle& handle, const ImageF32& input,
                 const TaskKind& task, const std::string& image_id) {
  if (input.empty()) throw Error(ErrorCode::kInvalidArgument, "empty input image");
  const int s = TaskScale(task);
  ImageF32 out;
  if (std::holds_alternative<IdentityRestorer>(handle)) {
    out = s == 1 ? input : ReplicateUpscale(input, s);
  } else if (const auto* r = std::get_if<ResampleRestorer>(&handle)) {
    out = s == 1 ? input : Resample(input, input.width() * s, input.height() * s, r->method);
  } else {
    out = RunExternal(std::get<ExternalRestorer>(handle), input, task, image_id);
  }
  if (out.width() != input.width() * s || out.height() != input.height() * s ||
      out.channels() != input.channels()) {
    throw Error(ErrorCode::kShapeViolation,
                "restorer returned " + std::to_string(out.width()) + "x" +
                    std::to_string(out.height()) + "x" + std::to_string(out.channels()) +
                    ", expected " + std::to_string(input.width() * s) + "x" +
                    std::to_string(input.height() * s) + "x" +
                    std::to_string(input.channels()));
  }
  return out;
}

}  // namespace pf
