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

// Minimal external restorer for the subprocess protocol. Copies the PNG on
// stdin to stdout unchanged, or, for tasks that upscale, writes a
// pixel-replicated image of the requested size.
//
//   --fail            exit 1 with a message instead of restoring
//   --fail-on ID      fail only for the given image_id
//   --crash-on ID     abort (SIGABRT) on the given image_id
//   --check-task      require the fd-3 document to match PF_TASK_JSON

#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "json.hpp"
#include "pf/degrade.hpp"
#include "pf/error.hpp"
#include "pf/image_io.hpp"

namespace {

std::string ReadAll(int fd) {
  std::string data;
  char buffer[65536];
  for (;;) {
    const ssize_t n = read(fd, buffer, sizeof(buffer));
    if (n > 0) {
      data.append(buffer, static_cast<std::size_t>(n));
    } else if (n == 0 || errno != EINTR) {
      break;
    }
  }
  return data;
}

bool WriteAll(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  bool fail = false, check_task = false;
  std::string fail_on, crash_on;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--fail") == 0) {
      fail = true;
    } else if (std::strcmp(argv[i], "--check-task") == 0) {
      check_task = true;
    } else if (std::strcmp(argv[i], "--fail-on") == 0 && i + 1 < argc) {
      fail_on = argv[++i];
    } else if (std::strcmp(argv[i], "--crash-on") == 0 && i + 1 < argc) {
      crash_on = argv[++i];
    } else {
      std::fprintf(stderr, "usage: pf-echo-restorer [--fail] [--fail-on ID] [--crash-on ID] [--check-task]\n");
      return 2;
    }
  }
  const char* env = std::getenv("PF_TASK_JSON");
  if (env == nullptr) {
    std::fprintf(stderr, "PF_TASK_JSON is not set\n");
    return 1;
  }
  try {
    const nlohmann::json task = nlohmann::json::parse(env);
    if (check_task) {
      const std::string fd3 = ReadAll(3);
      if (nlohmann::json::parse(fd3) != task) {
        std::fprintf(stderr, "task document on fd 3 differs from PF_TASK_JSON\n");
        return 1;
      }
    }
    const std::string id = task.value("image_id", std::string());
    if (fail || (!fail_on.empty() && id == fail_on)) {
      std::fprintf(stderr, "deliberate failure on %s\n", id.c_str());
      return 1;
    }
    if (!crash_on.empty() && id == crash_on) std::abort();
    const std::string input = ReadAll(0);
    const std::vector<std::uint8_t> bytes(input.begin(), input.end());
    const int out_w = task.at("output").at("width").get<int>();
    const int in_w = task.at("input").at("width").get<int>();
    if (out_w == in_w) return WriteAll(1, bytes) ? 0 : 1;
    const pf::ImageF32 img = pf::U8ToF32(pf::DecodeImage(bytes));
    const pf::ImageU8 up = pf::F32ToU8(pf::ReplicateUpscale(img, out_w / in_w));
    return WriteAll(1, pf::EncodePng(up)) ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pf-echo-restorer: %s\n", e.what());
    return 1;
  }
}
