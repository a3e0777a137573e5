// Copyright 2026 The ctxbound Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unistd.h>

#include "ctxbound/dataset.hpp"

namespace ctxbound::testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ctxbound_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hand-built scenes for unit tests.
class SceneBuilder {
 public:
  ImageId image(std::int64_t width = 1000, std::int64_t height = 1000) {
    const ImageId id = static_cast<ImageId>(bundle_.images.size()) + 1;
    bundle_.images.push_back({id, width, height});
    return id;
  }
  CategoryId category(std::string name) {
    const CategoryId id = static_cast<CategoryId>(bundle_.categories.size()) + 1;
    bundle_.categories.push_back({id, std::move(name)});
    return id;
  }
  ObjectId object(ImageId image, CategoryId category, BoundingBox box) {
    const ObjectId id = static_cast<ObjectId>(bundle_.objects.size()) + 1;
    bundle_.objects.push_back({id, image, category, box});
    return id;
  }
  void detection(ImageId image, CategoryId category, BoundingBox box, double score) {
    bundle_.detections.push_back({image, category, box, score});
  }
  const DatasetBundle& bundle() const { return bundle_; }
  DatasetBundle& bundle() { return bundle_; }

 private:
  DatasetBundle bundle_;
};

}  // namespace ctxbound::testing
