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

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctxbound/dataset.hpp"

namespace ctxbound {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CountRange {
  int min = 1;
  int max = 1;
};

// Context objects of `context` are added with probability rho to images that
// hold `category` objects and with probability 1 - rho to the others.
struct PlantedContext {
  std::string category;
  std::string context;
  double rho = 1.0;
};

struct ErrorMixture {
  double localization = 0.0;
  double class_confusion = 0.0;
  double background = 1.0;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int images = 200;
  int image_width = 640;
  int image_height = 480;
  double box_min = 40.0;
  double box_max = 80.0;
  // Free margin kept around every placed object, in pixels.
  double object_gap = 40.0;

  // Detected categories.
  std::vector<std::string> categories{"object"};
  // Annotated but never detected.
  std::vector<std::string> context_categories;
  // Annotated, never detected; class-confusion errors sit on them.
  std::vector<std::string> confuser_categories;

  CountRange objects_per_image;
  std::map<std::string, CountRange> objects_per_image_by_category;
  // Probability that an image holds objects of a given detected category.
  double positive_rate = 0.5;
  std::vector<PlantedContext> plants;
  // Minimum Chebyshev distance between a context object's center and any
  // detected-category object's center; 0 disables the constraint.
  double context_clearance = 0.0;

  ErrorMixture mixture;
  // False detections per ground-truth object of the category.
  double false_per_true = 1.0;
  double detect_rate = 1.0;

  // IoU ranges the generator enforces by rejection sampling.
  double match_threshold = 0.5;
  double true_iou_min = 0.7;
  double loc_iou_min = 0.15;
  double loc_iou_max = 0.45;
  // Maximum offset / scale perturbation, as a fraction of the box size.
  double true_jitter = 0.15;
  double loc_jitter = 0.6;

  double true_score_mean = 0.7;
  double true_score_sd = 0.15;
  double false_score_mean = 0.5;
  double false_score_sd = 0.15;

  CountRange objects_for(const std::string& category) const;
};

// Throws SynthError describing the first violated constraint.
void validate(const SynthConfig& cfg);

// Flat "key = value" text; '#' starts a comment. `plant` may repeat
// (category:context:rho) and `objects_per_image.<category>` overrides the
// global count range ("min-max").
SynthConfig parse_synth_config(std::string_view text);
SynthConfig load_synth_config(const std::filesystem::path& path);

DatasetBundle generate(const SynthConfig& cfg);

}  // namespace ctxbound
