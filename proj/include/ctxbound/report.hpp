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

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ctxbound/bounds.hpp"
#include "ctxbound/capacity.hpp"
#include "ctxbound/dataset.hpp"
#include "ctxbound/geometry.hpp"

namespace ctxbound {

std::string_view tool_version();

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// UTC ISO-8601; SOURCE_DATE_EPOCH, when set, replaces the wall clock.
std::string current_timestamp();

// Embedded in every report. Only the timestamp may differ between runs over
// identical inputs and configuration.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::string timestamp;

  void write_comment_header(std::ostream& out) const;
  nlohmann::json to_json() const;
};

// Fixed-point text with `decimals` digits.
std::string fixed(double value, int decimals);
std::string csv_field(const std::string& value);

// One row per (IoU threshold, category).
void write_bounds_csv(std::ostream& out, const RunManifest& manifest,
                      std::span<const SweepResult> sweeps);
nlohmann::json bounds_json(const RunManifest& manifest, std::span<const SweepResult> sweeps);

// Improvement series per category, sorted by the first threshold's
// improvement, plus the random-context series of the first threshold.
void write_plot_csv(std::ostream& out, const RunManifest& manifest,
                    std::span<const SweepResult> sweeps);

struct CapacityRow {
  double iou_threshold = 0.5;
  std::string category;
  ErrorType error_type = ErrorType::Background;
  // Set when the category had samples for this error type.
  std::optional<CapacityResult> result;
  std::string status;
};

void write_capacity_csv(std::ostream& out, const RunManifest& manifest,
                        std::span<const CapacityRow> rows);
nlohmann::json capacity_json(const RunManifest& manifest, std::span<const CapacityRow> rows);

struct OracleRow {
  double iou_threshold = 0.5;
  std::string category;
  std::string relation;
  std::string status;
  std::size_t bins = 0;
  double heuristic_ap = 0.0;
  double oracle_ap = 0.0;
  std::vector<std::size_t> heuristic_order;
  std::vector<std::size_t> oracle_order;

  double gap() const { return oracle_ap - heuristic_ap; }
};

void write_oracle_csv(std::ostream& out, const RunManifest& manifest,
                      std::span<const OracleRow> rows);
nlohmann::json oracle_json(const RunManifest& manifest, std::span<const OracleRow> rows);

struct MatchCounts {
  double iou_threshold = 0.5;
  std::string category;
  std::size_t objects = 0;
  std::size_t detections = 0;
  std::size_t true_count = 0;
  std::size_t localization = 0;
  std::size_t class_confusion = 0;
  std::size_t background = 0;
};

MatchCounts count_matches(double iou_threshold, std::string category, std::size_t objects,
                          std::span<const EvaluatedDetection> dets);
void write_match_table(std::ostream& out, const RunManifest& manifest,
                       std::span<const MatchCounts> rows);

// Audit dump: {image_id, category_id, bbox, score, status, error_type?, matched_gt?}.
nlohmann::json evaluated_to_json(std::span<const EvaluatedDetection> dets);

}  // namespace ctxbound
