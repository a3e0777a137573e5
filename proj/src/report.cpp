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

#include "ctxbound/report.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>

#include <openssl/evp.h>

#ifndef CTXBOUND_VERSION
#define CTXBOUND_VERSION "0.0.0"
#endif

namespace ctxbound {

using nlohmann::json;

std::string_view tool_version() { return CTXBOUND_VERSION; }

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open file: " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  hex.reserve(2 * len);
  static constexpr char kHex[] = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string current_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::write_comment_header(std::ostream& out) const {
  out << "# ctxbound " << tool_version() << ' ' << command << '\n';
  out << "# timestamp: " << timestamp << '\n';
  for (const auto& [k, v] : config) out << "# config " << k << ": " << v << '\n';
  for (const auto& [path, digest] : inputs) out << "# input " << path << " sha256:" << digest << '\n';
}

json RunManifest::to_json() const {
  json cfg = json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  json in = json::array();
  for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"sha256", digest}});
  return {{"tool", "ctxbound"},
          {"version", tool_version()},
          {"command", command},
          {"timestamp", timestamp},
          {"config", cfg},
          {"inputs", in}};
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string threshold_label(double t) { return fixed(t, 2); }

}  // namespace

void write_bounds_csv(std::ostream& out, const RunManifest& manifest,
                      std::span<const SweepResult> sweeps) {
  manifest.write_comment_header(out);
  out << "iou,category,status,positives,true_detections,best_relation,ap_bound,"
         "baseline_bound,improvement,random_mean,random_sd,degraded\n";
  for (const auto& sweep : sweeps) {
    for (const auto& c : sweep.categories) {
      out << threshold_label(sweep.iou_threshold) << ',' << csv_field(c.name) << ','
          << to_string(c.status) << ',' << c.positives << ',' << c.true_count << ',';
      if (const BoundResult* best = c.best()) {
        out << csv_field(best->relation_name) << ',' << fixed(best->ap_bound, 1) << ','
            << fixed(best->baseline_bound, 1) << ',' << fixed(best->improvement, 1) << ','
            << fixed(c.random.mean, 1) << ',' << fixed(c.random.stddev, 1) << ','
            << (best->degraded_bins ? "yes" : "no") << '\n';
      } else {
        out << ",,,,,,\n";
      }
    }
  }
}

json bounds_json(const RunManifest& manifest, std::span<const SweepResult> sweeps) {
  json results = json::array();
  for (const auto& sweep : sweeps) {
    for (const auto& c : sweep.categories) {
      json row = {{"iou", sweep.iou_threshold},
                  {"category", c.name},
                  {"category_id", c.category},
                  {"status", to_string(c.status)},
                  {"positives", c.positives},
                  {"true_detections", c.true_count},
                  {"detections", c.detections}};
      if (const BoundResult* best = c.best()) {
        row["best_relation"] = best->relation_name;
        row["ap_bound"] = best->ap_bound;
        row["baseline_bound"] = best->baseline_bound;
        row["improvement"] = best->improvement;
        row["degraded"] = best->degraded_bins;
        row["random_mean"] = c.random.mean;
        row["random_sd"] = c.random.stddev;
        row["random_trials"] = c.random.trial_improvements;
        row["relations_evaluated"] = c.ranking.size();
      }
      results.push_back(std::move(row));
    }
  }
  return {{"manifest", manifest.to_json()}, {"results", results}};
}

void write_plot_csv(std::ostream& out, const RunManifest& manifest,
                    std::span<const SweepResult> sweeps) {
  manifest.write_comment_header(out);
  out << "rank,category";
  for (const auto& s : sweeps) out << ",improvement_iou" << threshold_label(s.iou_threshold);
  if (!sweeps.empty()) out << ",random_iou" << threshold_label(sweeps.front().iou_threshold);
  out << '\n';
  if (sweeps.empty()) return;

  std::vector<const CategoryBounds*> order;
  for (const auto& c : sweeps.front().categories) {
    if (c.best()) order.push_back(&c);
  }
  std::stable_sort(order.begin(), order.end(), [](const CategoryBounds* a, const CategoryBounds* b) {
    if (a->best()->improvement != b->best()->improvement) {
      return a->best()->improvement > b->best()->improvement;
    }
    return a->name < b->name;
  });

  std::size_t rank = 0;
  for (const CategoryBounds* c : order) {
    out << ++rank << ',' << csv_field(c->name);
    for (const auto& s : sweeps) {
      out << ',';
      for (const auto& other : s.categories) {
        if (other.category == c->category && other.best()) out << fixed(other.best()->improvement, 3);
      }
    }
    out << ',' << fixed(c->random.mean, 3) << '\n';
  }
}

void write_capacity_csv(std::ostream& out, const RunManifest& manifest,
                        std::span<const CapacityRow> rows) {
  manifest.write_comment_header(out);
  out << "iou,category,error_type,n,best_relation,accuracy\n";
  for (const auto& r : rows) {
    out << threshold_label(r.iou_threshold) << ',' << csv_field(r.category) << ','
        << to_string(r.error_type) << ',';
    if (r.result) {
      out << r.result->n << ',' << csv_field(r.result->relation_name) << ','
          << fixed(r.result->accuracy, 3) << '\n';
    } else {
      out << "n/a,n/a,n/a\n";
    }
  }
}

json capacity_json(const RunManifest& manifest, std::span<const CapacityRow> rows) {
  json results = json::array();
  for (const auto& r : rows) {
    json row = {{"iou", r.iou_threshold},
                {"category", r.category},
                {"error_type", to_string(r.error_type)},
                {"status", r.status}};
    if (r.result) {
      row["n"] = r.result->n;
      row["best_relation"] = r.result->relation_name;
      row["accuracy"] = r.result->accuracy;
    }
    results.push_back(std::move(row));
  }
  return {{"manifest", manifest.to_json()}, {"results", results}};
}

namespace {

std::string order_string(std::span<const std::size_t> order) {
  std::string s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) s.push_back(' ');
    s += std::to_string(order[i] + 1);
  }
  return s;
}

}  // namespace

void write_oracle_csv(std::ostream& out, const RunManifest& manifest,
                      std::span<const OracleRow> rows) {
  manifest.write_comment_header(out);
  out << "iou,category,relation,status,bins,heuristic_ap,oracle_ap,gap,heuristic_order,oracle_order\n";
  for (const auto& r : rows) {
    out << threshold_label(r.iou_threshold) << ',' << csv_field(r.category) << ','
        << csv_field(r.relation) << ',' << r.status << ',';
    if (r.status == "ok") {
      out << r.bins << ',' << fixed(r.heuristic_ap, 1) << ',' << fixed(r.oracle_ap, 1) << ','
          << fixed(r.gap(), 2) << ',' << order_string(r.heuristic_order) << ','
          << order_string(r.oracle_order) << '\n';
    } else {
      out << ",,,,,\n";
    }
  }
}

json oracle_json(const RunManifest& manifest, std::span<const OracleRow> rows) {
  json results = json::array();
  for (const auto& r : rows) {
    json row = {{"iou", r.iou_threshold},
                {"category", r.category},
                {"relation", r.relation},
                {"status", r.status}};
    if (r.status == "ok") {
      row["bins"] = r.bins;
      row["heuristic_ap"] = r.heuristic_ap;
      row["oracle_ap"] = r.oracle_ap;
      row["gap"] = r.gap();
      row["heuristic_order"] = r.heuristic_order;
      row["oracle_order"] = r.oracle_order;
    }
    results.push_back(std::move(row));
  }
  return {{"manifest", manifest.to_json()}, {"results", results}};
}

MatchCounts count_matches(double iou_threshold, std::string category, std::size_t objects,
                          std::span<const EvaluatedDetection> dets) {
  MatchCounts c;
  c.iou_threshold = iou_threshold;
  c.category = std::move(category);
  c.objects = objects;
  c.detections = dets.size();
  for (const auto& d : dets) {
    if (d.is_true()) {
      ++c.true_count;
      continue;
    }
    switch (*d.error) {
      case ErrorType::Localization:
        ++c.localization;
        break;
      case ErrorType::ClassConfusion:
        ++c.class_confusion;
        break;
      case ErrorType::Background:
        ++c.background;
        break;
    }
  }
  return c;
}

void write_match_table(std::ostream& out, const RunManifest& manifest,
                       std::span<const MatchCounts> rows) {
  manifest.write_comment_header(out);
  out << "iou,category,objects,detections,true,localization,class_confusion,background\n";
  for (const auto& r : rows) {
    out << threshold_label(r.iou_threshold) << ',' << csv_field(r.category) << ',' << r.objects
        << ',' << r.detections << ',' << r.true_count << ',' << r.localization << ','
        << r.class_confusion << ',' << r.background << '\n';
  }
}

json evaluated_to_json(std::span<const EvaluatedDetection> dets) {
  json out = json::array();
  for (const auto& d : dets) {
    const BoundingBox& b = d.detection.box;
    json row = {{"image_id", d.detection.image_id},
                {"category_id", d.detection.category},
                {"bbox", json::array({b.x, b.y, b.w, b.h})},
                {"score", d.detection.confidence},
                {"status", d.is_true() ? "true" : "false"}};
    if (d.error) row["error_type"] = to_string(*d.error);
    if (d.matched_object) row["matched_gt"] = *d.matched_object;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace ctxbound
