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

#include "ctxbound/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "ctxbound/geometry.hpp"

namespace ctxbound {

namespace {

constexpr int kMaxAttempts = 20000;

// Portable draws on top of mt19937_64; the std distributions are
// implementation-defined, which would break byte-identical output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo + 1))); }
  double normal(double mean, double sd) {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || !std::isfinite(v)) {
    throw SynthError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (std::floor(v) != v) throw SynthError("config key '" + key + "': expected an integer");
  return static_cast<int>(v);
}

CountRange to_range(const std::string& key, const std::string& value) {
  const auto parts = split(value, '-');
  if (parts.size() == 1) {
    const int n = to_int(key, parts[0]);
    return {n, n};
  }
  if (parts.size() != 2) throw SynthError("config key '" + key + "': expected 'min-max'");
  return {to_int(key, parts[0]), to_int(key, parts[1])};
}

std::vector<std::string> to_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  for (auto& s : split(value, ',')) out.push_back(s);
  return out;
}

BoundingBox jittered(Rng& rng, const BoundingBox& src, double jitter) {
  BoundingBox b;
  b.w = src.w * (1.0 + rng.uniform(-jitter, jitter));
  b.h = src.h * (1.0 + rng.uniform(-jitter, jitter));
  const double cx = src.center_x() + rng.uniform(-jitter, jitter) * src.w;
  const double cy = src.center_y() + rng.uniform(-jitter, jitter) * src.h;
  b.x = cx - 0.5 * b.w;
  b.y = cy - 0.5 * b.h;
  return b;
}

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  DatasetBundle run() {
    declare_categories();
    place_scenes();
    plan_false_detections();
    emit_true_detections();
    emit_false_detections();
    return std::move(bundle_);
  }

 private:
  struct PlannedFalse {
    CategoryId category;
    ErrorType type;
    ImageId image;
    std::size_t source;  // object position (localization / class confusion)
  };

  CategoryId id_of(const std::string& name) const {
    for (const auto& c : bundle_.categories) {
      if (c.name == name) return c.id;
    }
    throw SynthError("unknown category '" + name + "'");
  }

  void declare_categories() {
    for (const auto* list : {&cfg_.categories, &cfg_.context_categories, &cfg_.confuser_categories}) {
      for (const auto& name : *list) {
        bundle_.categories.push_back({static_cast<CategoryId>(bundle_.categories.size() + 1), name});
      }
    }
    for (const auto& name : cfg_.context_categories) context_ids_.insert(id_of(name));
    for (const auto& name : cfg_.categories) target_ids_.push_back(id_of(name));
  }

  bool clear_of(const BoundingBox& box, ImageId image, double gap) const {
    for (std::size_t oi : image_objects_[image - 1]) {
      const BoundingBox& o = bundle_.objects[oi].box;
      if (box.x < o.x + o.w + gap && o.x < box.x + box.w + gap && box.y < o.y + o.h + gap &&
          o.y < box.y + box.h + gap) {
        return false;
      }
    }
    return true;
  }

  bool respects_clearance(const BoundingBox& box, ImageId image) const {
    for (std::size_t oi : image_objects_[image - 1]) {
      const GroundTruthObject& o = bundle_.objects[oi];
      if (std::find(target_ids_.begin(), target_ids_.end(), o.category) == target_ids_.end()) continue;
      const double d = std::max(std::abs(box.center_x() - o.box.center_x()),
                                std::abs(box.center_y() - o.box.center_y()));
      if (d < cfg_.context_clearance) return false;
    }
    return true;
  }

  std::size_t place_object(ImageId image, CategoryId category) {
    const bool is_context = context_ids_.contains(category);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      BoundingBox b;
      b.w = rng_.uniform(cfg_.box_min, cfg_.box_max);
      b.h = rng_.uniform(cfg_.box_min, cfg_.box_max);
      b.x = rng_.uniform(0.0, cfg_.image_width - b.w);
      b.y = rng_.uniform(0.0, cfg_.image_height - b.h);
      if (!clear_of(b, image, cfg_.object_gap)) continue;
      if (is_context && cfg_.context_clearance > 0.0 && !respects_clearance(b, image)) continue;
      const std::size_t pos = bundle_.objects.size();
      bundle_.objects.push_back({static_cast<ObjectId>(pos + 1), image, category, b});
      image_objects_[image - 1].push_back(pos);
      return pos;
    }
    throw SynthError("infeasible placement in image " + std::to_string(image) +
                     ": image too small for the requested objects");
  }

  void place_scenes() {
    image_objects_.resize(static_cast<std::size_t>(cfg_.images));
    positive_.assign(target_ids_.size(), std::vector<bool>(static_cast<std::size_t>(cfg_.images)));
    for (int i = 0; i < cfg_.images; ++i) {
      const ImageId image = i + 1;
      bundle_.images.push_back({image, cfg_.image_width, cfg_.image_height});
      for (std::size_t c = 0; c < target_ids_.size(); ++c) {
        if (!rng_.bernoulli(cfg_.positive_rate)) continue;
        positive_[c][static_cast<std::size_t>(i)] = true;
        const CountRange range = cfg_.objects_for(cfg_.categories[c]);
        const int count = rng_.integer(range.min, range.max);
        for (int k = 0; k < count; ++k) place_object(image, target_ids_[c]);
      }
      for (const auto& plant : cfg_.plants) {
        const std::size_t c = static_cast<std::size_t>(
            std::find(cfg_.categories.begin(), cfg_.categories.end(), plant.category) -
            cfg_.categories.begin());
        const double p = positive_[c][static_cast<std::size_t>(i)] ? plant.rho : 1.0 - plant.rho;
        if (rng_.bernoulli(p)) place_object(image, id_of(plant.context));
      }
    }
  }

  ImageId pick_negative_image(std::size_t c, std::string_view why) {
    std::vector<ImageId> candidates;
    for (int i = 0; i < cfg_.images; ++i) {
      if (!positive_[c][static_cast<std::size_t>(i)]) candidates.push_back(i + 1);
    }
    if (candidates.empty()) {
      throw SynthError("no image without '" + cfg_.categories[c] + "' available for " +
                       std::string(why) + " errors");
    }
    return candidates[rng_.index(candidates.size())];
  }

  void plan_false_detections() {
    for (std::size_t c = 0; c < target_ids_.size(); ++c) {
      std::vector<std::size_t> sources;
      for (std::size_t i = 0; i < bundle_.objects.size(); ++i) {
        if (bundle_.objects[i].category == target_ids_[c]) sources.push_back(i);
      }
      const auto count =
          static_cast<std::size_t>(std::llround(cfg_.false_per_true * static_cast<double>(sources.size())));
      for (std::size_t k = 0; k < count; ++k) {
        const double u = rng_.uniform();
        PlannedFalse plan{target_ids_[c], ErrorType::Background, 0, 0};
        if (u < cfg_.mixture.localization) {
          if (sources.empty()) {
            throw SynthError("no '" + cfg_.categories[c] + "' objects for localization errors");
          }
          plan.type = ErrorType::Localization;
          plan.source = sources[rng_.index(sources.size())];
          plan.image = bundle_.objects[plan.source].image_id;
        } else if (u < cfg_.mixture.localization + cfg_.mixture.class_confusion) {
          if (cfg_.confuser_categories.empty()) {
            throw SynthError("class-confusion errors need confuser_categories");
          }
          plan.type = ErrorType::ClassConfusion;
          plan.image = pick_negative_image(c, "class-confusion");
          const auto& confuser =
              cfg_.confuser_categories[rng_.index(cfg_.confuser_categories.size())];
          plan.source = place_object(plan.image, id_of(confuser));
        } else {
          plan.image = pick_negative_image(c, "background");
        }
        planned_.push_back(plan);
      }
    }
  }

  // Jittered copy of `source` whose IoU with it lies in [lo, hi] while every
  // other object of the image stays below both that IoU and `others_max`.
  BoundingBox sample_near(std::size_t source, double jitter, double lo, double hi,
                          double others_max) {
    const GroundTruthObject& src = bundle_.objects[source];
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const BoundingBox b = jittered(rng_, src.box, jitter);
      const double own = iou(b, src.box);
      if (own < lo || own > hi) continue;
      bool ok = true;
      for (std::size_t oi : image_objects_[src.image_id - 1]) {
        if (oi == source) continue;
        const double other = iou(b, bundle_.objects[oi].box);
        if (other >= own || other > others_max) {
          ok = false;
          break;
        }
      }
      if (ok) return b;
    }
    throw SynthError("could not sample a box in the requested IoU range; widen the jitter");
  }

  void emit_true_detections() {
    const std::size_t object_count = bundle_.objects.size();
    for (std::size_t i = 0; i < object_count; ++i) {
      const GroundTruthObject& o = bundle_.objects[i];
      if (std::find(target_ids_.begin(), target_ids_.end(), o.category) == target_ids_.end()) continue;
      if (!rng_.bernoulli(cfg_.detect_rate)) continue;
      const BoundingBox b = sample_near(i, cfg_.true_jitter, cfg_.true_iou_min, 1.0,
                                        MatchConfig::kErrorOverlapFloor);
      bundle_.detections.push_back(
          {o.image_id, o.category, b, rng_.normal(cfg_.true_score_mean, cfg_.true_score_sd)});
    }
  }

  void emit_false_detections() {
    for (const PlannedFalse& plan : planned_) {
      BoundingBox b;
      switch (plan.type) {
        case ErrorType::Localization:
          b = sample_near(plan.source, cfg_.loc_jitter, cfg_.loc_iou_min, cfg_.loc_iou_max,
                          MatchConfig::kErrorOverlapFloor);
          break;
        case ErrorType::ClassConfusion:
          b = sample_near(plan.source, cfg_.true_jitter, cfg_.true_iou_min, 1.0,
                          MatchConfig::kErrorOverlapFloor);
          break;
        case ErrorType::Background:
          b = sample_background(plan.image);
          break;
      }
      bundle_.detections.push_back(
          {plan.image, plan.category, b, rng_.normal(cfg_.false_score_mean, cfg_.false_score_sd)});
    }
  }

  BoundingBox sample_background(ImageId image) {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      BoundingBox b;
      b.w = rng_.uniform(cfg_.box_min, cfg_.box_max);
      b.h = rng_.uniform(cfg_.box_min, cfg_.box_max);
      b.x = rng_.uniform(0.0, cfg_.image_width - b.w);
      b.y = rng_.uniform(0.0, cfg_.image_height - b.h);
      bool ok = true;
      for (std::size_t oi : image_objects_[image - 1]) {
        if (iou(b, bundle_.objects[oi].box) > MatchConfig::kErrorOverlapFloor) {
          ok = false;
          break;
        }
      }
      if (ok) return b;
    }
    throw SynthError("infeasible background placement in image " + std::to_string(image));
  }

  const SynthConfig& cfg_;
  Rng rng_;
  DatasetBundle bundle_;
  std::set<CategoryId> context_ids_;
  std::vector<CategoryId> target_ids_;
  std::vector<std::vector<std::size_t>> image_objects_;
  std::vector<std::vector<bool>> positive_;
  std::vector<PlannedFalse> planned_;
};

}  // namespace

CountRange SynthConfig::objects_for(const std::string& category) const {
  auto it = objects_per_image_by_category.find(category);
  return it == objects_per_image_by_category.end() ? objects_per_image : it->second;
}

void validate(const SynthConfig& cfg) {
  auto fail = [](const std::string& msg) { throw SynthError("invalid synth config: " + msg); };
  if (cfg.images < 1) fail("images must be at least 1");
  if (cfg.categories.empty()) fail("at least one detected category is required");
  if (!(cfg.box_min > 0.0) || cfg.box_max < cfg.box_min) fail("need 0 < box_min <= box_max");
  if (cfg.box_max > cfg.image_width || cfg.box_max > cfg.image_height) {
    fail("box_max exceeds the image size");
  }
  std::set<std::string> names;
  for (const auto* list : {&cfg.categories, &cfg.context_categories, &cfg.confuser_categories}) {
    for (const auto& n : *list) {
      if (n.empty()) fail("empty category name");
      if (!names.insert(n).second) fail("category '" + n + "' declared twice");
    }
  }
  auto check_range = [&](const CountRange& r, const std::string& what) {
    if (r.min < 0 || r.max < r.min) fail("bad object count range for " + what);
  };
  check_range(cfg.objects_per_image, "objects_per_image");
  for (const auto& [name, range] : cfg.objects_per_image_by_category) {
    if (std::find(cfg.categories.begin(), cfg.categories.end(), name) == cfg.categories.end()) {
      fail("objects_per_image override for unknown category '" + name + "'");
    }
    check_range(range, name);
  }
  if (cfg.positive_rate < 0.0 || cfg.positive_rate > 1.0) fail("positive_rate must lie in [0,1]");
  for (const auto& p : cfg.plants) {
    if (std::find(cfg.categories.begin(), cfg.categories.end(), p.category) == cfg.categories.end()) {
      fail("plant refers to unknown detected category '" + p.category + "'");
    }
    if (std::find(cfg.context_categories.begin(), cfg.context_categories.end(), p.context) ==
        cfg.context_categories.end()) {
      fail("plant refers to unknown context category '" + p.context + "'");
    }
    if (p.rho < 0.0 || p.rho > 1.0) fail("rho must lie in [0,1]");
  }
  const ErrorMixture& m = cfg.mixture;
  if (m.localization < 0.0 || m.class_confusion < 0.0 || m.background < 0.0 ||
      std::abs(m.localization + m.class_confusion + m.background - 1.0) > 1e-9) {
    fail("error mixture weights must be non-negative and sum to 1");
  }
  if (cfg.false_per_true < 0.0) fail("false_per_true must be non-negative");
  if (cfg.detect_rate < 0.0 || cfg.detect_rate > 1.0) fail("detect_rate must lie in [0,1]");
  if (!(cfg.match_threshold > 0.0 && cfg.match_threshold <= 1.0)) fail("match_threshold must lie in (0,1]");
  if (cfg.true_iou_min < cfg.match_threshold || cfg.true_iou_min > 1.0) {
    fail("true_iou_min must lie in [match_threshold, 1]");
  }
  if (!(cfg.loc_iou_min > 0.1) || cfg.loc_iou_max >= cfg.match_threshold ||
      cfg.loc_iou_min >= cfg.loc_iou_max) {
    fail("need 0.1 < loc_iou_min < loc_iou_max < match_threshold");
  }
  if (!(cfg.true_jitter > 0.0 && cfg.true_jitter < 1.0) || !(cfg.loc_jitter > 0.0 && cfg.loc_jitter < 1.0)) {
    fail("jitter fractions must lie in (0,1)");
  }
  if (cfg.true_score_sd < 0.0 || cfg.false_score_sd < 0.0) fail("score spreads must be non-negative");
  if (cfg.object_gap < 0.0 || cfg.context_clearance < 0.0) fail("gaps must be non-negative");
}

SynthConfig parse_synth_config(std::string_view text) {
  SynthConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw SynthError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));

    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_double(key, value));
    } else if (key == "images") {
      cfg.images = to_int(key, value);
    } else if (key == "image_width") {
      cfg.image_width = to_int(key, value);
    } else if (key == "image_height") {
      cfg.image_height = to_int(key, value);
    } else if (key == "box_min") {
      cfg.box_min = to_double(key, value);
    } else if (key == "box_max") {
      cfg.box_max = to_double(key, value);
    } else if (key == "object_gap") {
      cfg.object_gap = to_double(key, value);
    } else if (key == "categories") {
      cfg.categories = to_list(value);
    } else if (key == "context_categories") {
      cfg.context_categories = to_list(value);
    } else if (key == "confuser_categories") {
      cfg.confuser_categories = to_list(value);
    } else if (key == "objects_per_image") {
      cfg.objects_per_image = to_range(key, value);
    } else if (key.starts_with("objects_per_image.")) {
      cfg.objects_per_image_by_category[key.substr(18)] = to_range(key, value);
    } else if (key == "positive_rate") {
      cfg.positive_rate = to_double(key, value);
    } else if (key == "plant") {
      const auto parts = split(value, ':');
      if (parts.size() != 3) throw SynthError("plant expects 'category:context:rho'");
      cfg.plants.push_back({parts[0], parts[1], to_double(key, parts[2])});
    } else if (key == "context_clearance") {
      cfg.context_clearance = to_double(key, value);
    } else if (key == "mix_localization") {
      cfg.mixture.localization = to_double(key, value);
    } else if (key == "mix_class_confusion") {
      cfg.mixture.class_confusion = to_double(key, value);
    } else if (key == "mix_background") {
      cfg.mixture.background = to_double(key, value);
    } else if (key == "false_per_true") {
      cfg.false_per_true = to_double(key, value);
    } else if (key == "detect_rate") {
      cfg.detect_rate = to_double(key, value);
    } else if (key == "match_threshold") {
      cfg.match_threshold = to_double(key, value);
    } else if (key == "true_iou_min") {
      cfg.true_iou_min = to_double(key, value);
    } else if (key == "loc_iou_min") {
      cfg.loc_iou_min = to_double(key, value);
    } else if (key == "loc_iou_max") {
      cfg.loc_iou_max = to_double(key, value);
    } else if (key == "true_jitter") {
      cfg.true_jitter = to_double(key, value);
    } else if (key == "loc_jitter") {
      cfg.loc_jitter = to_double(key, value);
    } else if (key == "true_score_mean") {
      cfg.true_score_mean = to_double(key, value);
    } else if (key == "true_score_sd") {
      cfg.true_score_sd = to_double(key, value);
    } else if (key == "false_score_mean") {
      cfg.false_score_mean = to_double(key, value);
    } else if (key == "false_score_sd") {
      cfg.false_score_sd = to_double(key, value);
    } else {
      throw SynthError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SynthError("cannot open config: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_synth_config(buffer.str());
}

DatasetBundle generate(const SynthConfig& cfg) {
  validate(cfg);
  return Generator(cfg).run();
}

}  // namespace ctxbound
