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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ctxbound/dataset.hpp"
#include "ctxbound/geometry.hpp"
#include "ctxbound/synth.hpp"
#include "support/fixtures.hpp"

using namespace ctxbound;
using ctxbound::testing::TempDir;

namespace {

struct Tally {
  std::size_t trues = 0;
  std::size_t localization = 0;
  std::size_t class_confusion = 0;
  std::size_t background = 0;
  std::size_t falses() const { return localization + class_confusion + background; }
};

Tally tally(const DatasetBundle& bundle, const std::vector<std::string>& targets) {
  const BundleIndex index(bundle);
  Tally t;
  for (const auto& c : bundle.categories) {
    if (std::find(targets.begin(), targets.end(), c.name) == targets.end()) continue;
    for (const auto& d : match_category(bundle, index, c.id, MatchConfig{})) {
      if (d.is_true()) {
        ++t.trues;
      } else if (d.error == ErrorType::Localization) {
        ++t.localization;
      } else if (d.error == ErrorType::ClassConfusion) {
        ++t.class_confusion;
      } else {
        ++t.background;
      }
    }
  }
  return t;
}

SynthConfig base(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.images = 150;
  cfg.categories = {"dog", "cat"};
  cfg.context_categories = {"ball"};
  cfg.confuser_categories = {"fox", "wolf"};
  cfg.plants = {{"dog", "ball", 0.9}};
  cfg.objects_per_image = {1, 2};
  return cfg;
}

}  // namespace

TEST_CASE("same seed, same files") {
  const SynthConfig cfg = base(3);
  TempDir dir;
  for (const char* run : {"a", "b"}) {
    const DatasetBundle bundle = generate(cfg);
    write_ground_truth(dir / (std::string(run) + "_gt.json"), bundle);
    write_detections(dir / (std::string(run) + "_det.json"), bundle.detections);
  }
  CHECK(testing::read_text(dir / "a_gt.json") == testing::read_text(dir / "b_gt.json"));
  CHECK(testing::read_text(dir / "a_det.json") == testing::read_text(dir / "b_det.json"));

  SynthConfig other = cfg;
  other.seed = 4;
  CHECK_FALSE(generate(other) == generate(cfg));
}

TEST_CASE("generated bundles are valid") {
  const DatasetBundle bundle = generate(base(5));
  CHECK(validate_bundle(bundle).empty());
  // Planted objects never overlap.
  for (std::size_t i = 0; i < bundle.objects.size(); ++i) {
    for (std::size_t j = i + 1; j < bundle.objects.size(); ++j) {
      if (bundle.objects[i].image_id != bundle.objects[j].image_id) continue;
      CHECK(iou(bundle.objects[i].box, bundle.objects[j].box) == 0.0);
    }
  }
}

TEST_CASE("error types close the loop") {
  const std::vector<std::string> targets{"dog", "cat"};
  struct Case {
    ErrorMixture mix;
    const char* name;
  };
  for (const Case& c : {Case{{1, 0, 0}, "localization"}, Case{{0, 1, 0}, "class confusion"},
                        Case{{0, 0, 1}, "background"}}) {
    CAPTURE(c.name);
    SynthConfig cfg = base(6);
    cfg.mixture = c.mix;
    const DatasetBundle bundle = generate(cfg);
    const Tally t = tally(bundle, targets);
    std::size_t objects = 0;
    for (const auto& o : bundle.objects) {
      if (o.category <= 2) ++objects;
    }
    CHECK(t.trues == objects);
    CHECK(t.falses() == objects);
    CHECK(t.localization == (c.mix.localization == 1 ? objects : 0));
    CHECK(t.class_confusion == (c.mix.class_confusion == 1 ? objects : 0));
    CHECK(t.background == (c.mix.background == 1 ? objects : 0));
  }
}

TEST_CASE("mixture fractions within three standard errors") {
  const std::vector<std::string> targets{"dog", "cat"};
  SynthConfig cfg = base(7);
  cfg.images = 900;
  cfg.mixture = {0.5, 0.2, 0.3};
  cfg.false_per_true = 1.0;
  const Tally t = tally(generate(cfg), targets);
  const double n = static_cast<double>(t.falses());
  REQUIRE(n >= 1000);
  for (auto [count, weight] : {std::pair{t.localization, 0.5}, std::pair{t.class_confusion, 0.2},
                               std::pair{t.background, 0.3}}) {
    const double se = std::sqrt(weight * (1 - weight) / n);
    CHECK(std::abs(static_cast<double>(count) / n - weight) <= 3 * se);
  }
}

TEST_CASE("planted co-occurrence rate") {
  SynthConfig cfg;
  cfg.seed = 8;
  cfg.images = 2000;
  cfg.categories = {"dog"};
  cfg.context_categories = {"ball"};
  cfg.plants = {{"dog", "ball", 0.8}};
  const DatasetBundle bundle = generate(cfg);
  std::vector<int> has_dog(2001, 0);
  std::vector<int> has_ball(2001, 0);
  for (const auto& o : bundle.objects) (o.category == 1 ? has_dog : has_ball)[o.image_id] = 1;
  double pos = 0, pos_ball = 0, neg = 0, neg_ball = 0;
  for (int i = 1; i <= 2000; ++i) {
    (has_dog[i] ? pos : neg) += 1;
    (has_dog[i] ? pos_ball : neg_ball) += has_ball[i];
  }
  CHECK(std::abs(pos_ball / pos - 0.8) < 3 * std::sqrt(0.16 / pos));
  CHECK(std::abs(neg_ball / neg - 0.2) < 3 * std::sqrt(0.16 / neg));
}

TEST_CASE("config text") {
  const SynthConfig cfg = parse_synth_config(R"(
# scene
seed = 42
images = 30
categories = dog, cat
context_categories = ball
confuser_categories = fox
objects_per_image = 1-3
objects_per_image.cat = 2-2
plant = dog:ball:0.75
mix_localization = 0.5   # half
mix_class_confusion = 0.25
mix_background = 0.25
true_score_mean = 0.8
)");
  CHECK(cfg.seed == 42);
  CHECK(cfg.images == 30);
  CHECK(cfg.categories == std::vector<std::string>{"dog", "cat"});
  CHECK(cfg.objects_per_image.min == 1);
  CHECK(cfg.objects_per_image.max == 3);
  CHECK(cfg.objects_for("cat").min == 2);
  CHECK(cfg.objects_for("dog").max == 3);
  REQUIRE(cfg.plants.size() == 1);
  CHECK(cfg.plants[0].rho == 0.75);
  CHECK(cfg.mixture.localization == 0.5);
  CHECK(cfg.true_score_mean == 0.8);
  CHECK_NOTHROW(generate(cfg));

  CHECK_THROWS_AS(parse_synth_config("colour = red\n"), SynthError);
  CHECK_THROWS_AS(parse_synth_config("images\n"), SynthError);
  CHECK_THROWS_AS(parse_synth_config("images = many\n"), SynthError);

  TempDir dir;
  testing::write_text(dir / "s.cfg", "seed = 9\nimages = 5\n");
  CHECK(load_synth_config(dir / "s.cfg").images == 5);
  CHECK_THROWS_AS(load_synth_config(dir / "missing.cfg"), SynthError);
}

TEST_CASE("invalid configurations") {
  SynthConfig cfg = base(1);
  cfg.mixture = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(generate(cfg), SynthError);

  cfg = base(1);
  cfg.plants = {{"dog", "ball", 1.5}};
  CHECK_THROWS_AS(generate(cfg), SynthError);

  cfg = base(1);
  cfg.plants = {{"dog", "tree", 0.5}};
  CHECK_THROWS_AS(generate(cfg), SynthError);

  cfg = base(1);
  cfg.image_width = 100;
  cfg.image_height = 100;
  cfg.objects_per_image = {6, 6};
  CHECK_THROWS_WITH_AS(generate(cfg), doctest::Contains("infeasible placement"), SynthError);

  cfg = base(1);
  cfg.confuser_categories.clear();
  cfg.mixture = {0, 1, 0};
  CHECK_THROWS_AS(generate(cfg), SynthError);

  cfg = base(1);
  cfg.positive_rate = 1.0;
  CHECK_THROWS_AS(generate(cfg), SynthError);  // background errors need negative images
}
