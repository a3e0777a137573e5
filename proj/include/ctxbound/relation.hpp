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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "ctxbound/dataset.hpp"
#include "ctxbound/geometry.hpp"

namespace ctxbound {

// Reference frame for spatial relations. Cells are squares of side
// height_factor * detection height, centered on the detection; cell indices
// range over [-grid_extent, grid_extent] on both axes.
struct SpatialFrameConfig {
  double height_factor = 1.0;
  int grid_extent = 3;
};

// [vertical, horizontal]; down and right are positive, [0,0] holds the
// detection center.
struct Cell {
  int v = 0;
  int h = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

Cell spatial_cell(const BoundingBox& det_box, double px, double py,
                  const SpatialFrameConfig& cfg);

struct ConstantRelation {
  bool value = false;
  friend auto operator<=>(const ConstantRelation&, const ConstantRelation&) = default;
};

// Pseudo-random binary context; a pure function of (seed, detection index).
struct RandomRelation {
  std::uint64_t seed = 0;
  friend auto operator<=>(const RandomRelation&, const RandomRelation&) = default;
};

// Some object of `category` is in the image and does not overlap the
// detection (IoU <= 0.1).
struct CoOccurrenceRelation {
  CategoryId category = 0;
  friend auto operator<=>(const CoOccurrenceRelation&,
                          const CoOccurrenceRelation&) = default;
};

// Some non-overlapping object of `category` has its center in `cell`.
struct SpatialRelation {
  CategoryId category = 0;
  Cell cell;
  friend auto operator<=>(const SpatialRelation&, const SpatialRelation&) = default;
};

using AtomicRelation =
    std::variant<ConstantRelation, RandomRelation, CoOccurrenceRelation, SpatialRelation>;

enum class Connective { And, Or };

struct CompositeRelation {
  Connective op = Connective::And;
  AtomicRelation left;
  AtomicRelation right;
};

using Relation = std::variant<ConstantRelation, RandomRelation, CoOccurrenceRelation,
                              SpatialRelation, CompositeRelation>;

// Context value. Built-in relations produce 0 or 1.
using ContextValue = double;

Relation to_relation(const AtomicRelation& atom);
bool is_composable(const Relation& rel);

// Canonical report strings: const(0), random(7), cooccur(person),
// spatial(zebra,[0,-1]), or(spatial(zebra,[0,-1]),spatial(zebra,[0,2])).
std::string to_string(const Relation& rel, std::span<const Category> categories);

std::uint64_t random_context_hash(std::uint64_t seed, std::uint64_t detection_index);

// Evaluates `rel` for one detection against the ground-truth objects of its
// image (all categories).
bool eval_relation(const Relation& rel, const EvaluatedDetection& det,
                   std::span<const GroundTruthObject* const> image_objects,
                   const SpatialFrameConfig& cfg);

// const(0), then per category: cooccur(c) and spatial(c, cell) for v and h in
// [-G, G], row-major.
std::vector<Relation> enumerate_atomic_relations(std::span<const Category> categories,
                                                 const SpatialFrameConfig& cfg);

// And/Or pairs over the first k composable relations of a ranked list.
std::vector<Relation> compose_pairs(std::span<const Relation> ranked, std::size_t k);

std::vector<ContextValue> annotate_context(std::span<const EvaluatedDetection> dets,
                                           const Relation& rel,
                                           const DatasetBundle& bundle,
                                           const BundleIndex& index,
                                           const SpatialFrameConfig& cfg);

// Precomputed evaluation of relations over a fixed list of detections. Every
// detection's co-occurrence and spatial hits are collected once; a relation
// is then answered as the sorted list of positions where it holds.
class ContextTable {
 public:
  ContextTable(std::span<const EvaluatedDetection> dets, const DatasetBundle& bundle,
               const BundleIndex& index, const SpatialFrameConfig& cfg);

  std::size_t size() const { return detection_indices_.size(); }

  // Sorted positions (into the detection list) where `rel` evaluates to 1.
  std::vector<std::uint32_t> positions(const Relation& rel) const;
  std::vector<ContextValue> values(const Relation& rel) const;

 private:
  std::vector<std::uint32_t> atom_positions(const AtomicRelation& atom) const;

  // (category, v, h); v = h = kCoOccurrenceKey marks a co-occurrence entry.
  using Key = std::tuple<CategoryId, int, int>;
  static constexpr int kCoOccurrenceKey = 1 << 30;

  std::vector<std::size_t> detection_indices_;
  std::map<Key, std::vector<std::uint32_t>> hits_;
};

}  // namespace ctxbound
