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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxbound/bounds.hpp"
#include "ctxbound/geometry.hpp"
#include "ctxbound/relation.hpp"

namespace ctxbound {

class InsufficientSamples : public std::runtime_error {
 public:
  InsufficientSamples() : std::runtime_error("insufficient samples for error type") {}
};

// The n most confident true detections and the n most confident false
// detections of one error type, n being the smaller of the two supplies.
struct BalancedSet {
  std::size_t n = 0;
  // Positions into the detection list; the first n are true.
  std::vector<std::size_t> positions;
};

BalancedSet select_balanced(std::span<const EvaluatedDetection> dets, ErrorType error_type);

// Accuracy of labelling every detection with the majority truth of its
// context group (ties predict true). `truth` and `context` are parallel.
double capacity_accuracy(std::span<const ContextValue> context, std::span<const bool> truth);

double capacity(const Relation& rel, const CategoryData& data, const BalancedSet& balanced);

struct CapacityResult {
  CategoryId category = 0;
  Relation relation;
  std::string relation_name;
  ErrorType error_type = ErrorType::Background;
  std::size_t n = 0;
  double accuracy = 0.5;
};

// Best accuracy over `relations`; ties go to the smaller canonical name.
CapacityResult max_capacity(const CategoryData& data, std::span<const Relation> relations,
                            ErrorType error_type);

}  // namespace ctxbound
