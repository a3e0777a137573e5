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

// ctxbound command-line front end: match, bounds, capacity, oracle, synth.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctxbound/ap.hpp"
#include "ctxbound/bounds.hpp"
#include "ctxbound/capacity.hpp"
#include "ctxbound/dataset.hpp"
#include "ctxbound/geometry.hpp"
#include "ctxbound/relation.hpp"
#include "ctxbound/report.hpp"
#include "ctxbound/synth.hpp"

namespace {

using namespace ctxbound;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitNothing = 3;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string gt;
  std::string det;
  std::vector<double> iou{0.5};
  std::size_t bins = 10;
  int grid = 3;
  double height_factor = 1.0;
  std::size_t top_k = 50;
  std::size_t trials = 10;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";

  // Subcommand-specific.
  std::string plot;
  std::string dump;
  std::string pool = "full";
  std::string bin_counts;
  std::optional<std::int64_t> pos;
  std::string config;
};

void add_shared(CLI::App* sub, Options& o) {
  sub->add_option("--gt", o.gt, "ground-truth annotation JSON");
  sub->add_option("--det", o.det, "detection results JSON");
  sub->add_option("--iou", o.iou, "IoU thresholds, comma separated")->delimiter(',');
  sub->add_option("--bins", o.bins, "confidence bins (m1)");
  sub->add_option("--grid", o.grid, "spatial grid extent G");
  sub->add_option("--height-factor", o.height_factor, "cell side as a multiple of box height");
  sub->add_option("--top-k", o.top_k, "atoms entering composition");
  sub->add_option("--trials", o.trials, "random-context trials");
  sub->add_option("--seed", o.seed, "random-context seed base");
  sub->add_option("--out", o.out, "output file (stdout when omitted)");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

SearchConfig search_config(const Options& o) {
  if (o.bins == 0) throw InputError("--bins must be at least 1");
  if (o.grid < 0) throw InputError("--grid must be non-negative");
  if (!(o.height_factor > 0.0)) throw InputError("--height-factor must be positive");
  if (o.trials == 0) throw InputError("--trials must be at least 1");
  if (o.iou.empty()) throw InputError("--iou needs at least one threshold");
  for (double t : o.iou) {
    if (!(t > 0.0 && t <= 1.0)) throw InputError("IoU thresholds must lie in (0, 1]");
  }
  SearchConfig cfg;
  cfg.confidence_bins = o.bins;
  cfg.top_k = o.top_k;
  cfg.random_trials = o.trials;
  cfg.random_seed_base = o.seed.value_or(0);
  cfg.frame.grid_extent = o.grid;
  cfg.frame.height_factor = o.height_factor;
  return cfg;
}

std::string join_thresholds(const std::vector<double>& values) {
  std::string s;
  for (double v : values) {
    if (!s.empty()) s.push_back(',');
    s += fixed(v, 2);
  }
  return s;
}

RunManifest manifest_for(const std::string& command, const Options& o) {
  RunManifest m;
  m.command = command;
  m.config = {{"iou", join_thresholds(o.iou)},
              {"bins", std::to_string(o.bins)},
              {"grid", std::to_string(o.grid)},
              {"height_factor", fixed(o.height_factor, 4)},
              {"top_k", std::to_string(o.top_k)},
              {"trials", std::to_string(o.trials)},
              {"seed", std::to_string(o.seed.value_or(0))},
              {"format", o.format}};
  m.timestamp = current_timestamp();
  return m;
}

DatasetBundle load_bundle(const Options& o, RunManifest& manifest) {
  if (o.gt.empty()) throw InputError("--gt is required");
  if (o.det.empty()) throw InputError("--det is required");
  DatasetBundle bundle = DatasetBundle::from(load_ground_truth(o.gt), load_detections(o.det));
  const auto issues = validate_bundle(bundle);
  if (!issues.empty()) {
    std::string msg = "input validation failed:";
    for (const auto& issue : issues) msg += "\n  " + issue.message;
    throw InputError(msg);
  }
  manifest.inputs = {{o.gt, sha256_file(o.gt)}, {o.det, sha256_file(o.det)}};
  return bundle;
}

template <typename Writer>
void emit(const std::string& path, Writer&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  write(out);
}

void emit_json(const std::string& path, const json& doc) {
  emit(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

int run_match(const Options& o) {
  RunManifest manifest = manifest_for("match", o);
  (void)search_config(o);
  const DatasetBundle bundle = load_bundle(o, manifest);
  const BundleIndex index(bundle);

  std::vector<MatchCounts> rows;
  json dump = json::array();
  for (double t : o.iou) {
    MatchConfig cfg;
    cfg.iou_threshold = t;
    json per_threshold = json::array();
    for (const auto& c : bundle.categories) {
      const auto dets = match_category(bundle, index, c.id, cfg);
      rows.push_back(count_matches(t, c.name, index.objects_of(c.id).size(), dets));
      for (auto& entry : evaluated_to_json(dets)) per_threshold.push_back(std::move(entry));
    }
    dump.push_back({{"iou", t}, {"detections", per_threshold}});
  }

  if (!o.dump.empty()) emit_json(o.dump, {{"manifest", manifest.to_json()}, {"evaluated", dump}});
  if (o.format == "json") {
    json counts = json::array();
    for (const auto& r : rows) {
      counts.push_back({{"iou", r.iou_threshold},
                        {"category", r.category},
                        {"objects", r.objects},
                        {"detections", r.detections},
                        {"true", r.true_count},
                        {"localization", r.localization},
                        {"class_confusion", r.class_confusion},
                        {"background", r.background}});
    }
    emit_json(o.out, {{"manifest", manifest.to_json()}, {"counts", counts}, {"evaluated", dump}});
  } else {
    emit(o.out, [&](std::ostream& out) { write_match_table(out, manifest, rows); });
  }
  return kExitOk;
}

int run_bounds(const Options& o) {
  RunManifest manifest = manifest_for("bounds", o);
  const SearchConfig cfg = search_config(o);
  const DatasetBundle bundle = load_bundle(o, manifest);
  const std::vector<SweepResult> sweeps = iou_sweep(bundle, cfg, o.iou);

  if (o.format == "json") {
    emit_json(o.out, bounds_json(manifest, sweeps));
  } else {
    emit(o.out, [&](std::ostream& out) { write_bounds_csv(out, manifest, sweeps); });
  }
  if (!o.plot.empty()) {
    emit(o.plot, [&](std::ostream& out) { write_plot_csv(out, manifest, sweeps); });
  }

  for (const auto& s : sweeps) {
    for (const auto& c : s.categories) {
      if (c.status == CategoryStatus::Ok) return kExitOk;
    }
  }
  std::cerr << "ctxbound: no category is analyzable\n";
  return kExitNothing;
}

std::vector<Relation> capacity_pool(const CategoryData& data, const std::string& pool) {
  if (pool == "const") return {ConstantRelation{false}};
  if (pool == "atoms" || !data.analyzable()) {
    return enumerate_atomic_relations(data.categories(), data.config().frame);
  }
  return search_space(data);
}

int run_capacity(const Options& o) {
  RunManifest manifest = manifest_for("capacity", o);
  manifest.config.emplace_back("pool", o.pool);
  const SearchConfig base = search_config(o);
  const DatasetBundle bundle = load_bundle(o, manifest);
  const BundleIndex index(bundle);

  std::vector<CapacityRow> rows;
  bool any = false;
  for (double t : o.iou) {
    SearchConfig cfg = base;
    cfg.iou_threshold = t;
    for (const auto& c : bundle.categories) {
      const CategoryData data(bundle, index, c.id, cfg);
      const std::vector<Relation> pool = capacity_pool(data, o.pool);
      for (ErrorType type : kAllErrorTypes) {
        CapacityRow row;
        row.iou_threshold = t;
        row.category = c.name;
        row.error_type = type;
        try {
          row.result = max_capacity(data, pool, type);
          row.status = "ok";
          any = true;
        } catch (const InsufficientSamples&) {
          row.status = data.analyzable() ? "n/a" : std::string(to_string(data.status()));
        }
        rows.push_back(std::move(row));
      }
    }
  }

  if (o.format == "json") {
    emit_json(o.out, capacity_json(manifest, rows));
  } else {
    emit(o.out, [&](std::ostream& out) { write_capacity_csv(out, manifest, rows); });
  }
  if (!any) {
    std::cerr << "ctxbound: no category has samples for any error type\n";
    return kExitNothing;
  }
  return kExitOk;
}

std::vector<BinCounts> read_bin_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open bin counts file: " + path);
  std::vector<BinCounts> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    BinCounts c;
    char comma = 0;
    if (!(fields >> c.t >> comma >> c.f) || comma != ',' || c.t < 0 || c.f < 0) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected 't,f'");
    }
    counts.push_back(c);
  }
  if (counts.empty()) throw InputError("bin counts file is empty: " + path);
  return counts;
}

OracleRow oracle_row(const BinGrid& grid) {
  const RankedBinSequence heuristic = heuristic_rank(grid);
  const OracleResult oracle = permutation_oracle(grid);
  if (compare_ap_exact(grid, oracle.ordering, heuristic.ordering) < 0) {
    throw std::logic_error("oracle ordering scored below the heuristic");
  }
  OracleRow row;
  row.status = "ok";
  row.bins = grid.bins.size();
  row.heuristic_ap = ap_general(heuristic);
  row.oracle_ap = oracle.ap;
  row.heuristic_order = heuristic.ordering;
  row.oracle_order = oracle.ordering;
  return row;
}

int run_oracle(const Options& o) {
  RunManifest manifest = manifest_for("oracle", o);
  std::vector<OracleRow> rows;

  if (!o.bin_counts.empty()) {
    const std::vector<BinCounts> counts = read_bin_counts(o.bin_counts);
    if (counts.size() > kMaxOracleBins) throw InputError("oracle limited to 10 bins");
    std::int64_t positives = 0;
    for (const auto& c : counts) positives += c.t;
    if (o.pos) {
      if (*o.pos < positives) throw InputError("--pos is smaller than the true detections");
      positives = *o.pos;
    }
    if (positives == 0) throw InputError("bin counts hold no true detections");
    manifest.config.emplace_back("pos", std::to_string(positives));
    manifest.inputs = {{o.bin_counts, sha256_file(o.bin_counts)}};
    OracleRow row = oracle_row(grid_from_counts(counts, positives));
    row.iou_threshold = o.iou.front();
    row.category = std::filesystem::path(o.bin_counts).stem().string();
    row.relation = "fixed";
    rows.push_back(std::move(row));
  } else {
    const SearchConfig base = search_config(o);
    if (o.bins > kMaxOracleBins / 2) {
      throw InputError("oracle needs --bins <= 5 (binary context doubles the bin count)");
    }
    const DatasetBundle bundle = load_bundle(o, manifest);
    const BundleIndex index(bundle);
    for (double t : o.iou) {
      SearchConfig cfg = base;
      cfg.iou_threshold = t;
      for (const auto& c : bundle.categories) {
        const CategoryData data(bundle, index, c.id, cfg);
        OracleRow row;
        if (data.analyzable()) {
          const std::vector<BoundResult> ranking = best_relation_search(data);
          row = oracle_row(data.grid_for(ranking.front().relation));
          row.relation = ranking.front().relation_name;
        } else {
          row.status = std::string(to_string(data.status()));
        }
        row.iou_threshold = t;
        row.category = c.name;
        rows.push_back(std::move(row));
      }
    }
  }

  if (o.format == "json") {
    emit_json(o.out, oracle_json(manifest, rows));
  } else {
    emit(o.out, [&](std::ostream& out) { write_oracle_csv(out, manifest, rows); });
  }
  for (const auto& r : rows) {
    if (r.status == "ok") return kExitOk;
  }
  std::cerr << "ctxbound: no category is analyzable\n";
  return kExitNothing;
}

int run_synth(const Options& o) {
  if (o.config.empty()) throw InputError("--config is required");
  if (o.out.empty()) throw InputError("--out directory is required");
  SynthConfig cfg = load_synth_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  const DatasetBundle bundle = generate(cfg);
  const std::filesystem::path dir(o.out);
  std::filesystem::create_directories(dir);
  write_ground_truth(dir / "annotations.json", bundle);
  write_detections(dir / "detections.json", bundle.detections);
  std::cerr << "ctxbound: wrote " << bundle.objects.size() << " objects and "
            << bundle.detections.size() << " detections to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Upper bounds on the AP gain available from contextual information"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  Options o;
  CLI::App* match = app.add_subcommand("match", "match detections and type their errors");
  add_shared(match, o);
  match->add_option("--dump", o.dump, "write the evaluated detections as JSON");

  CLI::App* bounds = app.add_subcommand("bounds", "best-relation AP bounds per category");
  add_shared(bounds, o);
  bounds->add_option("--plot", o.plot, "write plot-data CSV");

  CLI::App* cap = app.add_subcommand("capacity", "classification capacity of context");
  add_shared(cap, o);
  cap->add_option("--pool", o.pool, "relation pool: full, atoms or const")
      ->check(CLI::IsMember({"full", "atoms", "const"}));

  CLI::App* oracle = app.add_subcommand("oracle", "heuristic ranking vs exhaustive search");
  add_shared(oracle, o);
  oracle->add_option("--bin-counts", o.bin_counts, "CSV of 't,f' rows instead of --gt/--det");
  oracle->add_option("--pos", o.pos, "ground-truth object count for --bin-counts");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", o.config, "key = value scene description")->required();
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--seed", o.seed, "override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (match->parsed()) return run_match(o);
    if (bounds->parsed()) return run_bounds(o);
    if (cap->parsed()) return run_capacity(o);
    if (oracle->parsed()) return run_oracle(o);
    return run_synth(o);
  } catch (const InputError& e) {
    std::cerr << "ctxbound: " << e.what() << '\n';
    return kExitInput;
  } catch (const DatasetError& e) {
    std::cerr << "ctxbound: " << e.what() << '\n';
    return kExitInput;
  } catch (const SynthError& e) {
    std::cerr << "ctxbound: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "ctxbound: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "ctxbound: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
