// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Machine-readable experiment output: a provenance record (JSON) holding the
// full configuration and every trial, and a results table (CSV) with one
// mean/std row per dataset and strategy.
//
// Wall-clock timings are left out of the JSON so that identical runs give
// byte-identical files.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smisel/csv.hpp"
#include "smisel/error.hpp"
#include "smisel/harness.hpp"

namespace smisel {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kProvenanceFormat = "smisel-provenance";
inline constexpr int kProvenanceVersion = 1;

namespace detail {

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
void read_optional(const Json& j, const char* key, std::optional<T>& out) {
  const Json& v = j.at(key);
  if (v.is_null()) {
    out.reset();
  } else {
    out = v.get<T>();
  }
}

}  // namespace detail

inline void to_json(Json& j, const SplitSpec& s) {
  j = Json{{"rare_train", s.rare_train},
           {"common_train", s.common_train},
           {"rare_test", s.rare_test},
           {"common_test", s.common_test}};
}

inline void from_json(const Json& j, SplitSpec& s) {
  j.at("rare_train").get_to(s.rare_train);
  j.at("common_train").get_to(s.common_train);
  j.at("rare_test").get_to(s.rare_test);
  j.at("common_test").get_to(s.common_test);
}

inline void to_json(Json& j, const ImbalanceRatio& r) {
  j = Json{{"rare", r.rare}, {"common", r.common}};
}

inline void from_json(const Json& j, ImbalanceRatio& r) {
  j.at("rare").get_to(r.rare);
  j.at("common").get_to(r.common);
}

inline void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"learning_rate", c.learning_rate},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"l2", c.l2},
           {"seed", c.seed}};
}

inline void from_json(const Json& j, TrainConfig& c) {
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("epochs").get_to(c.epochs);
  j.at("batch_size").get_to(c.batch_size);
  j.at("l2").get_to(c.l2);
  j.at("seed").get_to(c.seed);
}

inline void to_json(Json& j, const SimilarityOptions& o) {
  j = Json{{"measure", to_string(o.measure)}, {"gamma", o.gamma}};
}

inline void from_json(const Json& j, SimilarityOptions& o) {
  const auto m = j.at("measure").get<std::string>();
  try {
    o.measure = parse_measure(m);
  } catch (const ConfigError&) {
    throw FormatError("unknown similarity measure '" + m + "'");
  }
  j.at("gamma").get_to(o.gamma);
}

inline void to_json(Json& j, const ExperimentConfig& c) {
  j = Json{{"dataset_path", c.dataset_path},
           {"dataset_name", c.dataset_name},
           {"rare_label", c.rare_label},
           {"embeddings_path", c.embeddings_path},
           {"queries_path", c.queries_path},
           {"strategy", to_string(c.strategy)},
           {"budget", c.budget},
           {"query_fraction", c.query_fraction},
           {"trials", c.trials},
           {"seed", c.seed},
           {"seeds", c.seeds},
           {"train", c.train},
           {"split", detail::optional_json(c.split)},
           {"imbalance", detail::optional_json(c.imbalance)},
           {"test_per_class", c.test_per_class},
           {"optimizer", to_string(c.optimizer)},
           {"stochastic_sample", c.stochastic_sample},
           {"lambda", c.lambda},
           {"epsilon", detail::optional_json(c.epsilon)},
           {"similarity", c.similarity},
           {"bootstrap_size", c.bootstrap_size},
           {"kmeans_max_iters", c.kmeans_max_iters}};
}

inline void from_json(const Json& j, ExperimentConfig& c) {
  j.at("dataset_path").get_to(c.dataset_path);
  j.at("dataset_name").get_to(c.dataset_name);
  j.at("rare_label").get_to(c.rare_label);
  j.at("embeddings_path").get_to(c.embeddings_path);
  j.at("queries_path").get_to(c.queries_path);
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  j.at("budget").get_to(c.budget);
  j.at("query_fraction").get_to(c.query_fraction);
  j.at("trials").get_to(c.trials);
  j.at("seed").get_to(c.seed);
  j.at("seeds").get_to(c.seeds);
  j.at("train").get_to(c.train);
  detail::read_optional(j, "split", c.split);
  detail::read_optional(j, "imbalance", c.imbalance);
  j.at("test_per_class").get_to(c.test_per_class);
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  j.at("stochastic_sample").get_to(c.stochastic_sample);
  j.at("lambda").get_to(c.lambda);
  detail::read_optional(j, "epsilon", c.epsilon);
  j.at("similarity").get_to(c.similarity);
  j.at("bootstrap_size").get_to(c.bootstrap_size);
  j.at("kmeans_max_iters").get_to(c.kmeans_max_iters);
}

inline void to_json(Json& j, const ClassMetrics& m) {
  j = Json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

inline void from_json(const Json& j, ClassMetrics& m) {
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("f1").get_to(m.f1);
  j.at("support").get_to(m.support);
}

inline void to_json(Json& j, const MetricsReport& m) {
  j = Json{{"accuracy", m.accuracy},
           {"rare_class_f1", m.rare_class_f1},
           {"per_class", m.per_class},
           {"confusion", m.confusion}};
}

inline void from_json(const Json& j, MetricsReport& m) {
  j.at("accuracy").get_to(m.accuracy);
  j.at("rare_class_f1").get_to(m.rare_class_f1);
  j.at("per_class").get_to(m.per_class);
  j.at("confusion").get_to(m.confusion);
}

inline void to_json(Json& j, const TrialResult& t) {
  j = Json{{"seed", t.seed},
           {"selected_ids", t.selected_ids},
           {"selection_composition", t.selection_composition},
           {"queries_used", t.queries_used},
           {"metrics", t.metrics}};
}

inline void from_json(const Json& j, TrialResult& t) {
  j.at("seed").get_to(t.seed);
  j.at("selected_ids").get_to(t.selected_ids);
  j.at("selection_composition").get_to(t.selection_composition);
  j.at("queries_used").get_to(t.queries_used);
  j.at("metrics").get_to(t.metrics);
  t.timings = {};
}

inline void to_json(Json& j, const Summary& s) { j = Json{{"mean", s.mean}, {"std", s.std}}; }

inline void from_json(const Json& j, Summary& s) {
  j.at("mean").get_to(s.mean);
  j.at("std").get_to(s.std);
}

inline void to_json(Json& j, const AggregateReport& r) {
  j = Json{{"dataset", r.dataset},
           {"strategy", r.strategy},
           {"query_fraction", r.query_fraction},
           {"budget", r.budget},
           {"class_names", r.class_names},
           {"rare_class", r.rare_class},
           {"config", r.config},
           {"accuracy", r.accuracy},
           {"rare_f1", r.rare_f1},
           {"rare_selection_rate", r.rare_selection_rate},
           {"trials", r.trials}};
}

inline void from_json(const Json& j, AggregateReport& r) {
  j.at("dataset").get_to(r.dataset);
  j.at("strategy").get_to(r.strategy);
  j.at("query_fraction").get_to(r.query_fraction);
  j.at("budget").get_to(r.budget);
  j.at("class_names").get_to(r.class_names);
  j.at("rare_class").get_to(r.rare_class);
  j.at("config").get_to(r.config);
  j.at("accuracy").get_to(r.accuracy);
  j.at("rare_f1").get_to(r.rare_f1);
  j.at("rare_selection_rate").get_to(r.rare_selection_rate);
  j.at("trials").get_to(r.trials);
}

inline Json provenance_json(std::span<const AggregateReport> reports) {
  if (reports.empty()) throw ContractViolation("no experiment results to report");
  Json j;
  j["format"] = kProvenanceFormat;
  j["version"] = kProvenanceVersion;
  j["experiments"] = Json::array();
  for (const auto& r : reports) j["experiments"].push_back(r);
  return j;
}

inline std::string provenance_string(std::span<const AggregateReport> reports) {
  return provenance_json(reports).dump(2) + "\n";
}

inline std::vector<AggregateReport> parse_provenance(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    if (j.at("format") != kProvenanceFormat) throw FormatError("not a provenance record");
    if (j.at("version") != kProvenanceVersion) {
      throw FormatError("unsupported provenance version " + j.at("version").dump());
    }
    return j.at("experiments").get<std::vector<AggregateReport>>();
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed provenance record: ") + e.what());
  }
}

inline const std::vector<std::string>& results_header() {
  static const std::vector<std::string> h = {
      "dataset",      "strategy",          "query_fraction",   "budget",
      "trials",       "accuracy",          "rare_f1",          "accuracy_mean",
      "accuracy_std", "rare_f1_mean",      "rare_f1_std",      "rare_selection_rate_mean"};
  return h;
}

// Percentages with two decimals, e.g. "77.80 ± 1.25".
inline std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

inline std::string mean_pm_std(const Summary& s) {
  return percent(s.mean) + " ± " + percent(s.std);
}

inline void write_results_csv(std::ostream& out, std::span<const AggregateReport> reports) {
  if (reports.empty()) throw ContractViolation("no experiment results to report");
  csv::write_row(out, results_header());
  for (const auto& r : reports) {
    char frac[32];
    std::snprintf(frac, sizeof frac, "%g", r.query_fraction);
    csv::write_row(out, {r.dataset, r.strategy, frac, std::to_string(r.budget),
                         std::to_string(r.trials.size()), mean_pm_std(r.accuracy),
                         mean_pm_std(r.rare_f1), percent(r.accuracy.mean), percent(r.accuracy.std),
                         percent(r.rare_f1.mean), percent(r.rare_f1.std),
                         percent(r.rare_selection_rate.mean)});
  }
}

enum class ReportFormat { both, csv, json };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "both") return ReportFormat::both;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("unknown output format '" + std::string(s) + "'");
}

// Writes results.csv and/or provenance.json into `dir`, creating it if
// needed. Returns the paths written.
inline std::vector<std::filesystem::path> write_report(std::span<const AggregateReport> reports,
                                                       const std::filesystem::path& dir,
                                                       ReportFormat format = ReportFormat::both) {
  if (reports.empty()) throw ContractViolation("no experiment results to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << body;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    written.push_back(path);
  };
  if (format != ReportFormat::json) {
    std::ostringstream csv_body;
    write_results_csv(csv_body, reports);
    emit(dir / "results.csv", csv_body.str());
  }
  if (format != ReportFormat::csv) emit(dir / "provenance.json", provenance_string(reports));
  return written;
}

}  // namespace smisel
