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

// Command-line front end: `select`, `experiment` and `ablate`.
//
// Every option may also come from a key = value config file (--config);
// options given on the command line win. Errors map to exit codes by
// category, see error.hpp.

#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smisel/error.hpp"
#include "smisel/harness.hpp"
#include "smisel/report.hpp"

#ifndef SMISEL_DATA_DIR
#define SMISEL_DATA_DIR "data"
#endif

namespace smisel {

struct CliOptions {
  std::string dataset;
  std::string dataset_tag;
  std::string rare_label;
  std::string embeddings;
  std::string queries;
  std::string strategy = "logdetmi";
  std::size_t budget = 0;
  double query_fraction = 1.0;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  std::size_t epochs = 50;
  double lr = 0.01;
  std::size_t batch_size = 32;
  double l2 = 0.0;
  std::string imbalance;
  std::string split;
  std::size_t test_per_class = 0;
  std::string optimizer = "auto";
  std::size_t sample_size = 0;
  double lambda = 1.0;
  std::optional<double> epsilon;
  std::string similarity = "cosine";
  double gamma = 1.0;
  std::size_t bootstrap = 10;
  std::size_t kmeans_iters = 100;
  std::string output = "results";
  std::string format = "both";
  std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
};

namespace detail {

inline ExperimentConfig build_config(const CliOptions& o, const CLI::App& app) {
  ExperimentConfig c;
  const DatasetDefaults* tag = nullptr;
  if (!o.dataset_tag.empty()) {
    tag = find_dataset_defaults(o.dataset_tag);
    if (!tag) throw ConfigError("unknown dataset tag '" + o.dataset_tag + "'");
  }
  auto given = [&](const char* name) { return app.count(name) > 0; };

  c.dataset_path = o.dataset;
  c.dataset_name = tag ? std::string(tag->tag) : std::filesystem::path(o.dataset).stem().string();
  c.rare_label = (tag && !given("--rare-label")) ? std::string(tag->rare_label) : o.rare_label;
  c.embeddings_path = o.embeddings;
  c.strategy = parse_strategy(o.strategy);
  c.budget = (tag && !given("--budget")) ? tag->budget : o.budget;
  if (tag && !given("--queries")) {
    c.queries_path = (std::filesystem::path(SMISEL_DATA_DIR) / "queries" / tag->query_file).string();
  } else {
    c.queries_path = o.queries;
  }
  c.query_fraction = o.query_fraction;
  c.trials = o.trials;
  c.seed = o.seed;
  c.seeds = o.seeds;
  if (!c.seeds.empty() && !given("--trials")) c.trials = c.seeds.size();
  c.train.epochs = (tag && !given("--epochs")) ? tag->epochs : o.epochs;
  c.train.learning_rate = o.lr;
  c.train.batch_size = o.batch_size;
  c.train.l2 = o.l2;
  if (!o.split.empty() && !o.imbalance.empty()) {
    throw ConfigError("give either --split or --imbalance, not both");
  }
  if (!o.split.empty()) {
    c.split = parse_split(o.split);
  } else if (!o.imbalance.empty()) {
    c.imbalance = parse_ratio(o.imbalance);
  } else if (tag) {
    c.split = tag->split;
  }
  c.test_per_class = o.test_per_class;
  c.optimizer = parse_optimizer(o.optimizer);
  c.stochastic_sample = o.sample_size;
  c.lambda = o.lambda;
  c.epsilon = o.epsilon;
  c.similarity.measure = parse_measure(o.similarity);
  c.similarity.gamma = o.gamma;
  c.bootstrap_size = o.bootstrap;
  c.kmeans_max_iters = o.kmeans_iters;
  c.validate();
  return c;
}

inline void add_options(CLI::App& app, CliOptions& o) {
  app.set_config("--config", "", "Read options from a key = value file");
  app.add_option("--dataset", o.dataset, "CSV file with text,label columns");
  app.add_option("--dataset-tag", o.dataset_tag,
                 "youtube, sms or tweet: default budget, split, epochs, rare label and queries");
  app.add_option("--rare-label", o.rare_label, "Label string of the rare class");
  app.add_option("--embeddings", o.embeddings, "Word vectors, one 'token v1 ... vd' per line");
  app.add_option("--queries", o.queries, "Query phrases, one per line");
  app.add_option("--strategy", o.strategy, "flvmi|flqmi|gcmi|logdetmi|random|entropy|"
                                           "leastconf|margin|badge|regex|kmeans")
      ->capture_default_str();
  app.add_option("--budget", o.budget, "Instances to select");
  app.add_option("--query-fraction", o.query_fraction, "Fraction of query phrases to use")
      ->capture_default_str();
  app.add_option("--trials", o.trials, "Number of trials")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed of the first trial; trial t uses seed + t")
      ->capture_default_str();
  app.add_option("--seeds", o.seeds, "Explicit per-trial seeds")->delimiter(',');
  app.add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  app.add_option("--lr", o.lr, "Learning rate")->capture_default_str();
  app.add_option("--batch-size", o.batch_size, "Mini-batch size")->capture_default_str();
  app.add_option("--l2", o.l2, "L2 penalty")->capture_default_str();
  app.add_option("--imbalance", o.imbalance, "Induce a rare:common ratio, e.g. 1:10");
  app.add_option("--split", o.split, "Exact counts rare_train/common_train/rare_test/common_test");
  app.add_option("--test-per-class", o.test_per_class,
                 "Test instances per side with --imbalance (0: half the rare side)");
  app.add_option("--optimizer", o.optimizer, "auto|naive|lazy|stochastic")->capture_default_str();
  app.add_option("--sample-size", o.sample_size, "Stochastic greedy sample size (0: default)");
  app.add_option("--lambda", o.lambda, "GCMI trade-off")->capture_default_str();
  app.add_option("--epsilon", o.epsilon, "LOGDETMI ridge (default: 1e-6 x mean diagonal)");
  app.add_option("--similarity", o.similarity, "cosine|cosine-raw|rbf")->capture_default_str();
  app.add_option("--gamma", o.gamma, "RBF bandwidth")->capture_default_str();
  app.add_option("--bootstrap", o.bootstrap, "Random labeled instances for model-based strategies")
      ->capture_default_str();
  app.add_option("--kmeans-iters", o.kmeans_iters, "Lloyd iteration cap")->capture_default_str();
  app.add_option("--output", o.output, "Output directory")->capture_default_str();
  app.add_option("--format", o.format, "csv|json|both")->capture_default_str();
}

inline void print_selection(std::ostream& out, const SelectionReport& r, const Corpus& corpus) {
  out << "seed " << r.seed << "\nselected";
  for (std::size_t id : r.selected_ids) out << ' ' << id;
  out << "\ncomposition";
  for (std::size_t c = 0; c < r.selection_composition.size(); ++c) {
    out << ' ' << corpus.class_names[c] << '=' << r.selection_composition[c];
  }
  out << '\n';
}

inline void print_summary(std::ostream& out, const AggregateReport& r) {
  out << r.dataset << ' ' << r.strategy << " p=" << r.query_fraction << " B=" << r.budget
      << " trials=" << r.trials.size() << ": accuracy " << mean_pm_std(r.accuracy)
      << ", rare F1 " << mean_pm_std(r.rare_f1) << ", rare selected "
      << percent(r.rare_selection_rate.mean) << "%\n";
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Cold-start subset selection with submodular mutual information", "smisel"};
  app.fallthrough();
  app.require_subcommand(1);
  CliOptions o;
  detail::add_options(app, o);
  auto* select = app.add_subcommand("select", "Run one selection and print ids and composition");
  auto* experiment = app.add_subcommand("experiment", "Run all trials and write the report");
  auto* ablate = app.add_subcommand("ablate", "Sweep the query fraction");
  ablate->add_option("--fractions", o.fractions, "Query fractions in (0, 1]")
      ->delimiter(',')
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ErrorCategory::config);
  }

  try {
    const ExperimentConfig config = detail::build_config(o, app);
    const ExperimentInputs inputs = load_inputs(config);
    if (*select) {
      const auto seeds = config.trial_seeds();
      detail::print_selection(out, run_selection(config, inputs, seeds.front()), inputs.corpus);
      return 0;
    }
    const ReportFormat format = parse_report_format(o.format);
    std::vector<AggregateReport> reports;
    if (*experiment) {
      reports.push_back(run_experiment(config, inputs));
    } else if (*ablate) {
      if (!smi_variant(config.strategy) && config.strategy != Strategy::regex) {
        throw ConfigError("ablation needs a query-driven strategy");
      }
      reports = run_ablation(config, inputs, o.fractions);
    }
    for (const auto& r : reports) detail::print_summary(out, r);
    for (const auto& path : write_report(reports, o.output, format)) {
      out << "wrote " << path.string() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "smisel: " << to_string(e.category()) << ": " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "smisel: internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace smisel
