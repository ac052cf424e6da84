// hyperwalk: ingest -> walks -> embed -> train -> eval over a JSON config.

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyperwalk/hyperwalk.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> splits;
  std::optional<std::size_t> runs;
};

// "10,30,50" -> {{.1,.9},{.3,.7},{.5,.5}}; "80:10:10" -> {{.8,.1,.1}}.
std::vector<std::vector<double>> parse_splits(const std::string& text) {
  using hyperwalk::ErrorCategory;
  std::vector<std::vector<double>> splits;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    std::vector<double> parts;
    std::stringstream fields(item);
    std::string f;
    while (std::getline(fields, f, ':')) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        hyperwalk::fail(ErrorCategory::usage, "--splits: '" + item + "' is not a percentage list");
      }
      parts.push_back(v / 100.0);
    }
    if (parts.size() == 1) parts.push_back(1.0 - parts[0]);
    if (parts.size() < 2 || parts.size() > 3) {
      hyperwalk::fail(ErrorCategory::usage, "--splits: '" + item + "' needs 1 to 3 percentages");
    }
    double total = 0.0;
    for (double p : parts) {
      if (p < 0.0) hyperwalk::fail(ErrorCategory::usage, "--splits: negative percentage in '" + item + "'");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) hyperwalk::fail(ErrorCategory::usage, "--splits: '" + item + "' does not sum to 100");
    splits.push_back(std::move(parts));
  }
  if (splits.empty()) hyperwalk::fail(ErrorCategory::usage, "--splits is empty");
  return splits;
}

hyperwalk::PipelineConfig resolve(const Overrides& o) {
  auto cfg = hyperwalk::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.output = *o.out;
  if (o.splits) cfg.splits = parse_splits(*o.splits);
  if (o.runs) cfg.runs = *o.runs;
  if (cfg.runs < 1) hyperwalk::fail(hyperwalk::ErrorCategory::usage, "--runs must be >= 1");
  if (cfg.jobs < 1) hyperwalk::fail(hyperwalk::ErrorCategory::usage, "--jobs must be >= 1");
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o, bool training) {
  cmd->add_option("--config", o.config, "JSON pipeline config")->required();
  cmd->add_option("--seed", o.seed, "override the master seed");
  cmd->add_option("--jobs", o.jobs, "cap on worker threads");
  cmd->add_option("--out", o.out, "output directory");
  if (training) {
    cmd->add_option("--splits", o.splits, "training percentages, e.g. 10,30,50 or 80:10:10");
    cmd->add_option("--runs", o.runs, "runs per split");
  }
}

void print_records(const std::vector<hyperwalk::RunRecord>& records) {
  hyperwalk::write_results_header(std::cout);
  for (const auto& r : records) hyperwalk::write_result_row(std::cout, r.row);
}

}  // namespace

int main(int argc, char** argv) {
  hyperwalk::init_logging_from_env();

  CLI::App app{"Hyperedge classification with hypergraph random-walk embeddings"};
  app.require_subcommand(1);
  Overrides o;
  auto* ingest = app.add_subcommand("ingest", "parse the dataset and write the hypergraph, labels and features");
  auto* walks = app.add_subcommand("walks", "generate vertex and hyperedge walk corpora");
  auto* embed = app.add_subcommand("embed", "train vertex and hyperedge embeddings");
  auto* train = app.add_subcommand("train", "train and score one model per split and run");
  auto* eval = app.add_subcommand("eval", "re-score checkpoints and check the recorded scores");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write metrics.csv and summary.csv");
  add_common(ingest, o, false);
  add_common(walks, o, false);
  add_common(embed, o, false);
  add_common(train, o, true);
  add_common(eval, o, true);
  add_common(pipeline, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(hyperwalk::ErrorCategory::usage);
  }

  try {
    hyperwalk::Pipeline p(resolve(o));
    if (*ingest) p.ingest();
    else if (*walks) p.walks();
    else if (*embed) p.embed();
    else if (*train) print_records(p.train());
    else if (*eval) print_records(p.eval());
    else if (*pipeline) {
      const auto records = p.run_all();
      print_records(records);
      std::cerr << "metrics: " << p.layout().metrics().string() << "\nsummary: " << p.layout().summary().string()
                << '\n';
    }
  } catch (const hyperwalk::Error& e) {
    std::cerr << "error [" << hyperwalk::category_name(e.category()) << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error [internal]: " << e.what() << '\n';
    return static_cast<int>(hyperwalk::ErrorCategory::internal);
  }
  return 0;
}
