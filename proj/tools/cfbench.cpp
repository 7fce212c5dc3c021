// Command-line front end for the counterfactual benchmark.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "cfbench/bench.hpp"
#include "cfbench/error.hpp"
#include "cfbench/oulad.hpp"
#include "cfbench/synthetic.hpp"

namespace fs = std::filesystem;
using namespace cfbench;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_instances;
  std::string out;
  std::string cell;
};

void add_common(CLI::App* app, CommonFlags& flags, bool config_required = true) {
  auto* opt = app->add_option("--config", flags.config, "experiment config file")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  app->add_option("--seed", flags.seed, "override run.master_seed");
  app->add_option("--max-instances", flags.max_instances,
                  "override run.max_explained_instances (0 = unlimited)");
  app->add_option("--out", flags.out, "override run.output_dir");
  app->add_option("--cell", flags.cell, "balancing:tuning:method");
}

ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  auto cfg = load_config(flags.config);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.max_instances) {
    if (*flags.max_instances == 0) cfg.max_explained_instances.reset();
    else cfg.max_explained_instances = *flags.max_instances;
  }
  if (!flags.out.empty()) cfg.output_dir = flags.out;
  cfg.validate();
  return cfg;
}

// Accepts balancing:tuning with an optional trailing method.
std::pair<std::string, std::string> model_key(const std::string& text) {
  const auto cell = parse_cell(std::count(text.begin(), text.end(), ':') == 1 ? text + ":whatif" : text);
  return {cell.balancing, cell.tuning};
}

int cmd_synth(const fs::path& dir, std::size_t students, std::uint64_t seed) {
  SyntheticOuladSpec spec;
  spec.students_per_presentation = students;
  spec.seed = seed;
  const auto s = write_synthetic_oulad(dir, spec);
  fmt::print("wrote {}: {} enrolled, {} withdrawn, {} pass, {} fail, {} click rows\n", dir.string(), s.enrolled,
             s.withdrawn, s.pass, s.fail, s.log_rows);
  return 0;
}

int cmd_ingest(const fs::path& raw, const std::string& course, const std::vector<std::string>& presentations,
               const fs::path& out) {
  const auto frame = ingest_oulad(raw, course, presentations);
  write_csv(frame.data, out);
  const auto& st = frame.stats;
  fmt::print("{}: {} rows x {} weeks ({} fail / {} pass)\n", out.string(), frame.data.rows(), frame.data.cols(),
             frame.data.count(Label::fail), frame.data.count(Label::pass));
  fmt::print("enrolled {}, withdrawn dropped {}, without clicks {}, orphan click students {}, "
             "clicks outside window {}, clicks on unknown sites {}\n",
             st.enrolled, st.withdrawn, st.without_clicks, st.clicks_without_result, st.clicks_outside_window,
             st.clicks_unknown_site);
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  const auto cfg = load_with_overrides(flags);
  if (flags.cell.empty()) throw Error("train needs --cell balancing:tuning");
  const auto [b, t] = model_key(flags.cell);
  const auto prepared = prepare_data(cfg);
  const auto balanced = balance_for(cfg, prepared.split.train, b);
  const auto trained = train_model(cfg, balanced, b, t);
  const auto metrics = evaluate(trained.model, prepared.split.test);
  const fs::path dir = fs::path(cfg.output_dir) / "models" / fmt::format("{}__{}", b, t);
  fs::create_directories(dir);
  write_model(trained.model, dir / "model.txt");
  fmt::print("{}:{} train rows {}, {}\n", b, t, balanced.train.rows(), to_string(trained.hp));
  fmt::print("accuracy {} auc {} f1 {}\n", format_real(metrics.accuracy), format_real(metrics.auc),
             format_real(metrics.f1));
  fmt::print("model written to {}\n", (dir / "model.txt").string());
  return 0;
}

int cmd_explain(const CommonFlags& flags, const std::string& instance) {
  const auto cfg = load_with_overrides(flags);
  if (flags.cell.empty()) throw Error("explain needs --cell balancing:tuning:method");
  const auto cell = parse_cell(flags.cell);
  const auto prepared = prepare_data(cfg);
  const auto& test = prepared.split.test;
  const auto balanced = balance_for(cfg, prepared.split.train, cell.balancing);

  // Reuse a model from an earlier run when one exists.
  const fs::path model_path =
      fs::path(cfg.output_dir) / "models" / fmt::format("{}__{}", cell.balancing, cell.tuning) / "model.txt";
  RandomForestModel model;
  if (fs::exists(model_path)) {
    model = read_model(model_path);
  } else {
    model = train_model(cfg, balanced, cell.balancing, cell.tuning).model;
  }

  std::size_t row = test.rows();
  if (instance.empty()) {
    for (std::size_t i = 0; i < test.rows(); ++i) {
      if (model.predict(test.row(i)) == Label::fail) {
        row = i;
        break;
      }
    }
    if (row == test.rows()) throw Error("no test instance is predicted fail");
  } else {
    for (std::size_t i = 0; i < test.rows(); ++i) {
      if (!test.row_ids().empty() && test.row_ids()[i] == instance) row = i;
    }
    if (row == test.rows()) throw Error(fmt::format("test set has no row '{}'", instance));
  }
  const std::string id = test.row_ids().empty() ? fmt::format("test_{}", row) : test.row_ids()[row];
  const auto req = CfRequest::make(id, test.instance(row), prepared.split.train);
  req.validate(model);

  // Same request index as a full run when the row would be selected there.
  std::size_t index = 0;
  for (std::size_t i = 0; i < row; ++i) index += model.predict(test.row(i)) == Label::fail ? 1 : 0;

  const PredictedPool pool(model, balanced.train);
  const auto cfs = generate(cfg, cell, req, index, pool, prepared.ranges);
  const auto names = test.feature_names();
  fmt::print("{} {}: P(pass) = {:.4f}, {} counterfactual(s)\n", cell.label(), id, model.predict_pass(req.x),
             cfs.size());
  for (std::size_t k = 0; k < cfs.size(); ++k) {
    const auto q = score(req.x, cfs[k], model, balanced.train, prepared.ranges);
    fmt::print("\n#{} P(pass) = {:.4f} proximity {:.5f} sparsity {} minimality {} plausibility {:.5f}\n", k + 1,
               model.predict_pass(cfs[k].values), q.proximity, q.sparsity, q.minimality, q.plausibility);
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (cfs[k].values[j] == req.x[j]) continue;
      fmt::print("  {:<14} {:>10} -> {}\n", names[j], format_real(req.x[j]), format_real(cfs[k].values[j]));
    }
  }
  return 0;
}

int cmd_run(const CommonFlags& flags) {
  const auto cfg = load_with_overrides(flags);
  RunOptions options;
  if (!flags.cell.empty()) options.only = parse_cell(flags.cell);
  const auto manifest = run(cfg, options);
  std::size_t done = 0, failed = 0;
  for (const auto& c : manifest.cells) {
    done += c.status == "completed";
    failed += c.status == "failed";
    if (c.status == "failed") fmt::print(stderr, "{} failed: {}\n", c.cell.label(), c.error);
  }
  fmt::print("{} cells: {} completed, {} failed, {} not run ({:.1f} s); outputs in {}\n", manifest.cells.size(), done,
             failed, manifest.cells.size() - done - failed, manifest.seconds, cfg.output_dir.string());
  return failed == 0 ? 0 : 1;
}

int cmd_report(const fs::path& dir) {
  const auto summaries = report(dir);
  fmt::print("{:<34} {:>5} {:>10} {:>10} {:>9} {:>10} {:>12}\n", "cell", "n", "validity", "proximity", "sparsity",
             "minimality", "plausibility");
  for (const auto& s : summaries) {
    fmt::print("{:<34} {:>5} {:>10.3f} {:>10.5f} {:>9.1f} {:>10.1f} {:>12.5f}\n", s.cell.label(),
               s.metric("validity").count, s.metric("validity").median, s.metric("proximity").median,
               s.metric("sparsity").median, s.metric("minimality").median, s.metric("plausibility").median);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanation benchmark for student-success forests"};
  app.require_subcommand(1);

  std::string synth_dir;
  std::size_t synth_students = 1870;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "write a synthetic OULAD-format raw directory");
  synth->add_option("--out", synth_dir, "target directory")->required();
  synth->add_option("--students", synth_students, "students per presentation");
  synth->add_option("--seed", synth_seed, "generator seed");

  std::string raw_dir, frame_out, course = "DDD";
  std::vector<std::string> presentations = {"2013J", "2014J"};
  auto* ingest = app.add_subcommand("ingest", "turn raw OULAD files into the weekly click frame CSV");
  ingest->add_option("--raw", raw_dir, "directory with studentInfo.csv, studentVle.csv, vle.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest->add_option("--out", frame_out, "output CSV")->required();
  ingest->add_option("--course", course, "module code");
  ingest->add_option("--presentations", presentations, "presentation codes")->delimiter(',');

  CommonFlags train_flags, explain_flags, run_flags;
  auto* train = app.add_subcommand("train", "fit one cell's model and print its test metrics");
  add_common(train, train_flags);
  auto* explain = app.add_subcommand("explain", "explain one test instance with one method");
  add_common(explain, explain_flags);
  std::string instance;
  explain->add_option("--instance", instance, "test row id (default: first test row predicted fail)");
  auto* run_cmd = app.add_subcommand("run", "run the configured grid");
  add_common(run_cmd, run_flags);

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "re-aggregate quality records of an output directory");
  report_cmd->add_option("--out", report_dir, "output directory of a run")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) return cmd_synth(synth_dir, synth_students, synth_seed);
    if (ingest->parsed()) return cmd_ingest(raw_dir, course, presentations, frame_out);
    if (train->parsed()) return cmd_train(train_flags);
    if (explain->parsed()) return cmd_explain(explain_flags, instance);
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (report_cmd->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
