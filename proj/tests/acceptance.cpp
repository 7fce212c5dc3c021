// Acceptance suite. Prints one line per criterion:
//   [PASS|FAIL|SKIP] <n> <title>: <measurements>
//
// Usage: cfbench_acceptance [--prepare] [--criteria 1,2,...]
//
// --prepare runs the desk grid from scratch into <work>/run_a; the grid-based
// criteria then reuse that run when it is complete and matches the config.
//
// Criteria 4-10 use a desk-scale grid run built from configs/desk.ini. The
// data source is $CFBENCH_OULAD_DIR when set (the real OULAD export);
// otherwise a synthetic OULAD-format stand-in is generated. Criteria 6-8 are
// statements about the real course, so on the stand-in they are reported as
// SKIP together with the values observed. Work files go to
// $CFBENCH_ACCEPT_DIR (default: <build>/acceptance); every result line is
// also appended to report.txt there.
//
// Exit status: 1 if any selected criterion failed, 77 if none failed but
// some were skipped, 0 otherwise.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "cfbench/balance.hpp"
#include "cfbench/bench.hpp"
#include "cfbench/csv.hpp"
#include "cfbench/error.hpp"
#include "cfbench/parallel.hpp"
#include "cfbench/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cfbench;
using namespace cfbench::testing;

namespace {

// Tolerances.
constexpr double kAucTolerance = 1e-12;
constexpr double kLambdaTolerance = 1e-9;
constexpr double kBoundaryTolerance = 0.02;  // relative, around the toy boundary at 10
constexpr double kPropertySeconds = 10.0;
constexpr double kPaperAccuracy = 0.8196, kAccuracyTol = 0.03;
constexpr double kPaperAuc = 0.8549, kAucTol = 0.03;
constexpr double kPaperF1 = 0.7040, kF1Tol = 0.05;
constexpr double kCellSeconds = 5 * 60.0;
constexpr std::size_t kOrderingMinStrategies = 4;
constexpr double kGridSeconds = 30 * 60.0;

enum class State { pass, fail, skip };

struct Outcome {
  State state = State::pass;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? State::pass : State::fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path work_dir() {
  if (const char* d = std::getenv("CFBENCH_ACCEPT_DIR")) return d;
  return CFBENCH_ACCEPT_DEFAULT_DIR;
}

std::optional<fs::path> real_data_dir() {
  if (const char* d = std::getenv("CFBENCH_OULAD_DIR"); d && *d) return fs::path(d);
  return std::nullopt;
}

// ---------------------------------------------------------------- desk run

struct DeskRun {
  ExperimentConfig cfg;
  RunManifest manifest;
  bool real = false;
  bool fresh = false;
  double seconds = 0.0;
  std::vector<QualityRecord> records;
};

ExperimentConfig desk_config(const fs::path& out, bool& real) {
  auto cfg = load_config(CFBENCH_DESK_CONFIG);
  cfg.output_dir = out;
  if (const auto dir = real_data_dir()) {
    cfg.oulad_dir = *dir;
    real = true;
  } else {
    const fs::path synth = work_dir() / "synthetic";
    if (!fs::exists(synth / "studentVle.csv")) {
      SyntheticOuladSpec spec;
      spec.students_per_presentation = 1870;  // matches the real course's enrolment
      write_synthetic_oulad(synth, spec);
    }
    cfg.oulad_dir = synth;
    real = false;
  }
  return cfg;
}

bool complete(const RunManifest& m) {
  for (const auto& c : m.cells) {
    if (c.status != "completed") return false;
  }
  return !m.cells.empty();
}

// Runs the desk grid into run_a. With fresh = false an earlier complete run
// with the same config is reused.
DeskRun& desk_run(bool fresh) {
  static std::optional<DeskRun> cached;
  if (cached && (cached->fresh || !fresh)) return *cached;
  DeskRun run_out;
  run_out.cfg = desk_config(work_dir() / "run_a", run_out.real);
  const fs::path manifest_path = run_out.cfg.output_dir / "manifest.json";
  bool reused = false;
  if (!fresh && fs::exists(manifest_path)) {
    auto m = RunManifest::read(manifest_path);
    if (m.config_hash == fnv1a_hex(run_out.cfg.canonical()) && complete(m)) {
      run_out.manifest = std::move(m);
      run_out.seconds = run_out.manifest.seconds;
      reused = true;
    }
  }
  if (!reused) {
    fs::remove_all(run_out.cfg.output_dir);
    fmt::print(stderr, "running the desk grid into {} ({} data, {} threads)\n", run_out.cfg.output_dir.string(),
               run_out.real ? "OULAD" : "synthetic stand-in", thread_count());
    const auto t0 = std::chrono::steady_clock::now();
    run_out.manifest = cfbench::run(run_out.cfg);
    run_out.seconds = seconds_since(t0);
    run_out.fresh = true;
  }
  run_out.records = read_quality_records(run_out.cfg.output_dir / "quality_records.csv");
  cached = std::move(run_out);
  return *cached;
}

std::string data_note(const DeskRun& d) { return d.real ? "OULAD DDD" : "synthetic stand-in"; }

// ---------------------------------------------------------------- criteria

Outcome criterion_distances() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  const std::size_t p = 8;
  V widths(p);
  for (auto& w : widths) w = rng.uniform01() < 0.2 ? 0.0 : 1.0 + std::floor(rng.uniform01() * 400.0);
  widths[0] = 50.0;
  const RangeTable ranges(widths);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    V a(p), b(p);
    for (std::size_t j = 0; j < p; ++j) {
      a[j] = std::floor(rng.uniform01() * (widths[j] + 1.0));
      b[j] = std::floor(rng.uniform01() * (widths[j] + 1.0));
      a[j] = std::min(a[j], widths[j]);
      b[j] = std::min(b[j], widths[j]);
    }
    const double ab = gower(a, b, ranges);
    if (ab != gower(b, a, ranges)) ++violations;
    if (gower(a, a, ranges) != 0.0) ++violations;
    if (!(ab >= 0.0 && ab <= 1.0)) ++violations;
  }

  const auto pool = random_dataset(400, 6, 102);
  const auto pool_ranges = RangeTable::from(pool);
  std::size_t mismatches = 0;
  for (int q = 0; q < 500; ++q) {
    V x(6);
    for (auto& v : x) v = std::floor(rng.uniform01() * 10.0);
    const auto metric = q % 2 == 0 ? Metric::gower : Metric::heom;
    const std::size_t k = 1 + rng.index(30);
    std::vector<Neighbor> all;
    for (std::size_t i = 0; i < pool.rows(); ++i) all.push_back({i, distance(metric, x, pool.row(i), pool_ranges)});
    std::sort(all.begin(), all.end(), [](const Neighbor& l, const Neighbor& r) {
      return l.distance != r.distance ? l.distance < r.distance : l.index < r.index;
    });
    all.resize(k);
    if (k_nearest(x, pool.features(), metric, k, pool_ranges) != all) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return verdict(violations == 0 && mismatches == 0 && secs < kPropertySeconds,
                 fmt::format("1000 pairs, {} symmetry/identity/bound violations; 500 k-NN queries, {} mismatches "
                             "vs brute-force sort; {:.2f} s (limit {} s)",
                             violations, mismatches, secs, kPropertySeconds));
}

Outcome criterion_balancing() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t unequal = 0, bad_synthetics = 0, synthetics = 0, weight_errors = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = random_dataset(90 + seed * 5, 4, 200 + seed, 0.25);
    for (const auto& out : {random_undersample(d, seed), random_oversample(d, seed), smote(d, 5, seed)}) {
      if (out.count(Label::fail) != out.count(Label::pass)) ++unequal;
    }
    const auto s = smote(d, 5, seed);
    const Label minority = minority_class(d);
    std::vector<V> rows;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      if (d.label(i) == minority) rows.push_back(d.instance(i));
    }
    for (std::size_t i = d.rows(); i < s.rows(); ++i) {
      ++synthetics;
      if (s.label(i) != minority || !is_convex_combination(s.instance(i), rows, kLambdaTolerance)) ++bad_synthetics;
    }
  }
  for (std::size_t maj = 1; maj < 40; ++maj) {
    for (std::size_t mino = 1; mino <= maj; ++mino) {
      std::vector<std::vector<double>> rows;
      std::vector<Label> labels;
      for (std::size_t i = 0; i < maj + mino; ++i) {
        rows.push_back({static_cast<double>(i)});
        labels.push_back(i < maj ? Label::pass : Label::fail);
      }
      const auto w = cost_weights(make_dataset(rows, labels));
      if (w.fail != static_cast<double>(maj) / static_cast<double>(mino) || w.pass != 1.0) ++weight_errors;
    }
  }
  const double secs = seconds_since(t0);
  return verdict(unequal == 0 && bad_synthetics == 0 && weight_errors == 0 && secs < kPropertySeconds,
                 fmt::format("30 resampled sets, {} with unequal classes; {} SMOTE synthetics, {} failing the "
                             "lambda check (tol {}); 780 weight pairs, {} inexact; {:.2f} s (limit {} s)",
                             unequal, synthetics, bad_synthetics, kLambdaTolerance, weight_errors, secs,
                             kPropertySeconds));
}

Outcome criterion_forest_oracles() {
  Rng rng(301);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.index(49);
    std::vector<double> s(n);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.bernoulli(0.5) ? std::round(rng.uniform01() * 10.0) / 10.0 : rng.uniform01();
      y[i] = rng.bernoulli(0.4) ? Label::fail : Label::pass;
    }
    y[0] = Label::fail;
    y[1] = Label::pass;
    worst = std::max(worst, std::abs(auc(s, y) - auc_brute_force(s, y)));
  }
  const auto d = signal_dataset(300, 8, 302);
  std::size_t differing = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Hyperparams hp{1 + seed % 4, seed % 2 ? SplitRule::extratrees : SplitRule::gini, 1 + seed % 5, 25};
    if (!(fit_forest(d, hp, {}, seed) == detail::fit_forest_weighted_path(d, hp, {1.0, 1.0}, seed))) ++differing;
  }
  return verdict(worst < kAucTolerance && differing == 0,
                 fmt::format("max |AUC - all-pairs| over 200 vectors = {:.3g} (tol {}); weighted path with "
                             "weights (1,1) differs on {} of 20 seeds",
                             worst, kAucTolerance, differing));
}

// MOC fronts of every benchmark cell, re-scored and checked pairwise.
std::pair<std::size_t, std::size_t> moc_front_violations(const DeskRun& desk) {
  const auto prepared = prepare_data(desk.cfg);
  const auto& test = prepared.split.test;
  std::map<std::string, std::size_t> test_row;
  for (std::size_t i = 0; i < test.rows(); ++i) test_row[test.row_ids()[i]] = i;
  std::size_t violations = 0, fronts = 0;
  for (const auto& b : desk.cfg.balancing) {
    const auto balanced = balance_for(desk.cfg, prepared.split.train, b);
    for (const auto& t : desk.cfg.tuning) {
      const Cell cell{b, t, "moc"};
      const auto* rec = desk.manifest.find(cell);
      const auto* mrec = desk.manifest.find_model(b, t);
      if (!rec || !mrec || rec->status != "completed") continue;
      const auto model = read_model(desk.cfg.output_dir / mrec->model_file);
      CsvReader reader(desk.cfg.output_dir / rec->files.at(0));
      std::map<std::string, std::vector<std::array<double, 4>>> by_request;
      std::vector<std::string> f;
      while (reader.next(f)) {
        V values;
        for (std::size_t j = 2; j + 1 < f.size(); ++j) values.push_back(*parse_real(f[j]));
        const auto x = test.row(test_row.at(f[0]));
        by_request[f[0]].push_back(objectives(x, values, model, balanced.train, prepared.ranges).as_array());
      }
      for (const auto& [id, objs] : by_request) {
        ++fronts;
        for (std::size_t a = 0; a < objs.size(); ++a) {
          for (std::size_t c = 0; c < objs.size(); ++c) violations += dominates(objs[a], objs[c]) ? 1 : 0;
        }
      }
    }
  }
  return {violations, fronts};
}

Outcome criterion_generation() {
  // WhatIf against the filter + sort oracle
  const auto train = signal_dataset(500, 6, 401);
  const auto model = fit_forest(train, {2, SplitRule::gini, 1, 40}, {}, 3);
  const auto ranges = RangeTable::from(train);
  const PredictedPool pool(model, train);
  const auto probes = signal_dataset(800, 6, 402);
  std::size_t requests = 0, whatif_mismatch = 0;
  for (std::size_t i = 0; i < probes.rows() && requests < 100; ++i) {
    if (model.predict(probes.row(i)) != Label::fail) continue;
    const auto req = CfRequest::make("q", probes.instance(i), train);
    const std::size_t k = 1 + requests % 10;
    const auto got = whatif(req, pool, k, ranges);
    const auto want = whatif_oracle(req, model, train, k, ranges);
    bool same = got.size() == want.size();
    for (std::size_t r = 0; same && r < got.size(); ++r) {
      same = got[r].values == want[r].values && got[r].meta.source_row == want[r].meta.source_row;
    }
    whatif_mismatch += same ? 0 : 1;
    ++requests;
  }

  // NICE hand traces
  std::size_t nice_total = 0, nice_bad = 0;
  for (const auto& c : nice_cases()) {
    const auto req = request_for(c.x, c.train);
    const auto sp = nice(req, c.model, c.train, NiceReward::sparsity);
    const auto pr = nice(req, c.model, c.train, NiceReward::proximity);
    nice_total += 2;
    nice_bad += (sp.values != c.expect_sp || sp.meta.copied != c.copied_sp) ? 1 : 0;
    nice_bad += (pr.values != c.expect_pr || pr.meta.copied != c.copied_pr) ? 1 : 0;
  }

  // 1-D toy: pass iff x >= 10 on [0, 20]
  std::vector<std::vector<double>> line;
  std::vector<Label> labels;
  for (int v = 0; v <= 20; ++v) {
    line.push_back({static_cast<double>(v)});
    labels.push_back(v >= 10 ? Label::pass : Label::fail);
  }
  const auto toy_train = make_dataset(line, labels);
  const auto toy = threshold_model(1, 0, 10.0);
  std::size_t toy_misses = 0;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto out = moc(request_for({0}, toy_train), toy, toy_train, {100, 50, 0.3, 0.7, seed});
    double best = std::numeric_limits<double>::infinity();
    for (const auto& cf : out) best = std::min(best, cf.values[0]);
    const double gap = std::abs(best - 10.0) / 10.0;
    worst_gap = std::max(worst_gap, std::isfinite(gap) ? gap : 1.0);
    toy_misses += (out.empty() || gap > kBoundaryTolerance) ? 1 : 0;
  }

  const auto& desk = desk_run(false);
  const auto [violations, fronts] = moc_front_violations(desk);
  const bool ok = requests == 100 && whatif_mismatch == 0 && nice_total >= 10 && nice_bad == 0 && violations == 0 &&
                  fronts > 0 && toy_misses == 0;
  return verdict(ok, fmt::format("WhatIf {} of {} requests differ from the oracle; NICE {} of {} traces differ "
                                 "({} toy models); {} dominance violations over {} MOC fronts ({}); 1-D toy "
                                 "worst gap {:.4f} (tol {}) over 20 seeds",
                                 whatif_mismatch, requests, nice_bad, nice_total, nice_total / 2, violations, fronts,
                                 data_note(desk), worst_gap, kBoundaryTolerance));
}

Outcome criterion_validity() {
  const auto& desk = desk_run(false);
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_method;  // valid, total
  for (const auto& r : desk.records) {
    auto& [valid, total] = by_method[r.cell.method];
    valid += r.validity == 1 ? 1 : 0;
    ++total;
  }
  bool ok = by_method.size() == 4;
  std::vector<std::string> parts;
  for (const auto& [m, vt] : by_method) {
    ok = ok && vt.first == vt.second && vt.second > 0;
    parts.push_back(fmt::format("{} {}/{}", m, vt.first, vt.second));
  }
  return verdict(ok, fmt::format("valid counterfactuals: {} ({})", fmt::join(parts, ", "), data_note(desk)));
}

Outcome criterion_table2() {
  const auto& desk = desk_run(false);
  const auto* m = desk.manifest.find_model("original", "vanilla");
  if (!m || m->status != "completed") return {State::fail, "original:vanilla model missing"};
  const auto& e = m->metrics;
  const bool within = std::abs(e.accuracy - kPaperAccuracy) <= kAccuracyTol && std::abs(e.auc - kPaperAuc) <= kAucTol &&
                      std::abs(e.f1 - kPaperF1) <= kF1Tol && m->seconds < kCellSeconds;
  const auto detail = fmt::format(
      "original/vanilla accuracy {:.4f} (target {} +- {}), AUC {:.4f} ({} +- {}), F1 {:.4f} ({} +- {}); fit+eval "
      "{:.1f} s (limit {} s); split seed {}, test {} rows",
      e.accuracy, kPaperAccuracy, kAccuracyTol, e.auc, kPaperAuc, kAucTol, e.f1, kPaperF1, kF1Tol, m->seconds,
      kCellSeconds, desk.manifest.split_seed, desk.manifest.test_rows);
  if (!desk.real) return {State::skip, detail + "; synthetic stand-in, real OULAD not supplied"};
  return verdict(within, detail);
}

Outcome criterion_ordering() {
  const auto& desk = desk_run(false);
  const auto summaries = aggregate(desk.records);
  auto median = [&](const std::string& b, const std::string& t, const std::string& m, const char* metric) {
    for (const auto& s : summaries) {
      if (s.cell == Cell{b, t, m}) return s.metric(metric).median;
    }
    return std::numeric_limits<double>::infinity();
  };
  bool ok = true;
  std::vector<std::string> parts;
  for (const auto& t : desk.cfg.tuning) {
    std::size_t holds = 0;
    for (const auto& b : desk.cfg.balancing) {
      bool all = true;
      for (const auto* metric : {"proximity", "sparsity"}) {
        const double other = std::min(median(b, t, "moc", metric), median(b, t, "whatif", metric));
        for (const auto* n : {"nice_sp", "nice_pr"}) all = all && median(b, t, n, metric) <= other;
      }
      holds += all ? 1 : 0;
    }
    ok = ok && holds >= kOrderingMinStrategies;
    parts.push_back(fmt::format("{} {}/{}", t, holds, desk.cfg.balancing.size()));
  }
  std::vector<std::string> medians;
  for (const auto* m : {"whatif", "moc", "nice_sp", "nice_pr"}) {
    medians.push_back(fmt::format("{} prox {:.4f} spars {:g}", m, median("original", "vanilla", m, "proximity"),
                                  median("original", "vanilla", m, "sparsity")));
  }
  const auto detail = fmt::format("strategies where both NICE medians <= MOC and WhatIf (need >= {} per block): {}; "
                                  "original/vanilla medians: {}",
                                  kOrderingMinStrategies, fmt::join(parts, ", "), fmt::join(medians, "; "));
  if (!desk.real) return {State::skip, detail + "; synthetic stand-in, real OULAD not supplied"};
  return verdict(ok, detail);
}

Outcome criterion_counts() {
  const auto& desk = desk_run(false);
  std::size_t shaped = 0, cells = 0;
  std::vector<std::string> broken;
  for (const auto& b : desk.cfg.balancing) {
    for (const auto& t : desk.cfg.tuning) {
      std::map<std::string, std::size_t> n;
      for (const auto* m : {"whatif", "moc", "nice_sp", "nice_pr"}) {
        const auto* rec = desk.manifest.find(Cell{b, t, m});
        n[m] = rec ? rec->counterfactuals : 0;
      }
      const std::size_t nice_max = std::max(n["nice_sp"], n["nice_pr"]);
      const bool ok = n["moc"] >= n["whatif"] && n["moc"] >= nice_max && nice_max <= n["whatif"];
      ++cells;
      shaped += ok ? 1 : 0;
      if (!ok) {
        broken.push_back(fmt::format("{}:{} moc {} whatif {} nice {}/{}", b, t, n["moc"], n["whatif"], n["nice_sp"],
                                     n["nice_pr"]));
      }
    }
  }
  auto detail = fmt::format("{} of {} cells have MOC largest and NICE smallest", shaped, cells);
  if (!broken.empty()) detail += fmt::format(" (first exception: {})", broken.front());
  if (!desk.real) return {State::skip, detail + "; synthetic stand-in, real OULAD not supplied"};
  return verdict(shaped == cells, detail);
}

std::vector<std::string> output_files(const fs::path& root) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    const auto ext = e.path().extension();
    if (ext == ".csv" || ext == ".jsonl" || e.path().filename() == "model.txt") {
      out.push_back(fs::relative(e.path(), root).string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome criterion_determinism() {
  const auto& desk = desk_run(false);
  bool real = false;
  auto cfg = desk_config(work_dir() / "run_b", real);
  fs::remove_all(cfg.output_dir);
  fmt::print(stderr, "repeating the desk grid into {}\n", cfg.output_dir.string());
  cfbench::run(cfg);
  const auto a = output_files(desk.cfg.output_dir);
  const auto b = output_files(cfg.output_dir);
  std::size_t differing = 0;
  for (const auto& f : a) {
    if (read_text(desk.cfg.output_dir / f) != read_text(cfg.output_dir / f)) ++differing;
  }
  std::size_t csvs = 0;
  for (const auto& f : a) csvs += f.ends_with(".csv") ? 1 : 0;
  return verdict(a == b && differing == 0 && csvs > 0,
                 fmt::format("{} output files ({} CSV) compared across two fresh runs, {} differ{}", a.size(), csvs,
                             differing, a == b ? "" : "; file sets differ"));
}

Outcome criterion_runtime() {
  const auto& desk = desk_run(false);
  const auto& cfg = desk.cfg;
  const std::size_t cells = cfg.balancing.size() * cfg.tuning.size() * cfg.methods.size();
  const bool shape = cells == 40 && cfg.max_explained_instances == 50u && cfg.moc.population == 100 &&
                     cfg.moc.generations == 50;
  std::size_t completed = 0, reused = 0;
  for (const auto& c : desk.manifest.cells) {
    completed += c.status == "completed" ? 1 : 0;
    reused += c.reused ? 1 : 0;
  }
  for (const auto& m : desk.manifest.models) reused += m.reused ? 1 : 0;
  // the timing only counts when nothing was carried over from an earlier run
  return verdict(shape && completed == cells && reused == 0 && desk.seconds <= kGridSeconds,
                 fmt::format("{} of {} cells completed in {:.1f} s with {} thread(s) (limit {} s on 4 cores); "
                             "{} reused items; 50 instances/cell, MOC {}x{}",
                             completed, cells, desk.seconds, thread_count(), kGridSeconds, reused,
                             cfg.moc.population, cfg.moc.generations));
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "distance properties", criterion_distances},
      {2, "balancing properties", criterion_balancing},
      {3, "forest metric oracles", criterion_forest_oracles},
      {4, "generation oracles", criterion_generation},
      {5, "validity guarantees", criterion_validity},
      {6, "desk-scale test metrics of the original vanilla forest", criterion_table2},
      {7, "NICE proximity and sparsity ordering", criterion_ordering},
      {8, "counterfactual count shape", criterion_counts},
      {9, "determinism", criterion_determinism},
      {10, "end-to-end runtime", criterion_runtime},
  };
  std::set<int> selected;
  bool prepare = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criteria" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      std::string item;
      while (std::getline(list, item, ',')) selected.insert(std::stoi(item));
    } else if (arg == "--prepare") {
      prepare = true;
    } else {
      fmt::print(stderr, "usage: {} [--prepare] [--criteria 1,2,...]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(work_dir());
  std::ofstream report(work_dir() / "report.txt", std::ios::app);
  auto emit = [&](const std::string& line) {
    fmt::print("{}\n", line);
    std::fflush(stdout);
    report << line << '\n' << std::flush;
  };

  if (prepare) {
    try {
      const auto& desk = desk_run(true);
      const bool ok = complete(desk.manifest);
      emit(fmt::format("[{}] desk grid prepared: {} cells, {:.1f} s, {} data", ok ? "DONE" : "FAIL",
                       desk.manifest.cells.size(), desk.seconds, data_note(desk)));
      if (!ok) return 1;
    } catch (const std::exception& e) {
      emit(fmt::format("[FAIL] desk grid preparation: {}", e.what()));
      return 1;
    }
    if (selected.empty()) return 0;
  }
  if (selected.empty()) {
    for (const auto& c : all) selected.insert(c.id);
  }

  int failed = 0, skipped = 0;
  for (const auto& c : all) {
    if (!selected.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {State::fail, std::string("error: ") + e.what()};
    }
    const char* tag = o.state == State::pass ? "PASS" : o.state == State::fail ? "FAIL" : "SKIP";
    failed += o.state == State::fail;
    skipped += o.state == State::skip;
    emit(fmt::format("[{}] {} {}: {} [{:.1f} s]", tag, c.id, c.title, o.detail, seconds_since(t0)));
  }
  if (failed > 0) return 1;
  return skipped > 0 ? 77 : 0;
}
