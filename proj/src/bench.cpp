#include "cfbench/bench.hpp"

#include <chrono>
#include <exception>
#include <fstream>
#include <algorithm>
#include <map>

#include <fmt/format.h>
#include "json.hpp"

#include "cfbench/balance.hpp"
#include "cfbench/error.hpp"
#include "cfbench/log.hpp"
#include "cfbench/parallel.hpp"
#include "cfbench/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cfbench {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = kFnvOffset;
  for (const unsigned char c : text) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string model_dir_name(std::string_view b, std::string_view t) { return fmt::format("{}__{}", b, t); }
std::string cell_dir_name(const Cell& c) { return fmt::format("{}__{}__{}", c.balancing, c.tuning, c.method); }

constexpr std::string_view kCfFile = "counterfactuals.csv";
constexpr std::string_view kMetaFile = "meta.jsonl";
constexpr std::string_view kQualityFile = "quality_records.csv";

// Writes via a temporary sibling and renames over the target.
template <class Fn>
void write_atomic(const fs::path& path, Fn&& fill) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    fill(out);
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool all_exist(const fs::path& root, const std::vector<std::string>& files) {
  if (files.empty()) return false;
  for (const auto& f : files) {
    if (!fs::exists(root / f)) return false;
  }
  return true;
}

json meta_json(const Counterfactual& cf, std::size_t index) {
  json j;
  j["request_id"] = cf.request_id;
  j["method"] = std::string(to_string(cf.method));
  j["index"] = index;
  switch (cf.method) {
    case Method::whatif:
      j["rank"] = cf.meta.rank;
      j["distance"] = format_real(cf.meta.distance);
      break;
    case Method::moc:
      j["generation"] = cf.meta.generation;
      break;
    case Method::nice_sp:
    case Method::nice_pr:
      j["iterations"] = cf.meta.iterations;
      j["copied"] = cf.meta.copied;
      break;
  }
  if (cf.meta.source_row) j["source_row"] = *cf.meta.source_row;
  return j;
}

}  // namespace

std::uint64_t seed_for(std::uint64_t master_seed, const Cell& cell, std::string_view stage) {
  const std::string key = fmt::format("{}\x1f{}\x1f{}\x1f{}", cell.balancing, cell.tuning, cell.method, stage);
  return mix64(master_seed ^ mix64(fnv1a(key)));
}

std::string fnv1a_hex(std::string_view text) { return fmt::format("{:016x}", fnv1a(text)); }

std::uint64_t effective_split_seed(const ExperimentConfig& cfg) {
  return cfg.split_seed ? *cfg.split_seed : seed_for(cfg.master_seed, Cell{"*", "*", "*"}, "split");
}

Cell parse_cell(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto colon = text.find(':', start);
    parts.emplace_back(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3) throw Error(fmt::format("cell '{}': expected balancing:tuning:method", text));
  Cell cell{parts[0], parts[1], parts[2]};
  if (std::find(kBalancings.begin(), kBalancings.end(), cell.balancing) == kBalancings.end()) {
    throw Error(fmt::format("cell '{}': unknown balancing '{}'", text, cell.balancing));
  }
  if (std::find(kTunings.begin(), kTunings.end(), cell.tuning) == kTunings.end()) {
    throw Error(fmt::format("cell '{}': unknown tuning '{}'", text, cell.tuning));
  }
  parse_method(cell.method);
  return cell;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  std::optional<IngestStats> stats;
  LabeledDataset data = [&] {
    if (!cfg.oulad_dir.empty()) {
      auto frame = ingest_oulad(cfg.oulad_dir, cfg.course, cfg.presentations);
      stats = frame.stats;
      return std::move(frame.data);
    }
    return load_csv(cfg.csv);
  }();
  auto split = stratified_split(data, cfg.test_fraction, effective_split_seed(cfg));
  auto ranges = RangeTable::from(split.train);
  return PreparedData{std::move(data), std::move(split), std::move(ranges), stats};
}

BalancedTrain balance_for(const ExperimentConfig& cfg, const LabeledDataset& train, std::string_view balancing) {
  const auto seed = seed_for(cfg.master_seed, Cell{std::string(balancing), "*", "*"}, "balance");
  if (balancing == "original") return {train, {}};
  if (balancing == "undersampling") return {random_undersample(train, seed), {}};
  if (balancing == "oversampling") return {random_oversample(train, seed), {}};
  if (balancing == "smote") return {smote(train, cfg.smote_k, seed), {}};
  if (balancing == "cost_sensitive") return {train, cost_weights(train)};
  throw Error(fmt::format("unknown balancing '{}'", balancing));
}

TrainedModel train_model(const ExperimentConfig& cfg, const BalancedTrain& balanced, std::string_view balancing,
                         std::string_view tuning) {
  const Cell key{std::string(balancing), std::string(tuning), "*"};
  const std::size_t p = balanced.train.cols();
  TrainedModel out;
  if (tuning == "vanilla") {
    out.hp = Hyperparams::defaults(p, cfg.n_trees);
  } else if (tuning == "tuned") {
    const CvSpec cv{cfg.cv_folds, cfg.cv_repeats, cfg.cv_objective, seed_for(cfg.master_seed, key, "cv")};
    const auto result = tune(balanced.train, cfg.tuning_grid(p), cv, balanced.weights);
    out.hp = result.best;
    out.hp.n_trees = cfg.n_trees;
    out.cv_scores = result.mean_scores;
  } else {
    throw Error(fmt::format("unknown tuning '{}'", tuning));
  }
  out.model = fit_forest(balanced.train, out.hp, balanced.weights, seed_for(cfg.master_seed, key, "fit"));
  return out;
}

std::vector<CfRequest> select_requests(const ExperimentConfig& cfg, const RandomForestModel& model,
                                       const LabeledDataset& test, const LabeledDataset& bounds_source) {
  std::vector<CfRequest> out;
  for (std::size_t i = 0; i < test.rows(); ++i) {
    if (cfg.max_explained_instances && out.size() >= *cfg.max_explained_instances) break;
    if (model.predict(test.row(i)) != Label::fail) continue;
    std::string id = test.row_ids().empty() ? fmt::format("test_{}", i) : test.row_ids()[i];
    out.push_back(CfRequest::make(std::move(id), test.instance(i), bounds_source));
  }
  return out;
}

std::vector<Counterfactual> generate(const ExperimentConfig& cfg, const Cell& cell, const CfRequest& req,
                                     std::size_t request_index, const PredictedPool& pool, const RangeTable& ranges) {
  switch (parse_method(cell.method)) {
    case Method::whatif:
      return whatif(req, pool, cfg.whatif_k, ranges);
    case Method::moc: {
      MocConfig mc = cfg.moc;
      mc.seed = derive_seed(seed_for(cfg.master_seed, cell, "moc"), request_index);
      return moc(req, pool.model(), pool.data(), mc, ranges);
    }
    case Method::nice_sp:
      return {nice(req, pool, NiceReward::sparsity, ranges)};
    case Method::nice_pr:
      return {nice(req, pool, NiceReward::proximity, ranges)};
  }
  throw Error("unreachable method");
}

// ---- manifest ----

const CellRecord* RunManifest::find(const Cell& cell) const {
  for (const auto& c : cells) {
    if (c.cell == cell) return &c;
  }
  return nullptr;
}

const ModelRecord* RunManifest::find_model(std::string_view balancing, std::string_view tuning) const {
  for (const auto& m : models) {
    if (m.balancing == balancing && m.tuning == tuning) return &m;
  }
  return nullptr;
}

void RunManifest::write(const fs::path& path) const {
  json j;
  j["config_hash"] = config_hash;
  j["config"] = config_text;
  j["data"] = {{"rows", rows},           {"train_rows", train_rows}, {"test_rows", test_rows},
               {"test_fail", test_fail}, {"test_pass", test_pass},   {"split_seed", split_seed}};
  j["models"] = json::array();
  for (const auto& m : models) {
    j["models"].push_back({{"balancing", m.balancing},
                           {"tuning", m.tuning},
                           {"status", m.status},
                           {"reused", m.reused},
                           {"train_rows", m.train_rows},
                           {"weights", {m.weights.fail, m.weights.pass}},
                           {"mtry", m.hp.mtry},
                           {"splitrule", std::string(to_string(m.hp.splitrule))},
                           {"min_node_size", m.hp.min_node_size},
                           {"n_trees", m.hp.n_trees},
                           {"cv_scores", m.cv_scores},
                           {"accuracy", m.metrics.accuracy},
                           {"auc", m.metrics.auc},
                           {"f1", m.metrics.f1},
                           {"seconds", m.seconds},
                           {"error", m.error},
                           {"model_file", m.model_file}});
  }
  j["cells"] = json::array();
  for (const auto& c : cells) {
    j["cells"].push_back({{"balancing", c.cell.balancing},
                          {"tuning", c.cell.tuning},
                          {"method", c.cell.method},
                          {"status", c.status},
                          {"reused", c.reused},
                          {"requests", c.requests},
                          {"counterfactuals", c.counterfactuals},
                          {"seconds", c.seconds},
                          {"error", c.error},
                          {"files", c.files}});
  }
  j["files"] = files;
  j["seconds"] = seconds;
  write_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

RunManifest RunManifest::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
    RunManifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    const auto& d = j.at("data");
    m.rows = d.at("rows");
    m.train_rows = d.at("train_rows");
    m.test_rows = d.at("test_rows");
    m.test_fail = d.at("test_fail");
    m.test_pass = d.at("test_pass");
    m.split_seed = d.at("split_seed");
    for (const auto& e : j.at("models")) {
      ModelRecord r;
      r.balancing = e.at("balancing");
      r.tuning = e.at("tuning");
      r.status = e.at("status");
      r.reused = e.at("reused");
      r.train_rows = e.at("train_rows");
      r.weights = {e.at("weights").at(0), e.at("weights").at(1)};
      r.hp.mtry = e.at("mtry");
      r.hp.splitrule = parse_split_rule(e.at("splitrule").get<std::string>());
      r.hp.min_node_size = e.at("min_node_size");
      r.hp.n_trees = e.at("n_trees");
      r.cv_scores = e.at("cv_scores").get<std::vector<double>>();
      r.metrics = {e.at("accuracy"), e.at("auc"), e.at("f1")};
      r.seconds = e.at("seconds");
      r.error = e.at("error");
      r.model_file = e.at("model_file");
      m.models.push_back(std::move(r));
    }
    for (const auto& e : j.at("cells")) {
      CellRecord c;
      c.cell = {e.at("balancing"), e.at("tuning"), e.at("method")};
      c.status = e.at("status");
      c.reused = e.at("reused");
      c.requests = e.at("requests");
      c.counterfactuals = e.at("counterfactuals");
      c.seconds = e.at("seconds");
      c.error = e.at("error");
      c.files = e.at("files").get<std::vector<std::string>>();
      m.cells.push_back(std::move(c));
    }
    m.files = j.at("files").get<std::vector<std::string>>();
    m.seconds = j.at("seconds");
    return m;
  } catch (const json::exception& e) {
    throw Error(fmt::format("malformed manifest {}: {}", path.string(), e.what()));
  }
}

// ---- run ----

namespace {

struct CellOutput {
  std::vector<Counterfactual> cfs;
  std::vector<QualityRecord> records;
  std::size_t requests = 0;
};

CellOutput compute_cell(const ExperimentConfig& cfg, const Cell& cell, const std::vector<CfRequest>& requests,
                        const PredictedPool& pool, const RangeTable& ranges) {
  std::vector<std::vector<Counterfactual>> per_request(requests.size());
  parallel_for(requests.size(), [&](std::size_t i) {
    try {
      per_request[i] = generate(cfg, cell, requests[i], i, pool, ranges);
    } catch (const std::exception& e) {
      throw Error(fmt::format("request {}: {}", requests[i].id, e.what()));
    }
  });
  CellOutput out;
  out.requests = requests.size();
  for (std::size_t i = 0; i < requests.size(); ++i) {
    for (auto& cf : per_request[i]) {
      auto rec = score(requests[i].x, cf, pool.model(), pool.data(), ranges);
      rec.cell = cell;
      rec.request_id = requests[i].id;
      out.records.push_back(std::move(rec));
      out.cfs.push_back(std::move(cf));
    }
  }
  return out;
}

std::vector<std::string> write_cell(const fs::path& root, const Cell& cell, const CellOutput& output,
                                    const std::vector<std::string>& feature_names, const RandomForestModel& model) {
  const std::string name = cell_dir_name(cell);
  const fs::path final_dir = root / "cells" / name;
  const fs::path tmp_dir = root / "cells" / (name + ".tmp");
  fs::remove_all(tmp_dir);
  fs::create_directories(tmp_dir);

  {
    std::ofstream out(tmp_dir / kCfFile, std::ios::binary);
    out << "request_id,method";
    for (const auto& f : feature_names) out << ',' << f;
    out << ",valid\n";
    for (const auto& cf : output.cfs) {
      out << cf.request_id << ',' << to_string(cf.method);
      for (const double v : cf.values) out << ',' << format_real(v);
      out << ',' << (model.predict(cf.values) == Label::pass ? 1 : 0) << '\n';
    }
    if (!out) throw Error("write failed: " + (tmp_dir / kCfFile).string());
  }
  {
    std::ofstream out(tmp_dir / kMetaFile, std::ios::binary);
    std::map<std::string, std::size_t> index;
    for (const auto& cf : output.cfs) out << meta_json(cf, index[cf.request_id]++).dump() << '\n';
    if (!out) throw Error("write failed: " + (tmp_dir / kMetaFile).string());
  }
  write_quality_records(output.records, tmp_dir / kQualityFile);

  fs::remove_all(final_dir);
  fs::rename(tmp_dir, final_dir);
  const std::string rel = "cells/" + name + "/";
  return {rel + std::string(kCfFile), rel + std::string(kMetaFile), rel + std::string(kQualityFile)};
}

void write_reports(const fs::path& root, const ExperimentConfig& cfg, RunManifest& manifest) {
  write_atomic(root / "performance.csv", [&](std::ostream& out) {
    out << "balancing,tuning,accuracy,auc,f1\n";
    for (const auto& t : cfg.tuning) {
      for (const auto& b : cfg.balancing) {
        const auto* m = manifest.find_model(b, t);
        if (!m || m->status != "completed") continue;
        out << b << ',' << t << ',' << format_real(m->metrics.accuracy) << ',' << format_real(m->metrics.auc) << ','
            << format_real(m->metrics.f1) << '\n';
      }
    }
  });
  write_atomic(root / "hyperparameters.csv", [&](std::ostream& out) {
    out << "balancing,tuning,mtry,splitrule,min_node_size,n_trees,cv_score\n";
    for (const auto& t : cfg.tuning) {
      for (const auto& b : cfg.balancing) {
        const auto* m = manifest.find_model(b, t);
        if (!m || m->status != "completed") continue;
        std::string cv;
        if (!m->cv_scores.empty()) cv = format_real(*std::max_element(m->cv_scores.begin(), m->cv_scores.end()));
        out << b << ',' << t << ',' << m->hp.mtry << ',' << to_string(m->hp.splitrule) << ',' << m->hp.min_node_size
            << ',' << m->hp.n_trees << ',' << cv << '\n';
      }
    }
  });
  // One row per (method, tuning), one column per balancing; blank when the
  // cell has not completed.
  write_atomic(root / "counts.csv", [&](std::ostream& out) {
    out << "method,tuning";
    for (const auto& b : cfg.balancing) out << ',' << b;
    out << '\n';
    for (const auto& m : cfg.methods) {
      for (const auto& t : cfg.tuning) {
        out << m << ',' << t;
        for (const auto& b : cfg.balancing) {
          const auto* c = manifest.find(Cell{b, t, m});
          out << ',';
          if (c && c->status == "completed") out << c->counterfactuals;
        }
        out << '\n';
      }
    }
  });
  std::vector<QualityRecord> all;
  for (const auto& c : manifest.cells) {
    if (c.status != "completed") continue;
    auto recs = read_quality_records(root / "cells" / cell_dir_name(c.cell) / kQualityFile);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  const fs::path tmp_q = root / "quality_records.csv.tmp";
  write_quality_records(all, tmp_q);
  fs::rename(tmp_q, root / "quality_records.csv");
  const auto summaries = aggregate(all);
  const fs::path tmp_s = root / "cell_summaries.csv.tmp";
  write_cell_summaries(summaries, tmp_s);
  fs::rename(tmp_s, root / "cell_summaries.csv");
  manifest.files = {"performance.csv", "counts.csv", "hyperparameters.csv", "quality_records.csv",
                    "cell_summaries.csv", "manifest.json"};
}

}  // namespace

RunManifest run(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const fs::path root = cfg.output_dir;
  fs::create_directories(root / "cells");
  fs::create_directories(root / "models");

  RunManifest manifest;
  manifest.config_text = cfg.canonical();
  manifest.config_hash = fnv1a_hex(manifest.config_text);

  std::optional<RunManifest> previous;
  if (fs::exists(root / "manifest.json")) {
    try {
      auto prev = RunManifest::read(root / "manifest.json");
      if (prev.config_hash == manifest.config_hash) {
        previous = std::move(prev);
      } else {
        log_info("config changed since the previous run; recomputing every cell");
      }
    } catch (const Error& e) {
      log_info("ignoring unreadable manifest: {}", e.what());
    }
  }

  const auto prepared = prepare_data(cfg);
  const auto& train = prepared.split.train;
  const auto& test = prepared.split.test;
  manifest.split_seed = prepared.split.seed;
  manifest.rows = prepared.data.rows();
  manifest.train_rows = train.rows();
  manifest.test_rows = test.rows();
  manifest.test_fail = test.count(Label::fail);
  manifest.test_pass = test.count(Label::pass);
  log_info("data: {} rows, train {}, test {} ({} fail / {} pass)", manifest.rows, manifest.train_rows,
           manifest.test_rows, manifest.test_fail, manifest.test_pass);

  auto wanted = [&](const Cell& c) {
    if (!options.only) return true;
    return c == *options.only;
  };
  auto reusable_cell = [&](const Cell& c) -> const CellRecord* {
    if (!previous) return nullptr;
    const auto* rec = previous->find(c);
    if (!rec || rec->status != "completed" || !all_exist(root, rec->files)) return nullptr;
    return rec;
  };

  const auto feature_names = train.feature_names();
  for (const auto& b : cfg.balancing) {
    std::optional<BalancedTrain> balanced;
    for (const auto& t : cfg.tuning) {
      std::vector<Cell> todo;
      for (const auto& m : cfg.methods) {
        const Cell cell{b, t, m};
        CellRecord rec;
        rec.cell = cell;
        if (const auto* old = reusable_cell(cell)) {
          rec = *old;
          rec.reused = true;
        } else if (wanted(cell)) {
          todo.push_back(cell);
        }
        manifest.cells.push_back(std::move(rec));
      }

      ModelRecord mrec;
      mrec.balancing = b;
      mrec.tuning = t;
      const std::string model_rel = "models/" + model_dir_name(b, t) + "/model.txt";
      const ModelRecord* old_model = previous ? previous->find_model(b, t) : nullptr;
      const bool model_cached =
          old_model && old_model->status == "completed" && fs::exists(root / old_model->model_file);
      if (todo.empty()) {
        if (old_model) {
          mrec = *old_model;
          mrec.reused = true;
        }
        manifest.models.push_back(std::move(mrec));
        continue;
      }

      const auto model_start = std::chrono::steady_clock::now();
      RandomForestModel model;
      try {
        if (!balanced) balanced = balance_for(cfg, train, b);
        mrec.train_rows = balanced->train.rows();
        mrec.weights = balanced->weights;
        if (model_cached) {
          model = read_model(root / old_model->model_file);
          mrec.hp = old_model->hp;
          mrec.cv_scores = old_model->cv_scores;
          mrec.reused = true;
        } else {
          log_info("fitting {}:{}", b, t);
          auto trained = train_model(cfg, *balanced, b, t);
          model = std::move(trained.model);
          mrec.hp = trained.hp;
          mrec.cv_scores = std::move(trained.cv_scores);
          fs::create_directories(root / "models" / model_dir_name(b, t));
          write_atomic(root / model_rel, [&](std::ostream& out) { write_model(model, out); });
        }
        mrec.model_file = model_rel;
        mrec.metrics = evaluate(model, test);
        mrec.status = "completed";
        mrec.seconds = seconds_since(model_start);
        log_info("{}:{} accuracy {:.4f} auc {:.4f} f1 {:.4f} ({:.1f} s)", b, t, mrec.metrics.accuracy,
                 mrec.metrics.auc, mrec.metrics.f1, mrec.seconds);
      } catch (const std::exception& e) {
        mrec.status = "failed";
        mrec.error = e.what();
        log_info("{}:{} model failed: {}", b, t, e.what());
        for (const auto& cell : todo) {
          for (auto& rec : manifest.cells) {
            if (rec.cell == cell) {
              rec.status = "failed";
              rec.error = fmt::format("model: {}", e.what());
            }
          }
        }
        manifest.models.push_back(std::move(mrec));
        continue;
      }
      manifest.models.push_back(mrec);

      const PredictedPool pool(model, balanced->train);
      const auto requests = select_requests(cfg, model, test, train);
      for (const auto& cell : todo) {
        auto it = std::find_if(manifest.cells.begin(), manifest.cells.end(),
                               [&](const CellRecord& r) { return r.cell == cell; });
        auto& rec = *it;
        const auto cell_start = std::chrono::steady_clock::now();
        try {
          const auto output = compute_cell(cfg, cell, requests, pool, prepared.ranges);
          rec.files = write_cell(root, cell, output, feature_names, model);
          rec.requests = output.requests;
          rec.counterfactuals = output.cfs.size();
          rec.status = "completed";
          rec.error.clear();
        } catch (const std::exception& e) {
          rec.status = "failed";
          rec.error = e.what();
          rec.files.clear();
        }
        rec.reused = false;
        rec.seconds = seconds_since(cell_start);
        log_info("{}: {} ({} requests, {} counterfactuals, {:.1f} s){}", cell.label(), rec.status, rec.requests,
                 rec.counterfactuals, rec.seconds, rec.error.empty() ? "" : " " + rec.error);
      }
    }
  }

  write_reports(root, cfg, manifest);
  manifest.seconds = seconds_since(start);
  manifest.write(root / "manifest.json");
  return manifest;
}

std::vector<CellSummary> report(const fs::path& output_dir) {
  const auto manifest = RunManifest::read(output_dir / "manifest.json");
  std::vector<QualityRecord> all;
  for (const auto& c : manifest.cells) {
    if (c.status != "completed") continue;
    auto recs = read_quality_records(output_dir / "cells" / cell_dir_name(c.cell) / kQualityFile);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  write_quality_records(all, output_dir / "quality_records.csv");
  auto summaries = aggregate(all);
  write_cell_summaries(summaries, output_dir / "cell_summaries.csv");
  return summaries;
}

}  // namespace cfbench
