#include "cfbench/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cfbench/csv.hpp"
#include "cfbench/error.hpp"

namespace cfbench {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
void require_unique(const std::vector<T>& items, std::string_view what) {
  std::set<T> seen;
  for (const auto& item : items) {
    if (!seen.insert(item).second) throw Error(fmt::format("duplicate {} entry", what));
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (oulad_dir.empty() == csv.empty()) throw Error("config: set exactly one of data.oulad_dir and data.csv");
  if (!oulad_dir.empty() && presentations.empty()) throw Error("config: data.presentations is empty");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("config: split.test_fraction must lie in (0, 1)");
  if (balancing.empty() || tuning.empty() || methods.empty()) throw Error("config: grid lists must be nonempty");
  for (const auto& b : balancing) {
    if (std::find(kBalancings.begin(), kBalancings.end(), b) == kBalancings.end()) {
      throw Error(fmt::format("config: unknown balancing '{}'", b));
    }
  }
  for (const auto& t : tuning) {
    if (std::find(kTunings.begin(), kTunings.end(), t) == kTunings.end()) {
      throw Error(fmt::format("config: unknown tuning '{}'", t));
    }
  }
  for (const auto& m : methods) parse_method(m);
  require_unique(balancing, "balancing");
  require_unique(tuning, "tuning");
  require_unique(methods, "method");
  if (n_trees == 0 || cv_trees == 0) throw Error("config: tree counts must be positive");
  if (cv_folds < 2 || cv_repeats == 0) throw Error("config: tuning needs folds >= 2 and repeats >= 1");
  if (grid_mtry.empty() || grid_splitrule.empty() || grid_min_node_size.empty()) {
    throw Error("config: tuning grid lists must be nonempty");
  }
  if (smote_k == 0 || whatif_k == 0) throw Error("config: k values must be positive");
  if (max_explained_instances && *max_explained_instances == 0) {
    throw Error("config: run.max_explained_instances must be positive or 'unlimited'");
  }
  MocConfig check = moc;
  check.validate();
}

std::vector<Hyperparams> ExperimentConfig::tuning_grid(std::size_t p) const {
  std::vector<std::size_t> mtrys;
  for (const auto m : grid_mtry) {
    const auto capped = std::clamp<std::size_t>(m, 1, p);
    if (std::find(mtrys.begin(), mtrys.end(), capped) == mtrys.end()) mtrys.push_back(capped);
  }
  std::vector<Hyperparams> grid;
  for (const auto mtry : mtrys) {
    for (const auto rule : grid_splitrule) {
      for (const auto node : grid_min_node_size) grid.push_back(Hyperparams{mtry, rule, node, cv_trees});
    }
  }
  return grid;
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::string> rules;
  for (const auto r : grid_splitrule) rules.emplace_back(to_string(r));
  std::ostringstream out;
  out << "[data]\n";
  if (!oulad_dir.empty()) out << "oulad_dir = " << oulad_dir.string() << '\n';
  if (!csv.empty()) out << "csv = " << csv.string() << '\n';
  out << fmt::format("course = {}\npresentations = {}\n", course, fmt::join(presentations, ","));
  out << fmt::format("[split]\ntest_fraction = {}\n", test_fraction);
  if (split_seed) out << "seed = " << *split_seed << '\n';
  out << fmt::format("[grid]\nbalancing = {}\ntuning = {}\nmethods = {}\n", fmt::join(balancing, ","),
                     fmt::join(tuning, ","), fmt::join(methods, ","));
  out << fmt::format("[forest]\nn_trees = {}\n", n_trees);
  out << fmt::format(
      "[tuning]\nfolds = {}\nrepeats = {}\nobjective = {}\ncv_trees = {}\nmtry = {}\nsplitrule = {}\nmin_node_size = "
      "{}\n",
      cv_folds, cv_repeats, to_string(cv_objective), cv_trees, fmt::join(grid_mtry, ","), fmt::join(rules, ","),
      fmt::join(grid_min_node_size, ","));
  out << fmt::format("[smote]\nk = {}\n[whatif]\nk = {}\n", smote_k, whatif_k);
  out << fmt::format("[moc]\npopulation = {}\ngenerations = {}\nmutation_rate = {}\ncrossover_rate = {}\n",
                     moc.population, moc.generations, moc.mutation_rate, moc.crossover_rate);
  out << fmt::format("[run]\nmaster_seed = {}\nmax_explained_instances = {}\n", master_seed,
                     max_explained_instances ? std::to_string(*max_explained_instances) : "unlimited");
  return out.str();
}

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
  ExperimentConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) { return Error(fmt::format("{}:{}: {}", origin, line_no, why)); };
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const std::set<std::string> known = {"data",  "split",  "grid", "forest", "tuning",
                                                  "smote", "whatif", "moc",  "run"};
      if (!known.contains(section)) throw fail(fmt::format("unknown section [{}]", section));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) throw fail("key outside of a section");

    auto integer = [&]() -> std::uint64_t {
      const auto v = parse_real(value);
      if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::uint64_t>(*v))) {
        throw fail(fmt::format("{}.{}: expected a non-negative integer, got '{}'", section, key, value));
      }
      return static_cast<std::uint64_t>(*v);
    };
    auto real = [&]() -> double {
      const auto v = parse_real(value);
      if (!v) throw fail(fmt::format("{}.{}: expected a number, got '{}'", section, key, value));
      return *v;
    };
    auto integers = [&]() {
      std::vector<std::size_t> out;
      for (const auto& item : split_list(value)) {
        const auto v = parse_real(item);
        if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
          throw fail(fmt::format("{}.{}: bad integer '{}'", section, key, item));
        }
        out.push_back(static_cast<std::size_t>(*v));
      }
      return out;
    };
    const std::string id = section + "." + key;
    try {
      if (id == "data.oulad_dir") cfg.oulad_dir = value;
      else if (id == "data.csv") cfg.csv = value;
      else if (id == "data.course") cfg.course = value;
      else if (id == "data.presentations") cfg.presentations = split_list(value);
      else if (id == "split.test_fraction") cfg.test_fraction = real();
      else if (id == "split.seed") cfg.split_seed = integer();
      else if (id == "grid.balancing") cfg.balancing = split_list(value);
      else if (id == "grid.tuning") cfg.tuning = split_list(value);
      else if (id == "grid.methods") cfg.methods = split_list(value);
      else if (id == "forest.n_trees") cfg.n_trees = integer();
      else if (id == "tuning.folds") cfg.cv_folds = integer();
      else if (id == "tuning.repeats") cfg.cv_repeats = integer();
      else if (id == "tuning.objective") cfg.cv_objective = parse_cv_objective(value);
      else if (id == "tuning.cv_trees") cfg.cv_trees = integer();
      else if (id == "tuning.mtry") cfg.grid_mtry = integers();
      else if (id == "tuning.splitrule") {
        cfg.grid_splitrule.clear();
        for (const auto& item : split_list(value)) cfg.grid_splitrule.push_back(parse_split_rule(item));
      } else if (id == "tuning.min_node_size") cfg.grid_min_node_size = integers();
      else if (id == "smote.k") cfg.smote_k = integer();
      else if (id == "whatif.k") cfg.whatif_k = integer();
      else if (id == "moc.population") cfg.moc.population = integer();
      else if (id == "moc.generations") cfg.moc.generations = integer();
      else if (id == "moc.mutation_rate") cfg.moc.mutation_rate = real();
      else if (id == "moc.crossover_rate") cfg.moc.crossover_rate = real();
      else if (id == "run.master_seed") cfg.master_seed = integer();
      else if (id == "run.max_explained_instances") {
        if (value == "unlimited") cfg.max_explained_instances.reset();
        else cfg.max_explained_instances = integer();
      } else if (id == "run.output_dir") cfg.output_dir = value;
      else throw fail(fmt::format("unknown key '{}' in [{}]", key, section));
    } catch (const Error& e) {
      const std::string what = e.what();
      if (what.rfind(std::string(origin), 0) == 0) throw;
      throw fail(what);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto cfg = parse_config(buffer.str(), path.string());
  // Relative data paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  if (!cfg.oulad_dir.empty() && cfg.oulad_dir.is_relative()) cfg.oulad_dir = base / cfg.oulad_dir;
  if (!cfg.csv.empty() && cfg.csv.is_relative()) cfg.csv = base / cfg.csv;
  return cfg;
}

}  // namespace cfbench
