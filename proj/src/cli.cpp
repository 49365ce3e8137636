// Copyright 2026 The kinex Authors
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

#include "kinex/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "kinex/analysis.hpp"
#include "kinex/engine.hpp"
#include "kinex/fokker_planck.hpp"
#include "kinex/io.hpp"

namespace kinex {

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CorruptedState:
    case ErrorCode::InternalInvariantFailure:
      return 3;
    default:
      return 2;
  }
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Kind { Real, Count, Text, Flag, List };

struct Key {
  const char* name;
  Kind kind;
  const char* help;
};

const Key kGlobalKeys[] = {
    {"seed", Kind::Count, "base RNG seed"},
    {"replicas", Kind::Count, "number of independent replicas"},
    {"workers", Kind::Count, "worker threads (0 = all cores)"},
    {"out", Kind::Text, "output directory"},
    {"deterministic", Kind::Flag, "omit wall-clock data from metadata"},
};

const Key kModelKeys[] = {
    {"model", Kind::Text,
     "fixed-amount | random-fraction | pair-mean | proportional | saving | "
     "random-saving | firm | slanina | bouchaud-mezard | market"},
    {"agents", Kind::Count, "number of agents N"},
    {"balance", Kind::Real, "initial balance per agent"},
    {"stock", Kind::Real, "initial shares per agent (market)"},
    {"steps", Kind::Count, "transaction attempts (or SDE steps)"},
    {"stride", Kind::Count, "steps between snapshots"},
    {"credit", Kind::Text, "no-debt | limit | bank | unlimited"},
    {"max_debt", Kind::Real, "individual debt limit m_d"},
    {"reserve_ratio", Kind::Real, "bank reserve ratio R"},
    {"pairing", Kind::Text, "uniform | directed"},
    {"pairing_seed", Kind::Count, "seed for directed link orientation"},
    {"delta", Kind::Real, "fixed transfer amount"},
    {"gamma", Kind::Real, "transferred fraction"},
    {"lambda", Kind::Real, "saving propensity"},
    {"zeta", Kind::Real, "growth per exchange (slanina)"},
    {"J", Kind::Real, "exchange coupling (bouchaud-mezard)"},
    {"sigma2", Kind::Real, "noise strength (bouchaud-mezard)"},
    {"mean_growth", Kind::Real, "mean growth rate (bouchaud-mezard)"},
    {"dt", Kind::Real, "time step (bouchaud-mezard)"},
    {"v", Kind::Real, "demand scale (firm)"},
    {"eta", Kind::Real, "demand exponent (firm)"},
    {"chi", Kind::Real, "labor share (firm)"},
    {"omega", Kind::Real, "wage (firm)"},
    {"h", Kind::Real, "interest rate (firm)"},
    {"redraw_prob", Kind::Real, "preference redraw probability (market)"},
    {"entropy_bin_width", Kind::Real, "bin width of the entropy series"},
    {"full_snapshot_limit", Kind::Count, "largest N stored in full"},
    {"debug", Kind::Flag, "check credit bounds after every attempt"},
    {"analysis", Kind::List,
     "tasks on the final state: exponential, gamma, pareto, two-class, "
     "ccdf-exponential, ccdf-loglog, lorenz, entropy, histogram, ccdf"},
    {"threshold", Kind::Real, "Pareto threshold for analysis"},
};

const Key kSweepKeys[] = {
    {"param", Kind::Text, "lambda | gamma | reserve_ratio | max_debt"},
    {"values", Kind::List, "comma-separated grid values (a/b allowed)"},
};

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Real: return "a number";
    case Kind::Count: return "a non-negative integer";
    case Kind::Text: return "a string";
    case Kind::Flag: return "a boolean";
    case Kind::List: return "a list";
  }
  return "";
}

bool kind_matches(Kind k, const json& v) {
  switch (k) {
    case Kind::Real: return v.is_number();
    case Kind::Count:
      return v.is_number_unsigned() ||
             (v.is_number_float() && v.get<double>() >= 0.0 &&
              std::floor(v.get<double>()) == v.get<double>());
    case Kind::Text: return v.is_string();
    case Kind::Flag: return v.is_boolean();
    case Kind::List: return v.is_array();
  }
  return false;
}

[[noreturn]] void user_error(const std::string& what) {
  raise(ErrorCode::InvalidParameter, what);
}

double parse_real_text(const std::string& s, const std::string& where) {
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const double a = std::stod(s.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(s);
      const std::string rest = s.substr(slash + 1);
      const double b = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument(s);
      return a / b;
    }
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    user_error(where + ": expected a number, got '" + s + "'");
  }
}

json count_from_real(double v, const std::string& where) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.2e18)
    user_error(where + ": expected a non-negative integer");
  return json(static_cast<std::uint64_t>(v));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Collects options as text so flags and config files share one converter.
struct FlagStore {
  std::map<std::string, std::string> text;
  std::map<std::string, std::vector<std::string>> lists;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> opts;
  std::map<std::string, Kind> kinds;

  void add(CLI::App* app, const Key& k) {
    const std::string name = std::string("--") + k.name;
    kinds[k.name] = k.kind;
    if (k.kind == Kind::Flag)
      opts[k.name] = app->add_flag(name, flags[k.name], k.help);
    else if (k.kind == Kind::List)
      opts[k.name] = app->add_option(name, lists[k.name], k.help)->delimiter(',');
    else
      opts[k.name] = app->add_option(name, text[k.name], k.help);
  }

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }

  void merge_into(json& j) const {
    for (const auto& [name, opt] : opts) {
      if (opt->count() == 0) continue;
      const std::string where = "--" + name;
      switch (kinds.at(name)) {
        case Kind::Real: j[name] = parse_real_text(text.at(name), where); break;
        case Kind::Count:
          j[name] = count_from_real(parse_real_text(text.at(name), where), where);
          break;
        case Kind::Text: j[name] = text.at(name); break;
        case Kind::Flag: j[name] = flags.at(name); break;
        case Kind::List: j[name] = lists.at(name); break;
      }
    }
  }
};

// Line of the first occurrence of "key" in the config text.
std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

struct Settings {
  json values = json::object();
  std::string config_path;
  std::string config_text;
  std::set<std::string> from_flags;

  std::string where(const std::string& key) const {
    if (from_flags.count(key) || config_path.empty()) return "--" + key;
    return config_path + ":" + std::to_string(line_of_key(config_text, key)) +
           ": key '" + key + "'";
  }

  bool has(const std::string& key) const { return values.contains(key); }

  double real(const std::string& key) const {
    const json& v = values.at(key);
    if (v.is_string()) return parse_real_text(v.get<std::string>(), where(key));
    if (!v.is_number()) user_error(where(key) + ": expected a number");
    return v.get<double>();
  }
  double real(const std::string& key, double fallback) const {
    return has(key) ? real(key) : fallback;
  }
  double required_real(const std::string& key, const std::string& model) const {
    if (!has(key)) user_error("model " + model + " requires --" + key);
    return real(key);
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = values.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number()) return count_from_real(v.get<double>(), where(key)).get<std::uint64_t>();
    if (v.is_string())
      return count_from_real(parse_real_text(v.get<std::string>(), where(key)), where(key))
          .get<std::uint64_t>();
    user_error(where(key) + ": expected a non-negative integer");
  }
  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = values.at(key);
    if (!v.is_string()) user_error(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  bool flag(const std::string& key) const {
    if (!has(key)) return false;
    const json& v = values.at(key);
    if (!v.is_boolean()) user_error(where(key) + ": expected a boolean");
    return v.get<bool>();
  }
  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = values.at(key);
    if (v.is_string()) return split_list(v.get<std::string>());
    if (!v.is_array()) user_error(where(key) + ": expected a list");
    for (const auto& e : v) {
      if (e.is_string())
        for (auto& s : split_list(e.get<std::string>())) out.push_back(s);
      else if (e.is_number())
        out.push_back(format_number(e.get<double>()));
      else
        user_error(where(key) + ": list entries must be strings or numbers");
    }
    return out;
  }
};

using Stores = std::vector<const FlagStore*>;

Settings load_settings(const std::string& config_path, const Stores& stores,
                       const std::set<std::string>& allowed) {
  Settings s;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) user_error("cannot open config file " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    s.config_path = config_path;
    s.config_text = buf.str();
    try {
      s.values = json::parse(s.config_text);
    } catch (const json::parse_error& e) {
      const std::size_t byte = std::min<std::size_t>(e.byte, s.config_text.size());
      const auto line = 1 + std::count(s.config_text.begin(),
                                       s.config_text.begin() + static_cast<long>(byte > 0 ? byte - 1 : 0), '\n');
      user_error(config_path + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
    }
    if (!s.values.is_object())
      user_error(config_path + ":1: the config must be a JSON object");
    for (const auto& [key, value] : s.values.items()) {
      if (!allowed.count(key))
        user_error(config_path + ":" + std::to_string(line_of_key(s.config_text, key)) +
                   ": unknown key '" + key + "'");
      for (const FlagStore* flags : stores) {
        const auto kind = flags->kinds.find(key);
        if (kind == flags->kinds.end()) continue;
        if (!kind_matches(kind->second, value))
          user_error(config_path + ":" + std::to_string(line_of_key(s.config_text, key)) +
                     ": '" + key + "' must be " + kind_name(kind->second));
      }
    }
  }
  json overrides = json::object();
  for (const FlagStore* flags : stores) flags->merge_into(overrides);
  for (const auto& [key, value] : overrides.items()) {
    s.values[key] = value;
    s.from_flags.insert(key);
  }
  return s;
}

// Model specification -------------------------------------------------------------

const std::map<std::string, std::set<std::string>>& model_params() {
  static const std::map<std::string, std::set<std::string>> m{
      {"fixed-amount", {"delta"}},
      {"random-fraction", {}},
      {"pair-mean", {}},
      {"proportional", {"gamma"}},
      {"saving", {"lambda"}},
      {"random-saving", {}},
      {"firm", {"v", "eta", "chi", "omega", "h"}},
      {"slanina", {"gamma", "zeta"}},
      {"bouchaud-mezard", {"J", "sigma2", "mean_growth", "dt"}},
      {"market", {"redraw_prob", "stock"}},
  };
  return m;
}

const std::set<std::string> kRuleParams{"delta", "gamma", "lambda", "zeta", "J",
                                        "sigma2", "mean_growth", "dt", "v", "eta",
                                        "chi", "omega", "h", "redraw_prob", "stock"};

ModelSpec spec_from_settings(const Settings& s) {
  const std::string model = s.text("model", "random-fraction");
  const auto it = model_params().find(model);
  if (it == model_params().end()) user_error(s.where("model") + ": unknown model '" + model + "'");
  for (const auto& p : kRuleParams)
    if (s.has(p) && !it->second.count(p))
      user_error(s.where(p) + ": does not apply to model " + model);

  ModelSpec spec;
  if (model == "fixed-amount") spec.rule = FixedAmount{s.real("delta", 1.0)};
  if (model == "random-fraction") spec.rule = RandomFractionOfMean{};
  if (model == "pair-mean") spec.rule = RandomFractionOfPairMean{};
  if (model == "proportional") spec.rule = Proportional{s.required_real("gamma", model)};
  if (model == "saving") spec.rule = Saving{s.required_real("lambda", model)};
  if (model == "random-saving") spec.rule = RandomSaving{};
  if (model == "firm")
    spec.rule = Firm{FirmParams{s.required_real("v", model), s.required_real("eta", model),
                                s.required_real("chi", model), s.required_real("omega", model),
                                s.required_real("h", model)}};
  if (model == "slanina")
    spec.rule = SlaninaGrowth{s.required_real("gamma", model), s.required_real("zeta", model)};
  if (model == "bouchaud-mezard")
    spec.rule = BouchaudMezard{BMParams{s.required_real("J", model), s.real("mean_growth", 0.0),
                                        s.required_real("sigma2", model),
                                        s.required_real("dt", model)}};
  if (model == "market") spec.rule = StockMarket{s.real("redraw_prob", 0.0)};

  const std::string credit = s.text("credit", "no-debt");
  if (s.has("max_debt") && credit != "limit")
    user_error(s.where("max_debt") + ": only applies to --credit limit");
  if (s.has("reserve_ratio") && credit != "bank")
    user_error(s.where("reserve_ratio") + ": only applies to --credit bank");
  if (credit == "no-debt")
    spec.credit = NoDebt{};
  else if (credit == "limit")
    spec.credit = DebtLimit{s.has("max_debt") ? s.real("max_debt")
                                              : (user_error("--credit limit requires --max_debt"), 0.0)};
  else if (credit == "bank")
    spec.credit = Bank{s.has("reserve_ratio") ? s.real("reserve_ratio")
                                              : (user_error("--credit bank requires --reserve_ratio"), 0.0)};
  else if (credit == "unlimited")
    spec.credit = Unlimited{};
  else
    user_error(s.where("credit") + ": unknown credit policy '" + credit + "'");

  spec.seed = s.count("seed", 1);
  const std::string pairing = s.text("pairing", "uniform");
  if (pairing == "uniform") {
    if (s.has("pairing_seed"))
      user_error(s.where("pairing_seed") + ": only applies to --pairing directed");
    spec.pairing = UniformSymmetric{};
  } else if (pairing == "directed") {
    spec.pairing = FixedDirectedLinks{s.count("pairing_seed", spec.seed)};
  } else {
    user_error(s.where("pairing") + ": unknown pairing policy '" + pairing + "'");
  }

  spec.agent_count = s.count("agents", 1000);
  spec.initial_balance = s.real("balance", 1000.0);
  spec.initial_stock = s.real("stock", 1.0);
  spec.step_budget = s.count("steps", 1000000);
  spec.snapshot_stride = s.count("stride", std::max<std::uint64_t>(spec.step_budget / 100, 1));
  spec.entropy_bin_width = s.real("entropy_bin_width", 0.0);
  spec.full_snapshot_limit = s.count("full_snapshot_limit", 100000);
  spec.debug_checks = s.flag("debug");
  validate(spec);
  return spec;
}

// Output helpers -------------------------------------------------------------------

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) user_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) user_error("cannot write " + path.string());
  writer(os);
  if (!os) user_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

std::vector<double> final_values(const Trajectory& t) {
  const Snapshot& s = t.final();
  if (s.balances.empty())
    user_error("the final snapshot keeps summary statistics only; raise "
               "--full_snapshot_limit to analyze it");
  std::vector<double> v = snapshot_wealth(s);
  if (std::holds_alternative<SlaninaGrowth>(t.spec.rule)) {
    const double mean = compensated_sum(v) / static_cast<double>(v.size());
    for (double& x : v) x /= mean;
  }
  return v;
}

EmpiricalDistribution pooled_final(const std::vector<Trajectory>& runs) {
  std::vector<double> all;
  for (const auto& t : runs) {
    const auto v = final_values(t);
    all.insert(all.end(), v.begin(), v.end());
  }
  return EmpiricalDistribution(std::move(all));
}

// Analysis tasks ---------------------------------------------------------------------

struct TaskOptions {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  std::optional<double> threshold;
  std::size_t bins = 100;
  std::optional<std::size_t> min_samples;
};

const std::set<std::string> kTasks{"exponential", "gamma",   "pareto", "two-class",
                                   "ccdf-exponential", "ccdf-loglog", "lorenz",
                                   "entropy",     "histogram", "ccdf"};

FitOptions with_min(const TaskOptions& o, std::size_t fallback) {
  return FitOptions{o.min_samples.value_or(fallback)};
}

json run_tasks(const EmpiricalDistribution& dist, const std::vector<std::string>& tasks,
               const TaskOptions& o, const std::optional<fs::path>& out_dir) {
  json reports = json::array();
  for (const auto& task : tasks) {
    if (!kTasks.count(task)) user_error("unknown analysis task '" + task + "'");
    if (task == "exponential") {
      reports.push_back(report_to_json(fit_exponential(dist, o.lo, o.hi, with_min(o, 100))));
    } else if (task == "gamma") {
      reports.push_back(report_to_json(fit_gamma(dist, with_min(o, 1000))));
    } else if (task == "pareto") {
      const double u = o.threshold ? *o.threshold : quantile(dist, 0.9);
      reports.push_back(report_to_json(fit_pareto_tail(dist, u, with_min(o, 100))));
    } else if (task == "two-class") {
      reports.push_back(report_to_json(two_class_fit(dist, with_min(o, 10000))));
    } else if (task == "ccdf-exponential") {
      json r = report_to_json(fit_exponential_ccdf(dist, o.lo, o.hi));
      r["mode"] = "figure-style";
      reports.push_back(r);
    } else if (task == "ccdf-loglog") {
      json r = report_to_json(fit_ccdf_loglog(dist, o.lo > 0.0 ? o.lo : 0.0, o.hi));
      r["mode"] = "figure-style";
      reports.push_back(r);
    } else if (task == "lorenz") {
      const LorenzCurve c = lorenz_curve(dist);
      if (out_dir) write_file(*out_dir / "lorenz.csv", [&](std::ostream& os) { write_lorenz_csv(os, c); });
      reports.push_back({{"model", "lorenz"}, {"gini", c.gini}, {"n", dist.size()}});
    } else if (task == "entropy") {
      const Histogram h = histogram(dist, equal_width_edges(dist.samples, o.bins));
      reports.push_back({{"model", "entropy"}, {"entropy", entropy(h)},
                         {"bins", o.bins}, {"n", dist.size()}});
    } else if (task == "histogram") {
      const Histogram h = histogram(dist, equal_width_edges(dist.samples, o.bins));
      if (out_dir) write_file(*out_dir / "histogram.csv", [&](std::ostream& os) { write_histogram_csv(os, h); });
      reports.push_back({{"model", "histogram"}, {"bins", o.bins}, {"total", h.total},
                         {"n", dist.size()}});
    } else if (task == "ccdf") {
      if (out_dir) write_file(*out_dir / "ccdf.csv", [&](std::ostream& os) { write_ccdf_csv(os, dist); });
      reports.push_back({{"model", "ccdf"}, {"n", dist.size()}});
    }
  }
  return reports;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json rng_provenance(const ModelSpec& spec) {
  return {{"generator", "xoshiro256**"},
          {"seeding", "splitmix64"},
          {"streams", "replica k advances the seeded state by k jumps of 2^128"},
          {"seed", spec.seed}};
}

// simulate ---------------------------------------------------------------------------

std::set<std::string> allowed_keys(bool sweep) {
  std::set<std::string> keys;
  for (const auto& k : kGlobalKeys) keys.insert(k.name);
  for (const auto& k : kModelKeys) keys.insert(k.name);
  if (sweep)
    for (const auto& k : kSweepKeys) keys.insert(k.name);
  return keys;
}

TaskOptions task_options(const Settings& s, const ModelSpec& spec) {
  TaskOptions o;
  if (const auto* lim = std::get_if<DebtLimit>(&spec.credit)) o.lo = -lim->max_debt;
  if (s.has("threshold")) o.threshold = s.real("threshold");
  return o;
}

int cmd_simulate(const std::string& config, const Stores& stores, std::ostream& out) {
  const Settings s = load_settings(config, stores, allowed_keys(false));
  const ModelSpec spec = spec_from_settings(s);
  const std::size_t replicas = s.count("replicas", 1);
  const std::size_t workers = s.count("workers", 0);
  const bool deterministic = s.flag("deterministic");
  const std::string out_text = s.text("out", "");
  if (out_text.empty()) user_error("simulate needs --out <directory>");
  const auto tasks = s.list("analysis");
  for (const auto& t : tasks)
    if (!kTasks.count(t)) user_error(s.where("analysis") + ": unknown task '" + t + "'");

  const std::vector<Trajectory> runs = run_replicas(spec, replicas, workers);

  const fs::path root(out_text);
  ensure_dir(root);
  json meta{{"spec", spec_to_json(spec)}, {"replicas", replicas}, {"rng", rng_provenance(spec)}};
  json per_run = json::array();
  json walls = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const Trajectory& t = runs[k];
    std::ostringstream name;
    name << "replica-" << std::setw(3) << std::setfill('0') << k;
    const fs::path dir = replicas == 1 ? root : root / name.str();
    ensure_dir(dir);
    write_file(dir / "snapshots.csv", [&](std::ostream& os) { write_snapshots_csv(os, t); });
    write_file(dir / "entropy.csv", [&](std::ostream& os) { write_entropy_csv(os, t); });
    write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, t); });
    if (!t.saving_propensities.empty())
      write_file(dir / "lambdas.csv", [&](std::ostream& os) {
        os << "agent_id,lambda\n";
        for (std::size_t a = 0; a < t.saving_propensities.size(); ++a)
          os << a << ',' << format_number(t.saving_propensities[a]) << '\n';
      });
    const auto eq = detect_equilibration(t.entropy_series, 10, 1e-3);
    per_run.push_back({{"stream", t.spec.stream_id},
                       {"directory", replicas == 1 ? "." : name.str()},
                       {"final_step", t.final().step},
                       {"equilibration_step", eq ? json(*eq) : json(nullptr)},
                       {"log2_scale", t.final().log2_scale}});
    walls.push_back(t.wall_seconds);
  }
  meta["runs"] = per_run;
  if (!deterministic) {
    meta["wall_seconds"] = walls;
    meta["created"] = timestamp();
  }
  write_json(root / "meta.json", meta);

  if (!tasks.empty()) {
    const json reports = run_tasks(pooled_final(runs), tasks, task_options(s, spec), root);
    write_json(root / "report.json", reports);
  }
  out << "wrote " << runs.size() << " replica(s) to " << root.string() << '\n';
  return 0;
}

// sweep ------------------------------------------------------------------------------

int cmd_sweep(const std::string& config, const Stores& stores, std::ostream& out) {
  Settings s = load_settings(config, stores, allowed_keys(true));
  const std::string param = s.text("param", "");
  const auto values = s.list("values");
  if (param.empty() || values.empty()) user_error("sweep needs --param and --values");
  if (!s.has("model")) {
    if (param == "lambda") s.values["model"] = "saving";
    else if (param == "gamma") s.values["model"] = "proportional";
    else s.values["model"] = "random-fraction";
  }
  if (param == "reserve_ratio") s.values["credit"] = "bank";
  else if (param == "max_debt") s.values["credit"] = "limit";
  else if (param != "lambda" && param != "gamma")
    user_error(s.where("param") + ": unknown sweep parameter '" + param + "'");
  const std::size_t replicas = s.count("replicas", 1);
  const std::size_t workers = s.count("workers", 0);

  std::ostringstream table;
  table << "param,value,statistic,fitted,stderr,theory,deviation\n";
  auto row = [&](double value, const char* stat, double fitted, double se, double theory) {
    table << param << ',' << format_number(value) << ',' << stat << ','
          << format_number(fitted) << ',' << format_number(se) << ','
          << format_number(theory) << ',' << format_number(fitted - theory) << '\n';
  };
  for (const auto& text : values) {
    const double value = parse_real_text(text, s.where("values"));
    Settings point = s;
    point.values[param] = value;
    const ModelSpec spec = spec_from_settings(point);
    const auto runs = run_replicas(spec, replicas, workers);
    const EmpiricalDistribution dist = pooled_final(runs);
    const double m0 = spec.initial_balance;
    if (param == "lambda" || param == "gamma") {
      const FitReport r = fit_gamma(dist);
      const double theory = param == "lambda" ? beta_from_lambda(value) : beta_from_gamma(value);
      row(value, "beta", r.param("beta"), r.stderrs.at("beta"), theory);
    } else if (param == "reserve_ratio") {
      std::vector<double> pos;
      std::vector<double> neg;
      for (double x : dist.samples) {
        if (x > 0.0) pos.push_back(x);
        if (x < 0.0) neg.push_back(-x);
      }
      const FitReport rp = fit_exponential(EmpiricalDistribution(pos));
      const FitReport rn = fit_exponential(EmpiricalDistribution(neg));
      row(value, "T_plus", rp.param("T"), rp.stderrs.at("T"), m0 / value);
      row(value, "T_minus", rn.param("T"), rn.stderrs.at("T"), m0 * (1.0 - value) / value);
    } else {
      const FitReport r = fit_exponential(dist, -value);
      row(value, "T", r.param("T"), r.stderrs.at("T"), m0 + value);
    }
  }
  const std::string out_text = s.text("out", "");
  if (out_text.empty()) {
    out << table.str();
  } else {
    ensure_dir(out_text);
    write_file(fs::path(out_text) / "sweep.csv", [&](std::ostream& os) { os << table.str(); });
  }
  return 0;
}

// analyze ----------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string input;
  bool final_only = false;
  std::optional<std::uint64_t> step;
  bool wealth = false;
  std::vector<std::string> fits;
  bool lorenz = false;
  bool entropy = false;
  bool histogram = false;
  bool ccdf = false;
  std::optional<double> lo;
  std::optional<double> hi;
  std::optional<double> threshold;
  std::size_t bins = 100;
  std::optional<std::size_t> min_samples;
};

InputTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) user_error("cannot open " + path);
  return read_table(in, path);
}

double price_at(const fs::path& summary, std::uint64_t step) {
  std::ifstream in(summary);
  if (!in) user_error("--wealth needs " + summary.string() + " for the price series");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header = split_list(line);
  const auto it = std::find(header.begin(), header.end(), "price");
  if (it == header.end()) user_error(summary.string() + ": no price column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  while (std::getline(in, line)) {
    const auto f = split_list(line);
    if (f.size() > col && f[0] == std::to_string(step)) return std::stod(f[col]);
  }
  user_error(summary.string() + ": no price recorded for step " + std::to_string(step));
}

int cmd_analyze(const AnalyzeArgs& a, const std::string& out_text, std::ostream& out) {
  std::vector<std::string> tasks = a.fits;
  if (a.lorenz) tasks.push_back("lorenz");
  if (a.entropy) tasks.push_back("entropy");
  if (a.histogram) tasks.push_back("histogram");
  if (a.ccdf) tasks.push_back("ccdf");
  if (tasks.empty()) user_error("analyze needs at least one task (--fit, --lorenz, --entropy, --histogram, --ccdf)");
  for (const auto& t : tasks)
    if (!kTasks.count(t)) user_error("unknown analysis task '" + t + "'");

  InputTable table = load_table(a.input);
  EmpiricalDistribution dist;
  std::optional<std::uint64_t> used_step;
  if (table.snapshots) {
    std::uint64_t step = table.balances.rbegin()->first;
    if (a.step) {
      if (!table.balances.count(*a.step))
        user_error(a.input + ": no snapshot at step " + std::to_string(*a.step));
      step = *a.step;
    }
    used_step = step;
    dist.samples = table.balances.at(step);
    if (a.wealth) {
      if (!table.has_stock) user_error("--wealth needs a snapshot file with a stock column");
      const double p = price_at(fs::path(a.input).parent_path() / "summary.csv", step);
      const auto& st = table.stocks.at(step);
      for (std::size_t k = 0; k < dist.samples.size(); ++k) dist.samples[k] += p * st[k];
    }
  } else {
    if (a.step || a.wealth) user_error("--step and --wealth apply to snapshot files only");
    dist = std::move(table.values);
  }

  TaskOptions o;
  if (a.lo) o.lo = *a.lo;
  if (a.hi) o.hi = *a.hi;
  o.threshold = a.threshold;
  o.bins = a.bins;
  o.min_samples = a.min_samples;
  std::optional<fs::path> dir;
  if (!out_text.empty()) {
    dir = fs::path(out_text);
    ensure_dir(*dir);
  }
  json doc{{"input", a.input}, {"reports", run_tasks(dist, tasks, o, dir)}};
  if (used_step) doc["step"] = *used_step;
  if (dir)
    write_json(*dir / "report.json", doc);
  else
    out << doc.dump(2) << '\n';
  return 0;
}

// fp -----------------------------------------------------------------------------------

struct FpArgs {
  double A0 = 0.0;
  double a = 0.0;
  double B0 = 0.0;
  double b = 0.0;
  std::optional<double> rmin;
  std::optional<double> rmax;
  std::size_t points = 4096;
};

std::vector<double> renormalized(const std::vector<double>& grid, std::vector<double> v) {
  const double z = trapezoid(grid, v);
  for (double& x : v) x /= z;
  return v;
}

int cmd_fp(const FpArgs& f, const std::string& out_text, std::ostream& out) {
  const DriftDiffusion dd{f.A0, f.a, f.B0, f.b};
  std::vector<double> grid;
  if (f.rmin && f.rmax) {
    grid = geometric_grid(*f.rmin, *f.rmax, f.points);
  } else if (f.A0 > 0.0 && f.B0 > 0.0) {
    grid = default_grid(dd, f.points);
    if (f.rmin || f.rmax)
      grid = geometric_grid(f.rmin.value_or(grid.front()), f.rmax.value_or(grid.back()), f.points);
  } else {
    if (!f.rmin) user_error("without A0 > 0 and B0 > 0 the density needs --rmin");
    grid = geometric_grid(*f.rmin, f.rmax.value_or(*f.rmin * 1e12), f.points);
  }
  const GridDensity p = stationary_solution(dd, grid);

  std::vector<std::pair<std::string, std::vector<double>>> columns;
  if (f.a == 0.0 && f.b == 0.0 && f.A0 > 0.0) {
    const double t = f.B0 / f.A0;
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) v[k] = std::exp(-grid[k] / t) / t;
    columns.emplace_back("exponential", renormalized(grid, v));
  }
  if (f.A0 == 0.0 && f.B0 == 0.0 && f.b > 0.0) {
    const double alpha = 1.0 + f.a / f.b;
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) v[k] = std::pow(grid[k] / grid.front(), -(alpha + 1.0));
    columns.emplace_back("power_law", renormalized(grid, v));
  }
  if (f.A0 > 0.0 && f.B0 > 0.0 && f.b > 0.0) {
    const InterpolatingDensity closed = InterpolatingDensity::from(dd);
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) v[k] = closed(grid[k]);
    columns.emplace_back("interpolating", renormalized(grid, v));
  }
  std::ostringstream csv;
  csv << "r,density";
  for (const auto& c : columns) csv << ',' << c.first;
  csv << '\n';
  for (std::size_t k = 0; k < grid.size(); ++k) {
    csv << format_number(grid[k]) << ',' << format_number(p.density[k]);
    for (const auto& c : columns) csv << ',' << format_number(c.second[k]);
    csv << '\n';
  }
  if (out_text.empty()) {
    out << csv.str();
  } else {
    ensure_dir(out_text);
    write_file(fs::path(out_text) / "fp.csv", [&](std::ostream& os) { os << csv.str(); });
  }
  return 0;
}

// hierarchy / family -----------------------------------------------------------------

struct HierarchyArgs {
  int levels = 20;
  double branching = 2.0;
  double base = 1.0;
  std::optional<double> step;
  std::optional<double> factor;
};

int cmd_hierarchy(const HierarchyArgs& h, const std::string& out_text, std::ostream& out) {
  if (h.step.has_value() == h.factor.has_value())
    user_error("hierarchy needs exactly one of --step (additive) or --factor (multiplicative)");
  IncrementMode mode = h.step ? IncrementMode{AdditiveIncrement{*h.step}}
                              : IncrementMode{MultiplicativeIncrement{*h.factor}};
  const EmpiricalDistribution d = hierarchy_incomes(h.levels, h.branching, h.base, mode);
  json doc;
  if (h.step) {
    const FitReport r = fit_exponential_ccdf(d, d.samples.front(), d.samples.back());
    doc = report_to_json(r);
    doc["theory"] = {{"T", *h.step / std::log(h.branching)}};
  } else {
    const FitReport r = fit_ccdf_loglog(d, d.samples.front(), d.samples.back());
    doc = report_to_json(r);
    doc["theory"] = {{"slope", -std::log(h.branching) / std::log(*h.factor)}};
  }
  doc["mode"] = "figure-style";
  std::ostringstream csv;
  csv << "value,weight\n";
  for (std::size_t k = 0; k < d.size(); ++k)
    csv << format_number(d.samples[k]) << ',' << format_number(d.weight(k)) << '\n';
  if (out_text.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    ensure_dir(out_text);
    write_file(fs::path(out_text) / "hierarchy.csv", [&](std::ostream& os) { os << csv.str(); });
    write_json(fs::path(out_text) / "report.json", doc);
  }
  return 0;
}

int cmd_family(const std::string& input, std::uint64_t seed, const std::string& out_text,
               std::ostream& out) {
  InputTable table = load_table(input);
  EmpiricalDistribution d =
      table.snapshots ? EmpiricalDistribution(table.balances.rbegin()->second) : table.values;
  RngStream rng(seed);
  const EmpiricalDistribution sums = pair_sum_samples(d, rng);
  json doc{{"input", input}, {"pairs", sums.size()}, {"gini", gini(sums)}};
  if (sums.size() >= 1000) doc["gamma"] = report_to_json(fit_gamma(sums));
  if (out_text.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    ensure_dir(out_text);
    write_file(fs::path(out_text) / "family.csv", [&](std::ostream& os) {
      os << "value\n";
      for (double v : sums.samples) os << format_number(v) << '\n';
    });
    write_json(fs::path(out_text) / "report.json", doc);
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kinex: kinetic wealth-exchange simulator and income analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_flag("--help", "print this help message and exit");

  FlagStore globals;
  std::string config;
  for (const auto& k : kGlobalKeys) globals.add(&app, k);
  app.add_option("--config", config, "JSON experiment configuration");

  FlagStore sim_flags;
  auto* sim = app.add_subcommand("simulate", "run replicas and write snapshots");
  for (const auto& k : kModelKeys) sim_flags.add(sim, k);

  FlagStore sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "fit a statistic over a parameter grid");
  for (const auto& k : kModelKeys) sweep_flags.add(sweep, k);
  for (const auto& k : kSweepKeys) sweep_flags.add(sweep, k);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "fit and summarize a CSV");
  analyze->add_option("--in", an.input, "input CSV")->required();
  analyze->add_flag("--final", an.final_only, "use the last snapshot (default)");
  analyze->add_option("--step", an.step, "use the snapshot at this step");
  analyze->add_flag("--wealth", an.wealth, "money + price * stock (market snapshots)");
  analyze->add_option("--fit", an.fits, "exponential, gamma, pareto, two-class, ccdf-exponential, ccdf-loglog")
      ->delimiter(',');
  analyze->add_flag("--lorenz", an.lorenz, "Lorenz curve and Gini");
  analyze->add_flag("--entropy", an.entropy, "binned entropy");
  analyze->add_flag("--histogram", an.histogram, "histogram CSV");
  analyze->add_flag("--ccdf", an.ccdf, "CCDF CSV");
  analyze->add_option("--lo", an.lo, "lower fit bound");
  analyze->add_option("--hi", an.hi, "upper fit bound");
  analyze->add_option("--threshold", an.threshold, "Pareto threshold");
  analyze->add_option("--bins", an.bins, "histogram bins")->check(CLI::PositiveNumber);
  analyze->add_option("--min-samples", an.min_samples, "override minimum sample counts");

  FpArgs fpa;
  auto* fp = app.add_subcommand("fp", "stationary Fokker-Planck density");
  fp->add_option("--A0", fpa.A0, "additive drift");
  fp->add_option("--a", fpa.a, "multiplicative drift");
  fp->add_option("--B0", fpa.B0, "additive diffusion");
  fp->add_option("--b", fpa.b, "multiplicative diffusion");
  fp->add_option("--rmin", fpa.rmin, "grid start");
  fp->add_option("--rmax", fpa.rmax, "grid end");
  fp->add_option("--points", fpa.points, "grid points")->check(CLI::Range(3, 100000000));

  HierarchyArgs ha;
  auto* hier = app.add_subcommand("hierarchy", "incomes of a branching hierarchy");
  hier->add_option("--levels", ha.levels, "number of levels");
  hier->add_option("--branching", ha.branching, "subordinates per superior");
  hier->add_option("--base", ha.base, "income at the bottom level");
  hier->add_option("--step", ha.step, "additive income increment");
  hier->add_option("--factor", ha.factor, "multiplicative income factor");

  std::string family_in;
  auto* family = app.add_subcommand("family", "pair incomes into families");
  family->add_option("--in", family_in, "input CSV")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "kinex: " << e.what() << '\n';
    return 2;
  }

  try {
    const Settings g = load_settings("", {&globals}, allowed_keys(false));
    const std::string out_dir = g.text("out", "");
    const std::uint64_t seed = g.count("seed", 1);
    if (*sim) return cmd_simulate(config, {&globals, &sim_flags}, out);
    if (*sweep) return cmd_sweep(config, {&globals, &sweep_flags}, out);
    if (!config.empty())
      user_error("--config applies to simulate and sweep");
    if (*analyze) return cmd_analyze(an, out_dir, out);
    if (*fp) return cmd_fp(fpa, out_dir, out);
    if (*hier) return cmd_hierarchy(ha, out_dir, out);
    if (*family) return cmd_family(family_in, seed, out_dir, out);
  } catch (const Error& e) {
    err << "kinex: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "kinex: internal error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace kinex
