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

#include "kinex/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "kinex/error.hpp"

namespace kinex {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

bool is_pairwise(const ModelRule& rule) { return rule.index() <= 5; }

ExchangeRule as_exchange(const ModelRule& rule) {
  return std::visit(
      [](const auto& r) -> ExchangeRule {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_constructible_v<ExchangeRule, R>)
          return r;
        else
          raise(ErrorCode::InternalInvariantFailure, "not a pairwise rule");
      },
      rule);
}

double conservation_tolerance(std::uint64_t steps) {
  return std::max(1e-9 * static_cast<double>(steps) / 1e6, 1e-12);
}

void check_total(double now, double initial, std::uint64_t step,
                 const char* what) {
  const double scale = std::max(std::abs(initial), 1e-300);
  const double drift = std::abs(now - initial) / scale;
  if (!(drift <= conservation_tolerance(step)))
    raise(ErrorCode::InternalInvariantFailure,
          std::string(what) + " not conserved at step " + std::to_string(step) +
              ": initial " + std::to_string(initial) + ", now " +
              std::to_string(now));
}

void check_finite(const std::vector<double>& v, std::uint64_t step) {
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!std::isfinite(v[k]))
      raise(ErrorCode::InternalInvariantFailure,
            "non-finite value for agent " + std::to_string(k) + " at step " +
                std::to_string(step));
}

class Recorder {
 public:
  Recorder(const ModelSpec& spec, Trajectory& out) : spec_(spec), out_(out) {}

  void record(std::uint64_t step, const std::vector<double>& balances,
              const std::vector<double>* stocks, double price,
              std::int64_t log2_scale, const std::vector<double>& entropy_values) {
    if (!out_.snapshots.empty() && out_.snapshots.back().step >= step)
      raise(ErrorCode::InternalInvariantFailure,
            "snapshot steps must increase strictly");
    Snapshot s;
    s.step = step;
    s.price = price;
    s.log2_scale = log2_scale;
    s.summary = summarize(balances);
    if (stocks) s.share_total = compensated_sum(*stocks);
    if (balances.size() <= spec_.full_snapshot_limit) {
      s.balances = balances;
      if (stocks) s.stocks = *stocks;
    }
    out_.snapshots.push_back(std::move(s));
    if (width_ <= 0.0) {
      width_ = spec_.entropy_bin_width;
      if (!(width_ > 0.0)) {
        double mean = 0.0;
        for (double v : entropy_values) mean += v;
        mean /= static_cast<double>(entropy_values.size());
        width_ = std::abs(mean) / 10.0;
        if (!(width_ > 0.0)) width_ = 1.0;
      }
    }
    out_.entropy_series.emplace_back(step,
                                     fixed_width_entropy(entropy_values, width_));
  }

 private:
  const ModelSpec& spec_;
  Trajectory& out_;
  double width_ = 0.0;
};

template <class Advance, class Record>
void drive(const ModelSpec& spec, Advance&& advance, Record&& record) {
  std::uint64_t done = 0;
  record(done);
  while (done < spec.step_budget) {
    const std::uint64_t chunk =
        std::min(spec.snapshot_stride, spec.step_budget - done);
    advance(chunk);
    done += chunk;
    record(done);
  }
}

void run_population_model(const ModelSpec& spec, RngStream& rng,
                          Trajectory& out) {
  Population pop = init_population(spec.agent_count, spec.initial_balance);
  Recorder rec(spec, out);
  const double base = pop.money_base;
  const bool conserving = conserves_money(spec.rule);

  auto record = [&](std::uint64_t done) {
    if (pop.step_count != done)
      raise(ErrorCode::InternalInvariantFailure,
            "attempt counter " + std::to_string(pop.step_count) +
                " differs from the budget position " + std::to_string(done));
    check_finite(pop.balances, done);
    if (conserving) {
      check_total(compensated_sum(pop.balances), base, done, "money");
      check_credit_bounds(pop, spec.credit);
    }
    if (std::holds_alternative<SlaninaGrowth>(spec.rule)) {
      const double mean = compensated_sum(pop.balances) /
                          static_cast<double>(pop.size());
      std::vector<double> rel(pop.balances);
      for (double& v : rel) v /= mean;
      rec.record(done, pop.balances, nullptr, 0.0, pop.log2_scale, rel);
    } else {
      rec.record(done, pop.balances, nullptr, 0.0, pop.log2_scale,
                 pop.balances);
    }
  };

  if (is_pairwise(spec.rule)) {
    ExchangeRule rule = as_exchange(spec.rule);
    if (auto* rs = std::get_if<RandomSaving>(&rule); rs && rs->lambdas.empty()) {
      *rs = draw_random_saving(spec.agent_count, rng);
    }
    if (const auto* rs = std::get_if<RandomSaving>(&rule))
      out.saving_propensities = rs->lambdas;
    drive(
        spec,
        [&](std::uint64_t n) {
          run_pairwise(pop, rule, spec.credit, spec.pairing, rng, n,
                       spec.debug_checks);
        },
        record);
  } else if (const auto* firm = std::get_if<Firm>(&spec.rule)) {
    const FirmPlan plan = optimize_firm(firm->params);
    drive(
        spec,
        [&](std::uint64_t n) {
          for (std::uint64_t k = 0; k < n; ++k) {
            firm_cycle(pop, firm->params, plan, rng, spec.credit);
            if (spec.debug_checks) check_credit_bounds(pop, spec.credit);
          }
        },
        record);
  } else {
    const auto& g = std::get<SlaninaGrowth>(spec.rule);
    drive(
        spec,
        [&](std::uint64_t n) { run_slanina(pop, g.gamma, g.zeta, rng, n); },
        record);
  }
}

void run_bouchaud_mezard(const ModelSpec& spec, const BMParams& p,
                         RngStream& rng, Trajectory& out) {
  std::vector<double> w(spec.agent_count, 1.0);
  Recorder rec(spec, out);
  drive(
      spec,
      [&](std::uint64_t n) {
        for (std::uint64_t k = 0; k < n; ++k) bm_step(w, p, rng);
      },
      [&](std::uint64_t done) {
        check_finite(w, done);
        rec.record(done, w, nullptr, 0.0, 0, w);
      });
}

void run_market(const ModelSpec& spec, const StockMarket& m, RngStream& rng,
                Trajectory& out) {
  MarketState ms =
      make_market(spec.agent_count, spec.initial_balance, spec.initial_stock, rng);
  const double money0 = compensated_sum(ms.money);
  const double shares0 = compensated_sum(ms.shares);
  Recorder rec(spec, out);
  drive(
      spec,
      [&](std::uint64_t n) {
        for (std::uint64_t k = 0; k < n; ++k) market_step(ms, rng, m.redraw_prob);
      },
      [&](std::uint64_t done) {
        check_finite(ms.money, done);
        check_finite(ms.shares, done);
        check_total(compensated_sum(ms.money), money0, done, "money");
        check_total(compensated_sum(ms.shares), shares0, done, "shares");
        for (std::size_t k = 0; k < ms.size(); ++k)
          if (ms.money[k] < 0.0 || ms.shares[k] < 0.0)
            raise(ErrorCode::InternalInvariantFailure,
                  "negative holding for agent " + std::to_string(k) +
                      " at step " + std::to_string(done));
        rec.record(done, ms.money, &ms.shares, ms.price, 0, ms.wealth());
      });
}

}  // namespace

std::string model_name(const ModelRule& rule) {
  return std::visit(
      Overloaded{[](const FixedAmount&) { return "fixed-amount"; },
                 [](const RandomFractionOfMean&) { return "random-fraction"; },
                 [](const RandomFractionOfPairMean&) { return "pair-mean"; },
                 [](const Proportional&) { return "proportional"; },
                 [](const Saving&) { return "saving"; },
                 [](const RandomSaving&) { return "random-saving"; },
                 [](const Firm&) { return "firm"; },
                 [](const SlaninaGrowth&) { return "slanina"; },
                 [](const BouchaudMezard&) { return "bouchaud-mezard"; },
                 [](const StockMarket&) { return "market"; }},
      rule);
}

bool conserves_money(const ModelRule& rule) {
  return is_pairwise(rule) || std::holds_alternative<Firm>(rule);
}

void validate(const ModelSpec& spec) {
  require(spec.agent_count >= 2, ErrorCode::InvalidPopulation,
          "agent_count must be at least 2");
  require(std::isfinite(spec.initial_balance) && spec.initial_balance > 0.0,
          ErrorCode::InvalidParameter, "initial_balance must be positive");
  require(spec.snapshot_stride >= 1, ErrorCode::InvalidParameter,
          "snapshot_stride must be positive");
  require(std::isfinite(spec.entropy_bin_width) && spec.entropy_bin_width >= 0.0,
          ErrorCode::InvalidParameter, "entropy_bin_width must be non-negative");
  validate(spec.credit);
  const bool no_debt = std::holds_alternative<NoDebt>(spec.credit);
  std::visit(
      Overloaded{
          [&](const Firm& f) { validate(f.params); },
          [&](const SlaninaGrowth& g) {
            require(g.gamma > 0.0 && g.gamma < 1.0, ErrorCode::InvalidParameter,
                    "gamma must lie in (0, 1)");
            require(std::isfinite(g.zeta) && g.zeta >= 0.0,
                    ErrorCode::InvalidParameter, "zeta must be non-negative");
            require(no_debt, ErrorCode::InvalidParameter,
                    "growth exchange requires the no-debt policy");
          },
          [&](const BouchaudMezard& b) {
            validate(b.params);
            require(no_debt, ErrorCode::InvalidParameter,
                    "relative-wealth dynamics requires the no-debt policy");
          },
          [&](const StockMarket& m) {
            require(m.redraw_prob >= 0.0 && m.redraw_prob <= 1.0,
                    ErrorCode::InvalidParameter,
                    "redraw probability must lie in [0, 1]");
            require(std::isfinite(spec.initial_stock) && spec.initial_stock > 0.0,
                    ErrorCode::InvalidParameter, "initial_stock must be positive");
            require(no_debt, ErrorCode::InvalidParameter,
                    "the market model requires the no-debt policy");
          },
          [&](const auto& r) {
            const ExchangeRule rule = r;
            if (const auto* rs = std::get_if<RandomSaving>(&rule);
                rs && rs->lambdas.empty()) {
            } else {
              validate(rule);
              if (rs)
                require(rs->lambdas.size() == spec.agent_count,
                        ErrorCode::InvalidParameter,
                        "one saving propensity per agent is required");
            }
            if (requires_non_negative_balances(rule))
              require(no_debt, ErrorCode::InvalidParameter,
                      "multiplicative rules require the no-debt policy");
            require(!std::holds_alternative<RandomFractionOfPairMean>(rule) ||
                        !std::holds_alternative<Unlimited>(spec.credit),
                    ErrorCode::InvalidParameter,
                    "pair-mean exchange diverges geometrically without a "
                    "debt bound; use limit or bank credit");
          }},
      spec.rule);
}

Trajectory run_simulation(const ModelSpec& spec) {
  validate(spec);
  const auto start = std::chrono::steady_clock::now();
  Trajectory out;
  out.spec = spec;
  RngStream rng(spec.seed, spec.stream_id);
  if (const auto* bm = std::get_if<BouchaudMezard>(&spec.rule))
    run_bouchaud_mezard(spec, bm->params, rng, out);
  else if (const auto* m = std::get_if<StockMarket>(&spec.rule))
    run_market(spec, *m, rng, out);
  else
    run_population_model(spec, rng, out);
  out.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return out;
}

std::vector<Trajectory> run_replicas(const ModelSpec& spec,
                                     std::size_t replicas,
                                     std::size_t workers) {
  require(replicas >= 1, ErrorCode::InvalidParameter,
          "at least one replica is required");
  validate(spec);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, replicas);

  std::vector<Trajectory> results(replicas);
  std::vector<std::exception_ptr> errors(replicas);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < replicas; k = next++) {
      try {
        ModelSpec s = spec;
        s.stream_id = spec.stream_id + k;
        results[k] = run_simulation(s);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::optional<std::uint64_t> detect_equilibration(
    const std::vector<std::pair<std::uint64_t, double>>& series,
    std::size_t window, double epsilon) {
  if (series.empty() || window < 2) return std::nullopt;
  for (std::size_t end = window; end <= series.size(); ++end) {
    double lo = series[end - window].second;
    double hi = lo;
    for (std::size_t k = end - window; k < end; ++k) {
      lo = std::min(lo, series[k].second);
      hi = std::max(hi, series[k].second);
    }
    if (hi - lo <= epsilon) return series[end - 1].first;
  }
  return std::nullopt;
}

double fixed_width_entropy(const std::vector<double>& values, double width) {
  require(width > 0.0, ErrorCode::InvalidParameter, "bin width must be positive");
  if (values.empty()) return 0.0;
  std::vector<double> bins(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    bins[k] = std::floor(values[k] / width);
  std::sort(bins.begin(), bins.end());
  const double n = static_cast<double>(values.size());
  double s = 0.0;
  std::size_t k = 0;
  while (k < bins.size()) {
    std::size_t run = k;
    while (run < bins.size() && bins[run] == bins[k]) ++run;
    const double p = static_cast<double>(run - k) / n;
    s -= p * std::log(p);
    k = run;
  }
  return s;
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.total = compensated_sum(values);
  s.mean = s.total / n;
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.variance = acc / n;
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  for (double q : kSummaryLevels) {
    const auto idx = static_cast<std::size_t>(
        std::min(n - 1.0, std::max(0.0, std::ceil(q * n) - 1.0)));
    s.quantiles.push_back(sorted[idx]);
  }
  return s;
}

std::vector<double> snapshot_wealth(const Snapshot& s) {
  std::vector<double> w = s.balances;
  if (!s.stocks.empty())
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += s.price * s.stocks[k];
  return w;
}

}  // namespace kinex
