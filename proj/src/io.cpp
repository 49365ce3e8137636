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

#include "kinex/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string_view>

#include "kinex/error.hpp"

namespace kinex {

using nlohmann::json;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshots_csv(std::ostream& os, const Trajectory& traj) {
  const bool stock = !traj.snapshots.empty() && !traj.final().stocks.empty();
  os << (stock ? "step,agent_id,balance,stock\n" : "step,agent_id,balance\n");
  for (const auto& s : traj.snapshots) {
    for (std::size_t k = 0; k < s.balances.size(); ++k) {
      os << s.step << ',' << k << ',' << format_number(s.balances[k]);
      if (stock) os << ',' << format_number(s.stocks[k]);
      os << '\n';
    }
  }
}

void write_entropy_csv(std::ostream& os, const Trajectory& traj) {
  os << "step,entropy\n";
  for (const auto& [step, s] : traj.entropy_series)
    os << step << ',' << format_number(s) << '\n';
}

void write_summary_csv(std::ostream& os, const Trajectory& traj) {
  os << "step,total,mean,variance,min,max";
  for (double q : kSummaryLevels) {
    char label[16];
    std::snprintf(label, sizeof label, ",q%02d", static_cast<int>(std::lround(q * 100)));
    os << label;
  }
  os << ",price,share_total,log2_scale\n";
  for (const auto& s : traj.snapshots) {
    const auto& m = s.summary;
    os << s.step << ',' << format_number(m.total) << ',' << format_number(m.mean)
       << ',' << format_number(m.variance) << ',' << format_number(m.min) << ','
       << format_number(m.max);
    for (double q : m.quantiles) os << ',' << format_number(q);
    os << ',' << format_number(s.price) << ',' << format_number(s.share_total)
       << ',' << s.log2_scale << '\n';
  }
}

void write_lorenz_csv(std::ostream& os, const LorenzCurve& curve) {
  os << "x,y\n";
  for (std::size_t k = 0; k < curve.x.size(); ++k)
    os << format_number(curve.x[k]) << ',' << format_number(curve.y[k]) << '\n';
}

void write_histogram_csv(std::ostream& os, const Histogram& hist) {
  os << "lo,hi,count,density\n";
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    const double lo = hist.bin_edges[k];
    const double hi = hist.bin_edges[k + 1];
    const double d = hist.total > 0.0 ? hist.counts[k] / (hist.total * (hi - lo)) : 0.0;
    os << format_number(lo) << ',' << format_number(hi) << ','
       << format_number(hist.counts[k]) << ',' << format_number(d) << '\n';
  }
}

void write_ccdf_csv(std::ostream& os, const EmpiricalDistribution& dist) {
  os << "value,ccdf\n";
  for (const auto& [x, c] : ccdf_points(dist))
    os << format_number(x) << ',' << format_number(c) << '\n';
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json credit_json(const CreditPolicy& c) {
  if (std::holds_alternative<NoDebt>(c)) return {{"policy", "no-debt"}};
  if (const auto* l = std::get_if<DebtLimit>(&c))
    return {{"policy", "limit"}, {"max_debt", l->max_debt}};
  if (const auto* b = std::get_if<Bank>(&c))
    return {{"policy", "bank"}, {"reserve_ratio", b->reserve_ratio}};
  return {{"policy", "unlimited"}};
}

json rule_json(const ModelRule& rule) {
  json j{{"model", model_name(rule)}};
  if (const auto* r = std::get_if<FixedAmount>(&rule)) j["delta"] = r->delta;
  if (const auto* r = std::get_if<Proportional>(&rule)) j["gamma"] = r->gamma;
  if (const auto* r = std::get_if<Saving>(&rule)) j["lambda"] = r->lambda;
  if (const auto* r = std::get_if<SlaninaGrowth>(&rule)) {
    j["gamma"] = r->gamma;
    j["zeta"] = r->zeta;
  }
  if (const auto* r = std::get_if<BouchaudMezard>(&rule)) {
    j["J"] = r->params.coupling;
    j["mean_growth"] = r->params.mean_growth;
    j["sigma2"] = r->params.noise;
    j["dt"] = r->params.dt;
  }
  if (const auto* r = std::get_if<Firm>(&rule)) {
    j["v"] = r->params.demand_scale;
    j["eta"] = r->params.demand_exponent;
    j["chi"] = r->params.labor_share;
    j["omega"] = r->params.wage;
    j["h"] = r->params.interest;
  }
  if (const auto* r = std::get_if<StockMarket>(&rule)) j["redraw_prob"] = r->redraw_prob;
  return j;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void row_error(const std::string& source, std::size_t row,
                            const std::string& what) {
  raise(ErrorCode::InvalidData,
        source + ": row " + std::to_string(row) + ": " + what);
}

double parse_real(std::string_view field, const std::string& source,
                  std::size_t row) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    row_error(source, row, "not a finite number: '" + std::string(field) + "'");
  return v;
}

std::uint64_t parse_count(std::string_view field, const std::string& source,
                          std::size_t row) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    row_error(source, row, "not a non-negative integer: '" + std::string(field) + "'");
  return v;
}

}  // namespace

json spec_to_json(const ModelSpec& spec) {
  json j = rule_json(spec.rule);
  j["credit"] = credit_json(spec.credit);
  if (const auto* d = std::get_if<FixedDirectedLinks>(&spec.pairing))
    j["pairing"] = {{"policy", "directed"}, {"seed", d->seed}};
  else
    j["pairing"] = {{"policy", "uniform"}};
  j["agents"] = spec.agent_count;
  j["balance"] = spec.initial_balance;
  if (std::holds_alternative<StockMarket>(spec.rule)) j["stock"] = spec.initial_stock;
  j["steps"] = spec.step_budget;
  j["stride"] = spec.snapshot_stride;
  j["seed"] = spec.seed;
  j["stream"] = spec.stream_id;
  j["debug"] = spec.debug_checks;
  j["entropy_bin_width"] = spec.entropy_bin_width;
  j["full_snapshot_limit"] = spec.full_snapshot_limit;
  return j;
}

json report_to_json(const FitReport& r) {
  json params = json::object();
  for (const auto& [k, v] : r.params) params[k] = number_or_null(v);
  json stderrs = json::object();
  for (const auto& [k, v] : r.stderrs) stderrs[k] = number_or_null(v);
  json j{{"model", to_string(r.model)},
         {"params", params},
         {"stderr", stderrs},
         {"goodness", number_or_null(r.goodness)},
         {"range", json::array({number_or_null(r.range_lo), number_or_null(r.range_hi)})},
         {"n", r.n}};
  if (r.degenerate) j["degenerate"] = true;
  return j;
}

InputTable read_table(std::istream& is, const std::string& source) {
  InputTable t;
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    ++row;
    if (!trim(line).empty()) {
      for (auto f : split(line)) header.emplace_back(f);
      break;
    }
  }
  if (header.empty()) raise(ErrorCode::InvalidData, source + ": empty input");
  if (!header[0].empty() && static_cast<unsigned char>(header[0][0]) == 0xEF &&
      header[0].size() >= 3)
    header[0] = header[0].substr(3);

  auto col = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  int value_col = -1;
  int weight_col = -1;
  if (header.size() >= 3 && header[0] == "step" && header[1] == "agent_id" &&
      header[2] == "balance") {
    t.snapshots = true;
    t.has_stock = header.size() >= 4 && header[3] == "stock";
  } else if (col("value") >= 0) {
    value_col = col("value");
    weight_col = col("weight");
  } else if (header.size() >= 2 && header[0] == "r" && header[1] == "density") {
    value_col = 0;
    weight_col = 1;
  } else {
    row_error(source, row,
              "unrecognized header; expected 'value', 'id,value', "
              "'value,weight', 'r,density' or 'step,agent_id,balance[,stock]'");
  }

  const std::size_t width = header.size();
  bool any = false;
  while (std::getline(is, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != width)
      row_error(source, row,
                "expected " + std::to_string(width) + " fields, got " +
                    std::to_string(f.size()));
    any = true;
    if (t.snapshots) {
      const std::uint64_t step = parse_count(f[0], source, row);
      const std::uint64_t id = parse_count(f[1], source, row);
      auto& b = t.balances[step];
      if (id != b.size())
        row_error(source, row, "agent ids must run 0, 1, ... within a step");
      b.push_back(parse_real(f[2], source, row));
      if (t.has_stock) t.stocks[step].push_back(parse_real(f[3], source, row));
    } else {
      t.values.samples.push_back(parse_real(f[static_cast<std::size_t>(value_col)], source, row));
      if (weight_col >= 0) {
        const double w = parse_real(f[static_cast<std::size_t>(weight_col)], source, row);
        if (w < 0.0) row_error(source, row, "negative weight");
        t.values.weights.push_back(w);
      }
    }
  }
  if (!any) raise(ErrorCode::InvalidData, source + ": no data rows");
  return t;
}

}  // namespace kinex
