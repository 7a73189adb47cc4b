#include "arms/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "arms/errors.hpp"

namespace arms::bench {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view key, std::string_view v, int line) {
  const std::string t = trim(v);
  try {
    std::size_t used = 0;
    const double d = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return d;
  } catch (const std::exception&) {
    throw ParseError(std::string(key), line, "expected a number, got '" + t + "'");
  }
}

long to_long(std::string_view key, std::string_view v, int line) {
  const std::string t = trim(v);
  long out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(std::string(key), line, "expected an integer, got '" + t + "'");
  }
  return out;
}

std::vector<double> to_doubles(std::string_view key, std::string_view v, int line) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item, line));
  return out;
}

}  // namespace

TargetDensity ExperimentConfig::make_target() const {
  if (target == "standard_normal") return standard_normal();
  if (target == "benchmark") return gaussian_mixture(GaussianMixtureSpec::benchmark());
  return gaussian_mixture(mixture);
}

SamplerOptions ExperimentConfig::sampler_options() const {
  SamplerOptions o;
  o.tail_beta = tail_beta;
  o.tail_alpha_decay = tail_alpha;
  return o;
}

void set_field(ExperimentConfig& cfg, std::string_view raw_key, std::string_view value, int line) {
  const std::string key = lower(trim(raw_key));
  const std::string field = trim(raw_key);
  if (key == "n") {
    cfg.n = to_long("N", value, line);
    if (cfg.n < 1) throw ParseError("N", line, "must be at least 1");
  } else if (key == "runs") {
    cfg.runs = to_long(field, value, line);
    if (cfg.runs < 1) throw ParseError("runs", line, "must be at least 1");
  } else if (key == "seed" || key == "base_seed") {
    const long s = to_long(field, value, line);
    if (s < 0) throw ParseError(field, line, "must be nonnegative");
    cfg.base_seed = static_cast<std::uint64_t>(s);
  } else if (key == "k") {
    const std::string v = trim(value);
    if (v == "N" || v == "n") {
      cfg.k_stop = -1;
    } else {
      cfg.k_stop = to_long("K", v, line);
      if (cfg.k_stop < 0) throw ParseError("K", line, "must be nonnegative or N");
    }
  } else if (key == "target") {
    const std::string v = lower(trim(value));
    if (v != "benchmark" && v != "standard_normal" && v != "mixture") {
      throw ParseError("target", line, "unknown target '" + v + "'");
    }
    cfg.target = v;
  } else if (key == "weights") {
    cfg.mixture.weights = to_doubles(field, value, line);
    cfg.target = "mixture";
  } else if (key == "means") {
    cfg.mixture.means = to_doubles(field, value, line);
    cfg.target = "mixture";
  } else if (key == "variances") {
    cfg.mixture.variances = to_doubles(field, value, line);
    cfg.target = "mixture";
  } else if (key == "samplers") {
    cfg.samplers.clear();
    for (const auto& item : split_list(value)) {
      auto k = parse_sampler(item);
      if (!k) throw ParseError("samplers", line, "unknown sampler '" + item + "'");
      cfg.samplers.push_back(*k);
    }
  } else if (key == "procedures") {
    cfg.procedures.clear();
    for (const auto& item : split_list(value)) {
      auto p = parse_procedure(item);
      if (!p) throw ParseError("procedures", line, "unknown procedure '" + item + "'");
      cfg.procedures.push_back(*p);
    }
  } else if (key == "s0_lower") {
    cfg.s0.lower = to_double(field, value, line);
  } else if (key == "s0_upper") {
    cfg.s0.upper = to_double(field, value, line);
  } else if (key == "s0_interior_count") {
    cfg.s0.interior_count = to_long(field, value, line);
  } else if (key == "s0_interior_lo") {
    cfg.s0.interior_lo = to_double(field, value, line);
  } else if (key == "s0_interior_hi") {
    cfg.s0.interior_hi = to_double(field, value, line);
  } else if (key == "grid_lo") {
    cfg.grid.lo = to_double(field, value, line);
  } else if (key == "grid_hi") {
    cfg.grid.hi = to_double(field, value, line);
  } else if (key == "grid_points") {
    cfg.grid.n_points = to_long(field, value, line);
  } else if (key == "tail_beta") {
    cfg.tail_beta = to_double(field, value, line);
  } else if (key == "tail_alpha") {
    cfg.tail_alpha = to_double(field, value, line);
  } else if (key == "workers") {
    cfg.workers = to_long(field, value, line);
  } else if (key == "output_path" || key == "out") {
    cfg.output_path = trim(value);
  } else {
    throw ParseError(field, line, "unknown field");
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw ParseError("N", 0, "must be at least 1");
  if (cfg.runs < 1) throw ParseError("runs", 0, "must be at least 1");
  if (cfg.samplers.empty()) throw ParseError("samplers", 0, "list is empty");
  if (cfg.procedures.empty()) throw ParseError("procedures", 0, "list is empty");
  if (cfg.s0.interior_count < 0) throw ParseError("s0_interior_count", 0, "must be nonnegative");
  if (!(cfg.s0.lower < cfg.s0.upper)) throw ParseError("s0_lower", 0, "must be below s0_upper");
  if (!(cfg.s0.interior_lo <= cfg.s0.interior_hi)) throw ParseError("s0_interior_lo", 0, "must be <= s0_interior_hi");
  if (!(cfg.grid.lo < cfg.grid.hi)) throw ParseError("grid_lo", 0, "must be below grid_hi");
  if (cfg.grid.n_points < 2) throw ParseError("grid_points", 0, "must be at least 2");
  if (!(cfg.tail_beta >= 0.0 && cfg.tail_beta <= 1.0)) throw ParseError("tail_beta", 0, "must lie in [0, 1]");
  if (!(cfg.tail_alpha > 0.0)) throw ParseError("tail_alpha", 0, "must be positive");
  if (cfg.workers < 0) throw ParseError("workers", 0, "must be nonnegative");
  if (cfg.target == "mixture") {
    try {
      (void)gaussian_mixture(cfg.mixture);
    } catch (const SpecError& e) {
      throw ParseError("weights", 0, e.what());
    }
    for (double m : cfg.mixture.means) {
      if (m <= cfg.s0.lower || m >= cfg.s0.upper) {
        throw ParseError("s0_lower", 0, "initial endpoints must bracket every mixture mean");
      }
    }
  } else if (cfg.target == "benchmark") {
    for (double m : GaussianMixtureSpec::benchmark().means) {
      if (m <= cfg.s0.lower || m >= cfg.s0.upper) {
        throw ParseError("s0_lower", 0, "initial endpoints must bracket every mixture mean");
      }
    }
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line, line_no, "expected key = value");
    set_field(cfg, line.substr(0, eq), std::string_view(line).substr(eq + 1), line_no);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config", 0, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

bool CellResult::failed() const {
  const long total = runs_ok + runs_failed;
  return total == 0 || runs_failed * 100 > total;
}

bool ExperimentTable::any_cell_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.failed(); });
}

SupportSet draw_initial_support(const InitialSupportPolicy& policy, const TargetDensity& target, Procedure proc,
                                Rng& rng) {
  std::string last_error = "no attempt made";
  for (long attempt = 0; attempt < std::max<long>(1, policy.max_redraws); ++attempt) {
    std::vector<double> pts{policy.lower, policy.upper};
    for (long i = 0; i < policy.interior_count; ++i) pts.push_back(rng.uniform(policy.interior_lo, policy.interior_hi));
    try {
      SupportSet s(std::move(pts), target);
      (void)build(s, proc, target);
      return s;
    } catch (const TailSlopeError& e) {
      last_error = e.what();
    } catch (const DuplicatePoint& e) {
      last_error = e.what();
    }
  }
  throw TailSlopeError("no valid initial support after " + std::to_string(policy.max_redraws) +
                       " draws: " + last_error);
}

RunOutput run_single(const ExperimentConfig& cfg, SamplerKind sampler, Procedure proc, long run_index) {
  const TargetDensity target = cfg.make_target();
  Rng rng(cfg.base_seed + static_cast<std::uint64_t>(run_index));
  const SupportSet s0 = draw_initial_support(cfg.s0, target, proc, rng);
  RunOutput out{run_chain(sampler, target, proc, s0, cfg.n, cfg.k_stop, rng, cfg.sampler_options()), {}};
  out.summary = summarize(out.result.chain, out.result.state, target, cfg.grid);
  return out;
}

CellResult aggregate(SamplerKind sampler, Procedure proc, std::vector<RunSummary> summaries,
                     std::vector<std::string> failures) {
  CellResult c;
  c.sampler = sampler;
  c.procedure = proc;
  c.runs_ok = static_cast<long>(summaries.size());
  c.runs_failed = static_cast<long>(failures.size());
  const double nan = std::nan("");
  if (summaries.empty()) {
    c.est_mean = c.std_est = c.lag1_corr = c.avg_support = c.avg_rs_rej = c.avg_second_ctrl = c.avg_D = nan;
  } else {
    std::vector<double> means, corrs, support, rs, second, d;
    for (const auto& s : summaries) {
      means.push_back(s.est_mean);
      if (s.lag1_corr) corrs.push_back(*s.lag1_corr);
      support.push_back(static_cast<double>(s.final_m));
      rs.push_back(static_cast<double>(s.rs_rejections));
      second.push_back(static_cast<double>(s.second_control_additions));
      d.push_back(s.final_D);
    }
    c.est_mean = mean(means);
    c.std_est = stddev(means);
    c.lag1_corr = corrs.empty() ? nan : mean(corrs);
    c.avg_support = mean(support);
    c.avg_rs_rej = mean(rs);
    c.avg_second_ctrl = mean(second);
    c.avg_D = mean(d);
  }
  c.summaries = std::move(summaries);
  c.failures = std::move(failures);
  return c;
}

namespace {

std::string describe(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    msg += ": " + describe(inner);
  } catch (...) {
    msg += ": unknown error";
  }
  return msg;
}

}  // namespace

ExperimentTable run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  struct Task {
    std::size_t cell;
    long run;
  };
  struct Slot {
    std::optional<RunSummary> summary;
    std::string error;
  };

  std::vector<std::pair<SamplerKind, Procedure>> cells;
  for (auto s : cfg.samplers) {
    for (auto p : cfg.procedures) cells.emplace_back(s, p);
  }
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (long r = 0; r < cfg.runs; ++r) tasks.push_back({c, r});
  }
  std::vector<Slot> slots(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      try {
        slots[i].summary = run_single(cfg, cells[t.cell].first, cells[t.cell].second, t.run).summary;
      } catch (const std::exception& e) {
        slots[i].error = "run " + std::to_string(t.run) + ": " + describe(e);
      }
    }
  };

  long n_workers = cfg.workers > 0 ? cfg.workers : static_cast<long>(std::thread::hardware_concurrency());
  n_workers = std::clamp<long>(n_workers, 1, static_cast<long>(std::max<std::size_t>(1, tasks.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (long w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  ExperimentTable table;
  table.n = cfg.n;
  table.seed = cfg.base_seed;
  std::size_t i = 0;
  for (const auto& [sampler, proc] : cells) {
    std::vector<RunSummary> ok;
    std::vector<std::string> failed;
    for (long r = 0; r < cfg.runs; ++r, ++i) {
      if (slots[i].summary) {
        ok.push_back(*slots[i].summary);
      } else {
        failed.push_back(slots[i].error);
      }
    }
    table.cells.push_back(aggregate(sampler, proc, std::move(ok), std::move(failed)));
  }
  return table;
}

std::string format_sig6(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%#.6g", x);
  std::string s = buf;
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

void write_csv(const ExperimentTable& table, std::ostream& out) {
  out << "sampler,procedure,est_mean,std_est,lag1_corr,avg_support,avg_rs_rej,avg_second_ctrl,avg_D,runs,N,seed\n";
  for (const auto& c : table.cells) {
    out << to_string(c.sampler) << ',' << to_string(c.procedure) << ',' << format_sig6(c.est_mean) << ','
        << format_sig6(c.std_est) << ',' << format_sig6(c.lag1_corr) << ',' << format_sig6(c.avg_support) << ','
        << format_sig6(c.avg_rs_rej) << ',' << format_sig6(c.avg_second_ctrl) << ',' << format_sig6(c.avg_D) << ','
        << c.runs_ok << ',' << table.n << ',' << table.seed << '\n';
  }
}

void emit_csv(const ExperimentTable& table, const std::string& path) {
  if (table.cells.empty()) throw Error("refusing to write an empty table to '" + path + "'");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_csv(table, out);
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

void dump_proposal(const ExperimentConfig& cfg, SamplerKind sampler, Procedure proc, long iterations,
                   std::ostream& out) {
  if (iterations < 0) throw ParseError("at-iteration", 0, "must be nonnegative");
  const TargetDensity target = cfg.make_target();
  Rng rng(cfg.base_seed);
  const SupportSet s0 = draw_initial_support(cfg.s0, target, proc, rng);
  if (iterations == 0) {
    write_proposal_csv(make_state(target, proc, s0, cfg.sampler_options()).proposal, out);
    return;
  }
  const ChainResult r = run_chain(sampler, target, proc, s0, iterations, cfg.k_stop, rng, cfg.sampler_options());
  write_proposal_csv(r.state.proposal, out);
}

}  // namespace arms::bench
