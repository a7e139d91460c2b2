#include "wfl/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wfl/allocation.hpp"
#include "wfl/convergence.hpp"
#include "wfl/error.hpp"
#include "wfl/simulator.hpp"
#include "wfl/timing_ra.hpp"
#include "wfl/timing_tdma.hpp"
#include "wfl/trainer.hpp"

#ifndef WFL_VERSION
#define WFL_VERSION "unknown"
#endif

namespace wfl::cli {
namespace {

using json = nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 1;
constexpr std::int64_t kDefaultTrials = 100'000;

// Reads config[section][key] (or config[key] when section is empty) as T.
template <class T>
std::optional<T> lookup(const json& config, std::string_view section, std::string_view key) {
  const std::string name = section.empty() ? std::string(key)
                                           : std::string(section) + "." + std::string(key);
  const json* node = &config;
  if (!section.empty()) {
    auto it = config.find(std::string(section));
    if (it == config.end()) return std::nullopt;
    if (!it->is_object()) throw InvalidConfig(std::string(section), "expected an object");
    node = &*it;
  }
  auto it = node->find(std::string(key));
  if (it == node->end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidConfig(name, "wrong type");
  }
}

template <class T>
T require(const json& config, std::string_view section, std::string_view key) {
  auto v = lookup<T>(config, section, key);
  if (!v) {
    throw InvalidConfig(section.empty() ? std::string(key)
                                        : std::string(section) + "." + std::string(key),
                        "missing");
  }
  return *v;
}

Protocol resolve_protocol(const json& config, const Flags& flags) {
  if (flags.protocol) return *flags.protocol;
  return parse_protocol(lookup<std::string>(config, "", "protocol").value_or("ra"));
}

std::uint64_t resolve_seed(const json& config, const Flags& flags) {
  if (flags.seed) return *flags.seed;
  return lookup<std::uint64_t>(config, "", "seed").value_or(kDefaultSeed);
}

std::int64_t resolve_trials(const json& config, const Flags& flags, std::int64_t fallback) {
  const std::int64_t trials =
      flags.trials ? *flags.trials : lookup<std::int64_t>(config, "", "trials").value_or(fallback);
  if (trials < 1) throw InvalidConfig("trials", "must be >= 1");
  return trials;
}

SystemConfig read_system(const json& config, Protocol protocol) {
  SystemConfig cfg;
  cfg.n_devices = require<int>(config, "system", "n_devices");
  cfg.total_batch = require<Samples>(config, "system", "total_batch");
  cfg.compute_rate = require<Samples>(config, "system", "compute_rate");
  cfg.p_tr = protocol == Protocol::ra ? require<double>(config, "system", "p_tr")
                                      : lookup<double>(config, "system", "p_tr").value_or(1.0);
  validate_config(cfg, protocol);
  return cfg;
}

json system_json(const SystemConfig& cfg) {
  return {{"n_devices", cfg.n_devices},
          {"total_batch", cfg.total_batch},
          {"compute_rate", cfg.compute_rate},
          {"p_tr", cfg.p_tr}};
}

ConvergenceConstants read_constants(const json& config) {
  ConvergenceConstants c;
  c.smoothness = require<double>(config, "constants", "smoothness");
  c.strong_convexity = require<double>(config, "constants", "strong_convexity");
  c.grad_bound = require<double>(config, "constants", "grad_bound");
  c.step_scale = require<double>(config, "constants", "step_scale");
  c.step_shift = require<double>(config, "constants", "step_shift");
  c.initial_gap = require<double>(config, "constants", "initial_gap");
  validate_constants(c);
  return c;
}

json constants_json(const ConvergenceConstants& c) {
  return {{"smoothness", c.smoothness},   {"strong_convexity", c.strong_convexity},
          {"grad_bound", c.grad_bound},   {"step_scale", c.step_scale},
          {"step_shift", c.step_shift},   {"initial_gap", c.initial_gap}};
}

// Explicit "allocation" list, else step-wise from "delta".
BatchAllocation read_allocation(const json& config, const SystemConfig& cfg) {
  if (auto sizes = lookup<std::vector<Samples>>(config, "", "allocation")) {
    if (static_cast<int>(sizes->size()) != cfg.n_devices)
      throw InvalidConfig("allocation", "length must equal system.n_devices");
    return BatchAllocation(std::move(*sizes), cfg.total_batch);
  }
  if (auto delta = lookup<Samples>(config, "", "delta"))
    return stepwise_allocation(cfg.n_devices, cfg.total_batch, *delta);
  throw InvalidConfig("allocation", "give either allocation or delta");
}

json sizes_json(const BatchAllocation& alloc) {
  return std::vector<Samples>(alloc.sizes().begin(), alloc.sizes().end());
}

// "iterations" directly, or K(epsilon) from "epsilon" and the constants.
std::optional<std::int64_t> read_iterations(const json& config, const SystemConfig& cfg,
                                            json& resolved) {
  if (auto k = lookup<std::int64_t>(config, "", "iterations")) {
    if (*k < 1) throw InvalidConfig("iterations", "must be >= 1");
    resolved["iterations"] = *k;
    return k;
  }
  if (auto eps = lookup<double>(config, "", "epsilon")) {
    if (!(*eps > 0.0)) throw InvalidConfig("epsilon", "must be > 0");
    const ConvergenceConstants c = read_constants(config);
    const double nu = compute_nu(c, cfg.n_devices, cfg.total_batch);
    const std::int64_t k = required_iterations(*eps, nu, c.step_shift);
    resolved["epsilon"] = *eps;
    resolved["constants"] = constants_json(c);
    resolved["iterations"] = k;
    return k;
  }
  return std::nullopt;
}

std::string num(double v) { return format_number(v); }
std::string num(std::int64_t v) { return std::to_string(v); }

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string summary_value(const json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Report cmd_ktarget(const json& config, const Flags&) {
  Report r;
  r.command = "ktarget";
  SystemConfig cfg;
  cfg.n_devices = require<int>(config, "system", "n_devices");
  cfg.total_batch = require<Samples>(config, "system", "total_batch");
  cfg.compute_rate = lookup<Samples>(config, "system", "compute_rate").value_or(1);
  cfg.p_tr = lookup<double>(config, "system", "p_tr").value_or(0.5);
  validate_config(cfg, Protocol::tdma);
  const ConvergenceConstants c = read_constants(config);
  const auto eps_list = lookup<std::vector<double>>(config, "", "epsilons")
                            .value_or(std::vector<double>{0.1, 0.05});
  if (eps_list.empty()) throw InvalidConfig("epsilons", "need at least one value");

  const double nu = compute_nu(c, cfg.n_devices, cfg.total_batch);
  r.header = {"epsilon", "nu", "iterations"};
  json ks = json::array();
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw InvalidConfig("epsilons", "values must be > 0");
    const std::int64_t k = required_iterations(eps, nu, c.step_shift);
    r.rows.push_back({num(eps), num(nu), num(k)});
    ks.push_back({{"epsilon", eps}, {"iterations", k}});
  }
  r.summary = {{"nu", nu}, {"targets", ks}};
  r.resolved = {{"system", {{"n_devices", cfg.n_devices}, {"total_batch", cfg.total_batch}}},
                {"constants", constants_json(c)},
                {"epsilons", eps_list}};
  return r;
}

Report cmd_time(const json& config, const Flags& flags) {
  Report r;
  r.command = "time";
  const Protocol protocol = resolve_protocol(config, flags);
  const SystemConfig cfg = read_system(config, protocol);
  const BatchAllocation alloc = read_allocation(config, cfg);
  r.resolved = {{"protocol", to_string(protocol)},
                {"system", system_json(cfg)},
                {"allocation", sizes_json(alloc)}};
  const auto iterations = read_iterations(config, cfg, r.resolved);

  double mean = 0.0;
  double se = 0.0;
  std::string method = "exact";
  if (protocol == Protocol::tdma) {
    mean = static_cast<double>(tdma_iter_time(alloc, cfg.compute_rate));
  } else {
    const std::int64_t trials = resolve_trials(config, flags, kDefaultTrials);
    const std::uint64_t seed = resolve_seed(config, flags);
    const RaIterEstimate est = expected_iter_ra(alloc, cfg.compute_rate, cfg.p_tr, trials, seed);
    mean = est.estimate.mean;
    se = est.estimate.std_err;
    if (cfg.n_devices > 3) {
      method = "monte-carlo";
      r.resolved["trials"] = trials;
      r.resolved["seed"] = seed;
    } else {
      method = "closed-form";
    }
  }
  r.header = {"protocol", "method", "iter_time", "iter_std_err", "iterations", "completion",
              "completion_std_err"};
  std::vector<std::string> row = {std::string(to_string(protocol)), method, num(mean), num(se)};
  r.summary = {{"method", method}, {"iter_time", mean}, {"iter_std_err", se}};
  if (iterations) {
    const auto k = static_cast<double>(*iterations);
    row.insert(row.end(), {num(*iterations), num(k * mean), num(k * se)});
    r.summary["iterations"] = *iterations;
    r.summary["completion"] = k * mean;
    r.summary["completion_std_err"] = k * se;
  } else {
    row.insert(row.end(), {"", "", ""});
  }
  r.rows.push_back(std::move(row));
  return r;
}

Report cmd_allocate(const json& config, const Flags& flags) {
  Report r;
  r.command = "allocate";
  const Protocol protocol = resolve_protocol(config, flags);
  const SystemConfig cfg = read_system(config, protocol);
  const std::string method = lookup<std::string>(config, "", "method").value_or("stepwise");
  r.resolved = {{"protocol", to_string(protocol)}, {"system", system_json(cfg)}, {"method", method}};

  std::optional<BatchAllocation> alloc;
  if (method == "stepwise") {
    const Samples delta =
        lookup<Samples>(config, "", "delta").value_or(protocol == Protocol::tdma ? cfg.compute_rate : 0);
    r.resolved["delta"] = delta;
    alloc = stepwise_allocation(cfg.n_devices, cfg.total_batch, delta);
  } else if (method == "optimal") {
    if (protocol != Protocol::ra) throw InvalidConfig("method", "optimal needs ra; under tdma use stepwise");
    // The relaxed optimum ignores the ceilings in compute times, so integer
    // allocations within two compute slots of it are scored exactly.
    double best = 0.0;
    auto consider = [&](std::vector<Samples> sizes) {
      if (sizes.front() < 0 || !std::is_sorted(sizes.begin(), sizes.end())) return;
      BatchAllocation cand(std::move(sizes), cfg.total_batch);
      const double t = expected_iter_ra_closed(cand, cfg.compute_rate, cfg.p_tr).expected_iter;
      if (!alloc || t < best - 1e-12) {
        alloc = std::move(cand);
        best = t;
      }
    };
    const Samples window = 2 * cfg.compute_rate;
    const Samples b = cfg.total_batch;
    if (cfg.n_devices == 2) {
      const TwoDeviceOptimum opt = optimal_two(b, cfg.compute_rate, cfg.p_tr);
      const auto centre = static_cast<Samples>(std::llround(opt.delta));
      for (Samples d = std::max<Samples>(0, centre - window); d <= std::min(b, centre + window); ++d) {
        const Samples b1 = (b - d) / 2;
        consider({b1, b - b1});
      }
      r.summary["continuous_delta"] = opt.delta;
      r.summary["case"] = std::string(to_string(opt.case_tag));
    } else if (cfg.n_devices == 3) {
      const ThreeDeviceOptimum opt =
          optimal_three(static_cast<double>(b), cfg.compute_rate, cfg.p_tr);
      const auto c1 = static_cast<Samples>(std::llround(opt.deltas[0]));
      const auto c2 = static_cast<Samples>(std::llround(opt.deltas[1]));
      for (Samples d1 = std::max<Samples>(0, c1 - window); d1 <= c1 + window; ++d1) {
        for (Samples d2 = std::max<Samples>(0, c2 - window); d2 <= c2 + window; ++d2) {
          const Samples rest = b - 2 * d1 - d2;
          if (rest < 0) continue;
          const Samples b1 = rest / 3;
          consider({b1, b1 + d1, b - 2 * b1 - d1});
        }
      }
      r.summary["continuous_deltas"] = opt.deltas;
      r.summary["relaxed_objective"] = opt.objective;
      r.summary["kkt_residual"] = opt.kkt_residual;
    } else {
      throw UnsupportedN("optimal allocation covers 2 or 3 devices; use stepwise");
    }
  } else {
    throw InvalidConfig("method", "expected stepwise or optimal");
  }

  if (!alloc) throw NoConvergence("no feasible integer allocation near the relaxed optimum");
  const TdmaTiming sched = tdma_schedule(*alloc, cfg.compute_rate);
  r.header = {"device", "batch", "compute_slots"};
  for (std::size_t n = 0; n < alloc->sizes().size(); ++n)
    r.rows.push_back({num(static_cast<std::int64_t>(n + 1)), num((*alloc)[n]),
                      num(sched.compute_slots[n])});
  r.summary["allocation"] = sizes_json(*alloc);
  if (protocol == Protocol::tdma) {
    r.summary["iter_time"] = sched.iter_time;
    r.summary["lower_bound"] = tdma_lower_bound(cfg.n_devices, cfg.total_batch, cfg.compute_rate);
  } else {
    const std::int64_t trials = resolve_trials(config, flags, kDefaultTrials);
    const std::uint64_t seed = resolve_seed(config, flags);
    const RaIterEstimate est = expected_iter_ra(*alloc, cfg.compute_rate, cfg.p_tr, trials, seed);
    r.summary["iter_time"] = est.estimate.mean;
    r.summary["iter_std_err"] = est.estimate.std_err;
    if (cfg.n_devices > 3) {
      r.resolved["trials"] = trials;
      r.resolved["seed"] = seed;
    }
  }
  return r;
}

Report cmd_sweep_delta(const json& config, const Flags& flags) {
  Report r;
  r.command = "sweep-delta";
  const Protocol protocol = resolve_protocol(config, flags);
  const SystemConfig cfg = read_system(config, protocol);
  const auto deltas = lookup<std::vector<Samples>>(config, "", "deltas")
                          .value_or(std::vector<Samples>{0, 10, 20, 30, 40, 50});
  if (deltas.empty()) throw InvalidConfig("deltas", "need at least one value");
  const std::int64_t trials = resolve_trials(config, flags, kDefaultTrials);
  const std::uint64_t seed = resolve_seed(config, flags);
  r.resolved = {{"protocol", to_string(protocol)}, {"system", system_json(cfg)},
                {"deltas", deltas},                 {"trials", trials},
                {"seed", seed}};
  const auto iterations = read_iterations(config, cfg, r.resolved);

  const DeltaSweep sweep = optimize_delta(cfg.n_devices, cfg.total_batch, cfg.compute_rate,
                                          cfg.p_tr, deltas, trials, seed, protocol, iterations);
  r.header = {"delta",        "protocol",   "p_tr",
              "expected_iter", "iter_std_err", "expected_completion",
              "completion_std_err", "argmin"};
  for (const DeltaRow& row : sweep.rows) {
    r.rows.push_back({num(row.delta), std::string(to_string(protocol)), num(cfg.p_tr),
                      num(row.expected_iter), num(row.iter_std_err), num(row.expected_completion),
                      num(row.completion_std_err), row.delta == sweep.best_delta ? "1" : "0"});
  }
  const auto best = std::find_if(sweep.rows.begin(), sweep.rows.end(),
                                 [&](const DeltaRow& d) { return d.delta == sweep.best_delta; });
  r.summary = {{"best_delta", sweep.best_delta},
               {"best_completion", best->expected_completion},
               {"best_completion_std_err", best->completion_std_err}};
  return r;
}

Report cmd_train(const json& config, const Flags& flags) {
  Report r;
  r.command = "train";
  const Protocol protocol = resolve_protocol(config, flags);
  const SystemConfig cfg = read_system(config, protocol);
  const BatchAllocation alloc = read_allocation(config, cfg);
  const std::uint64_t seed = resolve_seed(config, flags);
  const auto seeds = lookup<std::int64_t>(config, "", "seeds").value_or(1);
  if (seeds < 1) throw InvalidConfig("seeds", "must be >= 1");

  Dataset data;
  json data_cfg = json::object();
  if (auto path = lookup<std::string>(config, "dataset", "csv")) {
    std::ifstream in(*path);
    if (!in) throw InvalidConfig("dataset.csv", "cannot open " + *path);
    const double reg = lookup<double>(config, "dataset", "reg_strength").value_or(1.0);
    data = read_dataset_csv(in, reg);
    data_cfg = {{"csv", *path}, {"reg_strength", reg}};
  } else {
    SyntheticTask task;
    task.samples = lookup<std::size_t>(config, "dataset", "samples").value_or(task.samples);
    task.dims = lookup<std::size_t>(config, "dataset", "dims").value_or(task.dims);
    task.mean_norm = lookup<double>(config, "dataset", "mean_norm").value_or(task.mean_norm);
    task.noise = lookup<double>(config, "dataset", "noise").value_or(task.noise);
    task.reg_strength = lookup<double>(config, "dataset", "reg_strength").value_or(task.reg_strength);
    task.n_devices = cfg.n_devices;
    const auto data_seed = lookup<std::uint64_t>(config, "dataset", "seed").value_or(0);
    data = make_synthetic_dataset(task, data_seed);
    data_cfg = {{"samples", task.samples},     {"dims", task.dims},
                {"mean_norm", task.mean_norm}, {"noise", task.noise},
                {"reg_strength", task.reg_strength}, {"seed", data_seed}};
  }
  if (data.n_devices() != cfg.n_devices)
    throw InvalidConfig("dataset", "shard count must equal system.n_devices");

  TrainOptions options;
  options.protocol = protocol;
  if (auto w0 = lookup<double>(config, "", "initial_weight"))
    options.initial_weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(data.dims()), *w0);
  const Optimum opt = reference_optimum(data);
  options.optimum = opt;
  const double initial_gap =
      global_loss(ModelState{options.initial_weights.value_or(
                                 Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.dims()))),
                             1},
                  data) -
      opt.loss;

  // Constants default to what the task itself implies; the gap is measured if absent.
  ConvergenceConstants c;
  c.smoothness = lookup<double>(config, "constants", "smoothness").value_or(smoothness_bound(data));
  c.strong_convexity =
      lookup<double>(config, "constants", "strong_convexity").value_or(data.reg_strength);
  c.grad_bound = lookup<double>(config, "constants", "grad_bound").value_or(c.grad_bound);
  c.step_scale = lookup<double>(config, "constants", "step_scale").value_or(c.step_scale);
  c.step_shift = lookup<double>(config, "constants", "step_shift").value_or(c.step_shift);
  c.initial_gap = lookup<double>(config, "constants", "initial_gap").value_or(initial_gap);
  validate_constants(c);

  r.resolved = {{"protocol", to_string(protocol)}, {"system", system_json(cfg)},
                {"allocation", sizes_json(alloc)}, {"seed", seed},
                {"seeds", seeds},                  {"dataset", data_cfg},
                {"constants", constants_json(c)}};
  if (options.initial_weights) r.resolved["initial_weight"] = (*options.initial_weights)(0);
  std::optional<std::int64_t> iterations = lookup<std::int64_t>(config, "", "iterations");
  if (iterations) {
    if (*iterations < 1) throw InvalidConfig("iterations", "must be >= 1");
  } else if (auto eps = lookup<double>(config, "", "epsilon")) {
    if (!(*eps > 0.0)) throw InvalidConfig("epsilon", "must be > 0");
    iterations = required_iterations(*eps, compute_nu(c, cfg.n_devices, cfg.total_batch), c.step_shift);
    r.resolved["epsilon"] = *eps;
  } else {
    throw InvalidConfig("iterations", "give iterations or epsilon");
  }
  r.resolved["iterations"] = *iterations;
  if (auto cap = lookup<Slots>(config, "", "slot_cap")) {
    options.slot_cap = *cap;
    r.resolved["slot_cap"] = *cap;
  }

  r.header = {"seed", "iteration", "cumulative_slots", "loss", "gap", "bound"};
  const auto rows_per_seed = static_cast<std::size_t>(*iterations);
  std::vector<double> slot_sum(rows_per_seed, 0.0), loss_sum(rows_per_seed, 0.0),
      gap_sum(rows_per_seed, 0.0);
  double max_grad = 0.0;
  LossTrajectory last;
  for (std::int64_t s = 0; s < seeds; ++s) {
    last = train_federated(data, cfg, alloc, c, *iterations, derive_seed(seed, static_cast<std::uint64_t>(s)),
                           options);
    max_grad = std::max(max_grad, last.max_grad_norm);
    for (std::size_t i = 0; i < last.rows.size(); ++i) {
      const TrajectoryRow& row = last.rows[i];
      r.rows.push_back({num(s), num(row.iteration), num(row.cumulative_slots), num(row.loss),
                        num(row.gap), num(row.bound)});
      slot_sum[i] += static_cast<double>(row.cumulative_slots);
      loss_sum[i] += row.loss;
      gap_sum[i] += row.gap;
    }
  }
  const auto n = static_cast<double>(seeds);
  for (std::size_t i = 0; i < rows_per_seed; ++i) {
    r.rows.push_back({"mean", num(last.rows[i].iteration), num(slot_sum[i] / n),
                      num(loss_sum[i] / n), num(gap_sum[i] / n), num(last.rows[i].bound)});
  }
  r.summary = {{"nu", last.nu},
               {"optimum_loss", opt.loss},
               {"initial_gap", initial_gap},
               {"iterations", *iterations},
               {"final_mean_gap", gap_sum.back() / n},
               {"final_bound", last.rows.back().bound},
               {"final_mean_slots", slot_sum.back() / n},
               {"max_grad_norm", max_grad},
               {"grad_bound", c.grad_bound}};
  return r;
}

Report cmd_simulate(const json& config, const Flags& flags) {
  Report r;
  r.command = "simulate";
  const Protocol protocol = resolve_protocol(config, flags);
  const SystemConfig cfg = read_system(config, protocol);
  const BatchAllocation alloc = read_allocation(config, cfg);
  const std::uint64_t seed = resolve_seed(config, flags);
  const std::int64_t trials = resolve_trials(config, flags, 1);
  const Slots cap = lookup<Slots>(config, "", "slot_cap").value_or(kDefaultSlotCap);
  r.resolved = {{"protocol", to_string(protocol)}, {"system", system_json(cfg)},
                {"allocation", sizes_json(alloc)}, {"seed", seed},
                {"trials", trials},                {"slot_cap", cap}};

  SlotTrace trace;
  if (protocol == Protocol::tdma) {
    trace = simulate_iter_tdma(alloc, cfg.compute_rate);
  } else {
    Rng rng = Rng::substream(seed, 0);
    trace = simulate_iter_ra(alloc, cfg.compute_rate, cfg.p_tr, rng, cap);
  }
  std::ostringstream csv;
  write_trace(csv, trace);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  r.header = {"slot", "transmitters", "outcome"};
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    cells.resize(3);
    r.rows.push_back(std::move(cells));
  }
  r.summary = {{"iter_time", trace.iter_time}, {"delivery_slots", trace.delivery_slots}};
  if (trials > 1) {
    if (protocol == Protocol::ra) {
      const McEstimate est = mc_iter_time_ra(alloc, cfg.compute_rate, cfg.p_tr, trials, seed, cap);
      r.summary["mean_iter_time"] = est.mean;
      r.summary["mean_iter_std_err"] = est.std_err;
    } else {
      r.summary["mean_iter_time"] = static_cast<double>(trace.iter_time);
      r.summary["mean_iter_std_err"] = 0.0;
    }
  }
  return r;
}

Report run(std::string_view command, const json& config, const Flags& flags) {
  if (!config.is_object()) throw InvalidConfig("config", "top level must be a JSON object");
  if (command == "ktarget") return cmd_ktarget(config, flags);
  if (command == "time") return cmd_time(config, flags);
  if (command == "allocate") return cmd_allocate(config, flags);
  if (command == "sweep-delta") return cmd_sweep_delta(config, flags);
  if (command == "train") return cmd_train(config, flags);
  if (command == "simulate") return cmd_simulate(config, flags);
  throw InvalidConfig("command", "unknown command " + std::string(command));
}

void write_csv(std::ostream& out, const Report& report) {
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(cells[i]);
    }
    out << '\n';
  };
  emit(report.header);
  for (const auto& row : report.rows) emit(row);
}

json to_json(const Report& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < report.header.size() && i < row.size(); ++i)
      obj[report.header[i]] = row[i];
    rows.push_back(std::move(obj));
  }
  return {{"command", report.command},
          {"config", report.resolved},
          {"summary", report.summary},
          {"rows", rows}};
}

void write_outputs(const std::string& dir, const Report& report, const Flags&) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base = std::filesystem::path(dir) / report.command;
  {
    std::ofstream csv(base.string() + ".csv", std::ios::binary);
    write_csv(csv, report);
    if (!csv) throw Error("cannot write " + base.string() + ".csv");
  }
  const json meta = {{"command", report.command},
                     {"version", WFL_VERSION},
                     {"config", report.resolved},
                     {"summary", report.summary}};
  std::ofstream side(base.string() + ".meta.json", std::ios::binary);
  side << meta.dump(2) << '\n';
  if (!side) throw Error("cannot write " + base.string() + ".meta.json");
}

int execute(std::string_view command, const std::optional<std::string>& config_path,
            const Flags& flags, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    json config = json::object();
    if (config_path) {
      std::ifstream in(*config_path);
      if (!in) throw InvalidConfig("config", "cannot open " + *config_path);
      try {
        config = json::parse(in);
      } catch (const json::parse_error& e) {
        throw InvalidConfig("config", e.what());
      }
    }
    const Report report = run(command, config, flags);
    if (flags.out_dir) {
      write_outputs(*flags.out_dir, report, flags);
      for (const auto& [key, value] : report.summary.items())
        out << key << ": " << summary_value(value) << '\n';
    } else if (flags.json) {
      out << to_json(report).dump(2) << '\n';
    } else {
      write_csv(out, report);
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    err << "wall time: " << format_number(wall.count()) << " s\n";
    return 0;
  } catch (const InvalidConfig& e) {
    err << "config error [" << e.field() << "]: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateConstants& e) {
    err << "config error [constants]: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedN& e) {
    err << "config error [n_devices]: " << e.what() << '\n';
    return 2;
  } catch (const NoConvergence& e) {
    err << "no convergence: " << e.what() << '\n';
    return 3;
  } catch (const SlotCapExceeded& e) {
    err << "slot cap exceeded: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace wfl::cli
