// whittlefit: estimation of stationary Gaussian random-field parameters on
// regular grids via the debiased Whittle objective, with simulation,
// periodogram, diagnostics, standard-error and benchmark commands.

#include "whittlefit/diagnostics.hpp"
#include "whittlefit/inference.hpp"
#include "whittlefit/io.hpp"
#include "whittlefit/rng.hpp"
#include "whittlefit/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

using namespace wf;
using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json load_json_arg(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') {
    std::ifstream in(arg.substr(1));
    if (!in) throw std::runtime_error("cannot open " + arg.substr(1));
    json j;
    in >> j;
    return j;
  }
  return json::parse(arg);
}

// {"name": value} or {"name": {"value":v, "lower":l, "upper":u, "fixed":bool}}
ParameterVector params_from_json(const CovarianceModel& model, const json& j) {
  ParameterVector p = model.default_parameters();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const int idx = p.index_of(it.key());
    if (idx < 0)
      throw std::runtime_error("model '" + model.id() + "' has no parameter '" +
                               it.key() + "'");
    const json& spec = it.value();
    if (spec.is_number()) {
      p.values[idx] = spec.get<double>();
    } else if (spec.is_object()) {
      if (spec.contains("value")) p.values[idx] = spec["value"].get<double>();
      if (spec.contains("lower")) p.lower[idx] = spec["lower"].get<double>();
      if (spec.contains("upper")) p.upper[idx] = spec["upper"].get<double>();
      if (spec.contains("fixed")) p.free[idx] = spec["fixed"].get<bool>() ? 0 : 1;
    } else {
      throw std::runtime_error("parameter '" + it.key() +
                               "' must be a number or an object");
    }
  }
  p.validate();
  return p;
}

std::vector<int> parse_dims(const std::string& s) {
  std::vector<int> dims;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    dims.push_back(std::stoi(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (dims.empty()) throw std::runtime_error("empty --dims");
  return dims;
}

// circle:D | bernoulli:p:seed | file:path
Modulation parse_mask_spec(const std::string& spec, const GridSpec& grid) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("mask spec must be circle:D, bernoulli:p:seed or file:path");
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "circle") return circle_mask(grid, std::stod(rest));
  if (kind == "bernoulli") {
    const auto c2 = rest.find(':');
    if (c2 == std::string::npos)
      throw std::runtime_error("bernoulli mask needs p and seed: bernoulli:p:seed");
    return bernoulli_mask(grid, std::stod(rest.substr(0, c2)),
                          std::stoull(rest.substr(c2 + 1)));
  }
  if (kind == "file") {
    Modulation m = io::mask_from_file(rest);
    if (!(m.grid() == grid))
      throw std::runtime_error("mask file dims do not match the requested grid");
    return m;
  }
  throw std::runtime_error("unknown mask kind '" + kind + "'");
}

void emit_error(const std::string& message) {
  json err;
  err["error"] = {{"message", message}};
  std::cerr << err.dump() << "\n";
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

ArrayXd fftshift(const GridSpec& grid, const ArrayXd& in) {
  ArrayXd out(in.size());
  const int d = grid.dim();
  std::vector<int> site(d);
  for (std::int64_t k = 0; k < grid.total_points(); ++k) {
    grid.site_of(k, site);
    for (int i = 0; i < d; ++i)
      site[i] = (site[i] + grid.dims()[i] / 2) % grid.dims()[i];
    out[grid.index_of(site)] = in[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// benchmark harness

struct BenchRow {
  std::string scenario, method;
  int size = 0;
  int replicate = 0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double runtime_sec = 0.0;
  std::string status = "ok";
};

struct Scenario {
  std::string name;
  std::string model_id;
  std::string free_param;
  double truth = 0.0;
  std::vector<int> sizes;          // grid side (fig1) or circle diameter
  std::vector<std::string> methods;
  std::function<ParameterVector(const CovarianceModel&)> make_params;
  std::function<Modulation(const GridSpec&)> make_mask;
};

Scenario fig1_scenario() {
  Scenario s;
  s.name = "fig1-desk";
  s.model_id = "matern";
  s.free_param = "rho";
  s.truth = 10.0;
  s.sizes = {16, 32, 64};
  s.methods = {"debiased", "debiased_tapered", "standard", "standard_tapered"};
  s.make_params = [](const CovarianceModel& model) {
    ParameterVector p = model.default_parameters();
    p.values[p.index_of("sigma")] = 1.0;
    p.free[p.index_of("sigma")] = 0;
    p.values[p.index_of("nu")] = 0.5;
    p.free[p.index_of("nu")] = 0;
    p.values[p.index_of("rho")] = 10.0;
    p.lower[p.index_of("rho")] = 1.0;
    p.upper[p.index_of("rho")] = 40.0;
    return p;
  };
  s.make_mask = [](const GridSpec& grid) { return Modulation::ones(grid); };
  return s;
}

Scenario circle_scenario() {
  Scenario s;
  s.name = "circle-desk";
  s.model_id = "exponential";
  s.free_param = "rho";
  s.truth = 3.0;
  s.sizes = {24, 48};
  s.methods = {"debiased"};
  s.make_params = [](const CovarianceModel& model) {
    ParameterVector p = model.default_parameters();
    p.values[p.index_of("sigma")] = 1.0;
    p.free[p.index_of("sigma")] = 0;
    p.values[p.index_of("rho")] = 3.0;
    p.lower[p.index_of("rho")] = 0.2;
    p.upper[p.index_of("rho")] = 20.0;
    return p;
  };
  s.make_mask = [](const GridSpec& grid) {
    return circle_mask(grid, static_cast<double>(grid.dims()[0]));
  };
  return s;
}

int run_benchmark(const Scenario& scenario, int reps, std::uint64_t seed, int threads,
                  const std::string& out_path) {
  ModelPtr model = make_model(scenario.model_id);
  const ParameterVector truth_params = scenario.make_params(*model);
  const int free_idx = truth_params.index_of(scenario.free_param);

  struct Cell {
    GridSpec grid;
    Modulation mask;
    EmbeddingPlan plan;
  };
  std::vector<Cell> cells;
  for (int size : scenario.sizes) {
    GridSpec grid({size, size});
    Modulation mask = scenario.make_mask(grid);
    EmbeddingPlan plan = plan_embedding(*model, truth_params.values, grid, false);
    cells.push_back({std::move(grid), std::move(mask), std::move(plan)});
  }

  const std::size_t tasks = cells.size() * static_cast<std::size_t>(reps);
  std::vector<std::vector<BenchRow>> rows(tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      const std::size_t ci = t / reps;
      const int rep = static_cast<int>(t % reps);
      const Cell& cell = cells[ci];
      // one complex draw serves two consecutive replicates
      auto pair = simulate_pair(cell.plan, seed + ci, rep / 2);
      const RealField& field = (rep % 2 == 0) ? pair.first : pair.second;

      std::vector<BenchRow>& out = rows[t];
      for (const std::string& method : scenario.methods) {
        BenchRow row;
        row.scenario = scenario.name;
        row.method = method;
        row.size = scenario.sizes[ci];
        row.replicate = rep;
        try {
          ObjectiveOptions oopts;
          oopts.alias_truncation = 0;  // the plain-density baseline
          Objective obj(variant_from_string(method), model, cell.mask, oopts);
          ParameterVector start = truth_params;
          ParameterVector init = default_initializer(field, obj.modulation(), *model);
          start.values[free_idx] =
              std::clamp(init.values[init.index_of(scenario.free_param)],
                         start.lower[free_idx], start.upper[free_idx]);
          FitOptions fopts;
          fopts.compute_sandwich = false;
          fopts.seed = seed ^ (static_cast<std::uint64_t>(ci) << 32) ^
                       (static_cast<std::uint64_t>(rep) << 8) ^
                       std::hash<std::string>{}(method);
          const auto t0 = std::chrono::steady_clock::now();
          FitResult res = fit(field, obj, start, fopts);
          const auto t1 = std::chrono::steady_clock::now();
          row.estimate = res.theta_hat.values[free_idx];
          row.runtime_sec = std::chrono::duration<double>(t1 - t0).count();
          if (!res.converged) row.status = "non-converged";
        } catch (const std::exception& e) {
          row.status = std::string("error:") + e.what();
        }
        out.push_back(std::move(row));
      }
    }
  };

  std::vector<std::thread> pool;
  const int nthreads = std::max(1, threads);
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::ofstream csv(out_path);
  if (!csv) throw std::runtime_error("cannot write " + out_path);
  csv << "record,scenario,method,size,replicate,estimate,runtime_sec,status,"
         "bias,sd,rmse,n_ok\r\n";
  for (const auto& group : rows)
    for (const BenchRow& r : group)
      csv << "row," << r.scenario << "," << r.method << "," << r.size << ","
          << r.replicate << "," << format_double(r.estimate) << ","
          << format_double(r.runtime_sec) << "," << r.status << ",,,,\r\n";

  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    for (const std::string& method : scenario.methods) {
      double sum = 0.0, sumsq = 0.0;
      int n_ok = 0;
      for (std::size_t t = ci * reps; t < (ci + 1) * static_cast<std::size_t>(reps); ++t)
        for (const BenchRow& r : rows[t])
          if (r.method == method && r.status == "ok") {
            sum += r.estimate;
            sumsq += r.estimate * r.estimate;
            ++n_ok;
          }
      if (n_ok == 0) {
        csv << "summary," << scenario.name << "," << method << ","
            << scenario.sizes[ci] << ",,,,,,,,0\r\n";
        continue;
      }
      const double mean = sum / n_ok;
      const double var = std::max(0.0, sumsq / n_ok - mean * mean);
      const double bias = mean - scenario.truth;
      const double rmse = std::sqrt(var + bias * bias);
      csv << "summary," << scenario.name << "," << method << ","
          << scenario.sizes[ci] << ",,,,," << format_double(bias) << ","
          << format_double(std::sqrt(var)) << "," << format_double(rmse) << ","
          << n_ok << "\r\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"whittlefit: Whittle-type estimation for Gaussian random fields "
               "on regular grids with missing data and irregular boundaries"};
  app.require_subcommand(1);

  std::string config_path;

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a Gaussian random field");
  std::string sim_model = "exponential", sim_params = "{}", sim_dims = "64,64";
  std::string sim_out, sim_mask, sim_missing = "mask";
  std::uint64_t sim_seed = 0;
  std::uint64_t sim_replicate = 0;
  bool sim_allow_approx = false;
  sim->add_option("--model", sim_model, "model id");
  sim->add_option("--params", sim_params, "parameter JSON (or @file)");
  sim->add_option("--dims", sim_dims, "grid dims, e.g. 64,64");
  sim->add_option("--seed", sim_seed, "RNG seed")->required();
  sim->add_option("--replicate", sim_replicate, "replicate index within the seed");
  sim->add_option("--out", sim_out, "output field path")->required();
  sim->add_option("--mask", sim_mask, "circle:D | bernoulli:p:seed | file:path");
  sim->add_option("--missing", sim_missing, "masked-site encoding: nan | mask");
  sim->add_flag("--allow-approx", sim_allow_approx,
                "clamp negative embedding eigenvalues instead of failing");

  // periodogram
  auto* per = app.add_subcommand("periodogram", "periodogram of observed data");
  std::string per_data, per_mask, per_out;
  bool per_demean = false, per_recenter = false, per_selfcheck = false;
  per->add_option("--data", per_data)->required();
  per->add_option("--mask", per_mask, "explicit mask file");
  per->add_option("--out", per_out)->required();
  per->add_flag("--demean", per_demean, "subtract the weighted sample mean");
  per->add_flag("--recenter", per_recenter, "shift output to (-pi, pi] for plotting");
  per->add_flag("--self-check", per_selfcheck, "verify Parseval and positivity");

  // expected-periodogram
  auto* exp_cmd = app.add_subcommand("expected-periodogram",
                                     "expectation of the periodogram under a model");
  std::string exp_model = "exponential", exp_params = "{}", exp_dims, exp_mask, exp_out;
  bool exp_recenter = false, exp_selfcheck = false;
  exp_cmd->add_option("--model", exp_model);
  exp_cmd->add_option("--params", exp_params);
  exp_cmd->add_option("--dims", exp_dims)->required();
  exp_cmd->add_option("--mask", exp_mask, "circle:D | bernoulli:p:seed | file:path");
  exp_cmd->add_option("--out", exp_out)->required();
  exp_cmd->add_flag("--recenter", exp_recenter);
  exp_cmd->add_flag("--self-check", exp_selfcheck);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "estimate model parameters");
  std::string fit_data, fit_mask, fit_model = "matern", fit_params,
      fit_variant = "debiased";
  std::string fit_optimizer = "nelder_mead", fit_out;
  bool fit_demean = false, fit_no_se = false;
  int fit_alias_k = 0, fit_max_iters = 1000, fit_restarts = 2, fit_se_samples = 1000;
  double fit_rel_tol = 1e-8, fit_level = 0.95;
  std::uint64_t fit_seed = 0;
  fit_cmd->add_option("--config", config_path, "JSON config file; flags override");
  fit_cmd->add_option("--data", fit_data);
  fit_cmd->add_option("--mask", fit_mask, "explicit mask file");
  fit_cmd->add_option("--model", fit_model);
  fit_cmd->add_option("--params", fit_params,
                      "initial values/bounds/fixed flags JSON (or @file)");
  fit_cmd->add_option("--variant", fit_variant,
                      "debiased | debiased_tapered | standard | standard_tapered | fuentes");
  fit_cmd->add_option("--alias-K", fit_alias_k,
                      "aliasing shells for the standard baseline (-1 = adaptive)");
  fit_cmd->add_option("--optimizer", fit_optimizer, "nelder_mead | gradient_descent");
  fit_cmd->add_option("--max-iters", fit_max_iters);
  fit_cmd->add_option("--rel-tol", fit_rel_tol);
  fit_cmd->add_option("--restarts", fit_restarts);
  fit_cmd->add_option("--seed", fit_seed);
  fit_cmd->add_option("--se-samples", fit_se_samples, "MC pairs for the sandwich");
  fit_cmd->add_option("--level", fit_level, "CI level");
  fit_cmd->add_flag("--demean", fit_demean);
  fit_cmd->add_flag("--no-se", fit_no_se, "skip standard errors");
  fit_cmd->add_option("--out", fit_out, "result JSON path");

  // stderr
  auto* se_cmd = app.add_subcommand("stderr", "sandwich standard errors at given theta");
  std::string se_data, se_mask, se_model = "matern", se_params, se_variant = "debiased";
  std::string se_out;
  int se_samples = 1000;
  double se_level = 0.95;
  std::uint64_t se_seed = 0;
  bool se_demean = false;
  se_cmd->add_option("--data", se_data)->required();
  se_cmd->add_option("--mask", se_mask);
  se_cmd->add_option("--model", se_model);
  se_cmd->add_option("--params", se_params)->required();
  se_cmd->add_option("--variant", se_variant);
  se_cmd->add_option("--mc-samples", se_samples);
  se_cmd->add_option("--seed", se_seed)->required();
  se_cmd->add_option("--level", se_level);
  se_cmd->add_flag("--demean", se_demean);
  se_cmd->add_option("--out", se_out);

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "sampling-pattern (SCC/HSCC) diagnostics");
  std::string diag_model = "matern", diag_params = "{}", diag_params2, diag_dims,
      diag_mask, diag_out;
  diag->add_option("--model", diag_model);
  diag->add_option("--params", diag_params);
  diag->add_option("--params2", diag_params2, "second theta for the separation check");
  diag->add_option("--dims", diag_dims)->required();
  diag->add_option("--mask", diag_mask, "circle:D | bernoulli:p:seed | file:path");
  diag->add_option("--out", diag_out);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "replicated estimation studies");
  std::string bench_scenario = "fig1-desk", bench_out, bench_sizes, bench_methods;
  int bench_reps = 200, bench_threads = 0;
  std::uint64_t bench_seed = 0;
  std::string bench_config;
  bench->add_option("--config", bench_config, "JSON config file; flags override");
  bench->add_option("--scenario", bench_scenario, "fig1-desk | circle-desk");
  bench->add_option("--reps", bench_reps);
  bench->add_option("--seed", bench_seed, "RNG seed (here or in the config)");
  bench->add_option("--threads", bench_threads, "worker threads (0 = hardware)");
  bench->add_option("--sizes", bench_sizes, "override grid sides/diameters, csv");
  bench->add_option("--methods", bench_methods, "override method list, csv");
  bench->add_option("--out", bench_out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    emit_error(e.what());
    return 1;
  }

  try {
    if (*sim) {
      GridSpec grid(parse_dims(sim_dims));
      ModelPtr model = make_model(sim_model);
      ParameterVector p = params_from_json(*model, load_json_arg(sim_params));
      EmbeddingPlan plan = plan_embedding(*model, p.values, grid, sim_allow_approx);
      if (plan.clamp_count > 0)
        std::cerr << json{{"warning",
                           {{"message", "embedding eigenvalues clamped"},
                            {"count", plan.clamp_count},
                            {"most_negative", plan.clamp_magnitude}}}}
                         .dump()
                  << "\n";
      RealField field = simulate_pair(plan, sim_seed, sim_replicate).first;
      io::FieldMeta meta;
      if (!sim_mask.empty()) {
        Modulation mask = parse_mask_spec(sim_mask, grid);
        if (sim_missing == "nan") {
          ArrayXd vals = field.values;
          for (Eigen::Index i = 0; i < vals.size(); ++i)
            if (mask.values()[i] == 0.0)
              vals[i] = std::numeric_limits<double>::quiet_NaN();
          field = RealField(grid, std::move(vals));
          meta.missing = "nan";
        } else {
          const std::string mask_path = sim_out + ".mask.f64";
          io::write_field(mask_path, grid, mask.values(), {});
          meta.missing = "mask";
          meta.mask_path = mask_path;
        }
      }
      io::write_field(sim_out, grid, field.values, meta);
      return 0;
    }

    if (*per) {
      io::Dataset ds = io::load_dataset(
          per_data, per_mask.empty() ? std::nullopt : std::optional(per_mask),
          per_demean);
      SpectralField I = periodogram(ds.data, ds.mod);
      if (per_selfcheck) {
        const double lhs = I.values.sum();
        const double rhs = ds.data.grid.total_points() *
                           std::pow(2.0 * M_PI, -ds.data.grid.dim()) /
                           ds.mod.sum_g2() *
                           (ds.mod.values().square() * ds.data.values.square()).sum();
        const bool parseval = std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs);
        const bool nonneg = I.values.minCoeff() >= 0.0;
        std::cerr << json{{"self_check",
                           {{"parseval", parseval}, {"nonnegative", nonneg}}}}
                         .dump()
                  << "\n";
        if (!parseval || !nonneg) return 1;
      }
      io::FieldMeta meta;
      meta.domain = "frequency";
      ArrayXd out = per_recenter ? fftshift(I.grid, I.values) : I.values;
      meta.centered = per_recenter;
      io::write_field(per_out, I.grid, out, meta);
      return 0;
    }

    if (*exp_cmd) {
      GridSpec grid(parse_dims(exp_dims));
      ModelPtr model = make_model(exp_model);
      ParameterVector p = params_from_json(*model, load_json_arg(exp_params));
      Modulation mod = exp_mask.empty() ? Modulation::ones(grid)
                                        : parse_mask_spec(exp_mask, grid);
      SpectralField ibar = expected_periodogram(*model, p.values, mod);
      if (exp_selfcheck) {
        const bool positive = ibar.values.minCoeff() > 0.0;
        std::cerr << json{{"self_check", {{"positive", positive}}}}.dump() << "\n";
        if (!positive) return 1;
      }
      io::FieldMeta meta;
      meta.domain = "frequency";
      ArrayXd out = exp_recenter ? fftshift(ibar.grid, ibar.values) : ibar.values;
      meta.centered = exp_recenter;
      io::write_field(exp_out, ibar.grid, out, meta);
      return 0;
    }

    if (*fit_cmd) {
      // config file (when given) provides defaults; explicit flags win
      json cfg = json::object();
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config " + config_path);
        in >> cfg;
      }
      auto cfg_str = [&](const char* key, std::string& target, const CLI::Option* opt) {
        if (cfg.contains(key) && opt->count() == 0) target = cfg[key].get<std::string>();
      };
      cfg_str("data", fit_data, fit_cmd->get_option("--data"));
      cfg_str("mask", fit_mask, fit_cmd->get_option("--mask"));
      cfg_str("model", fit_model, fit_cmd->get_option("--model"));
      cfg_str("variant", fit_variant, fit_cmd->get_option("--variant"));
      cfg_str("out", fit_out, fit_cmd->get_option("--out"));
      if (cfg.contains("params") && fit_cmd->get_option("--params")->count() == 0)
        fit_params = cfg["params"].dump();
      if (cfg.contains("seed") && fit_cmd->get_option("--seed")->count() == 0)
        fit_seed = cfg["seed"].get<std::uint64_t>();
      if (cfg.contains("demean") && fit_cmd->get_option("--demean")->count() == 0)
        fit_demean = cfg["demean"].get<bool>();

      if (fit_data.empty()) throw std::runtime_error("fit requires --data");
      io::Dataset ds = io::load_dataset(
          fit_data, fit_mask.empty() ? std::nullopt : std::optional(fit_mask),
          fit_demean);
      ModelPtr model = make_model(fit_model);
      ParameterVector start =
          fit_params.empty()
              ? default_initializer(ds.data, ds.mod, *model)
              : params_from_json(*model, load_json_arg(fit_params));

      ObjectiveOptions oopts;
      oopts.exclude_zero_frequency = ds.demeaned;
      oopts.alias_truncation = fit_alias_k;
      Objective obj(variant_from_string(fit_variant), model, ds.mod, oopts);

      FitOptions fopts;
      fopts.optimizer = fit_optimizer == "gradient_descent"
                            ? OptimizerKind::gradient_descent_with_line_search
                            : OptimizerKind::nelder_mead;
      fopts.max_iters = fit_max_iters;
      fopts.rel_tol = fit_rel_tol;
      fopts.restarts = fit_restarts;
      fopts.seed = fit_seed;
      fopts.compute_sandwich = !fit_no_se;
      fopts.sandwich_samples = fit_se_samples;
      fopts.ci_level = fit_level;

      FitResult res = fit(ds.data, obj, start, fopts);
      json out = io::fit_result_json(res);
      if (!fit_out.empty())
        write_json_file(fit_out, out);
      else
        std::cout << out.dump(2) << "\n";
      return res.converged ? 0 : 2;
    }

    if (*se_cmd) {
      io::Dataset ds = io::load_dataset(
          se_data, se_mask.empty() ? std::nullopt : std::optional(se_mask), se_demean);
      ModelPtr model = make_model(se_model);
      ParameterVector p = params_from_json(*model, load_json_arg(se_params));
      const Variant variant = variant_from_string(se_variant);
      if (variant != Variant::debiased && variant != Variant::debiased_tapered)
        throw std::runtime_error("stderr supports the debiased variants only");
      ObjectiveOptions oopts;
      oopts.exclude_zero_frequency = ds.demeaned;
      Objective obj(variant, model, ds.mod, oopts);
      const std::vector<int> free_idx = p.free_indices();
      const MatrixXd hess =
          expected_hessian(*model, p.values, obj.modulation(), free_idx,
                           oopts.exclude_zero_frequency);
      const ScoreCovariance sc =
          score_covariance_mc(*model, p.values, obj.modulation(), free_idx,
                              se_samples, se_seed, oopts.exclude_zero_frequency);
      const MatrixXd sand = sandwich_variance(hess, sc.cov);
      const double z = normal_quantile(0.5 + 0.5 * se_level);
      json out;
      json cov = json::array(), mc = json::array(), ci = json::object(),
           se_j = json::object();
      for (int r = 0; r < sand.rows(); ++r) {
        json row = json::array(), mrow = json::array();
        for (int c = 0; c < sand.cols(); ++c) {
          row.push_back(sand(r, c));
          mrow.push_back(sc.mc_se(r, c));
        }
        cov.push_back(row);
        mc.push_back(mrow);
      }
      for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const double se_val = std::sqrt(std::max(0.0, sand(j, j)));
        const std::string& name = p.names[free_idx[j]];
        se_j[name] = se_val;
        ci[name] = {p.values[free_idx[j]] - z * se_val,
                    p.values[free_idx[j]] + z * se_val};
      }
      out["cov"] = cov;
      out["score_cov_mc_se"] = mc;
      out["se"] = se_j;
      out["ci"] = ci;
      out["level"] = se_level;
      if (!se_out.empty())
        write_json_file(se_out, out);
      else
        std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*diag) {
      GridSpec grid(parse_dims(diag_dims));
      ModelPtr model = make_model(diag_model);
      ParameterVector p = params_from_json(*model, load_json_arg(diag_params));
      Modulation mod = diag_mask.empty() ? Modulation::ones(grid)
                                         : parse_mask_spec(diag_mask, grid);
      const std::vector<int> free_idx = p.free_indices();
      std::optional<VectorXd> theta2;
      if (!diag_params2.empty())
        theta2 = params_from_json(*model, load_json_arg(diag_params2)).values;
      SccReport rep = scc_report(mod, *model, p.values, free_idx,
                                 theta2 ? &*theta2 : nullptr);
      json out = io::scc_report_json(rep);
      if (!diag_out.empty())
        write_json_file(diag_out, out);
      else
        std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*bench) {
      bool bench_seed_given = bench->get_option("--seed")->count() > 0;
      if (!bench_config.empty()) {
        std::ifstream in(bench_config);
        if (!in) throw std::runtime_error("cannot open config " + bench_config);
        json cfg;
        in >> cfg;
        auto take = [&](const char* key, auto& target, const char* flag) {
          if (cfg.contains(key) && bench->get_option(flag)->count() == 0)
            target = cfg[key].template get<std::decay_t<decltype(target)>>();
        };
        take("scenario", bench_scenario, "--scenario");
        take("reps", bench_reps, "--reps");
        if (cfg.contains("seed")) bench_seed_given = true;
        take("seed", bench_seed, "--seed");
        take("threads", bench_threads, "--threads");
        take("sizes", bench_sizes, "--sizes");
        take("methods", bench_methods, "--methods");
        take("out", bench_out, "--out");
      }
      if (bench_out.empty()) throw std::runtime_error("benchmark requires --out");
      if (!bench_seed_given)
        throw std::runtime_error("benchmark requires --seed (flag or config)");
      Scenario scenario;
      if (bench_scenario == "fig1-desk")
        scenario = fig1_scenario();
      else if (bench_scenario == "circle-desk")
        scenario = circle_scenario();
      else
        throw std::runtime_error("unknown scenario '" + bench_scenario + "'");
      if (!bench_sizes.empty()) scenario.sizes = parse_dims(bench_sizes);
      if (!bench_methods.empty()) {
        scenario.methods.clear();
        std::size_t pos = 0;
        while (pos < bench_methods.size()) {
          std::size_t nx = bench_methods.find(',', pos);
          if (nx == std::string::npos) nx = bench_methods.size();
          scenario.methods.push_back(bench_methods.substr(pos, nx - pos));
          pos = nx + 1;
        }
      }
      const int threads = bench_threads > 0
                              ? bench_threads
                              : static_cast<int>(std::thread::hardware_concurrency());
      return run_benchmark(scenario, bench_reps, bench_seed, threads, bench_out);
    }
  } catch (const std::exception& e) {
    emit_error(e.what());
    return 1;
  }
  return 0;
}
