#include "seis/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <thread>

#include "seis/error.hpp"
#include "seis/io.hpp"
#include "seis/policy.hpp"
#include "seis/report.hpp"

namespace seis {

namespace fs = std::filesystem;
using nlohmann::json;

EnsEstimator surrogate_ens(const Network& network, const std::vector<double>& cl) {
  if (cl.size() != network.components.size()) throw InternalError("surrogate_ens: CL vector length");
  std::vector<double> repair;
  for (const auto& c : network.components) repair.push_back(c.repair_hours);
  return [cl, repair](const std::vector<bool>& failures) {
    double ens = 0.0;
    for (std::size_t d = 0; d < failures.size(); ++d)
      if (failures[d]) ens += cl[d] * repair[d];
    return ens;
  };
}

EnsEstimator timeline_ens(const Network& network) {
  return [&network](const std::vector<bool>& failures) {
    RepairSchedule s = RepairSchedule::undamaged(network);
    bool any = false;
    for (std::size_t d = 0; d < failures.size(); ++d)
      if (failures[d]) {
        s.operational_from[d] =
            static_cast<std::size_t>(std::ceil(network.components[d].repair_hours / network.timestep_hours - 1e-9));
        any = true;
      }
    return any ? ens_timeline(network, s).ens_mwh : 0.0;
  };
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs one stage, prefixing any error with the stage name while keeping its category.
template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  const std::string at = "stage '" + name + "': ";
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(at + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(at + e.what());
  } catch (const FeasibilityError& e) {
    throw FeasibilityError(at + e.what());
  } catch (const LimitError& e) {
    throw LimitError(at + e.what());
  } catch (const InternalError& e) {
    throw InternalError(at + e.what());
  } catch (const std::exception& e) {
    throw InternalError(at + e.what());
  }
}

struct SolverRun {
  std::string solver;
  PlanDocument plan;
  RepairSchedule schedule;
  RestorationTimeline timeline;
  double seconds = 0.0;
  bool ran = false;
  std::string skipped;
};

struct ScenarioWork {
  std::string id;
  std::vector<SolverRun> runs;
};

json manifest_json(const std::vector<ManifestEntry>& files, const std::string& config_hash, std::uint64_t seed) {
  json list = json::array();
  for (const auto& f : files) list.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return {{"tool", "seisdispatch"}, {"version", kVersion}, {"config_sha256", config_hash}, {"seed", seed}, {"files", list}};
}

}  // namespace

ManifestCheck verify_manifest(const std::string& dir) {
  ManifestCheck check;
  const fs::path path = fs::path(dir) / "manifest.json";
  if (!fs::exists(path)) return check;
  check.previous_found = true;
  check.comparable = true;
  const json m = read_json_file(path.string());
  for (const auto& f : m.at("files")) {
    const std::string rel = f.at("path").get<std::string>();
    const fs::path p = fs::path(dir) / rel;
    if (!fs::exists(p))
      check.missing.push_back(rel);
    else if (sha256_file(p.string()) != f.at("sha256").get<std::string>())
      check.changed.push_back(rel);
  }
  return check;
}

PipelineResult run_pipeline(const RunConfig& config, std::ostream* log) {
  auto say = [&](const std::string& msg) {
    if (log) *log << msg << '\n';
  };
  stage("parse", [&] { config.validate(); });
  const fs::path out(config.output);
  const json config_doc = run_config_to_json(config);
  const std::string config_hash = sha256_hex(config_doc.dump());

  std::optional<json> previous;
  if (fs::exists(out / "manifest.json")) previous = read_json_file((out / "manifest.json").string());

  std::vector<std::string> written;
  auto emit = [&](const std::string& rel, const std::string& content) {
    write_text_file((out / rel).string(), content);
    written.push_back(rel);
  };
  json timing = {{"stages", json::object()}, {"dispatch", json::array()}};

  auto t0 = std::chrono::steady_clock::now();
  const Network network = stage("parse", [&] { return load_network_file(config.network); });
  emit("config.json", to_document(config_doc));
  timing["stages"]["parse"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> all(network.components.size());
  for (std::size_t d = 0; d < all.size(); ++d) all[d] = d;
  const std::vector<double> cl = stage("attribute", [&] { return attribute_curtailed_load(network, all); });
  timing["stages"]["attribute"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const ScenarioSet set = stage("gen", [&] {
    const EnsEstimator ens = config.scenarios.exact_ens ? timeline_ens(network) : surrogate_ens(network, cl);
    return generate_scenarios(network, config.event, config.scenarios.n_sce, config.scenarios.w1, config.scenarios.w2,
                              config.seed, ens, config.scenarios.residuals);
  });
  emit("scenarios.json", to_document(scenario_set_to_json(set)));
  timing["stages"]["gen"] = seconds_since(t0);
  say("gen: " + std::to_string(set.scenarios.size()) + " scenarios");

  t0 = std::chrono::steady_clock::now();
  const ReductionResult reduction = stage("reduce", [&] {
    std::vector<std::string> protect = select_representatives(set, config.scenarios.periods);
    if (protect.size() > config.scenarios.k) protect.resize(config.scenarios.k);
    return forward_reduce(set, config.scenarios.k, protect);
  });
  {
    const LossDistribution dist = LossDistribution::of(set);
    json periods = json::array();
    for (double T : config.scenarios.periods)
      periods.push_back({{"period", T}, {"loss", return_period_loss(dist, T)}});
    emit("reduced.json", to_document(scenario_set_to_json(reduction.reduced)));
    emit("reduction.json", to_document({{"k", config.scenarios.k},
                                        {"return_periods", periods},
                                        {"representatives", select_representatives(set, config.scenarios.periods)},
                                        {"wasserstein1", reduction.distance}}));
  }
  timing["stages"]["reduce"] = seconds_since(t0);
  say("reduce: kept " + std::to_string(reduction.reduced.scenarios.size()) + ", W1 = " +
      std::to_string(reduction.distance));

  t0 = std::chrono::steady_clock::now();
  std::optional<PolicyModel> model;
  for (const auto& s : config.dispatch.solvers)
    if (s == "policy") model = stage("dispatch", [&] { return load_checkpoint(config.dispatch.policy_model); });

  const auto& kept = reduction.reduced.scenarios;
  std::vector<ScenarioWork> work(kept.size());
  auto solve = [&](std::size_t i) {
    const DamageScenario& sc = kept[i];
    ScenarioWork& w = work[i];
    w.id = sc.id;
    const DispatchInstance inst =
        build_instance(network, sc.failures, cl, config.dispatch.speed_kmh, config.dispatch.gamma);
    std::size_t horizon = 1;
    for (const auto& solver : config.dispatch.solvers) {
      SolverRun run;
      run.solver = solver;
      run.plan.solver = solver;
      run.plan.scenario = sc.id;
      run.plan.instance = inst;
      run.schedule = RepairSchedule::undamaged(network);
      const auto start = std::chrono::steady_clock::now();
      if (inst.failed.empty()) {
        run.ran = true;
        run.plan.optimal = true;
      } else if (solver == "exact") {
        try {
          const DispatchResult r = exact_dispatch(inst, config.dispatch.exact);
          run.plan.routes = r.plan.routes;
          run.plan.optimal = r.optimal;
          run.ran = true;
        } catch (const FeasibilityError&) {
          throw;
        } catch (const LimitError& e) {
          run.skipped = e.what();
        }
      } else if (solver == "ga") {
        GaConfig ga = config.dispatch.ga;
        ga.seed = derive_seed(config.seed, 0x6761000 + i);
        run.plan.routes = ga_dispatch(inst, ga).plan.routes;
        run.ran = true;
      } else {
        run.plan.routes = policy_dispatch(*model, inst, config.dispatch.policy_samples,
                                          derive_seed(config.seed, 0x706f6c000 + i))
                              .plan.routes;
        run.ran = true;
      }
      run.seconds = seconds_since(start);
      if (run.ran) {
        const DispatchPlan plan = schedule_plan(inst, run.plan.routes);
        run.plan.breakdown = objective(plan, inst);
        if (!inst.failed.empty()) run.schedule = plan_repair_schedule(network, sc.failures, plan);
        horizon = std::max(horizon, run.schedule.completion_step() + 1);
      }
      w.runs.push_back(std::move(run));
    }
    for (auto& run : w.runs)
      if (run.ran) run.timeline = ens_timeline(network, run.schedule, horizon);
  };
  stage("dispatch", [&] {
    const std::size_t threads = std::min<std::size_t>(config.threads, std::max<std::size_t>(1, work.size()));
    if (threads <= 1) {
      for (std::size_t i = 0; i < work.size(); ++i) solve(i);
      return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k)
      pool.emplace_back([&, k] {
        try {
          for (std::size_t i = k; i < work.size(); i += threads) solve(i);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  });
  timing["stages"]["dispatch"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::vector<SolverOutcome> outcomes;
  stage("report", [&] {
    for (const auto& w : work) {
      std::vector<std::pair<std::string, RestorationTimeline>> series;
      for (const auto& run : w.runs) {
        timing["dispatch"].push_back({{"scenario", w.id}, {"solver", run.solver}, {"seconds", run.seconds}});
        if (!run.ran) {
          say("dispatch: " + run.solver + " skipped on " + w.id + ": " + run.skipped);
          continue;
        }
        emit("plans/" + w.id + "." + run.solver + ".json", to_document(plan_to_json(run.plan)));
        emit("timelines/" + w.id + "." + run.solver + ".csv", resilience_csv(run.timeline));
        series.emplace_back(run.solver, run.timeline);
        SolverOutcome o;
        o.scenario = w.id;
        o.solver = run.solver;
        o.instance_key = sha256_hex(instance_to_json(run.plan.instance).dump());
        o.breakdown = run.plan.breakdown;
        o.seconds = run.seconds;
        o.optimal = run.plan.optimal;
        o.ens_mwh = run.timeline.ens_mwh;
        outcomes.push_back(std::move(o));
      }
      if (!series.empty()) {
        const ResiliencePlot plot = emit_resilience_plot(series, "scenario " + w.id);
        emit("plots/" + w.id + ".csv", plot.csv);
        emit("plots/" + w.id + ".svg", plot.svg);
      }
    }
    const ComparisonReport report = emit_comparison(outcomes, "exact");
    emit("comparison.csv", report.csv(false));
    emit("comparison.txt", report.text(false));
  });
  timing["stages"]["report"] = seconds_since(t0);

  PipelineResult result;
  result.output = out.string();
  std::sort(written.begin(), written.end());
  for (const auto& rel : written) {
    const std::string p = (out / rel).string();
    result.files.push_back({rel, sha256_file(p), static_cast<std::size_t>(fs::file_size(p))});
  }
  write_text_file((out / "manifest.json").string(), to_document(manifest_json(result.files, config_hash, config.seed)));
  write_text_file((out / "timing.json").string(), to_document(timing));

  if (previous) {
    ManifestCheck& check = result.rerun;
    check.previous_found = true;
    check.comparable = previous->value("config_sha256", "") == config_hash &&
                       previous->value("seed", std::uint64_t{0}) == config.seed;
    if (check.comparable) {
      std::map<std::string, std::string> now;
      for (const auto& f : result.files) now[f.path] = f.sha256;
      for (const auto& f : previous->at("files")) {
        const std::string rel = f.at("path").get<std::string>();
        const auto it = now.find(rel);
        if (it == now.end())
          check.missing.push_back(rel);
        else if (it->second != f.at("sha256").get<std::string>())
          check.changed.push_back(rel);
      }
      if (!check.ok())
        throw InternalError("rerun with identical config and seed changed " +
                            std::to_string(check.changed.size() + check.missing.size()) + " artifact(s), first: " +
                            (check.changed.empty() ? check.missing.front() : check.changed.front()));
    }
  }
  return result;
}

}  // namespace seis
