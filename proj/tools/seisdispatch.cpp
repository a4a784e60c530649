// Command-line front end: scenario generation and reduction, crew dispatch, training, reports.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "seis/config.hpp"
#include "seis/error.hpp"
#include "seis/io.hpp"
#include "seis/pipeline.hpp"
#include "seis/policy.hpp"
#include "seis/ppo.hpp"
#include "seis/report.hpp"
#include "seis/scenario.hpp"

namespace fs = std::filesystem;
using namespace seis;

namespace {

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  return out;
}

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;

  RunConfig config() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) {
      c.seed = *seed;
      c.dispatch.ga.seed = *seed;
      c.training.ppo.seed = *seed;
    }
    if (threads) c.threads = c.training.ppo.threads = *threads;
    return c;
  }
  std::string output(const std::string& fallback) const { return out.empty() ? fallback : out; }
};

void print_breakdown(const std::string& label, const ObjectiveBreakdown& b) {
  std::printf("%s: objective %.6f (T %.4f h, ENS surrogate %.4f MWh)\n", label.c_str(), b.value, b.restoration_time,
              b.ens_surrogate);
}

// Dispatch instance for one scenario of a set, or a stand-alone instance document.
struct InstanceSource {
  std::string instance_path;
  std::string network_path;
  std::string scenarios_path;
  std::string scenario;
  std::optional<double> gamma;
  std::optional<double> speed;

  void add(CLI::App* app) {
    app->add_option("--instance", instance_path, "dispatch instance document");
    app->add_option("--network", network_path, "network document (with --in and --scenario)");
    app->add_option("--in", scenarios_path, "scenario set document");
    app->add_option("--scenario", scenario, "scenario id within the set");
    app->add_option("--gamma", gamma, "objective weight on restoration time");
    app->add_option("--speed", speed, "crew travel speed, km/h");
  }

  std::pair<DispatchInstance, std::string> load(const RunConfig& cfg) const {
    const double g = gamma.value_or(cfg.dispatch.gamma), v = speed.value_or(cfg.dispatch.speed_kmh);
    if (!instance_path.empty()) {
      DispatchInstance inst = instance_from_json(read_json_file(instance_path));
      if (gamma) inst.gamma = g;
      if (speed) inst.speed_kmh = v;
      inst.validate();
      return {inst, ""};
    }
    const std::string net_path = network_path.empty() ? cfg.network : network_path;
    if (net_path.empty() || scenarios_path.empty() || scenario.empty())
      throw ConfigError("need --instance, or --network with --in and --scenario");
    const Network net = load_network_file(net_path);
    const ScenarioSet set = scenario_set_from_json(read_json_file(scenarios_path));
    const DamageScenario& sc = set.scenarios[set.index_of(scenario)];
    if (sc.failures.size() != net.components.size())
      throw ConfigError("scenario set does not match the network's component list");
    std::vector<std::size_t> failed;
    for (std::size_t d = 0; d < sc.failures.size(); ++d)
      if (sc.failures[d]) failed.push_back(d);
    const std::vector<double> cl = attribute_curtailed_load(net, failed);
    std::vector<double> by_component(net.components.size(), 0.0);
    for (std::size_t i = 0; i < failed.size(); ++i) by_component[failed[i]] = cl[i];
    return {build_instance(net, sc.failures, by_component, v, g), scenario};
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Earthquake damage scenarios and repair-crew dispatch for distribution grids"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "run configuration document")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root random seed");
  app.add_option("--out", g.out, "output file or directory");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "sample Monte Carlo damage scenarios");
  std::string gen_network;
  std::optional<std::size_t> gen_n;
  std::optional<double> gen_mag, gen_depth, gen_w1, gen_w2;
  std::string gen_epicenter;
  bool gen_exact_ens = false, gen_no_residuals = false;
  gen->add_option("--network", gen_network, "network document");
  gen->add_option("--n", gen_n, "number of scenarios");
  gen->add_option("--magnitude", gen_mag, "moment magnitude");
  gen->add_option("--epicenter", gen_epicenter, "epicenter as x,y in km");
  gen->add_option("--depth", gen_depth, "focal depth in km");
  gen->add_option("--w1", gen_w1, "loss weight on failure count");
  gen->add_option("--w2", gen_w2, "loss weight on ENS");
  gen->add_flag("--exact-ens", gen_exact_ens, "score ENS with the shedding LP timeline");
  gen->add_flag("--no-residuals", gen_no_residuals, "median ground motion (eps = 0)");

  // reduce
  auto* reduce = app.add_subcommand("reduce", "forward selection to k scenarios");
  std::string reduce_in, reduce_periods;
  std::optional<std::size_t> reduce_k;
  reduce->add_option("--in", reduce_in, "scenario set document")->required();
  reduce->add_option("--k", reduce_k, "scenarios to keep");
  reduce->add_option("--periods", reduce_periods, "return periods, comma separated");

  // eval
  auto* eval = app.add_subcommand("eval", "restoration timeline of a plan on its scenario");
  std::string eval_plan, eval_network, eval_set, eval_scenario;
  eval->add_option("--plan", eval_plan, "plan document")->required();
  eval->add_option("--network", eval_network, "network document");
  eval->add_option("--in", eval_set, "scenario set document")->required();
  eval->add_option("--scenario", eval_scenario, "scenario id (defaults to the plan's)");

  // dispatch
  auto* dispatch = app.add_subcommand("dispatch", "plan crew routes for one scenario");
  dispatch->require_subcommand(1);
  auto* d_exact = dispatch->add_subcommand("exact", "branch and bound");
  auto* d_ga = dispatch->add_subcommand("ga", "genetic algorithm");
  auto* d_policy = dispatch->add_subcommand("policy", "trained attention policy");
  InstanceSource src_exact, src_ga, src_policy;
  src_exact.add(d_exact);
  src_ga.add(d_ga);
  src_policy.add(d_policy);
  std::optional<double> ex_timeout;
  std::optional<std::size_t> ex_max_components, ex_max_crews;
  d_exact->add_option("--timeout", ex_timeout, "seconds");
  d_exact->add_option("--max-components", ex_max_components, "per depot cluster");
  d_exact->add_option("--max-crews", ex_max_crews, "per depot");
  std::optional<std::size_t> ga_pop, ga_gens;
  d_ga->add_option("--pop", ga_pop, "population size");
  d_ga->add_option("--gens", ga_gens, "generations");
  std::string pol_model;
  std::optional<std::size_t> pol_samples;
  d_policy->add_option("--model", pol_model, "checkpoint");
  d_policy->add_option("--samples", pol_samples, "greedy plus samples-1 sampled decodes");

  // train
  auto* train = app.add_subcommand("train", "PPO training on an instance family");
  std::string train_family, train_trace;
  std::optional<std::size_t> train_iters, train_episodes;
  std::optional<double> train_lr;
  train->add_option("--instances", train_family, "instance family document");
  train->add_option("--iters", train_iters, "PPO iterations");
  train->add_option("--episodes", train_episodes, "rollouts per iteration");
  train->add_option("--lr", train_lr, "Adam learning rate");
  train->add_option("--trace", train_trace, "write iteration,mean_reward,clipped_fraction CSV");

  // report
  auto* report = app.add_subcommand("report", "comparison tables and resilience plots");
  report->require_subcommand(1);
  auto* r_compare = report->add_subcommand("compare", "objective gaps against a reference solver");
  std::vector<std::string> cmp_plans;
  std::string cmp_reference = "exact";
  r_compare->add_option("--plans", cmp_plans, "plan documents")->required();
  r_compare->add_option("--reference", cmp_reference, "reference solver");
  auto* r_res = report->add_subcommand("resilience", "resilience curves per solver");
  std::vector<std::string> res_plans;
  std::string res_network, res_set;
  r_res->add_option("--plans", res_plans, "plan documents for one scenario")->required();
  r_res->add_option("--network", res_network, "network document");
  r_res->add_option("--in", res_set, "scenario set document")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "gen, reduce, dispatch, timelines and reports");
  bool verify_only = false;
  pipeline->add_flag("--verify", verify_only, "only re-hash the artifacts listed in an existing manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const RunConfig cfg = g.config();

    if (*gen) {
      const std::string net_path = gen_network.empty() ? cfg.network : gen_network;
      if (net_path.empty()) throw ConfigError("gen: --network is required");
      const Network net = load_network_file(net_path);
      SeismicEvent ev = cfg.event;
      if (gen_mag) ev.magnitude = *gen_mag;
      if (gen_depth) ev.focal_depth_km = *gen_depth;
      if (!gen_epicenter.empty()) {
        const auto xy = parse_list(gen_epicenter, "--epicenter");
        if (xy.size() != 2) throw ConfigError("--epicenter: expected x,y");
        ev.epicenter = {xy[0], xy[1]};
      }
      std::vector<std::size_t> all(net.components.size());
      for (std::size_t d = 0; d < all.size(); ++d) all[d] = d;
      const std::vector<double> cl = attribute_curtailed_load(net, all);
      const EnsEstimator ens = gen_exact_ens || cfg.scenarios.exact_ens ? timeline_ens(net) : surrogate_ens(net, cl);
      const ScenarioSet set =
          generate_scenarios(net, ev, gen_n.value_or(cfg.scenarios.n_sce), gen_w1.value_or(cfg.scenarios.w1),
                             gen_w2.value_or(cfg.scenarios.w2), cfg.seed, ens, !gen_no_residuals && cfg.scenarios.residuals);
      const std::string out = g.output("scenarios.json");
      write_text_file(out, to_document(scenario_set_to_json(set)));
      std::printf("wrote %zu scenarios to %s\n", set.scenarios.size(), out.c_str());
    } else if (*reduce) {
      const ScenarioSet set = scenario_set_from_json(read_json_file(reduce_in));
      const std::vector<double> periods =
          reduce_periods.empty() ? cfg.scenarios.periods : parse_list(reduce_periods, "--periods");
      const std::size_t k = reduce_k.value_or(cfg.scenarios.k);
      std::vector<std::string> protect = select_representatives(set, periods);
      if (protect.size() > k) protect.resize(k);
      const ReductionResult r = forward_reduce(set, k, protect);
      const std::string out = g.output("reduced.json");
      write_text_file(out, to_document(scenario_set_to_json(r.reduced)));
      std::printf("kept %zu of %zu scenarios, W1 = %.6g; wrote %s\n", r.reduced.scenarios.size(), set.scenarios.size(),
                  r.distance, out.c_str());
    } else if (*eval) {
      const PlanDocument plan = plan_from_json(read_json_file(eval_plan));
      const std::string net_path = eval_network.empty() ? cfg.network : eval_network;
      if (net_path.empty()) throw ConfigError("eval: --network is required");
      const Network net = load_network_file(net_path);
      const ScenarioSet set = scenario_set_from_json(read_json_file(eval_set));
      const std::string id = eval_scenario.empty() ? plan.scenario : eval_scenario;
      const DamageScenario& sc = set.scenarios[set.index_of(id)];
      std::size_t failed = 0;
      for (bool f : sc.failures) failed += f;
      if (failed != plan.instance.failed.size())
        throw ConfigError("eval: plan covers " + std::to_string(plan.instance.failed.size()) + " components, scenario '" +
                          id + "' has " + std::to_string(failed));
      const DispatchPlan scheduled = schedule_plan(plan.instance, plan.routes);
      const RestorationTimeline tl = ens_timeline(net, plan_repair_schedule(net, sc.failures, scheduled));
      print_breakdown(plan.solver, plan.breakdown);
      std::printf("timeline ENS %.6f MWh over %zu steps\n", tl.ens_mwh, tl.steps.size());
      const std::string out = g.output("timeline.csv");
      write_text_file(out, resilience_csv(tl));
    } else if (*dispatch) {
      PlanDocument doc;
      if (*d_exact) {
        auto [inst, id] = src_exact.load(cfg);
        ExactLimits limits = cfg.dispatch.exact;
        if (ex_timeout) limits.timeout_seconds = *ex_timeout;
        if (ex_max_components) limits.max_components = *ex_max_components;
        if (ex_max_crews) limits.max_crews = *ex_max_crews;
        const DispatchResult r = exact_dispatch(inst, limits);
        doc = {"exact", id, inst, r.plan.routes, r.breakdown, r.optimal};
        if (!r.optimal) std::printf("exact: time limit reached, returning the best plan found\n");
      } else if (*d_ga) {
        auto [inst, id] = src_ga.load(cfg);
        GaConfig ga = cfg.dispatch.ga;
        if (ga_pop) ga.population = *ga_pop;
        if (ga_gens) ga.generations = *ga_gens;
        const GaResult r = ga_dispatch(inst, ga);
        doc = {"ga", id, inst, r.plan.routes, r.breakdown, false};
      } else {
        auto [inst, id] = src_policy.load(cfg);
        const std::string model_path = pol_model.empty() ? cfg.dispatch.policy_model : pol_model;
        if (model_path.empty()) throw ConfigError("dispatch policy: --model is required");
        const PolicyModel model = load_checkpoint(model_path);
        const DecodeResult r =
            policy_dispatch(model, inst, pol_samples.value_or(cfg.dispatch.policy_samples), cfg.seed);
        doc = {"policy", id, inst, r.plan.routes, r.breakdown, false};
      }
      print_breakdown(doc.solver, doc.breakdown);
      const std::string out = g.output("plan.json");
      write_text_file(out, to_document(plan_to_json(doc)));
    } else if (*train) {
      TrainingOptions t = cfg.training;
      if (!train_family.empty()) t.family = family_from_json(read_json_file(train_family));
      if (train_iters) t.ppo.iterations = *train_iters;
      if (train_episodes) {
        t.ppo.episodes = *train_episodes;
        t.ppo.minibatches = std::min(t.ppo.minibatches, *train_episodes);
      }
      if (train_lr) t.ppo.learning_rate = *train_lr;
      const auto start = std::chrono::steady_clock::now();
      const TrainResult r = ppo_train(t.family, t.policy, t.ppo, [&](std::size_t it, double reward) {
        if (it % 10 == 0 || it + 1 == t.ppo.iterations)
          std::fprintf(stderr, "iteration %zu: mean reward %.4f\n", it, reward);
      });
      const std::string out = g.output("model.ckpt");
      save_checkpoint(r.model, out);
      if (!train_trace.empty()) {
        std::ostringstream csv;
        csv << "iteration,mean_reward,clipped_fraction\n";
        for (std::size_t i = 0; i < r.trace.mean_reward.size(); ++i)
          csv << i << ',' << r.trace.mean_reward[i] << ',' << r.trace.clipped_fraction[i] << '\n';
        write_text_file(train_trace, csv.str());
      }
      std::printf("trained %zu iterations in %.1f s; wrote %s\n", r.model.metadata.iterations,
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), out.c_str());
    } else if (*report && *r_compare) {
      std::vector<SolverOutcome> outcomes;
      for (const auto& path : cmp_plans) {
        const PlanDocument p = plan_from_json(read_json_file(path));
        SolverOutcome o;
        o.scenario = p.scenario.empty() ? "-" : p.scenario;
        o.solver = p.solver;
        o.instance_key = sha256_hex(instance_to_json(p.instance).dump());
        o.breakdown = p.breakdown;
        o.optimal = p.optimal;
        outcomes.push_back(std::move(o));
      }
      const ComparisonReport rep = emit_comparison(outcomes, cmp_reference);
      std::fputs(rep.text(false).c_str(), stdout);
      const std::string prefix = g.output("comparison");
      write_text_file(prefix + ".csv", rep.csv(false));
      write_text_file(prefix + ".txt", rep.text(false));
    } else if (*report && *r_res) {
      const std::string net_path = res_network.empty() ? cfg.network : res_network;
      if (net_path.empty()) throw ConfigError("report resilience: --network is required");
      const Network net = load_network_file(net_path);
      const ScenarioSet set = scenario_set_from_json(read_json_file(res_set));
      std::vector<std::pair<PlanDocument, RepairSchedule>> runs;
      std::size_t horizon = 1;
      std::string scenario;
      for (const auto& path : res_plans) {
        PlanDocument p = plan_from_json(read_json_file(path));
        if (!scenario.empty() && p.scenario != scenario) throw ConfigError("report resilience: plans name different scenarios");
        scenario = p.scenario;
        const DamageScenario& sc = set.scenarios[set.index_of(p.scenario)];
        RepairSchedule s = plan_repair_schedule(net, sc.failures, schedule_plan(p.instance, p.routes));
        horizon = std::max(horizon, s.completion_step() + 1);
        runs.emplace_back(std::move(p), std::move(s));
      }
      std::vector<std::pair<std::string, RestorationTimeline>> series;
      for (const auto& [p, s] : runs) series.emplace_back(p.solver, ens_timeline(net, s, horizon));
      const ResiliencePlot plot = emit_resilience_plot(series, "scenario " + scenario);
      const std::string prefix = g.output("resilience");
      write_text_file(prefix + ".csv", plot.csv);
      write_text_file(prefix + ".svg", plot.svg);
      std::printf("wrote %s.csv and %s.svg\n", prefix.c_str(), prefix.c_str());
    } else if (*pipeline) {
      if (g.config_path.empty()) throw ConfigError("pipeline: --config is required");
      RunConfig run = cfg;
      if (!g.out.empty()) run.output = g.out;
      if (verify_only) {
        const ManifestCheck check = verify_manifest(run.output);
        if (!check.previous_found) throw ConfigError("no manifest.json in '" + run.output + "'");
        for (const auto& f : check.changed) std::printf("changed: %s\n", f.c_str());
        for (const auto& f : check.missing) std::printf("missing: %s\n", f.c_str());
        if (!check.ok()) throw InternalError("manifest verification failed");
        std::printf("manifest verified\n");
        return 0;
      }
      const PipelineResult r = run_pipeline(run, &std::cerr);
      std::printf("wrote %zu artifacts to %s\n", r.files.size(), r.output.c_str());
      if (r.rerun.previous_found && r.rerun.comparable) std::printf("rerun matches the previous manifest\n");
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const LimitError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const InternalError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
  return 0;
}
