#include "seis/config.hpp"

#include <filesystem>
#include <set>

#include "seis/error.hpp"
#include "seis/io.hpp"

namespace seis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items())
      if (!seen_.contains(key)) throw ConfigError(where(key) + ": unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(node_.at(key), where(key));
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void RunConfig::validate() const {
  require(!network.empty(), "network: path is required");
  require(fs::exists(network), "network: file '" + network + "' does not exist");
  event.validate();
  require(scenarios.n_sce >= 1, "scenarios.n_sce must be at least 1");
  require(scenarios.w1 >= 0.0 && scenarios.w2 >= 0.0, "scenarios.w1 and w2 must be non-negative");
  require(scenarios.k >= 1 && scenarios.k <= scenarios.n_sce, "scenarios.k must lie in [1, n_sce]");
  for (double T : scenarios.periods) require(T >= 1.0, "scenarios.periods must be at least 1");
  require(dispatch.gamma >= 0.0 && dispatch.gamma <= 1.0, "dispatch.gamma must lie in [0, 1]");
  require(dispatch.speed_kmh > 0.0, "dispatch.speed_kmh must be positive");
  require(!dispatch.solvers.empty(), "dispatch.solvers must not be empty");
  std::set<std::string> seen;
  for (const auto& s : dispatch.solvers) {
    require(s == "exact" || s == "ga" || s == "policy", "dispatch.solvers: unknown solver '" + s + "'");
    require(seen.insert(s).second, "dispatch.solvers: '" + s + "' listed twice");
  }
  if (seen.contains("policy")) {
    require(!dispatch.policy_model.empty(), "dispatch.policy.model is required for the policy solver");
    require(fs::exists(dispatch.policy_model), "dispatch.policy.model: file '" + dispatch.policy_model + "' does not exist");
  }
  require(dispatch.policy_samples >= 1, "dispatch.policy.samples must be at least 1");
  require(dispatch.exact.timeout_seconds > 0.0, "dispatch.exact.timeout_seconds must be positive");
  dispatch.ga.validate();
  training.family.validate();
  training.policy.validate();
  training.ppo.validate();
  require(threads >= 1, "threads must be at least 1");
}

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  RunConfig c;
  {
    Section root(doc, "");
    root.read("network", c.network);
    c.network = resolve(base_dir, c.network);
    root.read("seed", c.seed);
    root.read("threads", c.threads);
    root.read("output", c.output);
    c.output = resolve(base_dir, c.output);

    if (root.has("event")) {
      Section ev = root.child("event");
      if (ev.has("epicenter")) {
        std::vector<double> xy;
        ev.read("epicenter", xy);
        require(xy.size() == 2, "event.epicenter: expected [x, y]");
        c.event.epicenter = {xy[0], xy[1]};
      }
      ev.read("depth_km", c.event.focal_depth_km);
      ev.read("magnitude", c.event.magnitude);
      ev.read("sigma_eps", c.event.sigma_eps);
      if (ev.has("gmpe")) {
        Section g = ev.child("gmpe");
        g.read("a", c.event.gmpe.a);
        g.read("b1", c.event.gmpe.b1);
        g.read("b2", c.event.gmpe.b2);
        g.read("site_terms", c.event.gmpe.site_terms);
        g.read("r_floor_km", c.event.gmpe.r_floor_km);
      }
    }
    if (root.has("scenarios")) {
      Section s = root.child("scenarios");
      s.read("n_sce", c.scenarios.n_sce);
      s.read("w1", c.scenarios.w1);
      s.read("w2", c.scenarios.w2);
      s.read("periods", c.scenarios.periods);
      s.read("k", c.scenarios.k);
      s.read("exact_ens", c.scenarios.exact_ens);
      s.read("residuals", c.scenarios.residuals);
    }
    if (root.has("dispatch")) {
      Section d = root.child("dispatch");
      d.read("gamma", c.dispatch.gamma);
      d.read("speed_kmh", c.dispatch.speed_kmh);
      d.read("solvers", c.dispatch.solvers);
      if (d.has("exact")) {
        Section e = d.child("exact");
        e.read("max_components", c.dispatch.exact.max_components);
        e.read("max_crews", c.dispatch.exact.max_crews);
        e.read("timeout_seconds", c.dispatch.exact.timeout_seconds);
      }
      if (d.has("ga")) {
        Section g = d.child("ga");
        g.read("population", c.dispatch.ga.population);
        g.read("generations", c.dispatch.ga.generations);
        g.read("crossover_rate", c.dispatch.ga.crossover_rate);
        g.read("mutation_rate", c.dispatch.ga.mutation_rate);
        g.read("elitism", c.dispatch.ga.elitism);
        g.read("tournament", c.dispatch.ga.tournament);
      }
      if (d.has("policy")) {
        Section p = d.child("policy");
        p.read("model", c.dispatch.policy_model);
        c.dispatch.policy_model = resolve(base_dir, c.dispatch.policy_model);
        p.read("samples", c.dispatch.policy_samples);
      }
    }
    if (root.has("training")) {
      Section t = root.child("training");
      if (t.has("family")) {
        try {
          c.training.family = family_from_json(doc.at("training").at("family"));
        } catch (const ConfigError& e) {
          throw ConfigError(std::string("training.") + e.what());
        }
      }
      if (t.has("policy")) {
        Section p = t.child("policy");
        p.read("width", c.training.policy.width);
        p.read("heads", c.training.policy.heads);
        p.read("encoder_layers", c.training.policy.encoder_layers);
        p.read("decoder_layers", c.training.policy.decoder_layers);
        p.read("ff_hidden", c.training.policy.ff_hidden);
        p.read("critic_hidden", c.training.policy.critic_hidden);
      }
      if (t.has("ppo")) {
        Section p = t.child("ppo");
        auto& ppo = c.training.ppo;
        p.read("iterations", ppo.iterations);
        p.read("episodes", ppo.episodes);
        p.read("epochs", ppo.epochs);
        p.read("minibatches", ppo.minibatches);
        p.read("clip", ppo.clip);
        p.read("learning_rate", ppo.learning_rate);
        p.read("value_coef", ppo.value_coef);
        p.read("entropy_coef", ppo.entropy_coef);
        p.read("max_grad_norm", ppo.max_grad_norm);
      }
    }
  }
  c.training.family.gamma = c.dispatch.gamma;
  c.dispatch.ga.seed = c.seed;
  c.training.ppo.seed = c.seed;
  c.training.ppo.threads = c.threads;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  const json doc = read_json_file(path);
  return parse_run_config(doc, fs::path(path).parent_path().string());
}

json run_config_to_json(const RunConfig& c) {
  const auto& ga = c.dispatch.ga;
  const auto& ppo = c.training.ppo;
  const auto& pol = c.training.policy;
  return {{"network", c.network},
          {"seed", c.seed},
          {"event",
           {{"epicenter", {c.event.epicenter.x, c.event.epicenter.y}},
            {"depth_km", c.event.focal_depth_km},
            {"magnitude", c.event.magnitude},
            {"sigma_eps", c.event.sigma_eps},
            {"gmpe",
             {{"a", c.event.gmpe.a},
              {"b1", c.event.gmpe.b1},
              {"b2", c.event.gmpe.b2},
              {"site_terms", c.event.gmpe.site_terms},
              {"r_floor_km", c.event.gmpe.r_floor_km}}}}},
          {"scenarios",
           {{"n_sce", c.scenarios.n_sce},
            {"w1", c.scenarios.w1},
            {"w2", c.scenarios.w2},
            {"periods", c.scenarios.periods},
            {"k", c.scenarios.k},
            {"exact_ens", c.scenarios.exact_ens},
            {"residuals", c.scenarios.residuals}}},
          {"dispatch",
           {{"gamma", c.dispatch.gamma},
            {"speed_kmh", c.dispatch.speed_kmh},
            {"solvers", c.dispatch.solvers},
            {"exact",
             {{"max_components", c.dispatch.exact.max_components},
              {"max_crews", c.dispatch.exact.max_crews},
              {"timeout_seconds", c.dispatch.exact.timeout_seconds}}},
            {"ga",
             {{"population", ga.population},
              {"generations", ga.generations},
              {"crossover_rate", ga.crossover_rate},
              {"mutation_rate", ga.mutation_rate},
              {"elitism", ga.elitism},
              {"tournament", ga.tournament}}},
            {"policy", {{"model", c.dispatch.policy_model}, {"samples", c.dispatch.policy_samples}}}}},
          {"training",
           {{"family", family_to_json(c.training.family)},
            {"policy",
             {{"width", pol.width},
              {"heads", pol.heads},
              {"encoder_layers", pol.encoder_layers},
              {"decoder_layers", pol.decoder_layers},
              {"ff_hidden", pol.ff_hidden},
              {"critic_hidden", pol.critic_hidden}}},
            {"ppo",
             {{"iterations", ppo.iterations},
              {"episodes", ppo.episodes},
              {"epochs", ppo.epochs},
              {"minibatches", ppo.minibatches},
              {"clip", ppo.clip},
              {"learning_rate", ppo.learning_rate},
              {"value_coef", ppo.value_coef},
              {"entropy_coef", ppo.entropy_coef},
              {"max_grad_norm", ppo.max_grad_norm}}}}}};
}

}  // namespace seis
