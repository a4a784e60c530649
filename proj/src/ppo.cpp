#include "seis/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "seis/error.hpp"

namespace seis {

using nn::Matrix;
using nn::Var;

void InstanceFamily::validate() const {
  if (min_components == 0 || min_components > max_components)
    throw ConfigError("family: need 1 <= min_components <= max_components");
  if (depots == 0) throw ConfigError("family: need at least one depot");
  if (min_crews < 1 || min_crews > max_crews) throw ConfigError("family: need 1 <= min_crews <= max_crews");
  if (!(area_km > 0.0)) throw ConfigError("family: area must be positive");
  if (repair_hours.empty()) throw ConfigError("family: repair_hours must not be empty");
  for (double r : repair_hours)
    if (!(r > 0.0)) throw ConfigError("family: repair durations must be positive");
  if (min_curtailed_mw < 0.0 || min_curtailed_mw > max_curtailed_mw)
    throw ConfigError("family: need 0 <= min_curtailed_mw <= max_curtailed_mw");
  if (!(speed_kmh > 0.0)) throw ConfigError("family: speed must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("family: gamma must lie in [0, 1]");
}

namespace {

std::size_t below(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

}  // namespace

DispatchInstance InstanceFamily::sample(Rng& rng) const {
  DispatchInstance inst;
  inst.speed_kmh = speed_kmh;
  inst.gamma = gamma;
  for (std::size_t s = 0; s < depots; ++s) {
    Depot d;
    d.id = "D" + std::to_string(s);
    d.coords = {uniform01(rng) * area_km, uniform01(rng) * area_km};
    d.crew_count = min_crews + static_cast<int>(below(rng, static_cast<std::size_t>(max_crews - min_crews + 1)));
    inst.depots.push_back(d);
  }
  const std::size_t n = min_components + below(rng, max_components - min_components + 1);
  for (std::size_t i = 0; i < n; ++i) {
    FailedComponent f;
    f.id = "f" + std::to_string(i);
    f.coords = {uniform01(rng) * area_km, uniform01(rng) * area_km};
    f.repair_hours = repair_hours[below(rng, repair_hours.size())];
    f.curtailed_mw = min_curtailed_mw + uniform01(rng) * (max_curtailed_mw - min_curtailed_mw);
    inst.failed.push_back(f);
  }
  return inst;
}

nlohmann::json family_to_json(const InstanceFamily& f) {
  return {{"min_components", f.min_components},
          {"max_components", f.max_components},
          {"depots", f.depots},
          {"min_crews", f.min_crews},
          {"max_crews", f.max_crews},
          {"area_km", f.area_km},
          {"repair_hours", f.repair_hours},
          {"min_curtailed_mw", f.min_curtailed_mw},
          {"max_curtailed_mw", f.max_curtailed_mw},
          {"speed_kmh", f.speed_kmh},
          {"gamma", f.gamma}};
}

InstanceFamily family_from_json(const nlohmann::json& doc) {
  InstanceFamily f;
  try {
    if (!doc.is_object()) throw ConfigError("family: expected an object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "min_components") f.min_components = value.get<std::size_t>();
      else if (key == "max_components") f.max_components = value.get<std::size_t>();
      else if (key == "depots") f.depots = value.get<std::size_t>();
      else if (key == "min_crews") f.min_crews = value.get<int>();
      else if (key == "max_crews") f.max_crews = value.get<int>();
      else if (key == "area_km") f.area_km = value.get<double>();
      else if (key == "repair_hours") f.repair_hours = value.get<std::vector<double>>();
      else if (key == "min_curtailed_mw") f.min_curtailed_mw = value.get<double>();
      else if (key == "max_curtailed_mw") f.max_curtailed_mw = value.get<double>();
      else if (key == "speed_kmh") f.speed_kmh = value.get<double>();
      else if (key == "gamma") f.gamma = value.get<double>();
      else throw ConfigError("family: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("family: ") + e.what());
  }
  f.validate();
  return f;
}

void PpoConfig::validate() const {
  if (iterations == 0 || episodes == 0 || epochs == 0) throw ConfigError("ppo: iterations, episodes, epochs must be positive");
  if (minibatches == 0 || minibatches > episodes) throw ConfigError("ppo: need 1 <= minibatches <= episodes");
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo: clip must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo: learning rate must be positive");
  if (value_coef < 0.0 || entropy_coef < 0.0) throw ConfigError("ppo: loss coefficients must be non-negative");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo: max_grad_norm must be positive");
  if (divergence_window < 4) throw ConfigError("ppo: divergence window must be at least 4");
  if (threads == 0) throw ConfigError("ppo: threads must be at least 1");
}

PpoBatch make_batch(std::vector<EpisodeBuffer> episodes, double reward_scale) {
  if (!(reward_scale > 0.0)) throw InternalError("make_batch: reward scale must be positive");
  PpoBatch batch;
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& ep : episodes) {
    ep.validate();
    std::vector<double> ret(ep.steps.size()), adv(ep.steps.size());
    double g = 0.0;
    for (std::size_t t = ep.steps.size(); t-- > 0;) {
      g += ep.steps[t].reward / reward_scale;
      ret[t] = g;
      adv[t] = g - ep.steps[t].value;
      sum += adv[t];
      sq += adv[t] * adv[t];
      ++count;
    }
    batch.returns.push_back(std::move(ret));
    batch.advantages.push_back(std::move(adv));
  }
  if (count > 0) {
    const double mean = sum / static_cast<double>(count);
    const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(count) - mean * mean));
    for (auto& adv : batch.advantages)
      for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }
  batch.episodes = std::move(episodes);
  return batch;
}

LossStats ppo_loss(const PolicyModel& model, const PpoBatch& batch, const std::vector<std::size_t>& episodes,
                   const PpoConfig& config, LossPart part, nn::Gradients* grads) {
  std::size_t total_steps = 0;
  for (auto e : episodes) total_steps += batch.episodes.at(e).steps.size();
  LossStats stats;
  if (total_steps == 0) return stats;
  const double weight = 1.0 / static_cast<double>(total_steps);
  std::size_t clipped = 0;

  for (auto e : episodes) {
    const EpisodeBuffer& ep = batch.episodes[e];
    if (ep.steps.empty()) continue;
    nn::Tape tape(grads != nullptr);
    policy_detail::TapeParams p(tape, model.params());
    const Var encoded = policy_detail::encode(p, model.config(), ep.component_features);
    Var acc;
    bool first = true;
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const StepRecord& s = ep.steps[t];
      const auto out =
          policy_detail::step(p, model.config(), encoded, s.crew_features, s.cross_mask, s.remaining, s.max_clock);
      Var term;
      bool has_term = false;
      if (part != LossPart::critic) {
        const Var logp = nn::element(nn::masked_log_softmax(out.logits, s.action_mask),
                                     static_cast<Eigen::Index>(s.crew), static_cast<Eigen::Index>(s.target));
        const double ratio = std::exp(logp.scalar() - s.log_prob);
        stats.max_ratio_deviation = std::max(stats.max_ratio_deviation, std::abs(ratio - 1.0));
        clipped += std::abs(ratio - 1.0) > config.clip;
        const Var surrogate = nn::clipped_surrogate(logp, s.log_prob, batch.advantages[e][t], config.clip);
        const Var entropy = nn::masked_entropy(out.logits, s.action_mask);
        term = nn::scale(nn::add(surrogate, nn::scale(entropy, config.entropy_coef)), -1.0);
        has_term = true;
      }
      if (part != LossPart::actor) {
        Matrix target(1, 1);
        target(0, 0) = batch.returns[e][t];
        const Var critic = nn::scale(nn::square(nn::sub(out.value, tape.constant(target))), config.value_coef);
        term = has_term ? nn::add(term, critic) : critic;
      }
      acc = first ? term : nn::add(acc, term);
      first = false;
    }
    const Var loss = nn::scale(acc, weight);
    stats.loss += loss.scalar();
    if (grads) tape.backward(loss, *grads);
  }
  stats.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(total_steps);
  return stats;
}

bool diverged(const std::vector<double>& r, std::size_t window, double factor) {
  if (r.size() < window) return false;
  std::vector<double> w(r.end() - static_cast<long>(window), r.end());
  const std::size_t edge = std::max<std::size_t>(1, window / 4);
  const double head = std::accumulate(w.begin(), w.begin() + static_cast<long>(edge), 0.0) / static_cast<double>(edge);
  const double tail = std::accumulate(w.end() - static_cast<long>(edge), w.end(), 0.0) / static_cast<double>(edge);
  std::sort(w.begin(), w.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(w.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, w.size() - 1);
    return w[lo] + (pos - static_cast<double>(lo)) * (w[hi] - w[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double drop = head - tail;
  return drop > 0.0 && drop > factor * iqr;
}

namespace {

class Adam {
 public:
  explicit Adam(const nn::ParameterSet& params) : m_(params.zeros()), v_(params.zeros()) {}

  void step(nn::ParameterSet& params, const nn::Gradients& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i].cwiseAbs2();
      params[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  nn::Gradients m_, v_;
  std::size_t t_ = 0;
};

// Episodes are independent given the frozen model; each has its own random stream so the
// result does not depend on the thread count.
std::vector<EpisodeBuffer> rollouts(const PolicyModel& model, const std::vector<DispatchInstance>& instances,
                                    std::uint64_t stream_root, std::size_t threads) {
  std::vector<EpisodeBuffer> out(instances.size());
  auto work = [&](std::size_t first) {
    for (std::size_t e = first; e < instances.size(); e += threads) {
      Rng rng(derive_seed(stream_root, e));
      out[e] = std::move(*decode_plan(model, instances[e], DecodeMode::sample, &rng, true).episode);
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work, k);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace

TrainResult ppo_train(const InstanceFamily& family, const PolicyConfig& policy, const PpoConfig& config,
                      const std::function<void(std::size_t, double)>& progress) {
  family.validate();
  config.validate();
  TrainResult result{PolicyModel::initialize(policy, derive_seed(config.seed, 1)), {}};
  PolicyModel& model = result.model;
  model.metadata.gamma = family.gamma;
  model.metadata.seed = config.seed;

  {
    // Returns are scaled by the untrained policy's mean objective so critic targets are O(1).
    Rng rng(derive_seed(config.seed, 2));
    double total = 0.0;
    const std::size_t probes = 32;
    for (std::size_t i = 0; i < probes; ++i)
      total += decode_plan(model, family.sample(rng), DecodeMode::greedy).breakdown.value;
    model.metadata.reward_scale = std::max(total / static_cast<double>(probes), 1e-6);
  }

  Adam adam(model.params());
  Rng rng(derive_seed(config.seed, 3));
  std::vector<std::size_t> order(config.episodes);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<DispatchInstance> instances;
    for (std::size_t e = 0; e < config.episodes; ++e) instances.push_back(family.sample(rng));
    std::vector<EpisodeBuffer> episodes =
        rollouts(model, instances, derive_seed(derive_seed(config.seed, 4), it), config.threads);
    double mean_reward = 0.0;
    for (const auto& ep : episodes) mean_reward += ep.total_reward() / static_cast<double>(episodes.size());
    const PpoBatch batch = make_batch(std::move(episodes), model.metadata.reward_scale);

    double clipped = 0.0;
    std::size_t updates = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[below(rng, i)]);
      for (std::size_t mb = 0; mb < config.minibatches; ++mb) {
        const std::size_t lo = mb * order.size() / config.minibatches;
        const std::size_t hi = (mb + 1) * order.size() / config.minibatches;
        const std::vector<std::size_t> subset(order.begin() + static_cast<long>(lo), order.begin() + static_cast<long>(hi));
        nn::Gradients grads = model.params().zeros();
        clipped += ppo_loss(model, batch, subset, config, LossPart::total, &grads).clipped_fraction;
        ++updates;
        const double norm = nn::global_norm(grads);
        if (!std::isfinite(norm)) throw InternalError("ppo_train: non-finite gradient");
        if (norm > config.max_grad_norm) nn::scale(grads, config.max_grad_norm / norm);
        adam.step(model.params(), grads, config.learning_rate);
      }
    }
    result.trace.mean_reward.push_back(mean_reward);
    result.trace.clipped_fraction.push_back(clipped / static_cast<double>(updates));
    model.metadata.iterations = it + 1;
    if (progress) progress(it, mean_reward);
    if (diverged(result.trace.mean_reward, config.divergence_window, config.divergence_iqr_factor))
      throw LimitError("ppo_train: mean reward fell by more than " + std::to_string(config.divergence_iqr_factor) +
                       " x IQR over the last " + std::to_string(config.divergence_window) + " iterations (iteration " +
                       std::to_string(it) + ")");
  }
  return result;
}

}  // namespace seis
