#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "seis/policy.hpp"

namespace seis {

/// Random dispatch instances: components uniform in a square, depots spread over it.
struct InstanceFamily {
  std::size_t min_components = 5;
  std::size_t max_components = 8;
  std::size_t depots = 2;
  int min_crews = 1;
  int max_crews = 2;
  double area_km = 20.0;
  std::vector<double> repair_hours{1.0, 2.0};  // drawn uniformly from this list
  double min_curtailed_mw = 0.0;
  double max_curtailed_mw = 3.0;
  double speed_kmh = 40.0;
  double gamma = 0.5;

  void validate() const;
  DispatchInstance sample(Rng& rng) const;
};

nlohmann::json family_to_json(const InstanceFamily& family);
InstanceFamily family_from_json(const nlohmann::json& document);

struct PpoConfig {
  std::size_t iterations = 500;
  std::size_t episodes = 32;  // rollouts per iteration
  std::size_t epochs = 4;
  std::size_t minibatches = 4;
  double clip = 0.2;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 1.0;
  std::size_t divergence_window = 20;
  double divergence_iqr_factor = 5.0;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  void validate() const;
};

/// Recorded episodes with critic targets (returns over reward_scale) and normalized advantages.
struct PpoBatch {
  std::vector<EpisodeBuffer> episodes;
  std::vector<std::vector<double>> returns;
  std::vector<std::vector<double>> advantages;
};

PpoBatch make_batch(std::vector<EpisodeBuffer> episodes, double reward_scale);

enum class LossPart { actor, critic, total };

struct LossStats {
  double loss = 0.0;
  double clipped_fraction = 0.0;  // steps whose ratio left [1 - clip, 1 + clip]
  double max_ratio_deviation = 0.0;
};

/// Mean per-step PPO loss over the selected episodes. The actor part is the negative clipped
/// surrogate minus the entropy bonus; the critic part is value_coef times the squared error.
/// Parameter gradients are accumulated into grads when it is non-null.
LossStats ppo_loss(const PolicyModel& model, const PpoBatch& batch, const std::vector<std::size_t>& episodes,
                   const PpoConfig& config, LossPart part, nn::Gradients* grads);

struct TrainingTrace {
  std::vector<double> mean_reward;      // mean episode reward (negative objective) per iteration
  std::vector<double> clipped_fraction;  // mean over the iteration's updates
};

struct TrainResult {
  PolicyModel model;
  TrainingTrace trace;
};

/// Throws LimitError when the divergence guard trips.
TrainResult ppo_train(const InstanceFamily& family, const PolicyConfig& policy, const PpoConfig& config,
                      const std::function<void(std::size_t, double)>& progress = {});

/// True when the mean reward over the last window fell by more than factor x IQR of the window.
bool diverged(const std::vector<double>& mean_reward, std::size_t window, double factor);

}  // namespace seis
