#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "seis/dispatch.hpp"
#include "seis/nn/autodiff.hpp"
#include "seis/rng.hpp"

namespace seis {

struct PolicyConfig {
  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t ff_hidden = 128;
  std::size_t critic_hidden = 64;
  double logit_clip = 10.0;

  std::size_t key_width() const { return width / heads; }
  void validate() const;
};

inline constexpr std::size_t kComponentFeatures = 5;  // x, y, t_d, CL_d, depot travel time
inline constexpr std::size_t kCrewFeatures = 7;       // position, depot, clock, used flag, depot backlog

struct TrainingMetadata {
  double gamma = 0.5;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double reward_scale = 1.0;  // critic targets are returns divided by this
};

class PolicyModel {
 public:
  PolicyModel() = default;
  PolicyModel(PolicyConfig config, nn::ParameterSet params);
  /// Xavier-uniform weights, unit layer-norm gains, zero biases.
  static PolicyModel initialize(const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }
  TrainingMetadata metadata;

 private:
  PolicyConfig config_;
  nn::ParameterSet params_;
};

nlohmann::json checkpoint_json(const PolicyModel& model);
PolicyModel model_from_json(const nlohmann::json& document);
void save_checkpoint(const PolicyModel& model, const std::string& path);
PolicyModel load_checkpoint(const std::string& path);

/// Normalized component features. Coordinates are in travel hours about the centroid of the
/// failed components and durations are divided by time_scale. The CL_d slot holds the share of
/// objective weight, (1 - gamma) CL_d / (gamma + (1 - gamma) sum CL).
struct Featurization {
  nn::Matrix components;  // n x kComponentFeatures
  Point center;
  double time_scale = 1.0;
  double weight_scale = 1.0;
};

Featurization featurize(const DispatchInstance& instance);

/// Context embeddings, one row per failed component.
nn::Matrix encode(const PolicyModel& model, const DispatchInstance& instance);

enum class DecodeMode { greedy, sample };

/// One decoding step as seen by the learner.
struct StepRecord {
  nn::Matrix crew_features;  // crews x kCrewFeatures
  nn::Mask action_mask;      // crews x (n + 1); last column is "pass"
  nn::Mask cross_mask;       // crews x n; open components
  double remaining = 0.0;
  double max_clock = 0.0;
  std::size_t crew = 0;
  std::size_t target = 0;  // component index, or n for pass
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeBuffer {
  nn::Matrix component_features;
  std::vector<StepRecord> steps;

  double total_reward() const;
  /// Lengths consistent and rewards finite; throws InternalError otherwise.
  void validate() const;
};

struct DecodeResult {
  DispatchPlan plan;
  ObjectiveBreakdown breakdown;
  double log_prob = 0.0;
  std::optional<EpisodeBuffer> episode;
};

/// Autoregressive (crew, component) selection under the round mask. rng is required in sample mode.
DecodeResult decode_plan(const PolicyModel& model, const DispatchInstance& instance, DecodeMode mode, Rng* rng = nullptr,
                         bool record = false);

/// Best of the greedy decode and samples - 1 sampled decodes.
DecodeResult policy_dispatch(const PolicyModel& model, const DispatchInstance& instance, std::size_t samples,
                             std::uint64_t seed = 0);

namespace policy_detail {

/// Differentiable forward pieces shared by decoding and learning.
struct TapeParams {
  TapeParams(nn::Tape& tape, const nn::ParameterSet& params);
  nn::Var operator()(const std::string& name);

  nn::Tape& tape;
  const nn::ParameterSet& params;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<nn::Var> cache;
  std::vector<bool> pushed;
};

nn::Var encode(TapeParams& p, const PolicyConfig& config, const nn::Matrix& features);

struct StepOutput {
  nn::Var logits;  // crews x (n + 1)
  nn::Var value;   // 1 x 1
};

StepOutput step(TapeParams& p, const PolicyConfig& config, const nn::Var& encoded, const nn::Matrix& crew_features,
                const nn::Mask& cross_mask, double remaining, double max_clock);

}  // namespace policy_detail

}  // namespace seis
