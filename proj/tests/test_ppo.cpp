#include <doctest.h>

#include <cmath>

#include "seis/error.hpp"
#include "seis/ppo.hpp"

using namespace seis;

namespace {

PolicyConfig tiny() {
  PolicyConfig c;
  c.width = 16;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.ff_hidden = 16;
  c.critic_hidden = 16;
  return c;
}

}  // namespace

TEST_CASE("single action converges") {
  InstanceFamily f;
  f.min_components = f.max_components = 1;
  f.depots = 1;
  f.min_crews = f.max_crews = 1;
  PpoConfig cfg;
  cfg.iterations = 5;
  cfg.episodes = 4;
  cfg.minibatches = 2;
  const TrainResult r = ppo_train(f, tiny(), cfg);
  Rng rng(1);
  const DispatchInstance inst = f.sample(rng);
  // Round masking leaves a single legal action, so the trained policy picks it with certainty.
  CHECK(std::exp(decode_plan(r.model, inst, DecodeMode::greedy).log_prob) >= 0.99);
  CHECK(r.trace.mean_reward.size() == 5);
}

TEST_CASE("training is deterministic and improves on a small family") {
  InstanceFamily f;
  f.min_components = f.max_components = 5;
  f.depots = 1;
  f.min_crews = f.max_crews = 2;
  PpoConfig cfg;
  cfg.iterations = 40;
  cfg.episodes = 16;
  cfg.seed = 3;
  cfg.learning_rate = 1e-3;
  const PolicyModel untrained = PolicyModel::initialize(tiny(), cfg.seed);
  const TrainResult a = ppo_train(f, tiny(), cfg);
  const TrainResult b = ppo_train(f, tiny(), cfg);
  CHECK(a.trace.mean_reward == b.trace.mean_reward);

  double before = 0.0, after = 0.0;
  for (std::uint64_t i = 0; i < 30; ++i) {
    Rng rng = make_stream(777, i);
    const DispatchInstance inst = f.sample(rng);
    before += decode_plan(untrained, inst, DecodeMode::greedy).breakdown.value;
    after += decode_plan(a.model, inst, DecodeMode::greedy).breakdown.value;
  }
  CHECK(after < before);
}

TEST_CASE("surrogate clipping on a recorded batch") {
  InstanceFamily f;
  PolicyModel m = PolicyModel::initialize(tiny(), 2);
  m.metadata.reward_scale = 10.0;
  std::vector<EpisodeBuffer> eps;
  for (std::uint64_t i = 0; i < 4; ++i) {
    Rng rng = make_stream(5, i);
    eps.push_back(*decode_plan(m, f.sample(rng), DecodeMode::sample, &rng, true).episode);
  }
  const PpoBatch batch = make_batch(eps, m.metadata.reward_scale);
  PpoConfig cfg;
  const std::vector<std::size_t> all{0, 1, 2, 3};
  // Fresh rollouts: every ratio is 1, nothing is clipped.
  const LossStats fresh = ppo_loss(m, batch, all, cfg, LossPart::actor, nullptr);
  CHECK(fresh.clipped_fraction == 0.0);
  CHECK(fresh.max_ratio_deviation <= 1e-12);

  // A large parameter shift moves ratios outside the clip region.
  PolicyModel moved = m;
  Rng rng(9);
  for (std::size_t i = 0; i < moved.params().size(); ++i)
    moved.params()[i] += nn::Matrix::NullaryExpr(moved.params()[i].rows(), moved.params()[i].cols(),
                                                 [&] { return 0.5 * standard_normal(rng); });
  const LossStats shifted = ppo_loss(moved, batch, all, cfg, LossPart::actor, nullptr);
  CHECK(shifted.max_ratio_deviation > cfg.clip);
  CHECK(shifted.clipped_fraction > 0.0);

  // Normalized advantages.
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const auto& ep : batch.advantages)
    for (double a : ep) {
      sum += a;
      sq += a * a;
      n += 1;
    }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("divergence guard") {
  std::vector<double> flat(20, -5.0);
  CHECK_FALSE(diverged(flat, 20, 5.0));
  std::vector<double> noisy;
  for (int i = 0; i < 20; ++i) noisy.push_back(-5.0 + (i % 2 ? 0.1 : -0.1));
  CHECK_FALSE(diverged(noisy, 20, 5.0));
  std::vector<double> crash = noisy;
  for (int i = 16; i < 20; ++i) crash[i] = -50.0;
  CHECK(diverged(crash, 20, 5.0));
  std::vector<double> better = noisy;
  for (int i = 15; i < 20; ++i) better[i] = 10.0;
  CHECK_FALSE(diverged(better, 20, 5.0));
  CHECK_FALSE(diverged({-1.0, -100.0}, 20, 5.0));  // window not yet full
}

TEST_CASE("family documents") {
  InstanceFamily f;
  f.max_components = 11;
  CHECK(family_to_json(family_from_json(family_to_json(f))) == family_to_json(f));
  CHECK_THROWS_AS(family_from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(family_from_json({{"min_components", 9}, {"max_components", 3}}), ConfigError);
  PpoConfig cfg;
  cfg.clip = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
