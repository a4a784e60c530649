#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "seis/error.hpp"
#include "seis/policy.hpp"
#include "seis/ppo.hpp"

using namespace seis;

namespace {

PolicyModel small_model(std::uint64_t seed = 1) {
  PolicyConfig c;
  c.width = 16;
  c.heads = 2;
  c.ff_hidden = 32;
  c.critic_hidden = 16;
  return PolicyModel::initialize(c, seed);
}

DispatchInstance sample(std::size_t n, std::uint64_t seed) {
  InstanceFamily f;
  f.min_components = 1;
  f.max_components = n;
  Rng rng(seed);
  return f.sample(rng);
}

}  // namespace

TEST_CASE("encoder is permutation equivariant") {
  const PolicyModel m = small_model();
  DispatchInstance inst = sample(7, 4);
  inst.failed.resize(std::max<std::size_t>(inst.failed.size(), 3));
  const nn::Matrix base = encode(m, inst);

  DispatchInstance perm = inst;
  std::reverse(perm.failed.begin(), perm.failed.end());
  const nn::Matrix moved = encode(m, perm);
  const auto n = static_cast<Eigen::Index>(inst.failed.size());
  for (Eigen::Index i = 0; i < n; ++i) CHECK((base.row(i) - moved.row(n - 1 - i)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("encoder symmetry cases") {
  const PolicyModel m = small_model();
  DispatchInstance inst = sample(4, 9);
  inst.failed.push_back(inst.failed.front());
  const nn::Matrix e = encode(m, inst);
  CHECK((e.row(0) - e.row(e.rows() - 1)).cwiseAbs().maxCoeff() <= 1e-12);

  // One component: attention mixes it only with itself.
  DispatchInstance one = inst;
  one.failed.resize(1);
  const nn::Matrix single = encode(m, one);
  CHECK(single.rows() == 1);
  CHECK(single.allFinite());
}

TEST_CASE("features") {
  DispatchInstance inst = sample(5, 2);
  const Featurization f = featurize(inst);
  CHECK(f.components.rows() == static_cast<Eigen::Index>(inst.failed.size()));
  CHECK(f.components.cols() == static_cast<Eigen::Index>(kComponentFeatures));
  CHECK(f.components.col(0).sum() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f.components.allFinite());
}

TEST_CASE("decoded plans are always feasible") {
  const PolicyModel m = small_model();
  InstanceFamily f;
  f.min_components = 1;
  f.max_components = 9;
  f.depots = 3;
  f.max_crews = 3;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng = make_stream(12, i);
    const DispatchInstance inst = f.sample(rng);
    const DecodeResult r = decode_plan(m, inst, i % 2 ? DecodeMode::sample : DecodeMode::greedy, &rng, i % 3 == 0);
    CHECK_NOTHROW(schedule_plan(inst, r.plan.routes));
    CHECK(check_subtour_free(r.plan.routes).empty());
    CHECK(r.breakdown.value == doctest::Approx(evaluate_routes(inst, r.plan.routes).value));
    if (r.episode) {
      CHECK_NOTHROW(r.episode->validate());
      CHECK(r.episode->total_reward() == doctest::Approx(-r.breakdown.value).epsilon(1e-9));
    }
  }
}

TEST_CASE("decoding determinism") {
  const PolicyModel m = small_model();
  const DispatchInstance inst = sample(6, 5);
  CHECK(decode_plan(m, inst, DecodeMode::greedy).plan.routes == decode_plan(m, inst, DecodeMode::greedy).plan.routes);
  Rng a(3), b(3);
  CHECK(decode_plan(m, inst, DecodeMode::sample, &a).plan.routes == decode_plan(m, inst, DecodeMode::sample, &b).plan.routes);
  CHECK_THROWS(decode_plan(m, inst, DecodeMode::sample, nullptr));

  DispatchInstance one = inst;
  one.failed.resize(1);
  one.depots = {one.depots.front()};
  one.depots[0].crew_count = 1;
  Rng c(1);
  CHECK(decode_plan(m, one, DecodeMode::greedy).plan.routes == decode_plan(m, one, DecodeMode::sample, &c).plan.routes);
}

TEST_CASE("best of n") {
  const PolicyModel m = small_model();
  const DispatchInstance inst = sample(7, 6);
  const DecodeResult greedy = decode_plan(m, inst, DecodeMode::greedy);
  CHECK(policy_dispatch(m, inst, 1, 3).plan.routes == greedy.plan.routes);
  CHECK(policy_dispatch(m, inst, 16, 3).breakdown.value <= greedy.breakdown.value);
}

TEST_CASE("checkpoint round trip") {
  PolicyModel m = small_model(5);
  m.metadata.reward_scale = 3.5;
  m.metadata.iterations = 7;
  const auto path = (std::filesystem::temp_directory_path() / "seis-test-policy.ckpt").string();
  save_checkpoint(m, path);
  const PolicyModel back = load_checkpoint(path);
  CHECK(back.metadata.reward_scale == 3.5);
  CHECK(back.metadata.iterations == 7);
  const DispatchInstance inst = sample(8, 1);
  const DecodeResult a = decode_plan(m, inst, DecodeMode::greedy), b = decode_plan(back, inst, DecodeMode::greedy);
  CHECK(a.plan.routes == b.plan.routes);
  CHECK(a.log_prob == b.log_prob);

  nlohmann::json doc = checkpoint_json(m);
  doc["tensors"][0]["rows"] = 99;
  CHECK_THROWS_AS(model_from_json(doc), ConfigError);
  doc = checkpoint_json(m);
  doc["version"] = 42;
  CHECK_THROWS_AS(model_from_json(doc), ConfigError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), ConfigError);
}

TEST_CASE("config validation") {
  PolicyConfig c;
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
