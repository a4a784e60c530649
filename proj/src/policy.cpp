#include "seis/policy.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "seis/error.hpp"

namespace seis {

using nn::Mask;
using nn::Matrix;
using nn::Var;

void PolicyConfig::validate() const {
  if (width == 0 || heads == 0) throw ConfigError("policy: width and heads must be positive");
  if (width % heads != 0) throw ConfigError("policy: width must be divisible by the head count");
  if (encoder_layers == 0 || decoder_layers == 0) throw ConfigError("policy: at least one encoder and decoder layer");
  if (ff_hidden == 0 || critic_hidden == 0) throw ConfigError("policy: hidden sizes must be positive");
  if (!(logit_clip > 0.0)) throw ConfigError("policy: logit clip must be positive");
}

PolicyModel::PolicyModel(PolicyConfig config, nn::ParameterSet params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
}

namespace {

std::string layer(const char* stack, std::size_t l, const char* name) {
  return std::string(stack) + std::to_string(l) + "." + name;
}

struct Initializer {
  nn::ParameterSet& params;
  Rng& rng;

  void dense(const std::string& name, std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    params.add(name, std::move(w));
  }
  void bias(const std::string& name, std::size_t out) {
    params.add(name, Matrix::Zero(1, static_cast<Eigen::Index>(out)));
  }
  void linear(const std::string& name, std::size_t in, std::size_t out) {
    dense(name + ".w", in, out);
    bias(name + ".b", out);
  }
  void norm(const std::string& name, std::size_t width) {
    params.add(name + ".g", Matrix::Ones(1, static_cast<Eigen::Index>(width)));
    bias(name + ".b", width);
  }
  void attention(const std::string& name, std::size_t width) {
    for (const char* w : {".wq", ".wk", ".wv", ".wo"}) dense(name + w, width, width);
  }
};

}  // namespace

PolicyModel PolicyModel::initialize(const PolicyConfig& config, std::uint64_t seed) {
  config.validate();
  nn::ParameterSet params;
  Rng rng(seed);
  Initializer init{params, rng};
  const std::size_t W = config.width, F = config.ff_hidden;
  init.linear("embed.component", kComponentFeatures, W);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    init.norm(layer("enc", l, "ln1"), W);
    init.attention(layer("enc", l, "self"), W);
    init.norm(layer("enc", l, "ln2"), W);
    init.linear(layer("enc", l, "ff1"), W, F);
    init.linear(layer("enc", l, "ff2"), F, W);
  }
  init.norm("enc.ln", W);
  init.linear("embed.crew", kCrewFeatures, W);
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    init.norm(layer("dec", l, "ln1"), W);
    init.attention(layer("dec", l, "self"), W);
    init.norm(layer("dec", l, "ln2"), W);
    init.attention(layer("dec", l, "cross"), W);
    init.norm(layer("dec", l, "ln3"), W);
    init.linear(layer("dec", l, "ff1"), W, F);
    init.linear(layer("dec", l, "ff2"), F, W);
  }
  init.norm("dec.ln", W);
  init.dense("pointer.wq", W, W);
  init.dense("pointer.wk", W, W);
  init.dense("pointer.pass", 1, W);
  init.linear("critic.l1", 2 * W + 2, config.critic_hidden);
  init.linear("critic.l2", config.critic_hidden, 1);
  return PolicyModel(config, std::move(params));
}

// ---------------------------------------------------------------------------------------------
// Checkpoints

nlohmann::json checkpoint_json(const PolicyModel& model) {
  const PolicyConfig& c = model.config();
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const Matrix& m = model.params()[i];
    std::vector<double> data(m.data(), m.data() + m.size());
    tensors.push_back({{"name", model.params().name(i)}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", data}});
  }
  return {{"format", "seis-policy"},
          {"version", 1},
          {"config",
           {{"width", c.width},
            {"heads", c.heads},
            {"encoder_layers", c.encoder_layers},
            {"decoder_layers", c.decoder_layers},
            {"ff_hidden", c.ff_hidden},
            {"critic_hidden", c.critic_hidden},
            {"logit_clip", c.logit_clip}}},
          {"training",
           {{"gamma", model.metadata.gamma},
            {"seed", model.metadata.seed},
            {"iterations", model.metadata.iterations},
            {"reward_scale", model.metadata.reward_scale}}},
          {"tensors", tensors}};
}

PolicyModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "seis-policy") throw ConfigError("checkpoint: unknown format");
    if (doc.at("version").get<int>() != 1) throw ConfigError("checkpoint: unsupported version");
    const auto& jc = doc.at("config");
    PolicyConfig c;
    c.width = jc.at("width").get<std::size_t>();
    c.heads = jc.at("heads").get<std::size_t>();
    c.encoder_layers = jc.at("encoder_layers").get<std::size_t>();
    c.decoder_layers = jc.at("decoder_layers").get<std::size_t>();
    c.ff_hidden = jc.at("ff_hidden").get<std::size_t>();
    c.critic_hidden = jc.at("critic_hidden").get<std::size_t>();
    c.logit_clip = jc.at("logit_clip").get<double>();
    c.validate();

    // Shapes must agree with a freshly built model of the same configuration.
    const PolicyModel reference = PolicyModel::initialize(c, 0);
    const auto& tensors = doc.at("tensors");
    if (tensors.size() != reference.params().size()) throw ConfigError("checkpoint: tensor count does not match config");
    nn::ParameterSet params;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& t = tensors[i];
      const std::string name = t.at("name").get<std::string>();
      const auto rows = t.at("rows").get<Eigen::Index>(), cols = t.at("cols").get<Eigen::Index>();
      const Matrix& ref = reference.params()[i];
      if (name != reference.params().name(i) || rows != ref.rows() || cols != ref.cols())
        throw ConfigError("checkpoint: tensor '" + name + "' does not match the configured architecture");
      const auto data = t.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ConfigError("checkpoint: tensor '" + name + "' has the wrong element count");
      params.add(name, Eigen::Map<const Matrix>(data.data(), rows, cols));
    }
    PolicyModel model(c, std::move(params));
    const auto& jt = doc.at("training");
    model.metadata.gamma = jt.at("gamma").get<double>();
    model.metadata.seed = jt.at("seed").get<std::uint64_t>();
    model.metadata.iterations = jt.at("iterations").get<std::size_t>();
    model.metadata.reward_scale = jt.at("reward_scale").get<double>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const PolicyModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << checkpoint_json(model).dump() << '\n';
}

PolicyModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint '" + path + "': " + e.what());
  }
  return model_from_json(doc);
}

// ---------------------------------------------------------------------------------------------
// Features

Featurization featurize(const DispatchInstance& inst) {
  const std::size_t n = inst.failed.size();
  Featurization f;
  const Assignment assignment = cluster_to_depots(inst.failed, inst.depots);
  for (const auto& c : inst.failed) {
    f.center.x += c.coords.x / static_cast<double>(n);
    f.center.y += c.coords.y / static_cast<double>(n);
  }
  std::vector<double> depot_time(n);
  double scale = 0.0, cl_total = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    depot_time[d] = travel_time(inst.depots[assignment[d]].coords, inst.failed[d].coords, inst.speed_kmh);
    scale += (inst.failed[d].repair_hours + depot_time[d]) / static_cast<double>(n);
    cl_total += inst.failed[d].curtailed_mw;
  }
  f.time_scale = scale;
  f.weight_scale = inst.gamma + (1.0 - inst.gamma) * cl_total;
  const double hours = inst.speed_kmh * f.time_scale;
  f.components.resize(static_cast<Eigen::Index>(n), kComponentFeatures);
  for (std::size_t d = 0; d < n; ++d) {
    const auto& c = inst.failed[d];
    const auto r = static_cast<Eigen::Index>(d);
    f.components(r, 0) = (c.coords.x - f.center.x) / hours;
    f.components(r, 1) = (c.coords.y - f.center.y) / hours;
    f.components(r, 2) = c.repair_hours / f.time_scale;
    f.components(r, 3) = f.weight_scale > 0.0 ? (1.0 - inst.gamma) * c.curtailed_mw / f.weight_scale : 0.0;
    f.components(r, 4) = depot_time[d] / f.time_scale;
  }
  if (!f.components.allFinite()) throw InternalError("featurize: non-finite feature");
  return f;
}

// ---------------------------------------------------------------------------------------------
// Forward pass

namespace policy_detail {

TapeParams::TapeParams(nn::Tape& t, const nn::ParameterSet& ps)
    : tape(t), params(ps), cache(ps.size()), pushed(ps.size(), false) {
  for (std::size_t i = 0; i < ps.size(); ++i) index.emplace(ps.name(i), i);
}

Var TapeParams::operator()(const std::string& name) {
  const auto it = index.find(name);
  if (it == index.end()) throw InternalError("policy: missing parameter '" + name + "'");
  if (!pushed[it->second]) {
    cache[it->second] = tape.parameter(params, it->second);
    pushed[it->second] = true;
  }
  return cache[it->second];
}

namespace {

Var linear(TapeParams& p, const std::string& name, const Var& x) {
  return nn::add_row(nn::matmul(x, p(name + ".w")), p(name + ".b"));
}

Var norm(TapeParams& p, const std::string& name, const Var& x) {
  return nn::layer_norm(x, p(name + ".g"), p(name + ".b"));
}

Var feed_forward(TapeParams& p, const std::string& prefix, const Var& x) {
  return linear(p, prefix + "ff2", nn::gelu(linear(p, prefix + "ff1", x)));
}

Var mha(TapeParams& p, const std::string& name, std::size_t heads, const Var& xq, const Var& xkv, const Mask& mask) {
  const Var q = nn::matmul(xq, p(name + ".wq"));
  const Var k = nn::matmul(xkv, p(name + ".wk"));
  const Var v = nn::matmul(xkv, p(name + ".wv"));
  const Eigen::Index dk = q.cols() / static_cast<Eigen::Index>(heads);
  const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Var> out;
  for (std::size_t h = 0; h < heads; ++h) {
    const Eigen::Index at = static_cast<Eigen::Index>(h) * dk;
    const Var scores = nn::scale(nn::matmul_nt(nn::slice_cols(q, at, dk), nn::slice_cols(k, at, dk)), inv);
    out.push_back(nn::matmul(nn::masked_softmax_rows(scores, mask), nn::slice_cols(v, at, dk)));
  }
  return nn::matmul(heads == 1 ? out.front() : nn::concat_cols(out), p(name + ".wo"));
}

}  // namespace

Var encode(TapeParams& p, const PolicyConfig& config, const Matrix& features) {
  Var x = linear(p, "embed.component", p.tape.constant(features));
  const Mask all = Mask::Constant(x.rows(), x.rows(), true);
  for (std::size_t l = 0; l < config.encoder_layers; ++l) {
    const Var h = norm(p, layer("enc", l, "ln1"), x);
    x = nn::add(x, mha(p, layer("enc", l, "self"), config.heads, h, h, all));
    x = nn::add(x, feed_forward(p, layer("enc", l, ""), norm(p, layer("enc", l, "ln2"), x)));
  }
  return norm(p, "enc.ln", x);
}

StepOutput step(TapeParams& p, const PolicyConfig& config, const Var& encoded, const Matrix& crew_features,
                const Mask& cross_mask, double remaining, double max_clock) {
  Var d = linear(p, "embed.crew", p.tape.constant(crew_features));
  const Mask all = Mask::Constant(d.rows(), d.rows(), true);
  for (std::size_t l = 0; l < config.decoder_layers; ++l) {
    Var h = norm(p, layer("dec", l, "ln1"), d);
    d = nn::add(d, mha(p, layer("dec", l, "self"), config.heads, h, h, all));
    h = norm(p, layer("dec", l, "ln2"), d);
    d = nn::add(d, mha(p, layer("dec", l, "cross"), config.heads, h, encoded, cross_mask));
    d = nn::add(d, feed_forward(p, layer("dec", l, ""), norm(p, layer("dec", l, "ln3"), d)));
  }
  d = norm(p, "dec.ln", d);

  const Var q = nn::matmul(d, p("pointer.wq"));
  const Var scores = nn::concat_cols({nn::matmul_nt(q, nn::matmul(encoded, p("pointer.wk"))),
                                      nn::matmul_nt(q, p("pointer.pass"))});
  const double inv = 1.0 / std::sqrt(static_cast<double>(config.width));
  StepOutput out;
  out.logits = nn::scale(nn::tanh(nn::scale(scores, inv)), config.logit_clip);

  Matrix extras(1, 2);
  extras << remaining, max_clock;
  const Var ctx = nn::concat_cols({nn::mean_rows(encoded), nn::mean_rows(d), p.tape.constant(extras)});
  out.value = linear(p, "critic.l2", nn::tanh(linear(p, "critic.l1", ctx)));
  return out;
}

}  // namespace policy_detail

Matrix encode(const PolicyModel& model, const DispatchInstance& instance) {
  instance.validate();
  nn::Tape tape(false);
  policy_detail::TapeParams p(tape, model.params());
  return policy_detail::encode(p, model.config(), featurize(instance).components).value();
}

// ---------------------------------------------------------------------------------------------
// Decoding

double EpisodeBuffer::total_reward() const {
  double r = 0.0;
  for (const auto& s : steps) r += s.reward;
  return r;
}

void EpisodeBuffer::validate() const {
  const Eigen::Index n = component_features.rows();
  if (component_features.cols() != static_cast<Eigen::Index>(kComponentFeatures))
    throw InternalError("episode: component feature width");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const Eigen::Index crews = s.crew_features.rows();
    if (s.crew_features.cols() != static_cast<Eigen::Index>(kCrewFeatures) || s.action_mask.rows() != crews ||
        s.action_mask.cols() != n + 1 || s.cross_mask.rows() != crews || s.cross_mask.cols() != n)
      throw InternalError("episode: inconsistent step shapes at step " + std::to_string(i));
    if (static_cast<Eigen::Index>(s.crew) >= crews || static_cast<Eigen::Index>(s.target) > n ||
        !s.action_mask(static_cast<Eigen::Index>(s.crew), static_cast<Eigen::Index>(s.target)))
      throw InternalError("episode: recorded action is masked at step " + std::to_string(i));
    if (!std::isfinite(s.reward) || !std::isfinite(s.log_prob) || !std::isfinite(s.value))
      throw InternalError("episode: non-finite entry at step " + std::to_string(i));
    if (s.done != (i + 1 == steps.size())) throw InternalError("episode: done flag must mark the last step only");
  }
}

namespace {

// Crews of each depot act in rounds. A crew either takes an open job of its own cluster or
// passes; each crew acts at most once per round and a round ends when every crew with open
// work has acted. The last crew of a round may not pass if nobody took a job.
class DecodeState {
 public:
  DecodeState(const DispatchInstance& inst, const Featurization& f) : inst_(inst), f_(f) {
    const std::size_t n = inst.failed.size();
    assignment_ = cluster_to_depots(inst.failed, inst.depots);
    open_.assign(inst.depots.size(), 0);
    for (auto s : assignment_) ++open_[s];
    cluster_size_ = open_;
    for (std::size_t s = 0; s < inst.depots.size(); ++s) {
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(inst.depots[s].crew_count), open_[s]);
      for (std::size_t c = 0; c < k; ++c) crews_.push_back({s, static_cast<int>(c), inst.depots[s].coords, 0.0, {}, false});
    }
    done_.assign(n, false);
    remaining_ = n;
  }

  std::size_t crew_count() const { return crews_.size(); }
  bool finished() const { return remaining_ == 0; }
  double remaining_fraction() const {
    return static_cast<double>(remaining_) / static_cast<double>(inst_.failed.size());
  }
  double max_clock() const {
    double m = 0.0;
    for (const auto& c : crews_) m = std::max(m, c.clock);
    return m;
  }

  Matrix crew_features() const {
    Matrix out(static_cast<Eigen::Index>(crews_.size()), kCrewFeatures);
    const double hours = inst_.speed_kmh * f_.time_scale;
    for (std::size_t i = 0; i < crews_.size(); ++i) {
      const auto& c = crews_[i];
      const Point& home = inst_.depots[c.depot].coords;
      out.row(static_cast<Eigen::Index>(i)) << (c.pos.x - f_.center.x) / hours, (c.pos.y - f_.center.y) / hours,
          (home.x - f_.center.x) / hours, (home.y - f_.center.y) / hours, c.clock / f_.time_scale, c.used ? 1.0 : 0.0,
          static_cast<double>(open_[c.depot]) / static_cast<double>(cluster_size_[c.depot]);
    }
    return out;
  }

  Mask cross_mask() const {
    const auto n = static_cast<Eigen::Index>(done_.size());
    Mask m(static_cast<Eigen::Index>(crews_.size()), n);
    for (Eigen::Index j = 0; j < n; ++j) m.col(j).setConstant(!done_[static_cast<std::size_t>(j)]);
    return m;
  }

  Mask action_mask() const {
    const std::size_t n = done_.size();
    Mask m = Mask::Constant(static_cast<Eigen::Index>(crews_.size()), static_cast<Eigen::Index>(n + 1), false);
    std::size_t waiting = 0;
    for (const auto& c : crews_) waiting += active(c) && !c.used;
    for (std::size_t i = 0; i < crews_.size(); ++i) {
      const auto& c = crews_[i];
      if (!active(c) || c.used) continue;
      const auto r = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < n; ++j)
        if (!done_[j] && assignment_[j] == c.depot) m(r, static_cast<Eigen::Index>(j)) = true;
      m(r, static_cast<Eigen::Index>(n)) = assigned_in_round_ || waiting > 1;
    }
    return m;
  }

  /// Applies the action and returns its shaped reward.
  double apply(std::size_t crew, std::size_t target) {
    auto& c = crews_[crew];
    double reward = 0.0;
    c.used = true;
    if (target < done_.size()) {
      const auto& fc = inst_.failed[target];
      c.clock += travel_time(c.pos, fc.coords, inst_.speed_kmh) + fc.repair_hours;
      c.pos = fc.coords;
      c.jobs.push_back(target);
      done_[target] = true;
      --open_[c.depot];
      --remaining_;
      assigned_in_round_ = true;
      reward -= (1.0 - inst_.gamma) * fc.curtailed_mw * c.clock;
    }
    bool round_over = true;
    for (const auto& other : crews_) round_over = round_over && (!active(other) || other.used);
    if (round_over) {
      for (auto& other : crews_) other.used = false;
      assigned_in_round_ = false;
    }
    if (finished()) reward -= inst_.gamma * max_clock();
    return reward;
  }

  std::vector<Route> routes() const {
    std::vector<Route> out;
    for (const auto& c : crews_)
      if (!c.jobs.empty()) out.push_back({c.depot, c.crew, c.jobs});
    return out;
  }

 private:
  struct Crew {
    std::size_t depot;
    int crew;
    Point pos;
    double clock;
    std::vector<std::size_t> jobs;
    bool used;
  };

  bool active(const Crew& c) const { return open_[c.depot] > 0; }

  const DispatchInstance& inst_;
  const Featurization& f_;
  Assignment assignment_;
  std::vector<std::size_t> open_, cluster_size_;
  std::vector<Crew> crews_;
  std::vector<bool> done_;
  std::size_t remaining_ = 0;
  bool assigned_in_round_ = false;
};

}  // namespace

DecodeResult decode_plan(const PolicyModel& model, const DispatchInstance& instance, DecodeMode mode, Rng* rng,
                         bool record) {
  instance.validate();
  if (mode == DecodeMode::sample && !rng) throw InternalError("decode_plan: sampling needs a random stream");
  const Featurization f = featurize(instance);
  const auto n = static_cast<Eigen::Index>(instance.failed.size());

  Matrix encoded;
  {
    nn::Tape tape(false);
    policy_detail::TapeParams p(tape, model.params());
    encoded = policy_detail::encode(p, model.config(), f.components).value();
  }

  DecodeState state(instance, f);
  DecodeResult result;
  if (record) result.episode = EpisodeBuffer{f.components, {}};
  while (!state.finished()) {
    // A fresh tape per step keeps inference memory flat.
    nn::Tape tape(false);
    policy_detail::TapeParams p(tape, model.params());
    const Matrix crew_features = state.crew_features();
    const Mask cross = state.cross_mask();
    const Mask allowed = state.action_mask();
    const double remaining = state.remaining_fraction(), max_clock = state.max_clock() / f.time_scale;
    const auto out =
        policy_detail::step(p, model.config(), tape.constant(encoded), crew_features, cross, remaining, max_clock);
    const Matrix logp = nn::masked_log_softmax(out.logits, allowed).value();

    Eigen::Index row = -1, col = -1;
    if (mode == DecodeMode::greedy) {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < allowed.rows(); ++r)
        for (Eigen::Index c = 0; c <= n; ++c)
          if (allowed(r, c) && logp(r, c) > best) {
            best = logp(r, c);
            row = r;
            col = c;
          }
    } else {
      const double u = uniform01(*rng);
      double cum = 0.0;
      for (Eigen::Index r = 0; r < allowed.rows() && row < 0; ++r)
        for (Eigen::Index c = 0; c <= n; ++c) {
          if (!allowed(r, c)) continue;
          cum += std::exp(logp(r, c));
          col = c;
          if (u < cum) {
            row = r;
            break;
          }
        }
      if (row < 0) {  // rounding left u above the total mass: take the last allowed entry
        for (Eigen::Index r = allowed.rows() - 1; r >= 0 && row < 0; --r)
          for (Eigen::Index c = n; c >= 0; --c)
            if (allowed(r, c)) {
              row = r;
              col = c;
              break;
            }
      }
    }
    if (row < 0) throw InternalError("decode_plan: no admissible action");

    result.log_prob += logp(row, col);
    const double reward = state.apply(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
    if (record) {
      StepRecord s;
      s.crew_features = crew_features;
      s.action_mask = allowed;
      s.cross_mask = cross;
      s.remaining = remaining;
      s.max_clock = max_clock;
      s.crew = static_cast<std::size_t>(row);
      s.target = static_cast<std::size_t>(col);
      s.log_prob = logp(row, col);
      s.value = out.value.scalar();
      s.reward = reward;
      s.done = state.finished();
      result.episode->steps.push_back(std::move(s));
    }
  }
  result.plan = schedule_plan(instance, state.routes());
  result.breakdown = objective(result.plan, instance);
  return result;
}

DecodeResult policy_dispatch(const PolicyModel& model, const DispatchInstance& instance, std::size_t samples,
                             std::uint64_t seed) {
  if (samples == 0) throw ConfigError("policy_dispatch: samples must be at least 1");
  DecodeResult best = decode_plan(model, instance, DecodeMode::greedy);
  for (std::size_t i = 1; i < samples; ++i) {
    Rng rng(derive_seed(seed, i));
    DecodeResult r = decode_plan(model, instance, DecodeMode::sample, &rng);
    if (r.breakdown.value < best.breakdown.value) best = std::move(r);
  }
  return best;
}

}  // namespace seis
