#include "seis/nn/autodiff.hpp"

#include <cmath>
#include <limits>

#include "seis/error.hpp"

namespace seis::nn {

std::size_t ParameterSet::add(std::string name, Matrix value) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParameterSet::index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  throw ConfigError("unknown parameter '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

std::vector<Matrix> ParameterSet::zeros() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(Matrix::Zero(v.rows(), v.cols()));
  return out;
}

void add_into(Gradients& acc, const Gradients& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

double global_norm(const Gradients& g) {
  double sq = 0.0;
  for (const auto& m : g) sq += m.squaredNorm();
  return std::sqrt(sq);
}

void scale(Gradients& g, double factor) {
  for (auto& m : g) m *= factor;
}

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::parameter(const ParameterSet& params, std::size_t index) {
  Var v = push(params[index], nullptr);
  nodes_[v.id()].param = static_cast<long>(index);
  return v;
}

Var Tape::push(Matrix value, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), record_ ? std::move(backward) : Backward{}, -1});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& output, Gradients& grads) {
  if (!record_) throw InternalError("backward on a non-recording tape");
  if (output.rows() != 1 || output.cols() != 1) throw InternalError("backward needs a scalar output");
  grad(output.id()).setOnes();
  for (int id = output.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param >= 0) grads[static_cast<std::size_t>(n.param)] += nodes_[id].grad;
  }
}

namespace {

void check_same_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw InternalError("operands live on different tapes");
}

void check_shape(bool ok, const char* op) {
  if (!ok) throw ConfigError(std::string(op) + ": dimension mismatch");
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_shape(a.cols() == b.rows(), "matmul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() * b.value(), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(ia).noalias() += g * t.value(ib).transpose();
    t.grad(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_shape(a.cols() == b.cols(), "matmul_nt");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() * b.value().transpose(), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(ia).noalias() += g * t.value(ib);
    t.grad(ib).noalias() += g.transpose() * t.value(ia);
  });
}

Var add(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() + b.value(), [ia, ib](Tape& t, int self) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) += t.grad(self);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() - b.value(), [ia, ib](Tape& t, int self) {
    t.grad(ia) += t.grad(self);
    t.grad(ib) -= t.grad(self);
  });
}

Var add_row(const Var& a, const Var& row) {
  check_same_tape(a, row);
  check_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  const int ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape()->push(std::move(out), [ia, ir](Tape& t, int self) {
    t.grad(ia) += t.grad(self);
    t.grad(ir) += t.grad(self).colwise().sum();
  });
}

Var scale(const Var& a, double s) {
  const int ia = a.id();
  return a.tape()->push(a.value() * s, [ia, s](Tape& t, int self) { t.grad(ia) += s * t.grad(self); });
}

Var hadamard(const Var& a, const Var& b) {
  check_same_tape(a, b);
  check_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value().cwiseProduct(b.value()), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(ia) += g.cwiseProduct(t.value(ib));
    t.grad(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var tanh(const Var& a) {
  const int ia = a.id();
  return a.tape()->push(a.value().array().tanh().matrix(), [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    t.grad(ia) += (t.grad(self).array() * (1.0 - y.array().square())).matrix();
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(const Var& a) {
  const int ia = a.id();
  const Matrix& x = a.value();
  Matrix y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v))); });
  return a.tape()->push(std::move(y), [ia](Tape& t, int self) {
    const Matrix d = t.value(ia).unaryExpr([](double v) {
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    });
    t.grad(ia) += t.grad(self).cwiseProduct(d);
  });
}

Var square(const Var& a) {
  const int ia = a.id();
  return a.tape()->push(a.value().array().square().matrix(), [ia](Tape& t, int self) {
    t.grad(ia) += 2.0 * t.grad(self).cwiseProduct(t.value(ia));
  });
}

Var sum(const Var& a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->push(std::move(out), [ia](Tape& t, int self) { t.grad(ia).array() += t.grad(self)(0, 0); });
}

Var mean_rows(const Var& a) {
  const int ia = a.id();
  const double n = static_cast<double>(a.rows());
  Matrix out = a.value().colwise().mean();
  return a.tape()->push(std::move(out), [ia, n](Tape& t, int self) {
    t.grad(ia).rowwise() += t.grad(self).row(0) / n;
  });
}

Var masked_mean_rows(const Var& a, const std::vector<bool>& keep) {
  const int ia = a.id();
  double n = 0.0;
  Matrix out = Matrix::Zero(1, a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    if (keep[static_cast<std::size_t>(r)]) {
      out += a.value().row(r);
      n += 1.0;
    }
  if (n > 0.0) out /= n;
  return a.tape()->push(std::move(out), [ia, keep, n](Tape& t, int self) {
    if (n == 0.0) return;
    Matrix& g = t.grad(ia);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      if (keep[static_cast<std::size_t>(r)]) g.row(r) += t.grad(self).row(0) / n;
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  check_shape(start >= 0 && start + count <= a.cols(), "slice_cols");
  const int ia = a.id();
  return a.tape()->push(a.value().middleCols(start, count), [ia, start, count](Tape& t, int self) {
    t.grad(ia).middleCols(start, count) += t.grad(self);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InternalError("concat_cols of nothing");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    check_same_tape(p, parts.front());
    check_shape(p.rows() == parts.front().rows(), "concat_cols");
    cols += p.cols();
  }
  Matrix out(parts.front().rows(), cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  return parts.front().tape()->push(std::move(out), [ids, widths](Tape& t, int self) {
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      t.grad(ids[i]) += t.grad(self).middleCols(off, widths[i]);
      off += widths[i];
    }
  });
}

Var element(const Var& a, Eigen::Index r, Eigen::Index c) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value()(r, c);
  return a.tape()->push(std::move(out), [ia, r, c](Tape& t, int self) { t.grad(ia)(r, c) += t.grad(self)(0, 0); });
}

Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps) {
  check_same_tape(a, gain);
  check_shape(gain.cols() == a.cols() && bias.cols() == a.cols(), "layer_norm");
  const int ia = a.id(), ig = gain.id(), ib = bias.id();
  const Matrix& x = a.value();
  const Eigen::Index C = x.cols();
  Matrix xhat(x.rows(), C);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
  return a.tape()->push(std::move(y), [ia, ig, ib, xhat, inv_std, C](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    t.grad(ig) += g.cwiseProduct(xhat).colwise().sum();
    t.grad(ib) += g.colwise().sum();
    const RowVector gain_row = t.value(ig).row(0);
    Matrix& ga = t.grad(ia);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const RowVector dxhat = g.row(r).cwiseProduct(gain_row);
      const double m1 = dxhat.mean();
      const double m2 = dxhat.cwiseProduct(xhat.row(r)).sum() / static_cast<double>(C);
      ga.row(r) += inv_std(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
    }
  });
}

Matrix masked_softmax(const Matrix& scores, const Mask& mask) {
  Matrix p = Matrix::Zero(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < scores.cols(); ++c)
      if (mask(r, c)) mx = std::max(mx, scores(r, c));
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c)
      if (mask(r, c)) z += (p(r, c) = std::exp(scores(r, c) - mx));
    p.row(r) /= z;
  }
  return p;
}

Var masked_softmax_rows(const Var& a, const Mask& mask) {
  check_shape(mask.rows() == a.rows() && mask.cols() == a.cols(), "masked_softmax_rows");
  const int ia = a.id();
  return a.tape()->push(masked_softmax(a.value(), mask), [ia](Tape& t, int self) {
    const Matrix& p = t.value(self);
    const Matrix& g = t.grad(self);
    const Eigen::VectorXd dot = (g.cwiseProduct(p)).rowwise().sum();
    t.grad(ia) += (p.array() * (g.colwise() - dot).array()).matrix();
  });
}

namespace {

// Log-partition over unmasked entries of a.
double masked_lse(const Matrix& a, const Mask& mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (mask.data()[i]) mx = std::max(mx, a.data()[i]);
  if (!std::isfinite(mx)) throw InternalError("categorical over a fully masked set");
  double z = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (mask.data()[i]) z += std::exp(a.data()[i] - mx);
  return mx + std::log(z);
}

}  // namespace

Var masked_log_softmax(const Var& a, const Mask& mask) {
  check_shape(mask.rows() == a.rows() && mask.cols() == a.cols(), "masked_log_softmax");
  const int ia = a.id();
  const double lse = masked_lse(a.value(), mask);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (mask.data()[i]) out.data()[i] = a.value().data()[i] - lse;
  return a.tape()->push(std::move(out), [ia, mask](Tape& t, int self) {
    const Matrix& lp = t.value(self);
    const Matrix& g = t.grad(self);
    double gsum = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (mask.data()[i]) gsum += g.data()[i];
    Matrix& ga = t.grad(ia);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (mask.data()[i]) ga.data()[i] += g.data()[i] - std::exp(lp.data()[i]) * gsum;
  });
}

Var masked_entropy(const Var& a, const Mask& mask) {
  check_shape(mask.rows() == a.rows() && mask.cols() == a.cols(), "masked_entropy");
  const int ia = a.id();
  const double lse = masked_lse(a.value(), mask);
  Matrix logp = Matrix::Zero(a.rows(), a.cols());
  double h = 0.0;
  for (Eigen::Index i = 0; i < logp.size(); ++i)
    if (mask.data()[i]) {
      logp.data()[i] = a.value().data()[i] - lse;
      h -= std::exp(logp.data()[i]) * logp.data()[i];
    }
  Matrix out(1, 1);
  out(0, 0) = h;
  return a.tape()->push(std::move(out), [ia, mask, logp, h](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    Matrix& ga = t.grad(ia);
    for (Eigen::Index i = 0; i < logp.size(); ++i)
      if (mask.data()[i]) ga.data()[i] -= g * std::exp(logp.data()[i]) * (logp.data()[i] + h);
  });
}

Var clipped_surrogate(const Var& logp, double old_logp, double advantage, double eps) {
  const int il = logp.id();
  const double ratio = std::exp(logp.scalar() - old_logp);
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  const double unclipped_term = ratio * advantage, clipped_term = clipped * advantage;
  const bool unclipped_active = unclipped_term <= clipped_term;
  Matrix out(1, 1);
  out(0, 0) = std::min(unclipped_term, clipped_term);
  return logp.tape()->push(std::move(out), [il, ratio, advantage, unclipped_active](Tape& t, int self) {
    if (unclipped_active) t.grad(il)(0, 0) += t.grad(self)(0, 0) * ratio * advantage;
  });
}

}  // namespace seis::nn
