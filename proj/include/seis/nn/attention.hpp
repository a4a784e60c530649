#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "seis/error.hpp"

namespace seis::nn {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// softmax(Q K^T / sqrt(d_k)) row by row; masked entries get weight 0, fully masked rows are 0.
template <typename DerivedQ, typename DerivedK>
DenseMatrix<typename DerivedQ::Scalar> attention_weights(const Eigen::MatrixBase<DerivedQ>& Q,
                                                         const Eigen::MatrixBase<DerivedK>& K,
                                                         const BoolMatrix* mask = nullptr) {
  using Scalar = typename DerivedQ::Scalar;
  if (Q.cols() != K.cols()) throw ConfigError("attention: query and key widths differ");
  if (Q.cols() == 0) throw ConfigError("attention: key width must be positive");
  if (mask && (mask->rows() != Q.rows() || mask->cols() != K.rows()))
    throw ConfigError("attention: mask shape does not match the score matrix");
  DenseMatrix<Scalar> s = (Q * K.transpose()) / std::sqrt(static_cast<Scalar>(Q.cols()));
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < s.cols(); ++c)
      if (!mask || (*mask)(r, c)) mx = std::max(mx, s(r, c));
    if (!std::isfinite(mx)) {
      s.row(r).setZero();
      continue;
    }
    Scalar z = 0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) {
      s(r, c) = (!mask || (*mask)(r, c)) ? std::exp(s(r, c) - mx) : Scalar(0);
      z += s(r, c);
    }
    s.row(r) /= z;
  }
  return s;
}

/// Each output row is a convex combination of the rows of V.
template <typename DerivedQ, typename DerivedK, typename DerivedV>
DenseMatrix<typename DerivedQ::Scalar> attention(const Eigen::MatrixBase<DerivedQ>& Q, const Eigen::MatrixBase<DerivedK>& K,
                                                 const Eigen::MatrixBase<DerivedV>& V, const BoolMatrix* mask = nullptr) {
  if (K.rows() != V.rows()) throw ConfigError("attention: key and value counts differ");
  return attention_weights(Q, K, mask) * V;
}

/// Per-head projections W^Q_h, W^K_h, W^V_h (width x d_k) and the output map W^O.
template <typename Scalar>
struct MultiHeadParams {
  std::vector<DenseMatrix<Scalar>> wq, wk, wv;
  DenseMatrix<Scalar> wo;

  std::size_t heads() const { return wq.size(); }

  void validate(Eigen::Index width) const {
    if (wq.empty() || wk.size() != wq.size() || wv.size() != wq.size())
      throw ConfigError("multi_head_attention: inconsistent head count");
    Eigen::Index concat = 0;
    for (std::size_t h = 0; h < wq.size(); ++h) {
      if (wq[h].rows() != width || wk[h].rows() != width || wv[h].rows() != width)
        throw ConfigError("multi_head_attention: projection rows must equal the model width");
      if (wq[h].cols() != wk[h].cols()) throw ConfigError("multi_head_attention: query and key widths differ");
      concat += wv[h].cols();
    }
    if (wo.rows() != concat) throw ConfigError("multi_head_attention: output map does not match the heads");
  }
};

/// Concat_h Attention(Q W^Q_h, K W^K_h, V W^V_h) W^O.
template <typename Scalar>
DenseMatrix<Scalar> multi_head_attention(const MultiHeadParams<Scalar>& p, const DenseMatrix<Scalar>& Q,
                                         const DenseMatrix<Scalar>& K, const DenseMatrix<Scalar>& V,
                                         const BoolMatrix* mask = nullptr) {
  if (K.rows() != V.rows() || Q.cols() != K.cols() || K.cols() != V.cols())
    throw ConfigError("multi_head_attention: dimension mismatch");
  p.validate(Q.cols());
  DenseMatrix<Scalar> concat(Q.rows(), p.wo.rows());
  Eigen::Index at = 0;
  for (std::size_t h = 0; h < p.heads(); ++h) {
    const DenseMatrix<Scalar> head = attention(Q * p.wq[h], K * p.wk[h], V * p.wv[h], mask);
    concat.middleCols(at, head.cols()) = head;
    at += head.cols();
  }
  return concat * p.wo;
}

}  // namespace seis::nn
