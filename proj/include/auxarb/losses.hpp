#pragma once

#include <stdexcept>
#include <string>

#include "auxarb/types.hpp"

namespace auxarb {

/**
 * Per-class decomposition of a batch of per-point distances, keyed by the
 * auxiliary class label. values(c) is the mean over the points labelled c
 * (or the batch-normalized sum under AuxNorm::batch). A class with no
 * points in the batch is absent: its value slot is meaningless and must be
 * checked through present() — treating it as zero would fabricate a loss
 * decrease downstream.
 */
template <typename Scalar>
struct PerClassLoss {
  VectorX<Scalar> values;
  VectorXi counts;

  Index num_classes() const { return counts.size(); }
  bool present(Index c) const { return counts(c) > 0; }
};

/// Interpretation of the 1/N normalizer in the class-wise auxiliary loss:
/// divide each class term by its own point count (default) or by the whole
/// batch size (comparison switch).
enum class AuxNorm { per_class, batch };

/// Numerically stable row-wise log-sum-exp.
template <typename Derived>
VectorX<typename Derived::Scalar> log_sum_exp_rows(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> m = x.rowwise().maxCoeff();
  return m.array() + (x.colwise() - m).array().exp().rowwise().sum().log();
}

/// Row-wise softmax.
template <typename Derived>
MatrixX<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  VectorX<Scalar> m = x.rowwise().maxCoeff();
  MatrixX<Scalar> e = (x.colwise() - m).array().exp();
  VectorX<Scalar> z = e.rowwise().sum();
  return e.array().colwise() / z.array();
}

/// Cross-entropy distance per point: d_i = -log softmax(logits_i)[label_i].
template <typename Derived>
VectorX<typename Derived::Scalar> cross_entropy_per_point(
    const Eigen::MatrixBase<Derived>& logits, const VectorXi& labels) {
  using Scalar = typename Derived::Scalar;
  if (labels.size() != logits.rows()) {
    throw std::invalid_argument("cross_entropy_per_point: labels/logits row mismatch");
  }
  const Index k = logits.cols();
  VectorX<Scalar> lse = log_sum_exp_rows(logits);
  VectorX<Scalar> d(logits.rows());
  for (Index i = 0; i < logits.rows(); ++i) {
    const int y = labels(i);
    if (y < 0 || y >= k) {
      throw std::out_of_range("cross_entropy_per_point: label " + std::to_string(y) +
                              " out of range [0," + std::to_string(k) + ")");
    }
    d(i) = lse(i) - logits(i, y);
  }
  return d;
}

/// Mean absolute error per point, averaged over the output dimension.
template <typename DerivedA, typename DerivedB>
VectorX<typename DerivedA::Scalar> l1_per_point(const Eigen::MatrixBase<DerivedA>& pred,
                                                const Eigen::MatrixBase<DerivedB>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("l1_per_point: shape mismatch");
  }
  return (pred - target).cwiseAbs().rowwise().mean();
}

/// Split per-point distances into per-class terms keyed by the auxiliary
/// label. Absent classes keep counts(c) == 0 and are never reported as zero.
template <typename Scalar>
PerClassLoss<Scalar> partition_by_class(const VectorX<Scalar>& distances,
                                        const VectorXi& aux_labels, int num_classes,
                                        AuxNorm norm = AuxNorm::per_class) {
  if (distances.size() != aux_labels.size()) {
    throw std::invalid_argument("partition_by_class: distances/labels size mismatch");
  }
  if (num_classes < 2) throw std::invalid_argument("partition_by_class: need at least 2 classes");
  PerClassLoss<Scalar> out;
  out.values = VectorX<Scalar>::Zero(num_classes);
  out.counts = VectorXi::Zero(num_classes);
  for (Index i = 0; i < distances.size(); ++i) {
    const int y = aux_labels(i);
    if (y < 0 || y >= num_classes) {
      throw std::out_of_range("partition_by_class: label out of range");
    }
    out.values(y) += distances(i);
    out.counts(y) += 1;
  }
  const Scalar batch = static_cast<Scalar>(distances.size());
  for (int c = 0; c < num_classes; ++c) {
    if (out.counts(c) > 0) {
      out.values(c) /= (norm == AuxNorm::per_class) ? static_cast<Scalar>(out.counts(c)) : batch;
    }
  }
  return out;
}

/// Weighted sum of the present class terms. Absent classes contribute
/// nothing; a present class without a weight is an error.
template <typename Scalar>
Scalar weighted_aux_loss(const PerClassLoss<Scalar>& per_class,
                         const VectorX<Scalar>& weights) {
  Scalar total = Scalar(0);
  for (Index c = 0; c < per_class.num_classes(); ++c) {
    if (!per_class.present(c)) continue;
    if (c >= weights.size()) {
      throw std::invalid_argument("weighted_aux_loss: no weight for present class " +
                                  std::to_string(c));
    }
    total += weights(c) * per_class.values(c);
  }
  return total;
}

/// Training objective: weighted auxiliary loss plus unweighted main loss.
template <typename Scalar>
Scalar total_loss(Scalar aux_weighted, Scalar main) {
  if (!is_finite(aux_weighted) || !is_finite(main)) {
    throw std::runtime_error("total_loss: non-finite input");
  }
  return aux_weighted + main;
}

/// Gradient of coef_i * ce_i w.r.t. the logits:
/// d logits_i = coef_i * (softmax(logits_i) - onehot(label_i)).
template <typename Derived>
MatrixX<typename Derived::Scalar> cross_entropy_backward(
    const Eigen::MatrixBase<Derived>& logits, const VectorXi& labels,
    const VectorX<typename Derived::Scalar>& coef) {
  using Scalar = typename Derived::Scalar;
  if (labels.size() != logits.rows() || coef.size() != logits.rows()) {
    throw std::invalid_argument("cross_entropy_backward: row mismatch");
  }
  MatrixX<Scalar> d = softmax_rows(logits);
  for (Index i = 0; i < logits.rows(); ++i) {
    d(i, labels(i)) -= Scalar(1);
  }
  d.array().colwise() *= coef.array();
  return d;
}

/// Gradient of coef_i * l1_i w.r.t. the prediction:
/// d pred_ij = coef_i * sign(pred_ij - target_ij) / D.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> l1_backward(
    const Eigen::MatrixBase<DerivedA>& pred, const Eigen::MatrixBase<DerivedB>& target,
    const VectorX<typename DerivedA::Scalar>& coef) {
  using Scalar = typename DerivedA::Scalar;
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      coef.size() != pred.rows()) {
    throw std::invalid_argument("l1_backward: shape mismatch");
  }
  MatrixX<Scalar> diff = pred - target;
  MatrixX<Scalar> s = diff.array().sign();
  s.array().colwise() *= coef.array() / static_cast<Scalar>(pred.cols());
  return s;
}

}  // namespace auxarb
