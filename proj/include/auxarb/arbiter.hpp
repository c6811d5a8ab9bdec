#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxarb/losses.hpp"
#include "auxarb/types.hpp"

namespace auxarb {

/// Nonnegative multiplier per auxiliary class. Starts at exactly 1 for every
/// class and stays >= 0 through the clamped update.
template <typename Scalar>
struct ClassWeights {
  VectorX<Scalar> w;

  static ClassWeights ones(Index num_classes) {
    return ClassWeights{VectorX<Scalar>::Ones(num_classes)};
  }
  Index num_classes() const { return w.size(); }
};

/**
 * Per-class history of main and auxiliary losses across update ticks.
 * Entries are appended only when the class is observed; the first observed
 * value per class is frozen as that class's normalizer and never mutated
 * afterwards.
 */
template <typename Scalar>
struct LossLedger {
  std::vector<std::vector<Scalar>> main_hist;
  std::vector<std::vector<Scalar>> aux_hist;
  VectorX<Scalar> main0;
  VectorX<Scalar> aux0;
  std::vector<bool> has_ref;
  long t = 0;

  explicit LossLedger(Index num_classes)
      : main_hist(static_cast<std::size_t>(num_classes)),
        aux_hist(static_cast<std::size_t>(num_classes)),
        main0(VectorX<Scalar>::Zero(num_classes)),
        aux0(VectorX<Scalar>::Zero(num_classes)),
        has_ref(static_cast<std::size_t>(num_classes), false) {}

  Index num_classes() const { return main0.size(); }

  int entries(Index c) const {
    return static_cast<int>(main_hist[static_cast<std::size_t>(c)].size());
  }

  Scalar main_delta(Index c) const { return last_delta(main_hist, c); }
  Scalar aux_delta(Index c) const { return last_delta(aux_hist, c); }
  Scalar main_last(Index c) const { return main_hist[static_cast<std::size_t>(c)].back(); }
  Scalar aux_last(Index c) const { return aux_hist[static_cast<std::size_t>(c)].back(); }

 private:
  Scalar last_delta(const std::vector<std::vector<Scalar>>& h, Index c) const {
    const auto& seq = h[static_cast<std::size_t>(c)];
    if (seq.size() < 2) {
      throw std::logic_error("LossLedger: class " + std::to_string(c) +
                             " has fewer than 2 recorded entries");
    }
    return seq[seq.size() - 1] - seq[seq.size() - 2];
  }
};

/// Append one tick of per-class losses. Classes must be present in both
/// partitions to be recorded; absent classes carry no new entry but the
/// tick counter still advances.
template <typename Scalar>
void record(LossLedger<Scalar>& ledger, const PerClassLoss<Scalar>& per_class_main,
            const PerClassLoss<Scalar>& per_class_aux) {
  const Index k = ledger.num_classes();
  if (per_class_main.num_classes() != k || per_class_aux.num_classes() != k) {
    throw std::invalid_argument("record: class count mismatch with ledger");
  }
  for (Index c = 0; c < k; ++c) {
    if (!per_class_main.present(c) || !per_class_aux.present(c)) continue;
    const Scalar lm = per_class_main.values(c);
    const Scalar la = per_class_aux.values(c);
    if (!ledger.has_ref[static_cast<std::size_t>(c)]) {
      ledger.main0(c) = lm;
      ledger.aux0(c) = la;
      ledger.has_ref[static_cast<std::size_t>(c)] = true;
    }
    ledger.main_hist[static_cast<std::size_t>(c)].push_back(lm);
    ledger.aux_hist[static_cast<std::size_t>(c)].push_back(la);
  }
  ledger.t += 1;
}

/**
 * Unstabilized finite-difference gradient of the class-c main loss w.r.t.
 * the class weight:
 *   g = (dL_main / dL_aux) * aux_mean_c
 * where the deltas are the last two recorded entries. May be any sign, and
 * non-finite when dL_aux is zero — this is the raw oracle form; the caller
 * owns that case.
 */
template <typename Scalar>
Scalar naive_gradient(const LossLedger<Scalar>& ledger, Index c, Scalar aux_mean_c) {
  if (ledger.entries(c) < 2) {
    throw std::logic_error("naive_gradient: class needs at least 2 recorded entries");
  }
  return ledger.main_delta(c) / ledger.aux_delta(c) * aux_mean_c;
}

/// Placement of the stabilizing epsilon: added to both normalized deltas
/// (the production form) or to the denominator only (comparison variant).
enum class EpsPlacement { both, denominator_only };

/// Counters for degenerate situations the arbiter tolerates but reports.
struct ArbiterWarnings {
  long zero_normalizer = 0;   // a class's first recorded loss was exactly 0
  long zero_denominator = 0;  // update skipped: denominator 0 even with eps
  long nonfinite_gradient = 0;

  long total() const { return zero_normalizer + zero_denominator + nonfinite_gradient; }
};

/**
 * Stabilized weight gradient: both loss deltas are normalized by the
 * class's first recorded loss and shifted by eps before taking the ratio,
 *   g = [ dL_main/main0 + eps ] / [ dL_aux/aux0 + eps ] * aux_mean_c.
 * A zero normalizer (task already solved when first observed) is replaced
 * by eps and counted; a zero denominator yields nullopt so the caller skips
 * this class for the tick.
 */
template <typename Scalar>
std::optional<Scalar> stabilized_gradient(const LossLedger<Scalar>& ledger, Index c,
                                          Scalar aux_mean_c, Scalar eps,
                                          EpsPlacement placement = EpsPlacement::both,
                                          ArbiterWarnings* warn = nullptr) {
  if (ledger.entries(c) < 2) {
    throw std::logic_error("stabilized_gradient: class needs at least 2 recorded entries");
  }
  Scalar main_ref = ledger.main0(c);
  Scalar aux_ref = ledger.aux0(c);
  if (main_ref == Scalar(0)) {
    main_ref = eps;
    if (warn) warn->zero_normalizer += 1;
  }
  if (aux_ref == Scalar(0)) {
    aux_ref = eps;
    if (warn) warn->zero_normalizer += 1;
  }
  Scalar num = ledger.main_delta(c) / main_ref;
  Scalar den = ledger.aux_delta(c) / aux_ref + eps;
  if (placement == EpsPlacement::both) num += eps;
  if (den == Scalar(0)) {
    if (warn) warn->zero_denominator += 1;
    return std::nullopt;
  }
  return num / den * aux_mean_c;
}

/// Per-class Adam moments for the weight updates. Step counters are kept
/// per class because classes can skip ticks; bias correction must use each
/// class's own update count.
template <typename Scalar>
struct WeightAdamState {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  VectorXi step;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  static WeightAdamState zeros(Index num_classes) {
    WeightAdamState st;
    st.m = VectorX<Scalar>::Zero(num_classes);
    st.v = VectorX<Scalar>::Zero(num_classes);
    st.step = VectorXi::Zero(num_classes);
    return st;
  }
};

/// Per-class gradients for one tick; g(c) is meaningful only where active.
template <typename Scalar>
struct GradSet {
  VectorX<Scalar> g;
  std::vector<bool> active;

  explicit GradSet(Index num_classes)
      : g(VectorX<Scalar>::Zero(num_classes)),
        active(static_cast<std::size_t>(num_classes), false) {}
};

/**
 * Clamped Adam step on the class weights:
 *   w_c <- max(0, w_c - alpha * m_hat / (sqrt(v_hat) + eps)).
 * Classes without a gradient this tick are untouched, moments frozen. A
 * non-finite gradient skips its class with a warning instead of poisoning
 * the moments.
 */
template <typename Scalar>
void adam_weight_step(ClassWeights<Scalar>& weights, const GradSet<Scalar>& grads,
                      WeightAdamState<Scalar>& st, Scalar alpha,
                      ArbiterWarnings* warn = nullptr,
                      std::optional<Scalar> weight_cap = std::nullopt) {
  if (alpha < Scalar(0)) throw std::invalid_argument("adam_weight_step: alpha must be >= 0");
  const Index k = weights.num_classes();
  if (grads.g.size() != k || st.m.size() != k) {
    throw std::invalid_argument("adam_weight_step: class count mismatch");
  }
  for (Index c = 0; c < k; ++c) {
    if (!grads.active[static_cast<std::size_t>(c)]) continue;
    const Scalar g = grads.g(c);
    if (!is_finite(g)) {
      if (warn) warn->nonfinite_gradient += 1;
      continue;
    }
    st.step(c) += 1;
    st.m(c) = st.beta1 * st.m(c) + (Scalar(1) - st.beta1) * g;
    st.v(c) = st.beta2 * st.v(c) + (Scalar(1) - st.beta2) * g * g;
    const Scalar m_hat = st.m(c) / (Scalar(1) - std::pow(st.beta1, Scalar(st.step(c))));
    const Scalar v_hat = st.v(c) / (Scalar(1) - std::pow(st.beta2, Scalar(st.step(c))));
    Scalar w = weights.w(c) - alpha * m_hat / (std::sqrt(v_hat) + st.eps);
    if (w < Scalar(0)) w = Scalar(0);
    if (weight_cap && w > *weight_cap) w = *weight_cap;
    weights.w(c) = w;
  }
}

template <typename Scalar>
struct ArbiterConfig {
  Scalar alpha = Scalar(0.01);
  Scalar eps = Scalar(1e-8);
  EpsPlacement placement = EpsPlacement::both;
  std::optional<Scalar> weight_cap = std::nullopt;  // off by default
};

/// One CSV-exportable row of the weight trajectory.
template <typename Scalar>
struct TickRow {
  long tick = 0;
  int class_id = 0;
  Scalar w = Scalar(0);
  std::optional<Scalar> g;
  std::optional<Scalar> main_c;
  std::optional<Scalar> aux_c;
};

/**
 * One arbiter update tick over the just-finished loss window.
 *
 * During warm-up nothing is touched: weights stay fixed and the ledger
 * stays empty, so the normalizers come from the first post-warm-up
 * observation of each class. After warm-up: record the window, then for
 * every class with at least two entries compute the stabilized gradient
 * and take the clamped Adam step.
 */
template <typename Scalar>
void arbiter_tick(ClassWeights<Scalar>& weights, LossLedger<Scalar>& ledger,
                  WeightAdamState<Scalar>& st, const PerClassLoss<Scalar>& per_class_main,
                  const PerClassLoss<Scalar>& per_class_aux, const ArbiterConfig<Scalar>& cfg,
                  bool warmup_done, ArbiterWarnings* warn = nullptr,
                  std::vector<TickRow<Scalar>>* trace = nullptr) {
  if (!warmup_done) return;
  record(ledger, per_class_main, per_class_aux);

  const Index k = weights.num_classes();
  GradSet<Scalar> grads(k);
  for (Index c = 0; c < k; ++c) {
    if (!per_class_aux.present(c) || ledger.entries(c) < 2) continue;
    if (auto g = stabilized_gradient(ledger, c, per_class_aux.values(c), cfg.eps,
                                     cfg.placement, warn)) {
      grads.g(c) = *g;
      grads.active[static_cast<std::size_t>(c)] = true;
    }
  }
  adam_weight_step(weights, grads, st, cfg.alpha, warn, cfg.weight_cap);

  if (trace) {
    for (Index c = 0; c < k; ++c) {
      TickRow<Scalar> row;
      row.tick = ledger.t;
      row.class_id = static_cast<int>(c);
      row.w = weights.w(c);
      if (grads.active[static_cast<std::size_t>(c)]) row.g = grads.g(c);
      if (per_class_main.present(c)) row.main_c = per_class_main.values(c);
      if (per_class_aux.present(c)) row.aux_c = per_class_aux.values(c);
      trace->push_back(row);
    }
  }
}

}  // namespace auxarb
