#pragma once

#include <cmath>
#include <stdexcept>

#include "auxarb/types.hpp"

namespace auxarb {

/// Per-parameter Adam moments for the model optimizer.
template <typename Scalar>
struct AdamState {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  long step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  static AdamState zeros(Index n) {
    AdamState st;
    st.m = VectorX<Scalar>::Zero(n);
    st.v = VectorX<Scalar>::Zero(n);
    return st;
  }
};

/// One Adam update with bias correction. Non-finite gradients abort the
/// step: a poisoned moment estimate would silently corrupt the whole run.
template <typename Scalar>
void adam_step(VectorX<Scalar>& params, const VectorX<Scalar>& grads,
               AdamState<Scalar>& st, Scalar lr) {
  if (lr <= Scalar(0)) throw std::invalid_argument("adam_step: lr must be > 0");
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw std::invalid_argument("adam_step: size mismatch between params, grads and state");
  }
  if (!all_finite(grads)) {
    throw std::runtime_error("adam_step: non-finite gradient; training halted");
  }
  st.step += 1;
  st.m = st.beta1 * st.m + (Scalar(1) - st.beta1) * grads;
  st.v = st.beta2 * st.v + (Scalar(1) - st.beta2) * grads.cwiseProduct(grads);
  const Scalar c1 = Scalar(1) - std::pow(st.beta1, Scalar(st.step));
  const Scalar c2 = Scalar(1) - std::pow(st.beta2, Scalar(st.step));
  params.array() -=
      lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
}

/// Plain gradient step, available as an alternative model optimizer.
template <typename Scalar>
void sgd_step(VectorX<Scalar>& params, const VectorX<Scalar>& grads, Scalar lr) {
  if (lr <= Scalar(0)) throw std::invalid_argument("sgd_step: lr must be > 0");
  if (!all_finite(grads)) {
    throw std::runtime_error("sgd_step: non-finite gradient; training halted");
  }
  params -= lr * grads;
}

}  // namespace auxarb
