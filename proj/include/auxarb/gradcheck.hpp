#pragma once

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "auxarb/net.hpp"
#include "auxarb/types.hpp"

namespace auxarb {

/**
 * Central-difference gradient of an arbitrary scalar function of the
 * parameters. LossFn is called as loss(net) and must not retain caches
 * across calls. Parameters are restored exactly after probing.
 */
template <typename Scalar, typename LossFn>
VectorX<Scalar> finite_diff_grad(DenseNet<Scalar>& net, LossFn&& loss, Scalar h) {
  if (h <= Scalar(0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  VectorX<Scalar>& p = net.params();
  VectorX<Scalar> grad(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    const Scalar saved = p(i);
    p(i) = saved + h;
    const Scalar up = loss(net);
    p(i) = saved - h;
    const Scalar down = loss(net);
    p(i) = saved;
    grad(i) = (up - down) / (Scalar(2) * h);
  }
  return grad;
}

/// Largest elementwise relative error, with a floor so near-zero entries
/// compare absolutely.
template <typename Scalar>
Scalar max_rel_error(const VectorX<Scalar>& a, const VectorX<Scalar>& b,
                     Scalar floor = Scalar(1e-6)) {
  if (a.size() != b.size()) throw std::invalid_argument("max_rel_error: size mismatch");
  Scalar worst = Scalar(0);
  for (Index i = 0; i < a.size(); ++i) {
    const Scalar denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

}  // namespace auxarb
