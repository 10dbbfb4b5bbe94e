#pragma once

#include <cmath>
#include <stdexcept>

#include "avm/sparse_vector.hpp"

namespace avm {

enum class KernelKind { gaussian };

/// Isotropic p.s.d. kernel K(x,x') = k(||x-x'||^2) with k(0) = 1, so every
/// feature-space image has unit norm. Only the Gaussian member ships; the
/// enumeration leaves room for other isotropic k with k(0)=1 and monotone
/// decrease.
struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double gamma = 1.0;  // RBF bandwidth, feature-units^-2

    void validate() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("kernel gamma must be > 0");
    }
};

/// k(s) for squared input-space distance s.
inline double kernel_from_sqdist(const KernelSpec& spec, double sqdist) noexcept {
    return std::exp(-spec.gamma * sqdist);
}

/// K(x,x') = exp(-gamma ||x-x'||^2). The squared distance is evaluated once,
/// making the result exactly symmetric and exactly 1 when x == x'.
inline double kernel_eval(const KernelSpec& spec, const SparseVector& x, const SparseVector& x2) noexcept {
    return kernel_from_sqdist(spec, squared_distance(x, x2));
}

/// Induced feature-space cell diameter for an input-space diameter delta:
/// sqrt(2 (1 - k(delta^2))). Monotone increasing in delta, tends to 0 with
/// delta, and is always below sqrt(2).
inline double delta_phi(const KernelSpec& spec, double delta) {
    if (delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
    return std::sqrt(2.0 * (1.0 - kernel_from_sqdist(spec, delta * delta)));
}

}  // namespace avm
