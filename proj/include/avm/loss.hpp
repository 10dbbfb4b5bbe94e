#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace avm {

enum class LossKind { hinge, logistic, smooth_hinge, l1, l2, eps_insensitive };

inline const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::hinge: return "hinge";
        case LossKind::logistic: return "logit";
        case LossKind::smooth_hinge: return "smooth-hinge";
        case LossKind::l1: return "l1";
        case LossKind::l2: return "l2";
        case LossKind::eps_insensitive: return "eps-insensitive";
    }
    return "?";
}

/// Growth constants (A, B) with ||l'(w;x,y)|| <= A||w||^(1/2) + B. Stored for
/// documentation and bound tests; never used by the update rule.
struct GrowthBound {
    double A;
    double B;
};

/// The six convex losses. Every member differentiates along Phi(x), so the
/// (sub)gradient is fully described by the scalar returned from grad_scalar:
/// l'(w;x,y) = alpha * Phi(x).
struct LossSpec {
    LossKind kind = LossKind::hinge;
    double tau = 0.5;      // smooth-hinge smoothness
    double epsilon = 0.1;  // eps-insensitive tube half-width

    bool classification() const noexcept {
        return kind == LossKind::hinge || kind == LossKind::logistic || kind == LossKind::smooth_hinge;
    }

    void validate() const {
        if (kind == LossKind::smooth_hinge && !(tau > 0.0))
            throw std::invalid_argument("smooth-hinge tau must be > 0");
        if (kind == LossKind::eps_insensitive && !(epsilon >= 0.0))
            throw std::invalid_argument("eps-insensitive epsilon must be >= 0");
    }

    /// Classification kinds accept labels in {-1,+1} only.
    void check_label(double y) const {
        if (classification() && y != 1.0 && y != -1.0)
            throw std::invalid_argument(std::string(loss_name(kind)) +
                                        " loss requires labels in {-1,+1}, got " + std::to_string(y));
    }

    double value(double f, double y) const {
        switch (kind) {
            case LossKind::hinge: {
                const double m = 1.0 - y * f;
                return m > 0.0 ? m : 0.0;
            }
            case LossKind::logistic: {
                // log(1 + e^{-yf}) without forming e^{+-700}
                const double m = y * f;
                return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
            }
            case LossKind::smooth_hinge: {
                const double m = y * f;
                if (m > 1.0) return 0.0;
                if (m < 1.0 - tau) return 1.0 - m - tau / 2.0;
                const double u = 1.0 - m;
                return u * u / (2.0 * tau);
            }
            case LossKind::l1: return std::abs(y - f);
            case LossKind::l2: {
                const double r = y - f;
                return 0.5 * r * r;
            }
            case LossKind::eps_insensitive: {
                const double r = std::abs(y - f) - epsilon;
                return r > 0.0 ? r : 0.0;
            }
        }
        return 0.0;
    }

    /// alpha with l'(w;x,y) = alpha * Phi(x), evaluated at f = w^T Phi(x).
    /// Kinks take the indicator conventions: hinge is active at yf = 1,
    /// sign(0) = 0 for l1 / eps-insensitive.
    double grad_scalar(double f, double y) const {
        switch (kind) {
            case LossKind::hinge: return y * f <= 1.0 ? -y : 0.0;
            case LossKind::logistic: return -y / (1.0 + std::exp(y * f));
            case LossKind::smooth_hinge: {
                const double m = y * f;
                if (m < 1.0 - tau) return -y;
                if (m <= 1.0) return (m - 1.0) * y / tau;
                return 0.0;
            }
            case LossKind::l1: return f > y ? 1.0 : (f < y ? -1.0 : 0.0);
            case LossKind::l2: return f - y;
            case LossKind::eps_insensitive: {
                if (std::abs(y - f) <= epsilon) return 0.0;
                return f > y ? 1.0 : -1.0;
            }
        }
        return 0.0;
    }

    GrowthBound growth(double lambda, double y_max) const {
        switch (kind) {
            case LossKind::smooth_hinge: return {0.0, 2.0};
            case LossKind::l2: {
                const double A = lambda <= 1.0 ? std::sqrt(y_max) * std::pow(lambda, -0.25)
                                               : std::sqrt(y_max / (lambda - 1.0));
                return {A, y_max};
            }
            default: return {0.0, 1.0};
        }
    }
};

inline LossKind loss_kind_from_name(const std::string& name) {
    if (name == "hinge") return LossKind::hinge;
    if (name == "logit") return LossKind::logistic;
    if (name == "smooth-hinge") return LossKind::smooth_hinge;
    if (name == "l1") return LossKind::l1;
    if (name == "l2") return LossKind::l2;
    if (name == "eps-insensitive") return LossKind::eps_insensitive;
    throw std::invalid_argument("unknown loss: " + name);
}

}  // namespace avm
