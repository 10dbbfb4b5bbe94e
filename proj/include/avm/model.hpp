#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "avm/kernel.hpp"
#include "avm/sparse_vector.hpp"

namespace avm {

/// Kernel expansion w = scale * sum_i coeff[i] * Phi(point[i]).
///
/// Expansion points are interned: identical vectors share one slot, so
/// repeated hits on the same coverage core (or the same raw instance)
/// accumulate in a single coefficient. The (1 - eta*lambda) shrink of the SGD
/// update is a single multiply on the global scale, and ||w||^2 is maintained
/// incrementally so the ball projection costs O(1) on top of the prediction
/// already in hand.
class KernelModel {
public:
    explicit KernelModel(KernelSpec kernel = {}) : kernel_(kernel) {}

    /// Index of x in the expansion-point registry, adding it if unseen.
    /// Dedup is by exact content (indices and value bit patterns).
    std::uint32_t intern_point(const SparseVector& x) {
        const auto [it, inserted] = index_.try_emplace(x, static_cast<std::uint32_t>(points_.size()));
        if (inserted) {
            points_.push_back(x);
            coeffs_.push_back(0.0);
        }
        return it->second;
    }

    /// w^T Phi(x) = scale * sum_i coeff[i] * K(point[i], x); one kernel
    /// evaluation per support point.
    double predict(const SparseVector& x) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (coeffs_[i] == 0.0) continue;
            acc += coeffs_[i] * kernel_eval(kernel_, points_[i], x);
            ++kernel_evals_;
        }
        return scale_ * acc;
    }

    /// w <- shrink * w - step * Phi(point), where shrink = 1 - eta*lambda and
    /// step = eta*alpha. `f_pre` must be the prediction of the *current* w at
    /// that point; it feeds the incremental norm
    ///   ||w'||^2 = shrink^2 ||w||^2 - 2 shrink step f_pre + step^2.
    /// At shrink == 0 (the t = 1 step of the 1/(lambda t) rate) every
    /// coefficient is flushed and the scale resets to 1, so the gradient term
    /// lands exactly.
    void apply_update(double shrink, double step, std::uint32_t point_index, double f_pre) {
        if (step != 0.0 && point_index >= coeffs_.size())
            throw std::out_of_range("expansion point index out of range");
        const double new_sq = shrink * shrink * sq_norm_ - 2.0 * shrink * step * f_pre + step * step;
        if (shrink == 0.0) {
            std::fill(coeffs_.begin(), coeffs_.end(), 0.0);
            scale_ = 1.0;
        } else {
            scale_ *= shrink;
        }
        if (step != 0.0) {
            coeffs_[point_index] -= step / scale_;
            if (std::abs(scale_) < kScaleFoldThreshold) fold_scale();
        }
        sq_norm_ = new_sq > 0.0 ? new_sq : 0.0;
    }

    /// Pure shrink (alpha = 0): only the scale moves, the support set is
    /// untouched.
    void shrink_only(double shrink) { apply_update(shrink, 0.0, 0, 0.0); }

    /// Project onto the ball B(0, radius): a no-op when already inside,
    /// otherwise one scale multiply. Idempotent.
    void project_ball(double radius) {
        if (!(radius >= 0.0)) throw std::invalid_argument("projection radius must be >= 0");
        const double r_sq = radius * radius;
        if (sq_norm_ <= r_sq) return;
        scale_ *= radius / std::sqrt(sq_norm_);
        sq_norm_ = r_sq;
    }

    double squared_norm() const noexcept { return sq_norm_; }
    double norm() const noexcept { return std::sqrt(sq_norm_); }
    double scale() const noexcept { return scale_; }
    const KernelSpec& kernel() const noexcept { return kernel_; }

    std::size_t point_count() const noexcept { return points_.size(); }
    const SparseVector& point(std::uint32_t i) const { return points_.at(i); }
    double coeff(std::uint32_t i) const { return coeffs_.at(i); }
    double effective_coeff(std::uint32_t i) const { return scale_ * coeffs_.at(i); }

    /// Model size S_t: expansion points with nonzero coefficient.
    std::size_t support_size() const noexcept {
        std::size_t n = 0;
        for (double c : coeffs_) n += (c != 0.0);
        return n;
    }

    std::uint64_t kernel_evals() const noexcept { return kernel_evals_; }

    /// Rebuild the cached ||w||^2 from the Gram matrix (O(S^2) kernel
    /// evaluations). Used after bulk coefficient edits such as snapshot loads
    /// or average materialization.
    void recompute_norm() {
        std::vector<std::size_t> sup;
        for (std::size_t i = 0; i < points_.size(); ++i)
            if (coeffs_[i] != 0.0) sup.push_back(i);
        double acc = 0.0;
        for (std::size_t a = 0; a < sup.size(); ++a) {
            acc += coeffs_[sup[a]] * coeffs_[sup[a]];
            ++kernel_evals_;
            for (std::size_t b = a + 1; b < sup.size(); ++b) {
                acc += 2.0 * coeffs_[sup[a]] * coeffs_[sup[b]] *
                       kernel_eval(kernel_, points_[sup[a]], points_[sup[b]]);
                ++kernel_evals_;
            }
        }
        sq_norm_ = std::max(scale_ * scale_ * acc, 0.0);
    }

    /// Overwrite the coefficients with externally computed effective values
    /// (scale folds to 1); the norm cache is rebuilt.
    void set_effective_coeffs(const std::vector<double>& effective) {
        if (effective.size() != coeffs_.size())
            throw std::invalid_argument("coefficient vector size mismatch");
        coeffs_ = effective;
        scale_ = 1.0;
        recompute_norm();
    }

private:
    static constexpr double kScaleFoldThreshold = 1e-8;

    void fold_scale() {
        for (double& c : coeffs_) c *= scale_;
        scale_ = 1.0;
    }

    KernelSpec kernel_;
    double scale_ = 1.0;
    double sq_norm_ = 0.0;
    std::vector<SparseVector> points_;
    std::vector<double> coeffs_;
    std::unordered_map<SparseVector, std::uint32_t, SparseVectorHash> index_;
    mutable std::uint64_t kernel_evals_ = 0;
};

/// Running sum of per-iterate effective coefficient vectors, divided out at
/// materialization; equals the naive mean bit-for-bit. Iterates before
/// start_iteration are ignored (start 1 = full average, ceil((1-a)T)+1 = the
/// a-suffix average).
class AveragedModel {
public:
    explicit AveragedModel(std::uint64_t start_iteration = 1) : start_(start_iteration) {
        if (start_iteration == 0) throw std::invalid_argument("start_iteration is 1-based");
    }

    /// Fold in iterate w_t. Points absent from earlier iterates carry an
    /// implicit historical coefficient of 0, so a plain resize is exact.
    void accumulate(const KernelModel& m, std::uint64_t t) {
        if (t < start_) return;
        if (sums_.size() < m.point_count()) sums_.resize(m.point_count(), 0.0);
        for (std::uint32_t i = 0; i < m.point_count(); ++i) {
            const double c = m.coeff(i);
            if (c != 0.0) sums_[i] += m.scale() * c;
        }
        ++count_;
    }

    std::uint64_t count() const noexcept { return count_; }
    std::uint64_t start_iteration() const noexcept { return start_; }

    std::vector<double> mean_coeffs(std::size_t point_count) const {
        std::vector<double> mean(point_count, 0.0);
        if (count_ == 0) return mean;
        for (std::size_t i = 0; i < sums_.size() && i < point_count; ++i)
            mean[i] = sums_[i] / static_cast<double>(count_);
        return mean;
    }

    /// Average as a standalone model over `base`'s expansion points.
    KernelModel materialize(const KernelModel& base) const {
        KernelModel out(base.kernel());
        for (std::uint32_t i = 0; i < base.point_count(); ++i) out.intern_point(base.point(i));
        out.set_effective_coeffs(mean_coeffs(base.point_count()));
        return out;
    }

private:
    std::uint64_t start_;
    std::uint64_t count_ = 0;
    std::vector<double> sums_;
};

}  // namespace avm
