#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "avm/coverage.hpp"
#include "avm/learner.hpp"

namespace avm {

/// W = [w_1..w_m] over a shared expansion-point registry with one global
/// scale (every class shrinks by the same (t-1)/t factor per step).
///
/// Coefficients are held in pair form: each atom contributes +acc to one
/// class and -acc to another, exactly as the update writes them. One step
/// moves a single atom, so the sum over classes of coefficient changes on
/// the touched point cancels identically, not just to rounding.
class MulticlassModel {
public:
    struct PairCoeff {
        std::uint32_t plus_class;   // 1-based; receives +acc
        std::uint32_t minus_class;  // receives -acc
        double acc;
    };

    MulticlassModel(KernelSpec kernel, std::uint32_t num_classes)
        : kernel_(kernel), num_classes_(num_classes) {
        if (num_classes < 2) throw std::invalid_argument("multiclass needs at least 2 classes");
    }

    std::uint32_t num_classes() const noexcept { return num_classes_; }
    const KernelSpec& kernel_spec() const noexcept { return kernel_; }

    std::uint32_t intern_point(const SparseVector& x) {
        const auto [it, inserted] = index_.try_emplace(x, static_cast<std::uint32_t>(points_.size()));
        if (inserted) {
            points_.push_back(x);
            pairs_.emplace_back();
        }
        return it->second;
    }

    /// Per-class scores w_j^T Phi(x); the kernel value of each active point
    /// is computed once and fanned out through its pair atoms.
    std::vector<double> scores(const SparseVector& x) const {
        std::vector<double> out(num_classes_, 0.0);
        for (std::size_t i = 0; i < points_.size(); ++i) {
            bool active = false;
            for (const auto& e : pairs_[i])
                if (e.acc != 0.0) {
                    active = true;
                    break;
                }
            if (!active) continue;
            const double k = kernel_eval(kernel_, points_[i], x);
            ++kernel_evals_;
            for (const auto& e : pairs_[i]) {
                out[e.plus_class - 1] += e.acc * k;
                out[e.minus_class - 1] -= e.acc * k;
            }
        }
        for (double& v : out) v *= scale_;
        return out;
    }

    /// argmax_j w_j^T Phi(x), ties to the lowest class index (1-based).
    std::uint32_t predict_class(const SparseVector& x) const {
        const auto s = scores(x);
        std::size_t best = 0;
        for (std::size_t j = 1; j < s.size(); ++j)
            if (s[j] > s[best]) best = j;
        return static_cast<std::uint32_t>(best + 1);
    }

    /// w_y <- shrink w_y - step Phi(e) and w_z <- shrink w_z + step Phi(e):
    /// one atom of magnitude step/scale oriented from y toward z.
    void apply_update(double shrink, double step, std::uint32_t y_class, std::uint32_t z_class,
                      std::uint32_t point_index) {
        if (shrink == 0.0) {
            for (auto& row : pairs_)
                for (auto& e : row) e.acc = 0.0;
            scale_ = 1.0;
        } else {
            scale_ *= shrink;
        }
        if (step != 0.0) {
            const double v = step / scale_;
            auto& row = pairs_.at(point_index);
            bool applied = false;
            for (auto& e : row) {
                if (e.plus_class == z_class && e.minus_class == y_class) {
                    e.acc += v;
                    applied = true;
                    break;
                }
                if (e.plus_class == y_class && e.minus_class == z_class) {
                    e.acc -= v;
                    applied = true;
                    break;
                }
            }
            if (!applied) row.push_back({z_class, y_class, v});
            if (std::abs(scale_) < 1e-8) fold_scale();
        }
    }

    void shrink_only(double shrink) { apply_update(shrink, 0.0, 1, 2, 0); }

    std::size_t point_count() const noexcept { return points_.size(); }
    const SparseVector& point(std::uint32_t i) const { return points_.at(i); }
    std::span<const PairCoeff> pair_coeffs(std::uint32_t point_index) const {
        return pairs_.at(point_index);
    }
    double scale() const noexcept { return scale_; }

    /// Net coefficient of one class at one point.
    double coeff(std::uint32_t class_index, std::uint32_t point_index) const {
        double acc = 0.0;
        for (const auto& e : pairs_.at(point_index)) {
            if (e.plus_class == class_index) acc += e.acc;
            if (e.minus_class == class_index) acc -= e.acc;
        }
        return acc;
    }
    double effective_coeff(std::uint32_t class_index, std::uint32_t point_index) const {
        return scale_ * coeff(class_index, point_index);
    }

    /// Points carrying a nonzero net coefficient in some class.
    std::size_t support_size() const {
        std::vector<double> net(num_classes_);
        std::size_t n = 0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            std::fill(net.begin(), net.end(), 0.0);
            for (const auto& e : pairs_[i]) {
                net[e.plus_class - 1] += e.acc;
                net[e.minus_class - 1] -= e.acc;
            }
            for (double v : net)
                if (v != 0.0) {
                    ++n;
                    break;
                }
        }
        return n;
    }

    std::uint64_t kernel_evals() const noexcept { return kernel_evals_; }

    void set_pair_coeffs(std::vector<std::vector<PairCoeff>> pairs) {
        if (pairs.size() != points_.size()) throw std::invalid_argument("pair table size mismatch");
        pairs_ = std::move(pairs);
        scale_ = 1.0;
    }

private:
    void fold_scale() {
        for (auto& row : pairs_)
            for (auto& e : row) e.acc *= scale_;
        scale_ = 1.0;
    }

    KernelSpec kernel_;
    std::uint32_t num_classes_;
    double scale_ = 1.0;
    std::vector<SparseVector> points_;
    std::vector<std::vector<PairCoeff>> pairs_;
    std::unordered_map<SparseVector, std::uint32_t, SparseVectorHash> index_;
    mutable std::uint64_t kernel_evals_ = 0;
};

/// Running sums of the per-iterate effective pair atoms; atoms are created
/// append-only per point, so (point, slot) identifies one atom for the whole
/// run. Averaging in pair space keeps the class-sum cancellation structural
/// in the averaged model too.
class MulticlassAverage {
public:
    explicit MulticlassAverage(std::uint64_t start_iteration) : start_(start_iteration) {}

    void accumulate(const MulticlassModel& m, std::uint64_t t) {
        if (t < start_) return;
        if (sums_.size() < m.point_count()) sums_.resize(m.point_count());
        for (std::uint32_t p = 0; p < m.point_count(); ++p) {
            const auto atoms = m.pair_coeffs(p);
            auto& row = sums_[p];
            for (std::size_t k = 0; k < atoms.size(); ++k) {
                if (row.size() <= k) row.push_back({atoms[k].plus_class, atoms[k].minus_class, 0.0});
                if (atoms[k].acc != 0.0) row[k].acc += m.scale() * atoms[k].acc;
            }
        }
        ++count_;
    }

    MulticlassModel materialize(const MulticlassModel& base) const {
        MulticlassModel out(base.kernel_spec(), base.num_classes());
        for (std::uint32_t i = 0; i < base.point_count(); ++i) out.intern_point(base.point(i));
        std::vector<std::vector<MulticlassModel::PairCoeff>> mean(base.point_count());
        for (std::size_t p = 0; p < sums_.size(); ++p) {
            mean[p] = sums_[p];
            for (auto& e : mean[p]) e.acc = count_ ? e.acc / static_cast<double>(count_) : 0.0;
        }
        out.set_pair_coeffs(std::move(mean));
        return out;
    }

private:
    std::uint64_t start_;
    std::uint64_t count_ = 0;
    std::vector<std::vector<MulticlassModel::PairCoeff>> sums_;
};

/// Multiclass driver: max-margin update against the strongest competitor,
/// one coverage shared across all classes. When the approximation decision
/// fires, the cell lookup happens whether or not the margin loss is active,
/// so the coverage evolves identically for any class count. Only the hinge
/// and logistic margin losses apply, and there is no ball projection.
class MulticlassLearner {
public:
    MulticlassLearner(const LearnerConfig& cfg, std::uint32_t num_classes, std::uint32_t dim,
                      std::uint64_t horizon = 0)
        : cfg_(cfg),
          model_(cfg.kernel, num_classes),
          coverage_(cfg.geometry, cfg.delta, std::max<std::uint32_t>(dim, 1)),
          schedule_rng_(Rng::derive(cfg.seed, /*stream=*/0)) {
        cfg_.validate();
        if (cfg.loss.kind != LossKind::hinge && cfg.loss.kind != LossKind::logistic)
            throw std::invalid_argument("multiclass supports hinge and logit losses only");
        if (cfg_.output.kind == OutputKind::average) {
            avg_.emplace(1);
        } else if (cfg_.output.kind == OutputKind::suffix_average) {
            if (horizon == 0)
                throw std::invalid_argument("suffix-average output requires a known horizon");
            avg_.emplace(OnlineLearner::suffix_start(cfg_.output.alpha, horizon));
        }
    }

    std::uint32_t predict_class(const SparseVector& x) const { return model_.predict_class(x); }

    void step(const SparseVector& x, std::uint32_t y) {
        if (y == 0 || y > model_.num_classes())
            throw std::invalid_argument("class label " + std::to_string(y) + " out of range 1.." +
                                        std::to_string(model_.num_classes()));
        if (avg_) avg_->accumulate(model_, t_);

        const auto s = model_.scores(x);
        // strongest competitor z = argmax_{j != y} score, ties to lowest index
        std::size_t z = y == 1 ? 1 : 0;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (j != y - 1 && s[j] > s[z]) z = j;
        const double a = s[y - 1] - s[z];

        const double lp = cfg_.loss.kind == LossKind::hinge ? (a < 1.0 ? -1.0 : 0.0)
                                                            : -1.0 / (1.0 + std::exp(a));

        const std::uint64_t t = t_;
        const double shrink = static_cast<double>(t - 1) / static_cast<double>(t);

        std::optional<std::uint32_t> cell;
        if (draw_approximation(t)) cell = coverage_.assign(x).cell_index;

        if (lp == 0.0) {
            model_.shrink_only(shrink);
        } else {
            const double eta = 1.0 / (cfg_.lambda * static_cast<double>(t));
            std::uint32_t point;
            if (cell) {
                if (cell_to_point_.size() < coverage_.size()) cell_to_point_.resize(coverage_.size(), -1);
                std::int64_t mp = cell_to_point_[*cell - 1];
                if (mp < 0) {
                    mp = model_.intern_point(coverage_.core_point(*cell));
                    cell_to_point_[*cell - 1] = mp;
                }
                point = static_cast<std::uint32_t>(mp);
            } else {
                point = model_.intern_point(x);
            }
            model_.apply_update(shrink, eta * lp, y, static_cast<std::uint32_t>(z + 1), point);
        }
        ++t_;
    }

    MulticlassModel output_model() const {
        if (!avg_) return model_;
        return avg_->materialize(model_);
    }

    const MulticlassModel& model() const noexcept { return model_; }
    const Coverage& coverage() const noexcept { return coverage_; }
    std::uint64_t steps_done() const noexcept { return t_ - 1; }

private:
    bool draw_approximation(std::uint64_t t) {
        const double p = schedule_prob(cfg_.schedule_beta, cfg_.schedule_rho, t);
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return schedule_rng_.uniform() < p;
    }

    LearnerConfig cfg_;
    MulticlassModel model_;
    Coverage coverage_;
    std::optional<MulticlassAverage> avg_;
    std::vector<std::int64_t> cell_to_point_;
    Rng schedule_rng_;
    std::uint64_t t_ = 1;
};

inline double evaluate_error_mc(const MulticlassModel& m, std::span<const Sample> data) {
    if (data.empty()) throw std::invalid_argument("evaluation over an empty dataset");
    std::uint64_t mistakes = 0;
    for (const auto& s : data)
        mistakes += (m.predict_class(s.x) != static_cast<std::uint32_t>(s.label));
    return static_cast<double>(mistakes) / static_cast<double>(data.size());
}

struct MulticlassRunResult {
    MulticlassModel output;
    MetricsTrace trace;
    double final_metric = 0.0;
    std::uint64_t steps = 0;
};

inline MulticlassRunResult run_stream_mc(const LearnerConfig& cfg, std::span<const Sample> stream,
                                         std::uint32_t num_classes, std::uint32_t dim,
                                         const TraceOptions& topt = {}) {
    const std::uint64_t horizon = stream.size();
    MulticlassLearner learner(cfg, num_classes, dim, horizon);
    MetricsAccumulator acc(Task::multiclass);
    detail::TraceBuilder tb(horizon, topt);

    MetricsTrace trace;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const Sample& s = stream[t - 1];
        acc.update(static_cast<double>(learner.predict_class(s.x)), s.label);
        learner.step(s.x, static_cast<std::uint32_t>(s.label));
        tb.observe(trace, t, acc.current(), learner.model().support_size(),
                   learner.coverage().size(), learner.model().kernel_evals());
    }
    if (horizon == 0) trace.summary = Checkpoint{};

    return {learner.output_model(), std::move(trace), acc.current(), horizon};
}

inline MulticlassRunResult run_batch_mc(const LearnerConfig& cfg, std::span<const Sample> train,
                                        std::span<const Sample> test, std::uint64_t iters,
                                        std::uint32_t num_classes, std::uint32_t dim,
                                        const TraceOptions& topt = {}) {
    if (train.empty()) throw DataError("batch training set is empty");
    if (test.empty()) throw DataError("batch test set is empty");
    if (iters == 0) throw std::invalid_argument("batch iteration count must be >= 1");

    MulticlassLearner learner(cfg, num_classes, dim, iters);
    MetricsAccumulator acc(Task::multiclass);
    detail::TraceBuilder tb(iters, topt);
    Rng data_rng = Rng::derive(cfg.seed, /*stream=*/2);

    MetricsTrace trace;
    for (std::uint64_t t = 1; t <= iters; ++t) {
        const Sample& s = train[data_rng.below(train.size())];
        acc.update(static_cast<double>(learner.predict_class(s.x)), s.label);
        learner.step(s.x, static_cast<std::uint32_t>(s.label));
        tb.observe(trace, t, acc.current(), learner.model().support_size(),
                   learner.coverage().size(), learner.model().kernel_evals());
    }

    MulticlassRunResult out{learner.output_model(), std::move(trace), 0.0, iters};
    out.final_metric = evaluate_error_mc(out.output, test);
    out.trace.summary.metric = out.final_metric;
    return out;
}

}  // namespace avm
