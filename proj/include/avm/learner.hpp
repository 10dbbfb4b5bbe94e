#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "avm/coverage.hpp"
#include "avm/data.hpp"
#include "avm/kernel.hpp"
#include "avm/loss.hpp"
#include "avm/metrics.hpp"
#include "avm/model.hpp"
#include "avm/rng.hpp"

namespace avm {

/// Approximation probability p_t = max(0, 1 - beta/t^rho). beta = 0 always
/// approximates, beta = +inf never does.
inline double schedule_prob(double beta, double rho, std::uint64_t t) {
    if (beta == 0.0) return 1.0;
    const double tp = rho == 1.0 ? static_cast<double>(t) : std::pow(static_cast<double>(t), rho);
    const double p = 1.0 - beta / tp;
    return p > 0.0 ? p : 0.0;
}

enum class Algorithm {
    avm,  // snap updates to coverage core points per the schedule
    sgd   // unapproximated baseline: every instance is its own expansion point
};

enum class OutputKind { final_iterate, average, suffix_average };

struct OutputMode {
    OutputKind kind = OutputKind::final_iterate;
    double alpha = 0.5;  // suffix fraction, only for suffix_average
};

struct YMaxPolicy {
    bool tracked = true;  // running max |y|; otherwise the fixed value below
    double fixed = 1.0;
};

struct LearnerConfig {
    double lambda = 1.0;
    LossSpec loss;
    KernelSpec kernel;
    CellGeometry geometry = CellGeometry::sphere;
    double delta = 1.0;
    double schedule_beta = 0.0;  // may be +inf
    double schedule_rho = 1.0;
    OutputMode output;
    std::uint64_t seed = 0;
    YMaxPolicy y_max;
    Algorithm algorithm = Algorithm::avm;

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
        if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
        if (!(schedule_beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
        if (!(schedule_rho > 0.0)) throw std::invalid_argument("rho must be > 0");
        if (output.kind == OutputKind::suffix_average && !(output.alpha > 0.0 && output.alpha < 1.0))
            throw std::invalid_argument("suffix alpha must be in (0,1)");
        if (!y_max.tracked && !(y_max.fixed >= 0.0))
            throw std::invalid_argument("fixed y_max must be >= 0");
        kernel.validate();
        loss.validate();
    }
};

/// One online learner over one stream: the SGD baseline and the
/// coverage-approximated variant share this driver, differing only in which
/// expansion point the gradient term lands on.
///
/// Per step t (learning rate 1/(lambda t)):
///   - the shrink factor 1 - eta_t*lambda is formed as the exact rational
///     (t-1)/t, so the t = 1 step takes the coefficient-flush path exactly;
///   - the gradient scalar is evaluated at the true instance, only the
///     expansion point is approximated;
///   - a zero gradient scalar degenerates to the pure shrink: no Bernoulli
///     draw, no cell lookup, no support-set change, so with beta = 0 every
///     coverage cell ever created carries a support coefficient;
///   - the Bernoulli approximation decision consumes one uniform draw only
///     when 0 < p_t < 1, which keeps the beta = +inf run draw-for-draw
///     identical to the baseline under a shared seed;
///   - with the l2 loss and lambda <= 1 the iterate is projected onto
///     B(0, y_max / sqrt(lambda)) after the update.
class OnlineLearner {
public:
    /// `horizon` (total step count T) is required for the suffix-average
    /// output; pass 0 when unknown.
    OnlineLearner(const LearnerConfig& cfg, std::uint32_t dim, std::uint64_t horizon = 0)
        : cfg_(cfg),
          model_(cfg.kernel),
          coverage_(cfg.geometry, cfg.delta, std::max<std::uint32_t>(dim, 1)),
          schedule_rng_(Rng::derive(cfg.seed, /*stream=*/0)) {
        cfg_.validate();
        if (cfg_.output.kind == OutputKind::average) {
            avg_.emplace(1);
        } else if (cfg_.output.kind == OutputKind::suffix_average) {
            if (horizon == 0)
                throw std::invalid_argument("suffix-average output requires a known horizon");
            avg_.emplace(suffix_start(cfg_.output.alpha, horizon));
        }
    }

    static std::uint64_t suffix_start(double alpha, std::uint64_t horizon) {
        // ceil((1-alpha)T) + 1, with a relative nudge so exact integers do
        // not round up from representation error
        const double u = (1.0 - alpha) * static_cast<double>(horizon);
        const double c = std::ceil(u - 1e-9 * std::max(1.0, u));
        return static_cast<std::uint64_t>(c < 0.0 ? 0.0 : c) + 1;
    }

    double predict_raw(const SparseVector& x) const { return model_.predict(x); }

    void step(const SparseVector& x, double y) { step_with_prediction(x, y, model_.predict(x)); }

    /// `f` must be this learner's prediction of the current model at x
    /// (callers that already predicted for metrics pass it through to avoid
    /// a second O(S) pass).
    void step_with_prediction(const SparseVector& x, double y, double f) {
        cfg_.loss.check_label(y);
        if (avg_) avg_->accumulate(model_, t_);
        y_max_seen_ = std::max(y_max_seen_, std::abs(y));

        const std::uint64_t t = t_;
        const double shrink = static_cast<double>(t - 1) / static_cast<double>(t);
        const double alpha = cfg_.loss.grad_scalar(f, y);

        if (alpha == 0.0) {
            model_.shrink_only(shrink);
        } else {
            const double eta = 1.0 / (cfg_.lambda * static_cast<double>(t));
            std::uint32_t point;
            double f_pre = f;
            if (cfg_.algorithm == Algorithm::avm && draw_approximation(t)) {
                const auto asg = coverage_.assign(x);
                if (cell_to_point_.size() < coverage_.size()) cell_to_point_.resize(coverage_.size(), -1);
                std::int64_t mp = cell_to_point_[asg.cell_index - 1];
                const SparseVector& core = coverage_.core_point(asg.cell_index);
                if (mp < 0) {
                    mp = model_.intern_point(core);
                    cell_to_point_[asg.cell_index - 1] = mp;
                }
                point = static_cast<std::uint32_t>(mp);
                if (!asg.is_new && !(core == x)) f_pre = model_.predict(core);
            } else {
                point = model_.intern_point(x);
            }
            model_.apply_update(shrink, eta * alpha, point, f_pre);
        }

        if (cfg_.algorithm == Algorithm::avm && cfg_.loss.kind == LossKind::l2 && cfg_.lambda <= 1.0)
            model_.project_ball(projection_y_max() / std::sqrt(cfg_.lambda));

        ++t_;
    }

    /// Configured output: the last iterate w_{T+1}, the running average, or
    /// the suffix average.
    KernelModel output_model() const {
        if (!avg_) return model_;
        return avg_->materialize(model_);
    }

    const KernelModel& model() const noexcept { return model_; }
    const Coverage& coverage() const noexcept { return coverage_; }
    std::uint64_t steps_done() const noexcept { return t_ - 1; }
    double y_max_seen() const noexcept { return y_max_seen_; }
    const LearnerConfig& config() const noexcept { return cfg_; }

private:
    bool draw_approximation(std::uint64_t t) {
        const double p = schedule_prob(cfg_.schedule_beta, cfg_.schedule_rho, t);
        if (p >= 1.0) return true;
        if (p <= 0.0) return false;
        return schedule_rng_.uniform() < p;
    }

    double projection_y_max() const noexcept {
        return cfg_.y_max.tracked ? y_max_seen_ : cfg_.y_max.fixed;
    }

    LearnerConfig cfg_;
    KernelModel model_;
    Coverage coverage_;
    std::optional<AveragedModel> avg_;
    std::vector<std::int64_t> cell_to_point_;
    Rng schedule_rng_;
    std::uint64_t t_ = 1;
    double y_max_seen_ = 0.0;
};

/// Batch objective f(w) = (lambda/2)||w||^2 + mean loss over the data.
inline double objective(const KernelModel& m, double lambda, const LossSpec& loss,
                        std::span<const Sample> data) {
    if (data.empty()) throw std::invalid_argument("objective over an empty dataset");
    double total = 0.0;
    for (const auto& s : data) total += loss.value(m.predict(s.x), s.label);
    return 0.5 * lambda * m.squared_norm() + total / static_cast<double>(data.size());
}

/// Mistake fraction (binary, sign with sign(0) = +1) or RMSE (regression) of
/// a fixed model over a labeled set.
inline double evaluate_error(const KernelModel& m, std::span<const Sample> data, Task task) {
    if (data.empty()) throw std::invalid_argument("evaluation over an empty dataset");
    if (task == Task::regression) {
        double acc = 0.0;
        for (const auto& s : data) {
            const double r = m.predict(s.x) - s.label;
            acc += r * r;
        }
        return std::sqrt(acc / static_cast<double>(data.size()));
    }
    std::uint64_t mistakes = 0;
    for (const auto& s : data) mistakes += (sign_prediction(m.predict(s.x)) != s.label);
    return static_cast<double>(mistakes) / static_cast<double>(data.size());
}

struct TraceOptions {
    std::uint64_t checkpoint_every = 0;  // 0: ceil(T/100)
};

struct RunResult {
    KernelModel output;
    MetricsTrace trace;
    double final_metric = 0.0;  // cumulative online metric; test error for batch runs
    std::uint64_t steps = 0;
};

namespace detail {

class TraceBuilder {
public:
    TraceBuilder(std::uint64_t horizon, const TraceOptions& opt)
        : every_(opt.checkpoint_every ? opt.checkpoint_every
                                      : std::max<std::uint64_t>(1, (horizon + 99) / 100)),
          horizon_(horizon),
          start_(std::chrono::steady_clock::now()) {}

    void observe(MetricsTrace& trace, std::uint64_t t, double metric, std::uint64_t model_size,
                 std::uint64_t cells, std::uint64_t kevals) const {
        if (t % every_ != 0 && t != horizon_) return;
        Checkpoint c{t, metric, model_size, cells, elapsed(), kevals};
        if (t == horizon_)
            trace.summary = c;
        else
            trace.checkpoints.push_back(c);
    }

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::uint64_t every_;
    std::uint64_t horizon_;
    std::chrono::steady_clock::time_point start_;
};

inline void check_stream_label(const LearnerConfig& cfg, const Sample& s) {
    if (cfg.loss.classification() && s.label != 1.0 && s.label != -1.0)
        throw DataError("line " + std::to_string(s.line_no) + ": label " + std::to_string(s.label) +
                        " outside {-1,+1} for " + loss_name(cfg.loss.kind) + " loss");
}

}  // namespace detail

/// Online protocol: predict first (mistake rate / squared error), then learn,
/// one pass in stream order. The trace metric is the cumulative mistake rate
/// (binary) or RMSE (regression).
inline RunResult run_stream(const LearnerConfig& cfg, std::span<const Sample> stream,
                            std::uint32_t dim, Task task, const TraceOptions& topt = {}) {
    cfg.validate();
    if (task == Task::multiclass) throw std::invalid_argument("multiclass streams use the multiclass learner");
    const std::uint64_t horizon = stream.size();
    OnlineLearner learner(cfg, dim, horizon);
    MetricsAccumulator acc(task);
    detail::TraceBuilder tb(horizon, topt);

    RunResult out;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const Sample& s = stream[t - 1];
        detail::check_stream_label(cfg, s);
        const double f = learner.predict_raw(s.x);
        acc.update(task == Task::regression ? f : sign_prediction(f), s.label);
        learner.step_with_prediction(s.x, s.label, f);
        tb.observe(out.trace, t, acc.current(), learner.model().support_size(),
                   learner.coverage().size(), learner.model().kernel_evals());
    }
    if (horizon == 0) out.trace.summary = Checkpoint{};

    out.output = learner.output_model();
    out.final_metric = acc.current();
    out.steps = horizon;
    return out;
}

/// Batch protocol: T instances drawn uniformly at random (with replacement,
/// seeded) from the training set; the configured output model is then scored
/// on the test set. Checkpoints carry the cumulative training metric; the
/// summary carries the test error.
inline RunResult run_batch(const LearnerConfig& cfg, std::span<const Sample> train,
                           std::span<const Sample> test, std::uint64_t iters, std::uint32_t dim,
                           Task task, const TraceOptions& topt = {}) {
    cfg.validate();
    if (task == Task::multiclass) throw std::invalid_argument("multiclass batches use the multiclass learner");
    if (train.empty()) throw DataError("batch training set is empty");
    if (test.empty()) throw DataError("batch test set is empty");
    if (iters == 0) throw std::invalid_argument("batch iteration count must be >= 1");

    OnlineLearner learner(cfg, dim, iters);
    MetricsAccumulator acc(task);
    detail::TraceBuilder tb(iters, topt);
    Rng data_rng = Rng::derive(cfg.seed, /*stream=*/2);

    RunResult out;
    for (std::uint64_t t = 1; t <= iters; ++t) {
        const Sample& s = train[data_rng.below(train.size())];
        detail::check_stream_label(cfg, s);
        const double f = learner.predict_raw(s.x);
        acc.update(task == Task::regression ? f : sign_prediction(f), s.label);
        learner.step_with_prediction(s.x, s.label, f);
        tb.observe(out.trace, t, acc.current(), learner.model().support_size(),
                   learner.coverage().size(), learner.model().kernel_evals());
    }

    out.output = learner.output_model();
    out.final_metric = evaluate_error(out.output, test, task);
    out.trace.summary.metric = out.final_metric;
    out.steps = iters;
    return out;
}

}  // namespace avm
