#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "avm/learner.hpp"
#include "test_support.hpp"

using avm::Algorithm;
using avm::LearnerConfig;
using avm::LossKind;
using avm::OnlineLearner;
using avm::OutputKind;
using avm::Sample;
using testsupport::dense_point;

namespace {

LearnerConfig base_config() {
    LearnerConfig cfg;
    cfg.lambda = 1.0;
    cfg.loss = {LossKind::hinge};
    cfg.kernel = {avm::KernelKind::gaussian, 1.0};
    cfg.geometry = avm::CellGeometry::sphere;
    cfg.delta = 1.0;
    cfg.schedule_beta = 0.0;
    cfg.schedule_rho = 1.0;
    cfg.seed = 1;
    return cfg;
}

std::vector<Sample> to_samples(const std::vector<std::pair<std::vector<double>, double>>& raw) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < raw.size(); ++i)
        out.push_back({dense_point(raw[i].first), raw[i].second, static_cast<std::uint32_t>(i + 1)});
    return out;
}

}  // namespace

TEST_CASE("schedule probability") {
    CHECK(avm::schedule_prob(0.0, 1.0, 1) == 1.0);
    CHECK(avm::schedule_prob(0.0, 0.5, 123) == 1.0);
    CHECK(avm::schedule_prob(2.0, 1.0, 1) == 0.0);
    CHECK(avm::schedule_prob(2.0, 1.0, 4) == 0.5);
    CHECK(avm::schedule_prob(std::numeric_limits<double>::infinity(), 1.0, 1000) == 0.0);
    CHECK(avm::schedule_prob(3.0, 2.0, 10) == Catch::Approx(1.0 - 0.03));
}

TEST_CASE("sgd first step lands w2 = (1/lambda) Phi(x1)") {
    auto cfg = base_config();
    cfg.algorithm = Algorithm::sgd;
    cfg.lambda = 0.25;
    OnlineLearner learner(cfg, 1);
    learner.step(dense_point({0.3}), 1.0);
    REQUIRE(learner.model().point_count() == 1);
    CHECK(learner.model().effective_coeff(0) == 4.0);
    CHECK(learner.model().support_size() == 1);
    CHECK(learner.coverage().size() == 0);  // the baseline never touches the coverage
}

TEST_CASE("margin above 1 leaves the support set unchanged") {
    auto cfg = base_config();
    cfg.algorithm = Algorithm::sgd;
    cfg.lambda = 0.25;
    OnlineLearner learner(cfg, 1);
    const auto x = dense_point({0.3});
    learner.step(x, 1.0);  // w = 4 Phi(x)
    const double f = learner.predict_raw(x);
    REQUIRE(f > 1.0);
    learner.step(x, 1.0);  // alpha = 0: pure shrink
    CHECK(learner.model().support_size() == 1);
    CHECK(learner.model().effective_coeff(0) == Catch::Approx(4.0 * 0.5));
}

TEST_CASE("repeated instance keeps S = 1 under sgd") {
    auto cfg = base_config();
    cfg.algorithm = Algorithm::sgd;
    cfg.loss = {LossKind::l1};
    OnlineLearner learner(cfg, 1);
    const auto x = dense_point({0.5});
    for (int t = 0; t < 50; ++t) learner.step(x, 10.0);  // f never reaches 10
    CHECK(learner.model().point_count() == 1);
    CHECK(learner.model().support_size() == 1);
}

TEST_CASE("avm hand trace: 1-D stream 0.0 then 0.2 with delta=1") {
    auto cfg = base_config();
    OnlineLearner learner(cfg, 1);

    learner.step(dense_point({0.0}), 1.0);
    REQUIRE(learner.coverage().size() == 1);
    CHECK(learner.model().effective_coeff(0) == 1.0);  // w2 = Phi(0)

    const double f = learner.predict_raw(dense_point({0.2}));
    CHECK(f == Catch::Approx(std::exp(-0.04)).epsilon(1e-12));
    REQUIRE(f < 1.0);  // margin violated, alpha = -1

    learner.step(dense_point({0.2}), 1.0);
    CHECK(learner.coverage().size() == 1);  // cell 1 reused
    CHECK(learner.model().point_count() == 1);
    CHECK(learner.model().support_size() == 1);
    // w3 = (1/2) w2 + (1/2) Phi(0) = Phi(0), exactly
    CHECK(learner.model().effective_coeff(0) == 1.0);
    CHECK(learner.model().squared_norm() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("beta = inf reproduces the sgd baseline draw-for-draw") {
    avm::Rng gen(51);
    const auto stream = testsupport::two_clusters(gen, 300, 3, 1.0, 0.8);

    auto avm_cfg = base_config();
    avm_cfg.lambda = 0.05;
    avm_cfg.schedule_beta = std::numeric_limits<double>::infinity();
    auto sgd_cfg = avm_cfg;
    sgd_cfg.algorithm = Algorithm::sgd;
    sgd_cfg.schedule_beta = 0.0;

    OnlineLearner a(avm_cfg, 3);
    OnlineLearner b(sgd_cfg, 3);
    for (const auto& s : stream) {
        a.step(s.x, s.label);
        b.step(s.x, s.label);
    }
    CHECK(a.coverage().size() == 0);
    CHECK(testsupport::max_coeff_discrepancy(a.model(), b.model()) == 0.0);
}

TEST_CASE("delta below the minimum pairwise distance makes avm equal sgd") {
    avm::Rng gen(52);
    const auto stream = testsupport::two_clusters(gen, 200, 2, 1.0, 0.7);

    auto avm_cfg = base_config();
    avm_cfg.lambda = 0.05;
    avm_cfg.delta = 1e-9;  // continuous draws are never this close
    auto sgd_cfg = avm_cfg;
    sgd_cfg.algorithm = Algorithm::sgd;

    OnlineLearner a(avm_cfg, 2);
    OnlineLearner b(sgd_cfg, 2);
    for (const auto& s : stream) {
        a.step(s.x, s.label);
        b.step(s.x, s.label);
    }
    CHECK(testsupport::max_coeff_discrepancy(a.model(), b.model()) == 0.0);
}

TEST_CASE("run_stream counts mistakes before learning, sign(0) = +1") {
    auto cfg = base_config();

    const auto one_pos = to_samples({{{0.4}, 1.0}});
    const auto r1 = avm::run_stream(cfg, one_pos, 1, avm::Task::binary);
    CHECK(r1.final_metric == 0.0);  // empty model predicts +1

    const auto one_neg = to_samples({{{0.4}, -1.0}});
    const auto r2 = avm::run_stream(cfg, one_neg, 1, avm::Task::binary);
    CHECK(r2.final_metric == 1.0);
}

TEST_CASE("run_stream rejects label-domain violations with the line number") {
    auto cfg = base_config();
    std::vector<Sample> bad;
    bad.push_back({dense_point({0.1}), 1.0, 7});
    bad.push_back({dense_point({0.2}), 0.5, 8});
    try {
        avm::run_stream(cfg, bad, 1, avm::Task::binary);
        FAIL("expected a DataError");
    } catch (const avm::DataError& e) {
        CHECK(std::string(e.what()).find("line 8") != std::string::npos);
    }
}

TEST_CASE("trace checkpoints are emitted on the cadence with a final summary") {
    avm::Rng gen(53);
    const auto stream = testsupport::two_clusters(gen, 250, 2, 1.0, 0.6);
    auto cfg = base_config();
    cfg.lambda = 0.05;
    avm::TraceOptions topt{50};
    const auto res = avm::run_stream(cfg, stream, 2, avm::Task::binary, topt);
    REQUIRE(res.trace.checkpoints.size() == 4);  // 50,100,150,200 (250 is the summary)
    CHECK(res.trace.summary.t == 250);
    for (std::size_t i = 0; i < res.trace.checkpoints.size(); ++i) {
        CHECK(res.trace.checkpoints[i].t == (i + 1) * 50);
        if (i > 0) {
            CHECK(res.trace.checkpoints[i].elapsed_s >= res.trace.checkpoints[i - 1].elapsed_s);
            CHECK(res.trace.checkpoints[i].model_size >= res.trace.checkpoints[i - 1].model_size);
            CHECK(res.trace.checkpoints[i].cells >= res.trace.checkpoints[i - 1].cells);
        }
        CHECK(res.trace.checkpoints[i].metric >= 0.0);
        CHECK(res.trace.checkpoints[i].metric <= 1.0);
    }
    CHECK(res.trace.summary.elapsed_s >= res.trace.checkpoints.back().elapsed_s);
}

TEST_CASE("identical config and stream give identical traces and models") {
    avm::Rng gen(54);
    const auto stream = testsupport::two_clusters(gen, 400, 2, 1.0, 0.8);
    auto cfg = base_config();
    cfg.lambda = 0.02;
    cfg.schedule_beta = 3.0;  // active Bernoulli draws
    cfg.seed = 99;

    const auto r1 = avm::run_stream(cfg, stream, 2, avm::Task::binary);
    const auto r2 = avm::run_stream(cfg, stream, 2, avm::Task::binary);
    CHECK(r1.final_metric == r2.final_metric);
    CHECK(testsupport::max_coeff_discrepancy(r1.output, r2.output) == 0.0);
    REQUIRE(r1.trace.checkpoints.size() == r2.trace.checkpoints.size());
    for (std::size_t i = 0; i < r1.trace.checkpoints.size(); ++i) {
        CHECK(r1.trace.checkpoints[i].metric == r2.trace.checkpoints[i].metric);
        CHECK(r1.trace.checkpoints[i].model_size == r2.trace.checkpoints[i].model_size);
        CHECK(r1.trace.checkpoints[i].cells == r2.trace.checkpoints[i].cells);
        CHECK(r1.trace.checkpoints[i].kevals == r2.trace.checkpoints[i].kevals);
    }
}

TEST_CASE("run_batch with T=1 equals a single step on the sampled instance") {
    avm::Rng gen(55);
    auto train = testsupport::two_clusters(gen, 37, 2, 1.0, 0.5);
    auto cfg = base_config();
    cfg.lambda = 0.5;

    const auto res = avm::run_batch(cfg, train, train, 1, 2, avm::Task::binary);

    // replicate the seeded draw
    avm::Rng data_rng = avm::Rng::derive(cfg.seed, 2);
    const auto& picked = train[data_rng.below(train.size())];
    OnlineLearner single(cfg, 2);
    single.step(picked.x, picked.label);
    CHECK(testsupport::max_coeff_discrepancy(res.output, single.model()) == 0.0);
}

TEST_CASE("run_batch reaches high accuracy on separable clusters") {
    avm::Rng gen(56);
    const auto train = testsupport::two_clusters(gen, 400, 2, 2.5, 0.3);
    const auto test = testsupport::two_clusters(gen, 400, 2, 2.5, 0.3);
    auto cfg = base_config();
    cfg.lambda = 0.01;
    cfg.delta = 0.4;  // small against the cluster gap of ~5

    const auto res = avm::run_batch(cfg, train, test, 10 * train.size(), 2, avm::Task::binary);
    CHECK(res.final_metric <= 0.01);
    CHECK(res.output.support_size() <= res.trace.summary.cells);
}

TEST_CASE("run_batch validates its inputs") {
    auto cfg = base_config();
    const auto data = to_samples({{{0.1}, 1.0}});
    CHECK_THROWS_AS(avm::run_batch(cfg, {}, data, 5, 1, avm::Task::binary), avm::DataError);
    CHECK_THROWS_AS(avm::run_batch(cfg, data, {}, 5, 1, avm::Task::binary), avm::DataError);
    CHECK_THROWS_AS(avm::run_batch(cfg, data, data, 0, 1, avm::Task::binary), std::invalid_argument);
}

TEST_CASE("l2 norm bound when lambda > 1 (no projection)") {
    avm::Rng gen(57);
    const auto stream = testsupport::regression_stream(gen, 2000, 3, -1.0, 1.0);
    auto cfg = base_config();
    cfg.loss = {LossKind::l2};
    cfg.lambda = 2.0;
    cfg.delta = 0.8;
    OnlineLearner learner(cfg, 3);
    for (const auto& s : stream) {
        learner.step(s.x, s.label);
        CHECK(learner.model().norm() <= 1.0 / (2.0 - 1.0) + 1e-9);
    }
}

TEST_CASE("l2 projection keeps iterates inside the tracked-y_max ball when lambda <= 1") {
    avm::Rng gen(58);
    const auto stream = testsupport::regression_stream(gen, 2000, 3, -1.0, 1.0);
    auto cfg = base_config();
    cfg.loss = {LossKind::l2};
    cfg.lambda = 0.25;
    cfg.delta = 0.8;
    OnlineLearner learner(cfg, 3);
    for (const auto& s : stream) {
        learner.step(s.x, s.label);
        CHECK(learner.model().norm() <= learner.y_max_seen() / std::sqrt(0.25) * (1.0 + 1e-12));
    }
}

TEST_CASE("fixed y_max policy uses the configured radius") {
    auto cfg = base_config();
    cfg.loss = {LossKind::l2};
    cfg.lambda = 1.0;
    cfg.y_max = {false, 0.5};
    OnlineLearner learner(cfg, 1);
    for (int t = 0; t < 20; ++t) {
        learner.step(dense_point({0.1 * (t % 7)}), 5.0);
        CHECK(learner.model().norm() <= 0.5 * (1.0 + 1e-12));
    }
}

TEST_CASE("output modes: final vs average vs suffix") {
    avm::Rng gen(59);
    const auto stream = testsupport::two_clusters(gen, 120, 2, 1.0, 0.6);
    auto cfg = base_config();
    cfg.lambda = 0.05;

    cfg.output = {OutputKind::average, 0.5};
    const auto avg = avm::run_stream(cfg, stream, 2, avm::Task::binary);
    cfg.output = {OutputKind::suffix_average, 0.5};
    const auto suf = avm::run_stream(cfg, stream, 2, avm::Task::binary);
    cfg.output = {OutputKind::final_iterate, 0.5};
    const auto fin = avm::run_stream(cfg, stream, 2, avm::Task::binary);

    // all three share the same expansion points but differ in coefficients
    CHECK(avg.output.point_count() == fin.output.point_count());
    CHECK(testsupport::max_coeff_discrepancy(avg.output, fin.output) > 0.0);
    CHECK(testsupport::max_coeff_discrepancy(suf.output, avg.output) > 0.0);
}

TEST_CASE("suffix output without a horizon is rejected") {
    auto cfg = base_config();
    cfg.output = {OutputKind::suffix_average, 0.5};
    CHECK_THROWS_AS(OnlineLearner(cfg, 1, 0), std::invalid_argument);
}

TEST_CASE("config validation") {
    auto cfg = base_config();
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config();
    cfg.delta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config();
    cfg.schedule_rho = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config();
    cfg.output = {OutputKind::suffix_average, 1.5};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
