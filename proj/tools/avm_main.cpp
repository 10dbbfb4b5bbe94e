// Command-line driver: online and batch experiment protocols over LIBSVM
// files, JSON-lines metrics traces, and model snapshots.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "avm/avm.hpp"

namespace {

struct Options {
    std::string task;
    std::string mode;
    std::string loss;
    double gamma = 1.0;
    double lambda = 1.0;
    double delta = 1.0;
    double beta = 0.0;
    double rho = 1.0;
    std::string coverage = "sphere";
    std::string output = "final";
    std::uint64_t iters = 0;
    double tau = 0.5;
    double epsilon = 0.1;
    bool normalize = false;
    std::uint32_t dim = 0;
    std::string train_path;
    std::string test_path;
    std::uint64_t seed = 0;
    std::string metrics_out;
    std::string model_out;
    std::uint64_t checkpoint_every = 0;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

avm::OutputMode parse_output(const std::string& s) {
    if (s == "final") return {avm::OutputKind::final_iterate, 0.5};
    if (s == "avg") return {avm::OutputKind::average, 0.5};
    if (s.rfind("suffix=", 0) == 0) {
        double a = 0.0;
        try {
            a = std::stod(s.substr(7));
        } catch (const std::exception&) {
            throw UsageError("--output suffix=A needs a numeric A, got '" + s + "'");
        }
        if (!(a > 0.0 && a < 1.0)) throw UsageError("--output suffix=A needs A in (0,1)");
        return {avm::OutputKind::suffix_average, a};
    }
    throw UsageError("--output must be final, avg, or suffix=A");
}

nlohmann::ordered_json run_header(const Options& opt, const avm::Dataset& data, std::uint64_t iters) {
    nlohmann::ordered_json j;
    j["task"] = opt.task;
    j["mode"] = opt.mode;
    j["loss"] = opt.loss;
    j["gamma"] = opt.gamma;
    j["lambda"] = opt.lambda;
    j["delta"] = opt.delta;
    j["beta"] = opt.beta;
    j["rho"] = opt.rho;
    j["coverage"] = opt.coverage;
    j["output"] = opt.output;
    j["seed"] = opt.seed;
    j["iters"] = iters;
    j["normalize"] = opt.normalize;
    j["dim"] = data.dim;
    j["train"] = opt.train_path;
    if (!opt.test_path.empty()) j["test"] = opt.test_path;
    if (data.task == avm::Task::multiclass) {
        nlohmann::ordered_json labels = nlohmann::ordered_json::array();
        for (const auto& [raw, mapped] : data.label_map)
            labels.push_back({{"raw", raw}, {"class", static_cast<std::uint32_t>(mapped)}});
        j["labels"] = labels;
    }
    return nlohmann::ordered_json{{"run", j}};
}

int run_command(const Options& opt) {
    avm::Task task;
    if (opt.task == "binary") task = avm::Task::binary;
    else if (opt.task == "multiclass") task = avm::Task::multiclass;
    else if (opt.task == "regression") task = avm::Task::regression;
    else throw UsageError("--task must be binary, multiclass, or regression");

    if (opt.mode != "online" && opt.mode != "batch")
        throw UsageError("--mode must be online or batch");
    const bool batch = opt.mode == "batch";

    avm::LossSpec loss{avm::loss_kind_from_name(opt.loss), opt.tau, opt.epsilon};
    if (task == avm::Task::regression && loss.classification())
        throw UsageError(opt.loss + " is a classification loss; use l1, l2, or eps-insensitive for --task regression");
    if (task == avm::Task::multiclass && loss.kind != avm::LossKind::hinge &&
        loss.kind != avm::LossKind::logistic)
        throw UsageError("--task multiclass supports --loss hinge or logit only");
    if (task == avm::Task::multiclass && !opt.model_out.empty())
        throw UsageError("--model-out is not available for multiclass models");
    if (batch && opt.test_path.empty())
        throw UsageError("--mode batch requires --test");

    avm::LearnerConfig cfg;
    cfg.lambda = opt.lambda;
    cfg.loss = loss;
    cfg.kernel = {avm::KernelKind::gaussian, opt.gamma};
    cfg.geometry = opt.coverage == "rect" ? avm::CellGeometry::rect : avm::CellGeometry::sphere;
    if (opt.coverage != "rect" && opt.coverage != "sphere")
        throw UsageError("--coverage must be sphere or rect");
    cfg.delta = opt.delta;
    cfg.schedule_beta = opt.beta;
    cfg.schedule_rho = opt.rho;
    cfg.output = parse_output(opt.output);
    cfg.seed = opt.seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    avm::Dataset train = avm::load_libsvm(opt.train_path, task);
    if (train.samples.empty()) throw avm::DataError(opt.train_path + ": no samples");
    std::optional<avm::Dataset> test;
    if (!opt.test_path.empty())
        test = avm::load_libsvm(opt.test_path, task, task == avm::Task::multiclass ? &train.label_map : nullptr);

    std::uint32_t dim = train.dim;
    if (test) dim = std::max(dim, test->dim);
    if (opt.dim != 0) {
        if (opt.dim < dim)
            throw UsageError("--dim " + std::to_string(opt.dim) + " is below the max feature index " +
                             std::to_string(dim));
        dim = opt.dim;
    }
    train.dim = dim;

    avm::TraceOptions topt{opt.checkpoint_every};
    avm::MetricsTrace trace;
    double final_metric = 0.0;
    std::uint64_t steps = 0;
    std::optional<avm::KernelModel> out_model;
    const avm::Dataset* header_source = &train;

    if (batch) {
        if (opt.normalize) {
            const auto table = avm::fit_minmax(train);
            avm::apply_minmax(train, table);
            avm::apply_minmax(*test, table);
        }
        const std::uint64_t iters = opt.iters != 0 ? opt.iters : 5 * train.size();
        if (task == avm::Task::multiclass) {
            train.label_map = test->label_map;  // the test map extends the training map
            auto res = avm::run_batch_mc(cfg, train.samples, test->samples, iters,
                                         train.num_classes(), dim, topt);
            trace = std::move(res.trace);
            final_metric = res.final_metric;
            steps = res.steps;
        } else {
            auto res = avm::run_batch(cfg, train.samples, test->samples, iters, dim, task, topt);
            trace = std::move(res.trace);
            final_metric = res.final_metric;
            steps = res.steps;
            out_model = std::move(res.output);
        }
    } else {
        // online: a single pass over the training file (plus the test file
        // appended, when given), shuffled by the seed
        if (test) {
            train.samples.insert(train.samples.end(), test->samples.begin(), test->samples.end());
            if (task == avm::Task::multiclass) train.label_map = test->label_map;
        }
        if (opt.normalize) avm::apply_minmax(train, avm::fit_minmax(train));
        avm::shuffle(train, opt.seed);
        if (task == avm::Task::multiclass) {
            auto res = avm::run_stream_mc(cfg, train.samples, train.num_classes(), dim, topt);
            trace = std::move(res.trace);
            final_metric = res.final_metric;
            steps = res.steps;
        } else {
            auto res = avm::run_stream(cfg, train.samples, dim, task, topt);
            trace = std::move(res.trace);
            final_metric = res.final_metric;
            steps = res.steps;
            out_model = std::move(res.output);
        }
    }

    if (!opt.metrics_out.empty()) {
        std::ofstream mf(opt.metrics_out);
        if (!mf) throw avm::DataError("cannot open metrics output file: " + opt.metrics_out);
        mf << run_header(opt, *header_source, steps).dump() << '\n';
        trace.to_jsonl(mf);
    }
    if (!opt.model_out.empty() && out_model)
        avm::save_model_file(opt.model_out, *out_model, cfg.geometry, cfg.delta, dim);

    const char* metric_name = task == avm::Task::regression ? "rmse" : (batch ? "test_error" : "mistake_rate");
    std::cout << "steps=" << steps << " " << metric_name << "=" << avm::format_double(final_metric);
    if (batch && task != avm::Task::regression)
        std::cout << " test_accuracy=" << avm::format_double(1.0 - final_metric);
    std::cout << " model_size=" << trace.summary.model_size << " cells=" << trace.summary.cells
              << " elapsed_s=" << avm::format_double(trace.summary.elapsed_s)
              << " kevals=" << trace.summary.kevals << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"approximation vector machine: budgeted kernel online learning"};
    app.require_subcommand(1);

    Options opt;
    auto* run = app.add_subcommand("run", "train one configuration and report metrics");
    run->add_option("--task", opt.task, "binary|multiclass|regression")->required();
    run->add_option("--mode", opt.mode, "online|batch")->required();
    run->add_option("--loss", opt.loss, "hinge|logit|smooth-hinge|l1|l2|eps-insensitive")->required();
    run->add_option("--gamma", opt.gamma, "RBF kernel bandwidth")->required();
    run->add_option("--lambda", opt.lambda, "regularization strength")->required();
    run->add_option("--delta", opt.delta, "coverage cell diameter")->required();
    run->add_option("--beta", opt.beta, "approximation schedule beta (default 0; inf disables approximation)");
    run->add_option("--rho", opt.rho, "approximation schedule rho (default 1.0)");
    run->add_option("--coverage", opt.coverage, "sphere|rect")->required();
    run->add_option("--output", opt.output, "final|avg|suffix=A (default final)");
    run->add_option("--iters", opt.iters, "batch iteration count (default 5N)");
    run->add_option("--tau", opt.tau, "smooth-hinge smoothness (default 0.5)");
    run->add_option("--epsilon", opt.epsilon, "eps-insensitive tube width (default 0.1)");
    run->add_flag("--normalize", opt.normalize, "min-max normalize explicit feature values to [0,1]");
    run->add_option("--dim", opt.dim, "feature dimensionality override");
    run->add_option("--train", opt.train_path, "training file (LIBSVM format)")->required();
    run->add_option("--test", opt.test_path, "test file (batch) or extra stream data (online)");
    run->add_option("--seed", opt.seed, "random seed")->required();
    run->add_option("--metrics-out", opt.metrics_out, "JSON-lines trace output path");
    run->add_option("--model-out", opt.model_out, "model snapshot output path");
    run->add_option("--checkpoint-every", opt.checkpoint_every, "trace cadence (default ceil(T/100))");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return run_command(opt);
    } catch (const UsageError& e) {
        std::cerr << "avm: " << e.what() << "\n";
        std::cerr << "run 'avm run --help' for usage\n";
        return 2;
    } catch (const avm::DataError& e) {
        std::cerr << "avm: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "avm: " << e.what() << "\n";
        return 1;
    }
}
