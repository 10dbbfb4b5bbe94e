#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "avm/data.hpp"

namespace avm {

/// Shortest decimal form that round-trips the double; integral values gain a
/// ".0" so the JSON type stays a number with a fraction part.
inline std::string format_double(double v) {
    char buf[40];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, p);
    if (s.find_first_of(".einEIN") == std::string::npos) s += ".0";
    return s;
}

struct Checkpoint {
    std::uint64_t t = 0;
    double metric = 0.0;  // cumulative mistake rate or RMSE
    std::uint64_t model_size = 0;
    std::uint64_t cells = 0;
    double elapsed_s = 0.0;
    std::uint64_t kevals = 0;
};

/// Cumulative online error, updated with the prediction made before each
/// learning step.
class MetricsAccumulator {
public:
    explicit MetricsAccumulator(Task task) : task_(task) {}

    void update(double predicted, double truth) {
        ++count_;
        if (task_ == Task::regression) {
            const double r = predicted - truth;
            sq_err_ += r * r;
        } else {
            mistakes_ += (predicted != truth);
        }
    }

    /// Mistake rate or RMSE so far; 0 before any instance has been seen.
    double current() const noexcept {
        if (count_ == 0) return 0.0;
        if (task_ == Task::regression) return std::sqrt(sq_err_ / static_cast<double>(count_));
        return static_cast<double>(mistakes_) / static_cast<double>(count_);
    }

    std::uint64_t count() const noexcept { return count_; }
    std::uint64_t mistakes() const noexcept { return mistakes_; }

private:
    Task task_;
    std::uint64_t count_ = 0;
    std::uint64_t mistakes_ = 0;
    double sq_err_ = 0.0;
};

/// Checkpoint sequence plus the final summary. Serialized as JSON lines:
/// one object per checkpoint, the summary last with "final": true.
struct MetricsTrace {
    std::vector<Checkpoint> checkpoints;
    Checkpoint summary;

    static void write_record(std::ostream& out, const Checkpoint& c, bool final_record) {
        out << "{\"t\":" << c.t << ",\"metric\":" << format_double(c.metric)
            << ",\"model_size\":" << c.model_size << ",\"cells\":" << c.cells
            << ",\"elapsed_s\":" << format_double(c.elapsed_s) << ",\"kevals\":" << c.kevals;
        if (final_record) out << ",\"final\":true";
        out << "}\n";
    }

    void to_jsonl(std::ostream& out) const {
        for (const auto& c : checkpoints) write_record(out, c, false);
        write_record(out, summary, true);
    }
};

inline double sign_prediction(double f) noexcept { return f >= 0.0 ? 1.0 : -1.0; }

}  // namespace avm
