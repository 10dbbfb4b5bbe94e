#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "avm/rng.hpp"
#include "avm/sparse_vector.hpp"

namespace avm {

enum class Task { binary, multiclass, regression };

inline const char* task_name(Task t) {
    switch (t) {
        case Task::binary: return "binary";
        case Task::multiclass: return "multiclass";
        case Task::regression: return "regression";
    }
    return "?";
}

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Sample {
    SparseVector x;
    double label;          // internal label: {-1,+1}, dense 1..m, or raw value
    std::uint32_t line_no; // source line, for diagnostics
};

struct Dataset {
    std::vector<Sample> samples;
    std::uint32_t dim = 0;  // max feature index seen (can be raised, never lowered)
    Task task = Task::binary;
    // raw label token -> internal label, in first-seen order
    std::vector<std::pair<std::string, double>> label_map;

    std::size_t size() const noexcept { return samples.size(); }

    std::uint32_t num_classes() const noexcept {
        return task == Task::multiclass ? static_cast<std::uint32_t>(label_map.size()) : 2;
    }

    void override_dim(std::uint32_t d) {
        if (d < dim)
            throw DataError("dimension override " + std::to_string(d) +
                            " is below the max feature index " + std::to_string(dim));
        dim = d;
    }
};

namespace detail {

inline double parse_double(std::string_view tok, std::uint32_t line, const char* what) {
    // std::from_chars(double) in libstdc++ rejects "inf"/leading '+'; go
    // through strtod for the permissive numeric forms found in the wild.
    std::string buf(tok);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || buf.empty())
        throw DataError("line " + std::to_string(line) + ": malformed " + what + " '" + buf + "'");
    return v;
}

inline std::uint32_t parse_index(std::string_view tok, std::uint32_t line) {
    std::uint32_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || v == 0)
        throw DataError("line " + std::to_string(line) + ": malformed feature index '" + std::string(tok) + "'");
    return v;
}

}  // namespace detail

/// LIBSVM sparse text format: `<label> <idx>:<val> ...` with strictly
/// increasing 1-based indices. Blank lines and `#` comment lines are skipped;
/// a trailing `#` comment on a data line is ignored. LF and CRLF both work.
///
/// Label handling per task: binary accepts {+1,1} -> +1 and {-1,0} -> -1;
/// multiclass maps raw tokens to dense 1..m in first-seen order; regression
/// keeps the raw value.
inline Dataset parse_libsvm(std::istream& in, Task task,
                            const std::vector<std::pair<std::string, double>>* label_seed = nullptr) {
    Dataset ds;
    ds.task = task;
    std::unordered_map<std::string, double> seen_labels;
    if (label_seed) {
        // continue an existing mapping (e.g. apply a training split's class
        // indices to a test split)
        ds.label_map = *label_seed;
        for (const auto& [raw, mapped] : *label_seed) seen_labels.emplace(raw, mapped);
    }

    std::string line;
    std::uint32_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);

        std::string_view rest(line);
        auto next_token = [&rest]() -> std::string_view {
            while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
            std::size_t n = 0;
            while (n < rest.size() && rest[n] != ' ' && rest[n] != '\t') ++n;
            const auto tok = rest.substr(0, n);
            rest.remove_prefix(n);
            return tok;
        };

        const auto label_tok = next_token();
        if (label_tok.empty()) continue;  // blank or comment-only line

        Sample s;
        s.line_no = line_no;

        const std::string raw_label(label_tok);
        if (const auto it = seen_labels.find(raw_label); it != seen_labels.end()) {
            s.label = it->second;
        } else {
            double mapped;
            switch (task) {
                case Task::binary: {
                    const double v = detail::parse_double(raw_label, line_no, "label");
                    if (v == 1.0) mapped = 1.0;
                    else if (v == -1.0 || v == 0.0) mapped = -1.0;
                    else throw DataError("line " + std::to_string(line_no) +
                                         ": binary label must be +1/1 or -1/0, got '" + raw_label + "'");
                    if (seen_labels.size() >= 2)
                        throw DataError("line " + std::to_string(line_no) +
                                        ": more than 2 distinct labels in a binary dataset");
                    break;
                }
                case Task::multiclass:
                    mapped = static_cast<double>(seen_labels.size() + 1);
                    break;
                case Task::regression:
                    mapped = detail::parse_double(raw_label, line_no, "label");
                    break;
            }
            seen_labels.emplace(raw_label, mapped);
            ds.label_map.emplace_back(raw_label, mapped);
            s.label = mapped;
        }

        std::uint32_t prev_index = 0;
        for (auto tok = next_token(); !tok.empty(); tok = next_token()) {
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size())
                throw DataError("line " + std::to_string(line_no) + ": malformed feature '" +
                                std::string(tok) + "' (expected idx:val)");
            const std::uint32_t idx = detail::parse_index(tok.substr(0, colon), line_no);
            const double val = detail::parse_double(tok.substr(colon + 1), line_no, "feature value");
            if (idx <= prev_index)
                throw DataError("line " + std::to_string(line_no) +
                                ": feature indices must be strictly increasing (" +
                                std::to_string(idx) + " after " + std::to_string(prev_index) + ")");
            prev_index = idx;
            s.x.push_back(idx, val);
        }

        ds.dim = std::max(ds.dim, s.x.max_index());
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

inline Dataset load_libsvm(const std::string& path, Task task,
                           const std::vector<std::pair<std::string, double>>* label_seed = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    try {
        return parse_libsvm(in, task, label_seed);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline void serialize_libsvm(const Dataset& ds, std::ostream& out) {
    out.precision(17);
    for (const auto& s : ds.samples) {
        out << s.label;
        const auto idx = s.x.indices();
        const auto val = s.x.values();
        for (std::size_t i = 0; i < idx.size(); ++i) out << ' ' << idx[i] << ':' << val[i];
        out << '\n';
    }
}

/// Fisher-Yates permutation driven by the seeded generator; a fixed seed
/// replays the same permutation.
inline void shuffle(Dataset& ds, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, /*stream=*/1);
    auto& v = ds.samples;
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

/// Per-feature [min, max] fitted over the explicit entries of a dataset.
struct MinMaxTable {
    std::unordered_map<std::uint32_t, std::pair<double, double>> range;
};

inline MinMaxTable fit_minmax(const Dataset& ds) {
    MinMaxTable t;
    for (const auto& s : ds.samples) {
        const auto idx = s.x.indices();
        const auto val = s.x.values();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto [it, inserted] = t.range.try_emplace(idx[i], std::pair{val[i], val[i]});
            if (!inserted) {
                it->second.first = std::min(it->second.first, val[i]);
                it->second.second = std::max(it->second.second, val[i]);
            }
        }
    }
    return t;
}

/// Map explicit entries to (v-min)/(max-min), clipped to [0,1]; constant
/// features map to 0; features unseen at fit time map to 0. Absent entries
/// stay absent, so sparsity is preserved (this intentionally differs from
/// dense min-max when a feature's min is positive).
inline void apply_minmax(Dataset& ds, const MinMaxTable& t) {
    for (auto& s : ds.samples) {
        SparseVector out;
        const auto idx = s.x.indices();
        const auto val = s.x.values();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto it = t.range.find(idx[i]);
            double v = 0.0;
            if (it != t.range.end()) {
                const auto [lo, hi] = it->second;
                v = hi > lo ? (val[i] - lo) / (hi - lo) : 0.0;
                v = std::clamp(v, 0.0, 1.0);
            }
            out.push_back(idx[i], v);
        }
        s.x = std::move(out);
    }
}

}  // namespace avm
