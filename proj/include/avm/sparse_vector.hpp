#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace avm {

/// Sparse feature vector: strictly increasing 1-based indices with their
/// values. Absent indices are implicit zeros. All pairwise operations run as
/// merge-joins over the sorted index lists; nothing is ever densified.
class SparseVector {
public:
    SparseVector() = default;

    SparseVector(std::initializer_list<std::pair<std::uint32_t, double>> entries) {
        for (const auto& [i, v] : entries) push_back(i, v);
    }

    void push_back(std::uint32_t index, double value) {
        if (index == 0)
            throw std::invalid_argument("sparse vector indices are 1-based");
        if (!idx_.empty() && index <= idx_.back())
            throw std::invalid_argument("sparse vector indices must be strictly increasing");
        idx_.push_back(index);
        val_.push_back(value);
    }

    std::size_t nnz() const noexcept { return idx_.size(); }
    bool empty() const noexcept { return idx_.empty(); }
    std::uint32_t max_index() const noexcept { return idx_.empty() ? 0 : idx_.back(); }

    std::span<const std::uint32_t> indices() const noexcept { return idx_; }
    std::span<const double> values() const noexcept { return val_; }

    double squared_norm() const noexcept {
        double acc = 0.0;
        for (double v : val_) acc += v * v;
        return acc;
    }

    void scale_values(double s) noexcept {
        for (double& v : val_) v *= s;
    }

    bool operator==(const SparseVector&) const = default;

private:
    std::vector<std::uint32_t> idx_;
    std::vector<double> val_;
};

inline double dot(const SparseVector& a, const SparseVector& b) noexcept {
    const auto ai = a.indices(), bi = b.indices();
    const auto av = a.values(), bv = b.values();
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ai.size() && j < bi.size()) {
        if (ai[i] == bi[j]) {
            acc += av[i] * bv[j];
            ++i;
            ++j;
        } else if (ai[i] < bi[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return acc;
}

/// ||a - b||_2^2 in one merge pass, so d(x,x) is exactly 0 and d(a,b) is
/// bit-identical to d(b,a).
inline double squared_distance(const SparseVector& a, const SparseVector& b) noexcept {
    const auto ai = a.indices(), bi = b.indices();
    const auto av = a.values(), bv = b.values();
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ai.size() && j < bi.size()) {
        if (ai[i] == bi[j]) {
            const double d = av[i] - bv[j];
            acc += d * d;
            ++i;
            ++j;
        } else if (ai[i] < bi[j]) {
            acc += av[i] * av[i];
            ++i;
        } else {
            acc += bv[j] * bv[j];
            ++j;
        }
    }
    for (; i < ai.size(); ++i) acc += av[i] * av[i];
    for (; j < bi.size(); ++j) acc += bv[j] * bv[j];
    return acc;
}

/// ||a - b||_inf; absent indices count as 0.
inline double chebyshev_distance(const SparseVector& a, const SparseVector& b) noexcept {
    const auto ai = a.indices(), bi = b.indices();
    const auto av = a.values(), bv = b.values();
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ai.size() && j < bi.size()) {
        if (ai[i] == bi[j]) {
            acc = std::max(acc, std::abs(av[i] - bv[j]));
            ++i;
            ++j;
        } else if (ai[i] < bi[j]) {
            acc = std::max(acc, std::abs(av[i]));
            ++i;
        } else {
            acc = std::max(acc, std::abs(bv[j]));
            ++j;
        }
    }
    for (; i < ai.size(); ++i) acc = std::max(acc, std::abs(av[i]));
    for (; j < bi.size(); ++j) acc = std::max(acc, std::abs(bv[j]));
    return acc;
}

struct SparseVectorHash {
    std::size_t operator()(const SparseVector& v) const noexcept {
        // FNV-1a over indices and value bit patterns
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t x) {
            for (int k = 0; k < 8; ++k) {
                h ^= (x >> (8 * k)) & 0xff;
                h *= 1099511628211ull;
            }
        };
        for (std::uint32_t i : v.indices()) mix(i);
        for (double x : v.values()) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(x));
            __builtin_memcpy(&bits, &x, sizeof(bits));
            mix(bits);
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace avm
