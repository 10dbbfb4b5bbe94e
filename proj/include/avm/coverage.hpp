#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "avm/sparse_vector.hpp"

namespace avm {

enum class CellGeometry { sphere, rect };

struct CellAssignment {
    std::uint32_t cell_index;  // 1-based index into the core sequence
    bool is_new;               // this instance created the cell
};

/// On-the-fly finite coverage of the input domain. Core points are appended
/// and never mutated, so cell indices are stable for the life of the
/// coverage. Sphere cells are open balls of radius delta/2 around their core;
/// rect cells are open inf-norm boxes of half-width delta/sqrt(d).
///
/// Single-writer: assignments mutate the structure and must be serialized
/// externally; read-only queries are safe concurrently with no writer.
class Coverage {
public:
    Coverage(CellGeometry geometry, double delta, std::uint32_t dim)
        : geometry_(geometry), delta_(delta), dim_(dim) {
        if (!(delta > 0.0)) throw std::invalid_argument("coverage delta must be > 0");
        if (geometry == CellGeometry::rect) {
            if (dim == 0) throw std::invalid_argument("rect coverage needs the feature dimensionality");
            half_width_ = delta / std::sqrt(static_cast<double>(dim));
        } else {
            half_width_ = delta / 2.0;
        }
        half_sq_ = half_width_ * half_width_;
    }

    CellAssignment assign(const SparseVector& x) {
        return geometry_ == CellGeometry::sphere ? assign_sphere(x) : assign_rect(x);
    }

    /// Nearest-core search (linear scan, ties to the lowest index); a new
    /// cell is opened when the nearest core is at squared distance
    /// >= (delta/2)^2, with the instance itself as core.
    CellAssignment assign_sphere(const SparseVector& x) {
        std::size_t best = 0;
        double best_sq = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cores_.size(); ++k) {
            const double sq = squared_distance(x, cores_[k]);
            if (sq < best_sq) {
                best_sq = sq;
                best = k;
            }
        }
        if (cores_.empty() || best_sq >= half_sq_) {
            cores_.push_back(x);
            return {static_cast<std::uint32_t>(cores_.size()), true};
        }
        return {static_cast<std::uint32_t>(best + 1), false};
    }

    /// First core (in insertion order) whose box contains the instance; scan
    /// order, not nearest.
    CellAssignment assign_rect(const SparseVector& x) {
        for (std::size_t k = 0; k < cores_.size(); ++k) {
            if (chebyshev_distance(x, cores_[k]) < half_width_)
                return {static_cast<std::uint32_t>(k + 1), false};
        }
        cores_.push_back(x);
        return {static_cast<std::uint32_t>(cores_.size()), true};
    }

    const SparseVector& core_point(std::uint32_t index) const {
        if (index == 0 || index > cores_.size())
            throw std::out_of_range("core index " + std::to_string(index) + " out of range (1.." +
                                    std::to_string(cores_.size()) + ")");
        return cores_[index - 1];
    }

    std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(cores_.size()); }
    CellGeometry geometry() const noexcept { return geometry_; }
    double delta() const noexcept { return delta_; }
    double half_width() const noexcept { return half_width_; }
    std::uint32_t dim() const noexcept { return dim_; }

private:
    CellGeometry geometry_;
    double delta_;
    std::uint32_t dim_;
    double half_width_;
    double half_sq_;
    std::vector<SparseVector> cores_;
};

}  // namespace avm
