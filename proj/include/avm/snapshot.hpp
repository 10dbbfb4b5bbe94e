#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "avm/coverage.hpp"
#include "avm/data.hpp"
#include "avm/model.hpp"

namespace avm {

/// Line-oriented model snapshot:
///   avm-model v1 <kernel> <gamma> <geometry> <delta> <dim>
///   core <index> <idx>:<val> ...        (one per expansion point, 1-based)
///   coef <index> <effective-value>      (scale pre-folded, nonzero only)
/// Values carry 17 significant digits so a round-trip reproduces the doubles.

namespace detail {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void save_model(std::ostream& out, const KernelModel& m, CellGeometry geometry, double delta,
                       std::uint32_t dim) {
    out << "avm-model v1 gaussian " << detail::g17(m.kernel().gamma) << ' '
        << (geometry == CellGeometry::sphere ? "sphere" : "rect") << ' ' << detail::g17(delta) << ' '
        << dim << '\n';
    for (std::uint32_t i = 0; i < m.point_count(); ++i) {
        out << "core " << (i + 1);
        const auto& p = m.point(i);
        const auto idx = p.indices();
        const auto val = p.values();
        for (std::size_t k = 0; k < idx.size(); ++k) out << ' ' << idx[k] << ':' << detail::g17(val[k]);
        out << '\n';
    }
    for (std::uint32_t i = 0; i < m.point_count(); ++i) {
        const double c = m.effective_coeff(i);
        if (c != 0.0) out << "coef " << (i + 1) << ' ' << detail::g17(c) << '\n';
    }
}

struct ModelSnapshot {
    KernelModel model;
    CellGeometry geometry = CellGeometry::sphere;
    double delta = 0.0;
    std::uint32_t dim = 0;
};

inline ModelSnapshot load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("model snapshot: empty input");
    std::istringstream head(line);
    std::string magic, version, kernel_name, geometry_name;
    double gamma = 0.0, delta = 0.0;
    std::uint32_t dim = 0;
    head >> magic >> version >> kernel_name >> gamma >> geometry_name >> delta >> dim;
    if (magic != "avm-model" || version != "v1" || kernel_name != "gaussian" || head.fail())
        throw DataError("model snapshot: malformed header: " + line);

    ModelSnapshot snap{KernelModel(KernelSpec{KernelKind::gaussian, gamma}),
                       geometry_name == "rect" ? CellGeometry::rect : CellGeometry::sphere, delta, dim};

    std::vector<double> effective;
    std::uint32_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        std::uint32_t index = 0;
        ls >> tag >> index;
        if (ls.fail() || index == 0)
            throw DataError("model snapshot line " + std::to_string(line_no) + ": malformed record");
        if (tag == "core") {
            SparseVector p;
            std::string tok;
            while (ls >> tok) {
                const auto colon = tok.find(':');
                if (colon == std::string::npos)
                    throw DataError("model snapshot line " + std::to_string(line_no) + ": bad feature " + tok);
                p.push_back(static_cast<std::uint32_t>(std::stoul(tok.substr(0, colon))),
                            std::stod(tok.substr(colon + 1)));
            }
            if (snap.model.intern_point(p) != index - 1)
                throw DataError("model snapshot line " + std::to_string(line_no) + ": core indices out of order");
            effective.push_back(0.0);
        } else if (tag == "coef") {
            double v = 0.0;
            ls >> v;
            if (ls.fail() || index > effective.size())
                throw DataError("model snapshot line " + std::to_string(line_no) + ": bad coefficient record");
            effective[index - 1] = v;
        } else {
            throw DataError("model snapshot line " + std::to_string(line_no) + ": unknown tag " + tag);
        }
    }
    snap.model.set_effective_coeffs(effective);
    return snap;
}

inline void save_model_file(const std::string& path, const KernelModel& m, CellGeometry geometry,
                            double delta, std::uint32_t dim) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open model output file: " + path);
    save_model(out, m, geometry, delta, dim);
}

inline ModelSnapshot load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    return load_model(in);
}

}  // namespace avm
