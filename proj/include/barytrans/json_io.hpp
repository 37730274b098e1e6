#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "barytrans/duality.hpp"
#include "barytrans/gaussian.hpp"
#include "barytrans/geodesic.hpp"
#include "barytrans/max_affine.hpp"
#include "barytrans/measures.hpp"
#include "barytrans/wotsolver.hpp"

namespace barytrans {

using nlohmann::json;

// ---------------------------------------------------------------------------
// canonical serialization: sorted keys (nlohmann's default map order) and
// fixed 12-significant-digit floats, so identical inputs yield byte-identical
// output across runs and platforms
// ---------------------------------------------------------------------------

namespace detail {

inline void canonical_dump(const json& j, std::string& out, int indent, int depth) {
    auto newline = [&](int d) {
        if (indent >= 0) {
            out.push_back('\n');
            out.append(static_cast<std::size_t>(indent) * d, ' ');
        }
    };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) { out += "{}"; break; }
            out.push_back('{');
            bool firstItem = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!firstItem) out.push_back(',');
                firstItem = false;
                newline(depth + 1);
                out += json(it.key()).dump();
                out.push_back(':');
                if (indent >= 0) out.push_back(' ');
                canonical_dump(it.value(), out, indent, depth + 1);
            }
            newline(depth);
            out.push_back('}');
            break;
        }
        case json::value_t::array: {
            if (j.empty()) { out += "[]"; break; }
            bool leaves = true;
            for (const auto& v : j)
                if (v.is_structured()) { leaves = false; break; }
            out.push_back('[');
            bool firstItem = true;
            for (const auto& v : j) {
                if (!firstItem) {
                    out.push_back(',');
                    if (indent >= 0 && leaves) out.push_back(' ');
                }
                firstItem = false;
                if (!leaves) newline(depth + 1);
                canonical_dump(v, out, indent, depth + 1);
            }
            if (!leaves) newline(depth);
            out.push_back(']');
            break;
        }
        case json::value_t::number_float: {
            double v = j.get<double>();
            if (!std::isfinite(v))
                throw std::invalid_argument("canonical_dump: non-finite number");
            if (v == 0.0) v = 0.0;  // collapse -0
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.12g", v);
            out += buf;
            break;
        }
        default:
            out += j.dump();
    }
}

}  // namespace detail

inline std::string canonical_dump(const json& j, bool pretty = false) {
    std::string out;
    detail::canonical_dump(j, out, pretty ? 2 : -1, 0);
    out.push_back('\n');
    return out;
}

// ---------------------------------------------------------------------------
// vectors and matrices
// ---------------------------------------------------------------------------

inline json to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline Eigen::VectorXd vector_from_json(const json& a) {
    if (!a.is_array()) throw std::invalid_argument("expected a JSON array of numbers");
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
    return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& a) {
    if (!a.is_array() || a.empty())
        throw std::invalid_argument("expected a nonempty JSON array of rows");
    const std::size_t cols = a[0].size();
    Eigen::MatrixXd m(a.size(), cols);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != cols) throw std::invalid_argument("ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<int>(i), static_cast<int>(j)) = a[i][j].get<double>();
    }
    return m;
}

// ---------------------------------------------------------------------------
// measures: {"type":"discrete","points":[[..]],"weights":[..]} or
//           {"type":"gaussian","mean":[..],"cov":[[..]]}
// ---------------------------------------------------------------------------

using AnyMeasure = std::variant<DiscreteMeasure, GaussianMeasure>;

inline json to_json(const DiscreteMeasure& m) {
    return json{{"type", "discrete"}, {"points", to_json(m.points())},
                {"weights", to_json(m.weights())}};
}

inline json to_json(const GaussianMeasure& m) {
    return json{{"type", "gaussian"}, {"mean", to_json(m.mean())}, {"cov", to_json(m.cov())}};
}

/// Parses either measure type. Discrete weights are normalized when their sum
/// is within 1% of one and rejected otherwise.
inline AnyMeasure measure_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "discrete") {
        Eigen::MatrixXd pts = matrix_from_json(j.at("points"));
        Eigen::VectorXd w = vector_from_json(j.at("weights"));
        if ((w.array() <= 0).any())
            throw std::invalid_argument("discrete measure: weights must be positive");
        const double sum = w.sum();
        if (std::abs(sum - 1.0) > 0.01)
            throw std::invalid_argument("discrete measure: weights sum outside 1% of 1");
        return DiscreteMeasure::from_unnormalized(std::move(pts), std::move(w));
    }
    if (type == "gaussian")
        return GaussianMeasure(vector_from_json(j.at("mean")), matrix_from_json(j.at("cov")));
    throw std::invalid_argument("measure: unknown type '" + type + "'");
}

inline AnyMeasure load_measure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open measure file: " + path);
    json j;
    in >> j;
    return measure_from_json(j);
}

inline DiscreteMeasure expect_discrete(AnyMeasure m, const std::string& what) {
    if (auto* d = std::get_if<DiscreteMeasure>(&m)) return std::move(*d);
    throw std::invalid_argument(what + ": expected a discrete measure");
}

inline GaussianMeasure expect_gaussian(AnyMeasure m, const std::string& what) {
    if (auto* g = std::get_if<GaussianMeasure>(&m)) return std::move(*g);
    throw std::invalid_argument(what + ": expected a gaussian measure");
}

// ---------------------------------------------------------------------------
// solver reports
// ---------------------------------------------------------------------------

inline json to_json(const SolveReport& r) {
    return json{{"value", r.value},
                {"plan", to_json(r.plan.matrix())},
                {"barycenters", to_json(r.barycenters)},
                {"projection", to_json(r.projection)},
                {"fwGap", r.fwGap},
                {"iterations", r.iterations}};
}

inline json to_json(const GaussianSolveReport& r) {
    return json{{"value", r.value},
                {"sigmaBar", to_json(r.sigmaBar)},
                {"A", to_json(r.A)},
                {"projection", to_json(r.projection)},
                {"method", to_string(r.method)},
                {"pgResidual", r.pgResidual},
                {"iterations", r.iterations}};
}

// ---------------------------------------------------------------------------
// grid functions: {"grid":[..],"values":[..]} with "inf" sentinel (1D), or
// {"grid":[[..axis0..],[..axis1..]], ...} for tensor grids
// ---------------------------------------------------------------------------

inline json to_json(const GridFunction& f) {
    json grid;
    if (f.dim() == 1) {
        grid = to_json(f.grid1d());
    } else {
        grid = json::array();
        for (const auto& ax : f.axes()) grid.push_back(to_json(ax));
    }
    json vals = json::array();
    for (long i = 0; i < f.size(); ++i) {
        const double v = f.value(i);
        if (std::isinf(v)) vals.push_back("inf");
        else vals.push_back(v);
    }
    return json{{"grid", std::move(grid)}, {"values", std::move(vals)}};
}

inline GridFunction grid_function_from_json(const json& j) {
    const json& g = j.at("grid");
    std::vector<Eigen::VectorXd> axes;
    if (!g.empty() && g[0].is_array()) {
        for (const auto& ax : g) axes.push_back(vector_from_json(ax));
    } else {
        axes.push_back(vector_from_json(g));
    }
    const json& vj = j.at("values");
    Eigen::VectorXd vals(vj.size());
    for (std::size_t i = 0; i < vj.size(); ++i) {
        if (vj[i].is_string()) {
            if (vj[i].get<std::string>() != "inf")
                throw std::invalid_argument("grid function: unknown value sentinel");
            vals(static_cast<int>(i)) = kInf;
        } else {
            vals(static_cast<int>(i)) = vj[i].get<double>();
        }
    }
    return GridFunction(std::move(axes), std::move(vals));
}

// ---------------------------------------------------------------------------
// max-affine functions: {"slopes":[[..]],"offsets":[..]}
// ---------------------------------------------------------------------------

inline json to_json(const MaxAffineFunction& f) {
    return json{{"slopes", to_json(f.slopes())}, {"offsets", to_json(f.offsets())}};
}

inline MaxAffineFunction max_affine_from_json(const json& j) {
    return MaxAffineFunction(matrix_from_json(j.at("slopes")), vector_from_json(j.at("offsets")));
}

// ---------------------------------------------------------------------------
// path ensembles: columnar CSV (path,time,x0..x{d-1}) plus a JSON summary
// ---------------------------------------------------------------------------

inline std::string to_csv(const PathEnsemble& e) {
    std::ostringstream os;
    os << "path,time";
    for (int c = 0; c < e.dim(); ++c) os << ",x" << c;
    os << "\n";
    char buf[40];
    for (std::size_t p = 0; p < e.paths.size(); ++p) {
        for (int k = 0; k < e.times.size(); ++k) {
            os << p;
            std::snprintf(buf, sizeof(buf), "%.12g", e.times(k));
            os << ',' << buf;
            for (int c = 0; c < e.dim(); ++c) {
                std::snprintf(buf, sizeof(buf), "%.12g", e.paths[p](k, c));
                os << ',' << buf;
            }
            os << "\n";
        }
    }
    return os.str();
}

inline json summary_json(const PathEnsemble& e) {
    json means = json::array();
    json covs = json::array();
    for (int k = 0; k < e.times.size(); ++k) {
        const Eigen::MatrixXd slice = e.slice(k);
        const Eigen::VectorXd m = slice.colwise().mean();
        Eigen::MatrixXd centered = slice.rowwise() - m.transpose();
        const Eigen::MatrixXd c = centered.transpose() * centered / slice.rows();
        means.push_back(to_json(m));
        covs.push_back(to_json(c));
    }
    return json{{"times", to_json(e.times)},
                {"paths", e.paths.size()},
                {"dim", e.dim()},
                {"seed", e.seed},
                {"empiricalMeans", std::move(means)},
                {"empiricalCovs", std::move(covs)}};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << content;
}

}  // namespace barytrans
