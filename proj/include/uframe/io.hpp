/**
 * @file
 * JSON encodings used by the command-line tool.
 *
 *   matrix: {"rows": n, "cols": m, "re": [...], "im": [...]}, row-major
 *   frame:  {"dim_h", "dim_k", "weights": [...], "elements": [matrix...]}
 *   povm:   {"dim", "dim_h", "dim_k", "elements": [matrix...]}
 *
 * Frame weights are quadrature weights; elements are stored unweighted and
 * sqrt(weight) is folded in on load.
 */
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frames.hpp"
#include "hs_core.hpp"
#include "povm.hpp"

namespace uframe::io {

using json = nlohmann::json;

class FormatError : public Error {
  public:
    using Error::Error;
};

class FileError : public Error {
  public:
    using Error::Error;
};

inline json to_json(const CMatrix &m) {
    json re = json::array();
    json im = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            re.push_back(m(i, j).real());
            im.push_back(m(i, j).imag());
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

inline CMatrix matrix_from_json(const json &j) {
    try {
        const auto rows = j.at("rows").get<Eigen::Index>();
        const auto cols = j.at("cols").get<Eigen::Index>();
        if (rows <= 0 || cols <= 0) {
            throw FormatError("matrix: rows and cols must be positive");
        }
        const auto re = j.at("re").get<std::vector<double>>();
        std::vector<double> im(re.size(), 0.0);
        if (j.contains("im")) {
            im = j.at("im").get<std::vector<double>>();
        }
        const auto count = static_cast<std::size_t>(rows * cols);
        if (re.size() != count || im.size() != count) {
            throw FormatError("matrix: expected " + std::to_string(count) +
                              " entries");
        }
        CMatrix m(rows, cols);
        for (std::size_t k = 0; k < count; ++k) {
            m(static_cast<Eigen::Index>(k) / cols,
              static_cast<Eigen::Index>(k) % cols) = Complex(re[k], im[k]);
        }
        if (!all_finite(m)) {
            throw FormatError("matrix: entries must be finite");
        }
        return m;
    } catch (const json::exception &e) {
        throw FormatError(std::string("matrix: ") + e.what());
    }
}

inline json to_json(const OperatorFrame &frame) {
    json elements = json::array();
    for (std::size_t i = 0; i < frame.size(); ++i) {
        elements.push_back(to_json(frame[i] / std::sqrt(frame.weights()[i])));
    }
    return {{"dim_h", frame.dim_h()},
            {"dim_k", frame.dim_k()},
            {"weights", frame.weights()},
            {"elements", elements}};
}

inline OperatorFrame frame_from_json(const json &j) {
    try {
        std::vector<CMatrix> elements;
        for (const json &e : j.at("elements")) {
            elements.push_back(matrix_from_json(e));
        }
        const auto dim_h = j.at("dim_h").get<Eigen::Index>();
        const auto dim_k = j.at("dim_k").get<Eigen::Index>();
        for (const CMatrix &e : elements) {
            if (e.rows() != dim_h || e.cols() != dim_k) {
                throw FormatError("frame: element shape differs from "
                                  "dim_h x dim_k");
            }
        }
        if (j.contains("weights") && !j.at("weights").empty()) {
            return OperatorFrame::weighted(
                std::move(elements), j.at("weights").get<std::vector<double>>());
        }
        return OperatorFrame(std::move(elements));
    } catch (const json::exception &e) {
        throw FormatError(std::string("frame: ") + e.what());
    }
}

inline json to_json(const Povm &p) {
    json elements = json::array();
    for (const CMatrix &e : p.elements) {
        elements.push_back(to_json(e));
    }
    json out = {{"dim", p.dim()}, {"elements", elements}};
    if (p.split) {
        out["dim_h"] = p.split->dim_h;
        out["dim_k"] = p.split->dim_k;
    }
    return out;
}

inline Povm povm_from_json(const json &j) {
    try {
        Povm p;
        for (const json &e : j.at("elements")) {
            p.elements.push_back(matrix_from_json(e));
        }
        const auto dim = j.at("dim").get<Eigen::Index>();
        for (const CMatrix &e : p.elements) {
            if (e.rows() != dim || e.cols() != dim) {
                throw FormatError("povm: element is not dim x dim");
            }
        }
        if (j.contains("dim_h") && j.contains("dim_k")) {
            p.split = BipartiteSplit{j.at("dim_h").get<Eigen::Index>(),
                                     j.at("dim_k").get<Eigen::Index>()};
        }
        return p;
    } catch (const json::exception &e) {
        throw FormatError(std::string("povm: ") + e.what());
    }
}

inline json read_json(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw FileError("cannot open " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path);
    if (!out) {
        throw FileError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw FileError("write failed: " + path);
    }
}

} // namespace uframe::io
