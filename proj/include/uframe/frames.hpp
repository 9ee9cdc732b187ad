/**
 * @file
 * Operator frames, frame operators, and dual frames.
 *
 * A frame {Xi_i} of operators from K to H is handled through its synthesis
 * matrix V, whose i-th column is |Xi_i>>. Then the frame operator is
 * F = V V^dagger and a family {Theta_i} is a dual iff V W^dagger = I, with W
 * the synthesis matrix of the duals.
 *
 * Continuous frames are discretized as weighted finite frames: an element
 * with quadrature weight w is stored as sqrt(w) * Xi, and its dual as
 * sqrt(w) * Theta, so every sum below is the quadrature of the integral.
 */
#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hs_core.hpp"

namespace uframe {

struct FrameOperatorMatrix {
    CMatrix matrix;
};

struct FrameBounds {
    double lower = 0.0;
    double upper = 0.0;
};

class OperatorFrame {
  public:
    OperatorFrame() = default;

    explicit OperatorFrame(std::vector<CMatrix> elements,
                           std::vector<std::string> labels = {})
        : elements_(std::move(elements)), labels_(std::move(labels)),
          weights_(elements_.size(), 1.0) {
        check_shapes();
    }

    /// Quadrature-weighted frame; sqrt(weight) is folded into each element.
    static OperatorFrame weighted(std::vector<CMatrix> elements,
                                  std::vector<double> weights,
                                  std::vector<std::string> labels = {}) {
        if (weights.size() != elements.size()) {
            throw DimensionError("OperatorFrame: weight count differs from "
                                 "element count");
        }
        for (std::size_t i = 0; i < elements.size(); ++i) {
            if (!(weights[i] > 0.0)) {
                throw ValidationError("OperatorFrame: weights must be "
                                      "positive");
            }
            elements[i] *= std::sqrt(weights[i]);
        }
        OperatorFrame frame(std::move(elements), std::move(labels));
        frame.weights_ = std::move(weights);
        return frame;
    }

    [[nodiscard]] std::size_t size() const { return elements_.size(); }
    [[nodiscard]] bool empty() const { return elements_.empty(); }
    [[nodiscard]] Eigen::Index dim_h() const {
        return elements_.empty() ? 0 : elements_.front().rows();
    }
    [[nodiscard]] Eigen::Index dim_k() const {
        return elements_.empty() ? 0 : elements_.front().cols();
    }
    /// Elements with sqrt(weight) folded in.
    [[nodiscard]] const std::vector<CMatrix> &elements() const {
        return elements_;
    }
    [[nodiscard]] const CMatrix &operator[](std::size_t i) const {
        return elements_[i];
    }
    [[nodiscard]] const std::vector<double> &weights() const {
        return weights_;
    }
    [[nodiscard]] const std::vector<std::string> &labels() const {
        return labels_;
    }

    /// Columns are |Xi_i>>. Computed once and shared between copies.
    [[nodiscard]] const CMatrix &synthesis() const {
        ensure_cache();
        return cache_->synthesis;
    }

    [[nodiscard]] const FrameOperatorMatrix &frame_operator() const {
        if (elements_.empty()) {
            throw ValidationError("frame_operator: empty frame");
        }
        ensure_cache();
        return cache_->frame_operator;
    }

    [[nodiscard]] const HermitianEig &frame_operator_eig() const {
        static_cast<void>(frame_operator());
        return cache_->eig;
    }

  private:
    struct Cache {
        std::once_flag once;
        CMatrix synthesis;
        FrameOperatorMatrix frame_operator;
        HermitianEig eig;
    };

    void check_shapes() const {
        for (const CMatrix &e : elements_) {
            if (e.rows() != dim_h() || e.cols() != dim_k()) {
                throw DimensionError("OperatorFrame: elements must share one "
                                     "shape");
            }
        }
        if (!labels_.empty() && labels_.size() != elements_.size()) {
            throw DimensionError("OperatorFrame: label count differs from "
                                 "element count");
        }
    }

    void ensure_cache() const {
        std::call_once(cache_->once, [this] {
            const Eigen::Index dim = dim_h() * dim_k();
            CMatrix v(dim, static_cast<Eigen::Index>(elements_.size()));
            for (std::size_t i = 0; i < elements_.size(); ++i) {
                v.col(static_cast<Eigen::Index>(i)) = vec(elements_[i]);
            }
            cache_->synthesis = std::move(v);
            if (!elements_.empty()) {
                const CMatrix &s = cache_->synthesis;
                CMatrix f = s * s.adjoint();
                f = (f + f.adjoint()) / 2.0;
                cache_->eig = herm_eig(f);
                cache_->frame_operator.matrix = std::move(f);
            }
        });
    }

    std::vector<CMatrix> elements_;
    std::vector<std::string> labels_;
    std::vector<double> weights_;
    std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

enum class DualKind { canonical, alternate, covariant };

inline const char *to_string(DualKind kind) {
    switch (kind) {
    case DualKind::canonical:
        return "canonical";
    case DualKind::alternate:
        return "alternate";
    case DualKind::covariant:
        return "covariant";
    }
    return "unknown";
}

/// Index-aligned with its parent frame; elements carry the same folded
/// sqrt(weight) as the parent.
struct DualFrame {
    std::vector<CMatrix> elements;
    DualKind kind = DualKind::canonical;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return elements.size(); }

    [[nodiscard]] CMatrix synthesis() const {
        if (elements.empty()) {
            return {};
        }
        CMatrix w(elements.front().size(),
                  static_cast<Eigen::Index>(elements.size()));
        for (std::size_t i = 0; i < elements.size(); ++i) {
            w.col(static_cast<Eigen::Index>(i)) = vec(elements[i]);
        }
        return w;
    }
};

inline const FrameOperatorMatrix &frame_operator(const OperatorFrame &frame) {
    return frame.frame_operator();
}

inline FrameBounds frame_bounds(const OperatorFrame &frame) {
    const RVector &ev = frame.frame_operator_eig().eigenvalues;
    return {ev.minCoeff(), ev.maxCoeff()};
}

inline bool is_frame(const OperatorFrame &frame,
                     double tolerance = tol::frame_relative) {
    if (frame.empty()) {
        return false;
    }
    const FrameBounds bounds = frame_bounds(frame);
    return bounds.upper > 0.0 && bounds.lower > tolerance * bounds.upper;
}

/// F^{-1}; refuses to pseudo-invert a singular frame operator.
inline CMatrix frame_operator_inverse(const OperatorFrame &frame,
                                      double tolerance = tol::frame_relative) {
    if (!is_frame(frame, tolerance)) {
        const FrameBounds b = frame.empty() ? FrameBounds{} : frame_bounds(frame);
        throw SingularError("frame operator is singular (bounds " +
                            std::to_string(b.lower) + ", " +
                            std::to_string(b.upper) + ")");
    }
    const HermitianEig &eig = frame.frame_operator_eig();
    return eig.eigenvectors *
           eig.eigenvalues.cwiseInverse().cast<Complex>().asDiagonal() *
           eig.eigenvectors.adjoint();
}

namespace detail {
inline DualFrame dual_from_synthesis(const OperatorFrame &frame,
                                     const CMatrix &w, DualKind kind) {
    DualFrame dual;
    dual.kind = kind;
    dual.weights = frame.weights();
    dual.elements.reserve(frame.size());
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
        dual.elements.push_back(unvec(w.col(i), frame.dim_h(), frame.dim_k()));
    }
    return dual;
}
} // namespace detail

inline DualFrame canonical_dual(const OperatorFrame &frame,
                                double tolerance = tol::frame_relative) {
    const CMatrix f_inv = frame_operator_inverse(frame, tolerance);
    return detail::dual_from_synthesis(frame, f_inv * frame.synthesis(),
                                       DualKind::canonical);
}

/**
 * General dual |Theta_i>> = F^{-1}|Xi_i>> + |Y_i>> - sum_j
 * <<Xi_j|F^{-1}|Xi_i>> |Y_j>>.
 *
 * Evaluated as W = F^{-1}V + Y - (Y V^dagger) F^{-1} V, so the cost stays
 * linear in the number of elements.
 */
inline DualFrame alternate_dual(const OperatorFrame &frame,
                                const std::vector<CMatrix> &y_list,
                                double tolerance = tol::frame_relative) {
    if (y_list.size() != frame.size()) {
        throw DimensionError("alternate_dual: need one Y per frame element");
    }
    const CMatrix f_inv = frame_operator_inverse(frame, tolerance);
    const CMatrix &v = frame.synthesis();
    CMatrix y(v.rows(), v.cols());
    for (std::size_t i = 0; i < y_list.size(); ++i) {
        if (y_list[i].rows() != frame.dim_h() ||
            y_list[i].cols() != frame.dim_k()) {
            throw DimensionError("alternate_dual: Y has the wrong shape");
        }
        y.col(static_cast<Eigen::Index>(i)) = vec(y_list[i]);
    }
    const CMatrix canonical = f_inv * v;
    const CMatrix w = canonical + y - (y * v.adjoint()) * canonical;
    return detail::dual_from_synthesis(frame, w, DualKind::alternate);
}

struct Expansion {
    CVector coefficients;
    CMatrix reconstruction;
};

/// c_i = Tr[Theta_i^dagger A], reconstruction sum_i c_i Xi_i.
inline Expansion expand(const CMatrix &a, const OperatorFrame &frame,
                        const DualFrame &dual) {
    if (dual.size() != frame.size()) {
        throw DimensionError("expand: dual and frame differ in size");
    }
    if (a.rows() != frame.dim_h() || a.cols() != frame.dim_k()) {
        throw DimensionError("expand: operator shape does not match frame");
    }
    Expansion out;
    out.coefficients.resize(static_cast<Eigen::Index>(frame.size()));
    out.reconstruction = CMatrix::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        require_same_shape(dual.elements[i], a, "expand");
        const Complex c = hs_inner(dual.elements[i], a);
        out.coefficients(static_cast<Eigen::Index>(i)) = c;
        out.reconstruction += c * frame[i];
    }
    return out;
}

/// || sum_i |Xi_i>><<Theta_i| - I ||_F
inline double completeness_defect(const OperatorFrame &frame,
                                  const DualFrame &dual) {
    if (dual.size() != frame.size()) {
        throw DimensionError("completeness_defect: dual and frame differ in "
                             "size");
    }
    if (frame.empty()) {
        return 0.0;
    }
    const CMatrix w = dual.synthesis();
    if (w.rows() != frame.synthesis().rows()) {
        throw DimensionError("completeness_defect: element shapes differ");
    }
    const CMatrix m = frame.synthesis() * w.adjoint();
    return (m - CMatrix::Identity(m.rows(), m.cols())).norm();
}

} // namespace uframe
