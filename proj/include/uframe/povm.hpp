/**
 * @file
 * POVMs on a system or a system+ancilla pair, the system frame
 * Xi_i[nu] = sum_j Psi_j nu^T Psi_j^dagger they induce, and the processing
 * functions that turn outcome statistics into expectation values.
 */
#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frames.hpp"
#include "hs_core.hpp"

namespace uframe {

/// Hermitian, positive semidefinite, unit trace.
class DensityMatrix {
  public:
    static DensityMatrix from(const CMatrix &m) {
        if (!all_finite(m)) {
            throw ValidationError("density matrix has non-finite entries");
        }
        CMatrix h = hermitize(m, "density matrix");
        const double trace = h.trace().real();
        if (std::abs(trace - 1.0) > 1e-10) {
            throw ValidationError("density matrix trace is " +
                                  std::to_string(trace) + ", expected 1");
        }
        if (min_eigenvalue(h) < -tol::negative_eigenvalue) {
            throw NotPositiveError("density matrix is not positive "
                                   "semidefinite");
        }
        return DensityMatrix(std::move(h));
    }

    static DensityMatrix maximally_mixed(Eigen::Index d) {
        return DensityMatrix(identity(d) / static_cast<double>(d));
    }

    static DensityMatrix pure(const CVector &psi) {
        const CVector unit = psi.normalized();
        return DensityMatrix(unit * unit.adjoint());
    }

    [[nodiscard]] const CMatrix &matrix() const { return m_; }
    [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }
    /// Tr[rho^2]; identical for rho and rho^T.
    [[nodiscard]] double purity() const { return m_.squaredNorm(); }
    [[nodiscard]] CMatrix transpose() const { return m_.transpose(); }

  private:
    explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {}
    CMatrix m_;
};

struct Observable {
    CMatrix matrix;
    bool hermitian = false;

    static Observable from(const CMatrix &m) {
        require_square(m, "observable");
        return {m, is_hermitian(m)};
    }
};

struct ProcessingFunction {
    CVector values;
    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(values.size());
    }
};

struct BipartiteSplit {
    Eigen::Index dim_h = 0;
    Eigen::Index dim_k = 0;
};

struct Povm {
    std::vector<CMatrix> elements;
    std::optional<BipartiteSplit> split;

    [[nodiscard]] std::size_t size() const { return elements.size(); }
    [[nodiscard]] Eigen::Index dim() const {
        return elements.empty() ? 0 : elements.front().rows();
    }
};

struct PovmReport {
    std::vector<double> min_eigenvalues;
    double max_hermiticity_defect = 0.0;
    double completeness_defect = 0.0;
    bool valid = false;

    [[nodiscard]] double min_eigenvalue() const {
        return min_eigenvalues.empty()
                   ? 0.0
                   : *std::min_element(min_eigenvalues.begin(),
                                       min_eigenvalues.end());
    }
};

inline PovmReport validate_povm(const Povm &p) {
    PovmReport report;
    if (p.elements.empty()) {
        return report;
    }
    const Eigen::Index d = p.dim();
    CMatrix sum = CMatrix::Zero(d, d);
    bool shapes_ok = true;
    for (const CMatrix &e : p.elements) {
        if (e.rows() != d || e.cols() != d) {
            shapes_ok = false;
            report.min_eigenvalues.push_back(0.0);
            continue;
        }
        const double defect = hermiticity_defect(e);
        report.max_hermiticity_defect =
            std::max(report.max_hermiticity_defect, defect);
        const CMatrix h = (e + e.adjoint()) / 2.0;
        Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
        report.min_eigenvalues.push_back(solver.eigenvalues().minCoeff());
        sum += e;
    }
    report.completeness_defect = (sum - identity(d)).norm();
    if (p.split && p.split->dim_h * p.split->dim_k != d) {
        shapes_ok = false;
    }
    report.valid = shapes_ok &&
                   report.max_hermiticity_defect <= tol::hermitian &&
                   report.min_eigenvalue() >= -tol::negative_eigenvalue &&
                   report.completeness_defect <= tol::completeness;
    return report;
}

/**
 * Spectral decomposition Pi = sum_j |Psi_j>><<Psi_j| with
 * <<Psi_j|Psi_j>> equal to the j-th nonzero eigenvalue.
 *
 * Eigenvalues at or below 1e-12 times the largest are dropped.
 */
inline std::vector<DoubleKet> diagonalize_element(const CMatrix &pi,
                                                  Eigen::Index dim_h,
                                                  Eigen::Index dim_k) {
    if (pi.rows() != dim_h * dim_k || pi.cols() != dim_h * dim_k) {
        throw DimensionError("diagonalize_element: element is not "
                             "(dim_h*dim_k)-square");
    }
    const HermitianEig eig = herm_eig(pi);
    const double hi = eig.eigenvalues.maxCoeff();
    if (eig.eigenvalues.minCoeff() < -tol::negative_eigenvalue) {
        throw NotPositiveError("diagonalize_element: element is not positive "
                               "semidefinite");
    }
    std::vector<DoubleKet> kets;
    for (Eigen::Index j = eig.eigenvalues.size() - 1; j >= 0; --j) {
        const double lambda = eig.eigenvalues(j);
        if (lambda <= tol::clip_relative * hi || lambda <= 0.0) {
            continue;
        }
        kets.push_back({static_cast<std::size_t>(dim_h),
                        static_cast<std::size_t>(dim_k),
                        std::sqrt(lambda) * eig.eigenvectors.col(j)});
    }
    return kets;
}

inline BipartiteSplit require_split(const Povm &p, const DensityMatrix &nu) {
    if (!p.split) {
        throw DimensionError("POVM has no system/ancilla split");
    }
    if (p.split->dim_k != nu.dim()) {
        throw DimensionError("ancilla dimension does not match the POVM");
    }
    if (p.split->dim_h * p.split->dim_k != p.dim()) {
        throw DimensionError("POVM dimension is not dim_h * dim_k");
    }
    return *p.split;
}

/// Xi_i[nu] = sum_j Psi_j^{(i)} nu^T Psi_j^{(i)dagger}, one per outcome.
inline OperatorFrame xi_frame(const Povm &p, const DensityMatrix &nu) {
    const BipartiteSplit split = require_split(p, nu);
    const CMatrix nu_t = nu.transpose();
    std::vector<CMatrix> xi;
    xi.reserve(p.size());
    for (const CMatrix &pi : p.elements) {
        CMatrix acc = CMatrix::Zero(split.dim_h, split.dim_h);
        for (const DoubleKet &ket : diagonalize_element(pi, split.dim_h,
                                                        split.dim_k)) {
            const CMatrix psi = devectorize(ket);
            acc += psi * nu_t * psi.adjoint();
        }
        xi.push_back(std::move(acc));
    }
    return OperatorFrame(std::move(xi));
}

struct UniversalityReport {
    bool universal = false;
    FrameBounds bounds;
};

inline UniversalityReport is_universal(const Povm &p, const DensityMatrix &nu,
                                       double tolerance = tol::frame_relative) {
    const OperatorFrame frame = xi_frame(p, nu);
    return {is_frame(frame, tolerance), frame_bounds(frame)};
}

/// f_i = Tr[Theta_i^dagger O] with any quadrature weight unfolded.
inline ProcessingFunction processing_function(const DualFrame &dual,
                                              const Observable &o) {
    ProcessingFunction f;
    f.values.resize(static_cast<Eigen::Index>(dual.size()));
    for (std::size_t i = 0; i < dual.size(); ++i) {
        require_same_shape(dual.elements[i], o.matrix, "processing_function");
        Complex v = hs_inner(dual.elements[i], o.matrix);
        if (i < dual.weights.size() && dual.weights[i] != 1.0) {
            v /= std::sqrt(dual.weights[i]);
        }
        f.values(static_cast<Eigen::Index>(i)) = v;
    }
    return f;
}

namespace detail {
inline Complex trace_product(const CMatrix &a, const CMatrix &b) {
    return (a.transpose().cwiseProduct(b)).sum();
}

inline std::vector<double> raw_probabilities(const CMatrix &state,
                                             const Povm &p) {
    if (state.rows() != p.dim()) {
        throw DimensionError("state dimension does not match the POVM");
    }
    std::vector<double> probs;
    probs.reserve(p.size());
    for (const CMatrix &e : p.elements) {
        probs.push_back(trace_product(state, e).real());
    }
    return probs;
}

inline CMatrix joint_state(const DensityMatrix &rho, const DensityMatrix *nu,
                           const Povm &p) {
    if (nu == nullptr) {
        return rho.matrix();
    }
    const BipartiteSplit split = require_split(p, *nu);
    if (split.dim_h != rho.dim()) {
        throw DimensionError("system dimension does not match the POVM");
    }
    return kron(rho.matrix(), nu->matrix());
}
} // namespace detail

/// Born probabilities Tr[(rho (x) nu) Pi_i]; pass nu = nullptr for a
/// single-system POVM. Negative round-off is clipped and the vector
/// renormalized; a clip beyond 1e-8 is an error.
inline std::vector<double> outcome_probabilities(const DensityMatrix &rho,
                                                 const DensityMatrix *nu,
                                                 const Povm &p) {
    std::vector<double> probs =
        detail::raw_probabilities(detail::joint_state(rho, nu, p), p);
    for (double &x : probs) {
        if (x < -1e-8) {
            throw ValidationError("negative outcome probability " +
                                  std::to_string(x));
        }
        x = std::max(x, 0.0);
    }
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (!(total > 0.0)) {
        throw ValidationError("outcome probabilities sum to zero");
    }
    for (double &x : probs) {
        x /= total;
    }
    return probs;
}

inline std::vector<double> outcome_probabilities(const DensityMatrix &rho,
                                                 const DensityMatrix &nu,
                                                 const Povm &p) {
    return outcome_probabilities(rho, &nu, p);
}

/// sum_i f_i Tr[(rho (x) nu) Pi_i], without clipping.
inline Complex estimate_expectation_exact(const DensityMatrix &rho,
                                          const DensityMatrix *nu,
                                          const Povm &p,
                                          const ProcessingFunction &f) {
    if (f.size() != p.size()) {
        throw DimensionError("processing function length differs from the "
                             "POVM");
    }
    const std::vector<double> probs =
        detail::raw_probabilities(detail::joint_state(rho, nu, p), p);
    Complex sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        sum += f.values(static_cast<Eigen::Index>(i)) * probs[i];
    }
    return sum;
}

inline Complex estimate_expectation_exact(const DensityMatrix &rho,
                                          const DensityMatrix &nu,
                                          const Povm &p,
                                          const ProcessingFunction &f) {
    return estimate_expectation_exact(rho, &nu, p, f);
}

/// {S^{-1/2} K_i S^{-1/2}} with S = sum_i K_i.
inline Povm info_complete_from_positive(const std::vector<CMatrix> &k_list) {
    if (k_list.empty()) {
        throw ValidationError("info_complete_from_positive: empty list");
    }
    const Eigen::Index d = k_list.front().rows();
    CMatrix s = CMatrix::Zero(d, d);
    for (const CMatrix &k : k_list) {
        if (k.rows() != d || k.cols() != d) {
            throw DimensionError("info_complete_from_positive: shapes differ");
        }
        if (min_eigenvalue(k) < -tol::negative_eigenvalue) {
            throw NotPositiveError("info_complete_from_positive: element is "
                                   "not positive semidefinite");
        }
        s += k;
    }
    const CMatrix s_inv_sqrt = psd_power(s, -0.5);
    Povm p;
    p.elements.reserve(k_list.size());
    for (const CMatrix &k : k_list) {
        CMatrix e = s_inv_sqrt * k * s_inv_sqrt;
        p.elements.push_back((e + e.adjoint()) / 2.0);
    }
    return p;
}

inline bool is_info_complete(const Povm &p,
                             double tolerance = tol::frame_relative) {
    const Eigen::Index d = p.dim();
    if (p.elements.empty() ||
        static_cast<Eigen::Index>(p.size()) < d * d) {
        return false;
    }
    return is_frame(OperatorFrame(p.elements), tolerance);
}

} // namespace uframe
