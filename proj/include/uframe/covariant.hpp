/**
 * @file
 * Group-covariant detectors.
 *
 * Discrete case: the Weyl-Heisenberg operators U_(a,b) = Z^a X^b on C^d,
 * a projective representation of Z_d x Z_d with
 * U_alpha U_beta U_alpha^dagger = exp(i c(alpha, beta)) U_beta and
 * c((a,b),(a',b')) = 2 pi (a b' - a' b) / d. Flat label alpha = a * d + b,
 * so alpha = 0 is the identity.
 *
 * Continuous case: the SU(d) Bell detector with system frame
 * Xi_U[nu] = U nu^T U^dagger. Integrals over SU(d) use the invariant measure
 * of total mass d, for which the frame elements sum to the identity.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "frames.hpp"
#include "haar.hpp"
#include "hs_core.hpp"
#include "povm.hpp"

namespace uframe {

class WeylSystem {
  public:
    explicit WeylSystem(int d) : d_(d) {
        if (d < 2) {
            throw ValidationError("weyl_system: d must be at least 2");
        }
        const Eigen::Index n = d;
        CMatrix z = CMatrix::Zero(n, n);
        CMatrix x = CMatrix::Zero(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            z(k, k) = omega(static_cast<int>(k));
            x((k + 1) % n, k) = 1.0;
        }
        unitaries_.reserve(static_cast<std::size_t>(d * d));
        CMatrix z_pow = identity(n);
        for (int a = 0; a < d; ++a) {
            CMatrix u = z_pow;
            for (int b = 0; b < d; ++b) {
                unitaries_.push_back(u);
                u = u * x;
            }
            z_pow = z_pow * z;
        }
    }

    [[nodiscard]] int d() const { return d_; }
    [[nodiscard]] std::size_t size() const { return unitaries_.size(); }
    [[nodiscard]] const std::vector<CMatrix> &unitaries() const {
        return unitaries_;
    }
    [[nodiscard]] const CMatrix &operator[](std::size_t alpha) const {
        return unitaries_[alpha];
    }

    [[nodiscard]] std::size_t label(int a, int b) const {
        return static_cast<std::size_t>(mod(a) * d_ + mod(b));
    }
    [[nodiscard]] std::pair<int, int> pair(std::size_t alpha) const {
        return {static_cast<int>(alpha) / d_, static_cast<int>(alpha) % d_};
    }

    /// c(alpha, beta) reduced to [0, 2 pi).
    [[nodiscard]] double cocycle(std::size_t alpha, std::size_t beta) const {
        const auto [a, b] = pair(alpha);
        const auto [a2, b2] = pair(beta);
        return 2.0 * std::numbers::pi * mod(a * b2 - a2 * b) / d_;
    }

    [[nodiscard]] Complex omega(int k) const {
        const double angle = 2.0 * std::numbers::pi * mod(k) / d_;
        return {std::cos(angle), std::sin(angle)};
    }

    /**
     * The unitaries rephased so the set is closed under adjoint: the
     * representative of each pair {alpha, -alpha} (smaller label) is kept
     * and its partner becomes its adjoint; self-inverse elements are scaled
     * to square to the identity, which makes them Hermitian.
     */
    [[nodiscard]] std::vector<CMatrix> adjoint_closed() const {
        std::vector<CMatrix> out(unitaries_.size());
        for (std::size_t alpha = 0; alpha < unitaries_.size(); ++alpha) {
            const auto [a, b] = pair(alpha);
            const std::size_t partner = label(-a, -b);
            if (partner == alpha) {
                const Complex lambda = (unitaries_[alpha] * unitaries_[alpha])(0, 0);
                out[alpha] = unitaries_[alpha] / std::sqrt(lambda);
            } else if (alpha < partner) {
                out[alpha] = unitaries_[alpha];
                out[partner] = unitaries_[alpha].adjoint();
            }
        }
        return out;
    }

  private:
    [[nodiscard]] int mod(int k) const { return ((k % d_) + d_) % d_; }

    int d_;
    std::vector<CMatrix> unitaries_;
};

inline WeylSystem weyl_system(int d) { return WeylSystem(d); }

struct WeylDiagnostics {
    double unitarity_error = 0.0;     ///< max ||U^dagger U - I||_F
    double orthogonality_error = 0.0; ///< max |Tr[U_a^dagger U_b] - d delta_ab|
    double cocycle_error = 0.0;       ///< max ||U_a U_b U_a^dagger - e^{ic} U_b||_F
    double antisymmetry_error = 0.0;  ///< max |c(a,b) + c(b,a)| mod 2 pi
};

inline WeylDiagnostics weyl_diagnostics(const WeylSystem &w) {
    WeylDiagnostics diag;
    const auto d = static_cast<Eigen::Index>(w.d());
    for (std::size_t i = 0; i < w.size(); ++i) {
        diag.unitarity_error = std::max(
            diag.unitarity_error,
            (w[i].adjoint() * w[i] - identity(d)).norm());
        for (std::size_t j = 0; j < w.size(); ++j) {
            const Complex expected = i == j ? static_cast<double>(d) : 0.0;
            diag.orthogonality_error =
                std::max(diag.orthogonality_error,
                         std::abs(hs_inner(w[i], w[j]) - expected));
            const Complex phase = std::polar(1.0, w.cocycle(i, j));
            diag.cocycle_error = std::max(
                diag.cocycle_error,
                (w[i] * w[j] * w[i].adjoint() - phase * w[j]).norm());
            const double sum = std::remainder(w.cocycle(i, j) + w.cocycle(j, i),
                                              2.0 * std::numbers::pi);
            diag.antisymmetry_error =
                std::max(diag.antisymmetry_error, std::abs(sum));
        }
    }
    return diag;
}

/// Pi_i = (alpha_i / d) |U_i>><<U_i| on C^d (x) C^d.
struct BellPovm {
    std::vector<double> weights;
    std::vector<CMatrix> unitaries;
    Povm povm;
};

inline BellPovm bell_povm(const std::vector<CMatrix> &unitaries,
                          const std::vector<double> &weights) {
    if (unitaries.empty() || unitaries.size() != weights.size()) {
        throw DimensionError("bell_povm: need one weight per unitary");
    }
    const Eigen::Index d = unitaries.front().rows();
    BellPovm bell{weights, unitaries, {}};
    bell.povm.split = BipartiteSplit{d, d};
    for (std::size_t i = 0; i < unitaries.size(); ++i) {
        const CMatrix &u = unitaries[i];
        if (u.rows() != d || u.cols() != d) {
            throw DimensionError("bell_povm: unitaries differ in shape");
        }
        if ((u.adjoint() * u - identity(d)).norm() > 1e-10) {
            throw ValidationError("bell_povm: matrix is not unitary");
        }
        if (!(weights[i] > 0.0)) {
            throw ValidationError("bell_povm: weights must be positive");
        }
        const CVector v = vec(u);
        bell.povm.elements.push_back(weights[i] / static_cast<double>(d) *
                                     (v * v.adjoint()));
    }
    const PovmReport report = validate_povm(bell.povm);
    if (report.completeness_defect > tol::completeness) {
        throw ValidationError("bell_povm: elements do not sum to the identity "
                              "(defect " +
                              std::to_string(report.completeness_defect) + ")");
    }
    return bell;
}

inline BellPovm bell_povm(const WeylSystem &w) {
    return bell_povm(w.unitaries(), std::vector<double>(w.size(), 1.0));
}

/// nu = I/d + sum_{alpha > 0} V_alpha / (d (d^2 - 1)) over the
/// adjoint-closed Weyl operators V_alpha.
inline DensityMatrix abelian_ancilla(int d) {
    const WeylSystem w(d);
    const std::vector<CMatrix> closed = w.adjoint_closed();
    const auto n = static_cast<Eigen::Index>(d);
    CMatrix nu = identity(n) / static_cast<double>(d);
    const double scale = 1.0 / (d * (static_cast<double>(d) * d - 1.0));
    for (std::size_t alpha = 1; alpha < closed.size(); ++alpha) {
        nu += scale * closed[alpha];
    }
    return DensityMatrix::from((nu + nu.adjoint()) / 2.0);
}

/// Xi_alpha[nu] = U_alpha nu^T U_alpha^dagger / d.
inline OperatorFrame weyl_frame(const WeylSystem &w, const DensityMatrix &nu) {
    if (nu.dim() != w.d()) {
        throw DimensionError("weyl_frame: ancilla dimension differs from d");
    }
    const CMatrix nu_t = nu.transpose();
    std::vector<CMatrix> xi;
    std::vector<std::string> labels;
    for (std::size_t alpha = 0; alpha < w.size(); ++alpha) {
        xi.push_back(w[alpha] * nu_t * w[alpha].adjoint() /
                     static_cast<double>(w.d()));
        const auto [a, b] = w.pair(alpha);
        labels.push_back("(" + std::to_string(a) + "," + std::to_string(b) + ")");
    }
    return OperatorFrame(std::move(xi), std::move(labels));
}

/// Theta_alpha = (1/d) sum_beta U_beta e^{-i c(beta, alpha)} / Tr[U_beta nu^*].
inline DualFrame abelian_dual(const WeylSystem &w, const DensityMatrix &nu,
                              double tolerance = 1e-12) {
    if (nu.dim() != w.d()) {
        throw DimensionError("abelian_dual: ancilla dimension differs from d");
    }
    const CMatrix nu_conj = nu.matrix().conjugate();
    std::vector<Complex> inv_traces;
    for (std::size_t beta = 0; beta < w.size(); ++beta) {
        const Complex t = detail::trace_product(w[beta], nu_conj);
        if (std::abs(t) <= tolerance) {
            throw SingularError("abelian_dual: Tr[U_beta nu*] vanishes for "
                                "beta = " +
                                std::to_string(beta));
        }
        inv_traces.push_back(1.0 / t);
    }
    const auto d = static_cast<Eigen::Index>(w.d());
    DualFrame dual;
    dual.kind = DualKind::covariant;
    dual.weights.assign(w.size(), 1.0);
    for (std::size_t alpha = 0; alpha < w.size(); ++alpha) {
        CMatrix theta = CMatrix::Zero(d, d);
        for (std::size_t beta = 0; beta < w.size(); ++beta) {
            theta += w[beta] * (inv_traces[beta] *
                                std::polar(1.0, -w.cocycle(beta, alpha)));
        }
        dual.elements.push_back(theta / static_cast<double>(d));
    }
    return dual;
}

// --- SU(d) ---------------------------------------------------------------

struct SudFrameParams {
    int d = 0;
    double p = 0.0; ///< Tr[(nu^T)^2]
    double a = 0.0; ///< (d^2 - 1) / (d p - 1)
    double b = 0.0; ///< (p - d) / (d p - 1)
};

struct CovariantXi {
    CMatrix xi;
};

namespace detail {
inline CMatrix bell_projector(Eigen::Index d) {
    const CVector i_ket = vec(identity(d));
    return i_ket * i_ket.adjoint() / static_cast<double>(d);
}

inline void require_nonsingular_purity(int d, double p) {
    if (p <= 1.0 / d + 1e-10) {
        throw SingularError("SU(d) frame is singular: Tr[nu^2] = 1/d, "
                            "nu = I/d");
    }
}
} // namespace detail

/// (second eigenvalue of F) = (d p - 1) / (d^2 - 1); the first is 1.
inline double sud_frame_eigenvalue(int d, double p) {
    return (d * p - 1.0) / (static_cast<double>(d) * d - 1.0);
}

/// F = |I>><<I|/d + (d p - 1)/(d^2 - 1) (I - |I>><<I|/d).
inline FrameOperatorMatrix sud_frame_operator(const DensityMatrix &nu) {
    const Eigen::Index d = nu.dim();
    const CMatrix proj = detail::bell_projector(d);
    const double lambda = sud_frame_eigenvalue(static_cast<int>(d), nu.purity());
    return {proj + lambda * (identity(d * d) - proj)};
}

inline FrameOperatorMatrix sud_frame_operator_inverse(const DensityMatrix &nu) {
    const Eigen::Index d = nu.dim();
    const double p = nu.purity();
    detail::require_nonsingular_purity(static_cast<int>(d), p);
    const CMatrix proj = detail::bell_projector(d);
    return {proj + (1.0 / sud_frame_eigenvalue(static_cast<int>(d), p)) *
                       (identity(d * d) - proj)};
}

inline SudFrameParams sud_params(int d, double p) {
    detail::require_nonsingular_purity(d, p);
    const double denom = d * p - 1.0;
    return {d, p, (static_cast<double>(d) * d - 1.0) / denom, (p - d) / denom};
}

inline SudFrameParams sud_params(const DensityMatrix &nu) {
    return sud_params(static_cast<int>(nu.dim()), nu.purity());
}

/// Canonical covariant dual Theta_U = U xi U^dagger with xi = a nu^T + b I.
inline CovariantXi sud_canonical_dual_xi(const DensityMatrix &nu) {
    const SudFrameParams params = sud_params(nu);
    return {params.a * nu.transpose() + params.b * identity(nu.dim())};
}

/// The minimum-noise covariant xi in closed form,
/// (d^2-1)/(dp-1) nu^T - (d-p)/(dp-1) I.
inline CovariantXi xi_opt(const DensityMatrix &nu) {
    const auto d = static_cast<double>(nu.dim());
    const double p = nu.purity();
    detail::require_nonsingular_purity(static_cast<int>(d), p);
    const double denom = d * p - 1.0;
    return {(d * d - 1.0) / denom * nu.transpose() -
            (d - p) / denom * identity(nu.dim())};
}

/// U xi U^dagger is a dual of U nu^T U^dagger iff Tr[xi] = 1 and
/// Tr[nu^T xi] = d.
inline bool covariant_dual_check(const CovariantXi &xi, const DensityMatrix &nu,
                                 double tolerance = 1e-8) {
    if (xi.xi.rows() != nu.dim() || xi.xi.cols() != nu.dim()) {
        return false;
    }
    const Complex trace = xi.xi.trace();
    const Complex overlap = detail::trace_product(nu.transpose(), xi.xi);
    return std::abs(trace - 1.0) <= tolerance &&
           std::abs(overlap - static_cast<double>(nu.dim())) <= tolerance;
}

/// f_U(nu, O) = Tr[(U xi U^dagger)^dagger O].
inline Complex sud_processing_value(const CovariantXi &xi, const CMatrix &u,
                                    const Observable &o) {
    if (u.rows() != xi.xi.rows() || o.matrix.rows() != xi.xi.rows()) {
        throw DimensionError("sud_processing_value: dimensions differ");
    }
    return hs_inner(u * xi.xi * u.adjoint(), o.matrix);
}

/// Xi_U[nu] = U nu^T U^dagger over n Haar samples, each with weight d/n.
inline OperatorFrame sud_haar_frame(const DensityMatrix &nu, std::size_t n,
                                    std::uint64_t seed) {
    const Eigen::Index d = nu.dim();
    const CMatrix nu_t = nu.transpose();
    const std::vector<CMatrix> us = haar_unitaries(d, n, seed);
    std::vector<CMatrix> xi;
    xi.reserve(n);
    for (const CMatrix &u : us) {
        xi.push_back(u * nu_t * u.adjoint());
    }
    return OperatorFrame::weighted(
        std::move(xi),
        std::vector<double>(n, static_cast<double>(d) / static_cast<double>(n)));
}

struct SudCovariantPair {
    OperatorFrame frame;
    DualFrame dual;
};

/// Haar-sampled frame U nu^T U^dagger and covariant family U xi U^dagger
/// sharing the same unitaries and weights d/n.
inline SudCovariantPair sud_covariant_pair(const DensityMatrix &nu,
                                           const CovariantXi &xi,
                                           std::size_t n, std::uint64_t seed) {
    const Eigen::Index d = nu.dim();
    const CMatrix nu_t = nu.transpose();
    const std::vector<CMatrix> us = haar_unitaries(d, n, seed);
    const double w = static_cast<double>(d) / static_cast<double>(n);
    std::vector<CMatrix> frame;
    DualFrame dual;
    dual.kind = DualKind::covariant;
    dual.weights.assign(n, w);
    for (const CMatrix &u : us) {
        frame.push_back(u * nu_t * u.adjoint());
        dual.elements.push_back(std::sqrt(w) * (u * xi.xi * u.adjoint()));
    }
    return {OperatorFrame::weighted(std::move(frame),
                                    std::vector<double>(n, w)),
            std::move(dual)};
}

/// Finite SU(d) Bell POVM: n Haar unitaries, each composed with all d^2 Weyl
/// operators. Completeness is exact for any sample because the Weyl Bell
/// POVM already sums to the identity.
inline BellPovm sud_bell_povm(int d, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw ValidationError("sud_bell_povm: need at least one sample");
    }
    const WeylSystem w(d);
    std::vector<CMatrix> us;
    us.reserve(n * w.size());
    for (const CMatrix &u : haar_unitaries(d, n, seed)) {
        for (const CMatrix &v : w.unitaries()) {
            us.push_back(u * v);
        }
    }
    return bell_povm(us, std::vector<double>(us.size(), 1.0 / static_cast<double>(n)));
}

} // namespace uframe
