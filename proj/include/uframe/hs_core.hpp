/**
 * @file
 * Dense complex matrix algebra and the Hilbert-Schmidt double-ket
 * isomorphism |A>> = sum_{n,m} A_{nm} |n> (x) |m>.
 *
 * Vectorization is row-major over (n, m) in the computational bases, so
 * amplitude n * dim_k + m of |A>> is the matrix entry A(n, m).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uframe {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class NotHermitianError : public Error {
  public:
    using Error::Error;
};

class NotPositiveError : public Error {
  public:
    using Error::Error;
};

/// Raised when a frame operator (or any matrix that must be inverted) is
/// singular below the relative threshold.
class SingularError : public Error {
  public:
    using Error::Error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double negative_eigenvalue = 1e-10;
inline constexpr double clip_relative = 1e-12;
inline constexpr double frame_relative = 1e-10;
inline constexpr double completeness = 1e-8;
} // namespace tol

inline void require_same_shape(const CMatrix &a, const CMatrix &b,
                               const char *what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape mismatch (" +
                             std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

inline void require_square(const CMatrix &a, const char *what) {
    if (a.rows() != a.cols()) {
        throw DimensionError(std::string(what) + ": matrix must be square");
    }
}

inline bool all_finite(const CMatrix &a) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const Complex z = a.data()[i];
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            return false;
        }
    }
    return true;
}

/// |A>> together with the shape of the operator it came from.
struct DoubleKet {
    std::size_t dim_h = 0;
    std::size_t dim_k = 0;
    CVector amplitudes;

    [[nodiscard]] Complex amplitude(std::size_t n, std::size_t m) const {
        return amplitudes(static_cast<Eigen::Index>(n * dim_k + m));
    }
    [[nodiscard]] double squared_norm() const {
        return amplitudes.squaredNorm();
    }
};

inline DoubleKet vectorize(const CMatrix &a) {
    DoubleKet ket;
    ket.dim_h = static_cast<std::size_t>(a.rows());
    ket.dim_k = static_cast<std::size_t>(a.cols());
    ket.amplitudes.resize(a.size());
    for (Eigen::Index n = 0; n < a.rows(); ++n) {
        for (Eigen::Index m = 0; m < a.cols(); ++m) {
            ket.amplitudes(n * a.cols() + m) = a(n, m);
        }
    }
    return ket;
}

inline CMatrix devectorize(const DoubleKet &v) {
    if (static_cast<std::size_t>(v.amplitudes.size()) != v.dim_h * v.dim_k) {
        throw DimensionError("devectorize: amplitude count does not match "
                             "dim_h * dim_k");
    }
    const auto rows = static_cast<Eigen::Index>(v.dim_h);
    const auto cols = static_cast<Eigen::Index>(v.dim_k);
    CMatrix a(rows, cols);
    for (Eigen::Index n = 0; n < rows; ++n) {
        for (Eigen::Index m = 0; m < cols; ++m) {
            a(n, m) = v.amplitudes(n * cols + m);
        }
    }
    return a;
}

/// Row-major flattening without the DoubleKet wrapper.
inline CVector vec(const CMatrix &a) { return vectorize(a).amplitudes; }

inline CMatrix unvec(const CVector &v, Eigen::Index rows, Eigen::Index cols) {
    return devectorize({static_cast<std::size_t>(rows),
                        static_cast<std::size_t>(cols), v});
}

/// <A, B> = Tr[A^dagger B].
inline Complex hs_inner(const CMatrix &a, const CMatrix &b) {
    require_same_shape(a, b, "hs_inner");
    return (a.conjugate().cwiseProduct(b)).sum();
}

inline double hs_norm(const CMatrix &a) { return a.norm(); }

/// (A (x) B)|C>> = |A C B^T>>.
inline DoubleKet sandwich(const CMatrix &a, const CMatrix &b,
                          const DoubleKet &c_ket) {
    if (static_cast<std::size_t>(a.cols()) != c_ket.dim_h ||
        static_cast<std::size_t>(b.cols()) != c_ket.dim_k) {
        throw DimensionError("sandwich: A C B^T is not defined for these "
                             "shapes");
    }
    return vectorize(a * devectorize(c_ket) * b.transpose());
}

/// Tr_K[|A>><<B|] = A B^dagger.
inline CMatrix partial_trace_ancilla(const DoubleKet &a_ket,
                                     const DoubleKet &b_ket) {
    if (a_ket.dim_k != b_ket.dim_k) {
        throw DimensionError("partial_trace_ancilla: ancilla dimensions "
                             "differ");
    }
    return devectorize(a_ket) * devectorize(b_ket).adjoint();
}

/// Tr_H[|A>><<B|] = A^T B^*.
inline CMatrix partial_trace_system(const DoubleKet &a_ket,
                                    const DoubleKet &b_ket) {
    if (a_ket.dim_h != b_ket.dim_h) {
        throw DimensionError("partial_trace_system: system dimensions "
                             "differ");
    }
    return devectorize(a_ket).transpose() * devectorize(b_ket).conjugate();
}

inline CMatrix kron(const CMatrix &a, const CMatrix &b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
        }
    }
    return out;
}

inline double hermiticity_defect(const CMatrix &a) {
    return (a - a.adjoint()).norm();
}

inline bool is_hermitian(const CMatrix &a, double tolerance = tol::hermitian) {
    return a.rows() == a.cols() && hermiticity_defect(a) <= tolerance;
}

/// Checks Hermiticity within tolerance and returns (A + A^dagger)/2.
inline CMatrix hermitize(const CMatrix &a, const char *what = "hermitize") {
    require_square(a, what);
    if (hermiticity_defect(a) > tol::hermitian) {
        throw NotHermitianError(std::string(what) +
                                ": matrix is not Hermitian (defect " +
                                std::to_string(hermiticity_defect(a)) + ")");
    }
    return (a + a.adjoint()) / 2.0;
}

struct HermitianEig {
    RVector eigenvalues; ///< ascending
    CMatrix eigenvectors;

    [[nodiscard]] CMatrix reconstruct() const {
        return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
               eigenvectors.adjoint();
    }
};

inline HermitianEig herm_eig(const CMatrix &a) {
    const CMatrix h = hermitize(a, "herm_eig");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw Error("herm_eig: eigendecomposition did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const CMatrix &a) {
    return herm_eig(a).eigenvalues.minCoeff();
}

/**
 * A^exponent for Hermitian positive semidefinite A, computed in the
 * eigenbasis.
 *
 * Eigenvalues in [-1e-10, 0) are clipped to zero. A negative exponent
 * requires every eigenvalue to exceed 1e-12 times the largest one.
 */
inline CMatrix psd_power(const CMatrix &a, double exponent) {
    HermitianEig eig = herm_eig(a);
    const double lo = eig.eigenvalues.minCoeff();
    const double hi = eig.eigenvalues.maxCoeff();
    if (lo < -tol::negative_eigenvalue) {
        throw NotPositiveError("psd_power: negative eigenvalue " +
                               std::to_string(lo));
    }
    const double threshold = tol::clip_relative * std::max(hi, 0.0);
    RVector powered(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < powered.size(); ++i) {
        const double lambda = std::max(eig.eigenvalues(i), 0.0);
        if (exponent < 0.0) {
            if (lambda <= threshold || hi <= 0.0) {
                throw SingularError("psd_power: singular matrix cannot be "
                                    "raised to a negative power");
            }
        } else if (lambda <= threshold) {
            powered(i) = exponent == 0.0 ? 1.0 : 0.0;
            continue;
        }
        powered(i) = std::pow(lambda, exponent);
    }
    return eig.eigenvectors * powered.cast<Complex>().asDiagonal() *
           eig.eigenvectors.adjoint();
}

inline CMatrix identity(Eigen::Index d) { return CMatrix::Identity(d, d); }

/// Pauli matrices, used throughout tests and keyword observables.
namespace pauli {
inline CMatrix x() {
    CMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline CMatrix y() {
    CMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
inline CMatrix z() {
    CMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
} // namespace pauli

} // namespace uframe
