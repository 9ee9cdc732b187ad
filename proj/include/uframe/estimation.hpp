/**
 * @file
 * Outcome sampling, Monte Carlo estimation of Tr[rho O], and the analytic
 * and simulated noise figures of covariant detectors.
 *
 * Haar averages are plain averages over normalized Haar measure. The SU(d)
 * outcome integral uses mass d (see covariant.hpp), which is why the outcome
 * density with respect to the Haar proposal is d Tr[rho U nu^T U^dagger].
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "covariant.hpp"
#include "haar.hpp"
#include "hs_core.hpp"
#include "parallel.hpp"
#include "povm.hpp"

namespace uframe {

struct ShotRecord {
    std::size_t outcome = 0;
};

/// One draw of the continuous covariant POVM by importance sampling.
struct CovariantShot {
    CMatrix unitary;
    double weight = 0.0; ///< d Tr[rho U nu^T U^dagger], mean 1 under Haar
};

struct McEstimate {
    Complex value;
    double std_error = 0.0;      ///< of the real part
    double std_error_imag = 0.0; ///< of the imaginary part
    std::size_t shots = 0;
};

/// A real Monte Carlo figure and its standard error.
struct McValue {
    double value = 0.0;
    double std_error = 0.0;

    [[nodiscard]] double z_score(double expected) const {
        const double err = std::abs(value - expected);
        if (std_error > 0.0) {
            return err / std_error;
        }
        return err <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    }
};

// --- streaming moments ---------------------------------------------------

/// Welford accumulator, mergeable in a fixed order.
class RunningMoments {
  public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    void merge(const RunningMoments &other) {
        if (other.n_ == 0) {
            return;
        }
        const double total = static_cast<double>(n_ + other.n_);
        const double delta = other.mean_ - mean_;
        mean_ += delta * static_cast<double>(other.n_) / total;
        m2_ += other.m2_ + delta * delta * static_cast<double>(n_) *
                               static_cast<double>(other.n_) / total;
        n_ += other.n_;
    }
    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] double sample_variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    [[nodiscard]] double std_error() const {
        return n_ > 0 ? std::sqrt(sample_variance() / static_cast<double>(n_))
                      : 0.0;
    }
    [[nodiscard]] McValue summary() const { return {mean(), std_error()}; }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Entrywise mean and standard error of a random complex matrix.
struct MatrixEstimate {
    CMatrix mean;
    Eigen::MatrixXd std_error_re;
    Eigen::MatrixXd std_error_im;

    /// Largest |mean - expected| / SE over real and imaginary parts.
    [[nodiscard]] double max_z(const CMatrix &expected) const {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < mean.rows(); ++i) {
            for (Eigen::Index j = 0; j < mean.cols(); ++j) {
                const Complex err = mean(i, j) - expected(i, j);
                worst = std::max(worst, McValue{err.real(), std_error_re(i, j)}
                                            .z_score(0.0));
                worst = std::max(worst, McValue{err.imag(), std_error_im(i, j)}
                                            .z_score(0.0));
            }
        }
        return worst;
    }
    [[nodiscard]] bool within(const CMatrix &expected, double n_se) const {
        for (Eigen::Index i = 0; i < mean.rows(); ++i) {
            for (Eigen::Index j = 0; j < mean.cols(); ++j) {
                const Complex err = mean(i, j) - expected(i, j);
                if (std::abs(err.real()) > n_se * std_error_re(i, j) + 1e-12 ||
                    std::abs(err.imag()) > n_se * std_error_im(i, j) + 1e-12) {
                    return false;
                }
            }
        }
        return true;
    }
};

/// Averages sample(rng) over n draws, chunked and reproducible from seed.
inline MatrixEstimate
matrix_monte_carlo(std::size_t n, std::uint64_t seed, Eigen::Index rows,
                   Eigen::Index cols,
                   const std::function<CMatrix(Rng &)> &sample) {
    if (n == 0) {
        throw ValidationError("matrix_monte_carlo: need at least one sample");
    }
    const std::size_t entries = static_cast<std::size_t>(rows * cols);
    const std::vector<ChunkRange> chunks = make_chunks(n);
    std::vector<std::vector<RunningMoments>> per_chunk(
        chunks.size(), std::vector<RunningMoments>(2 * entries));
    for_each_chunk(n, seed, [&](const ChunkRange &chunk, Rng &rng) {
        std::vector<RunningMoments> &acc = per_chunk[chunk.index];
        for (std::size_t k = chunk.begin; k < chunk.end; ++k) {
            const CMatrix x = sample(rng);
            for (std::size_t e = 0; e < entries; ++e) {
                const Complex z = x(static_cast<Eigen::Index>(e) / cols,
                                    static_cast<Eigen::Index>(e) % cols);
                acc[2 * e].add(z.real());
                acc[2 * e + 1].add(z.imag());
            }
        }
    });
    std::vector<RunningMoments> total(2 * entries);
    for (const auto &acc : per_chunk) {
        for (std::size_t e = 0; e < total.size(); ++e) {
            total[e].merge(acc[e]);
        }
    }
    MatrixEstimate out{CMatrix(rows, cols), Eigen::MatrixXd(rows, cols),
                       Eigen::MatrixXd(rows, cols)};
    for (std::size_t e = 0; e < entries; ++e) {
        const auto i = static_cast<Eigen::Index>(e) / cols;
        const auto j = static_cast<Eigen::Index>(e) % cols;
        out.mean(i, j) = Complex(total[2 * e].mean(), total[2 * e + 1].mean());
        out.std_error_re(i, j) = total[2 * e].std_error();
        out.std_error_im(i, j) = total[2 * e + 1].std_error();
    }
    return out;
}

/// Haar Monte Carlo of the SU(d) frame operator: d * E[|U nu^T U^dag>><<.|].
inline MatrixEstimate sud_frame_operator_mc(const DensityMatrix &nu,
                                            std::size_t n, std::uint64_t seed) {
    const Eigen::Index d = nu.dim();
    const CMatrix nu_t = nu.transpose();
    return matrix_monte_carlo(n, seed, d * d, d * d, [&](Rng &rng) {
        const CMatrix u = haar_unitary(d, rng);
        const CVector v = vec(u * nu_t * u.adjoint());
        return CMatrix(static_cast<double>(d) * (v * v.adjoint()));
    });
}

// --- Haar identities ------------------------------------------------------

inline CMatrix swap_operator(Eigen::Index d) {
    CMatrix e = CMatrix::Zero(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            e(j * d + i, i * d + j) = 1.0;
        }
    }
    return e;
}

/// (E[U A U^dagger] over normalized Haar) = Tr[A] I / d.
inline CMatrix haar_first_moment(const CMatrix &a) {
    return a.trace() / static_cast<double>(a.rows()) * identity(a.rows());
}

/// E[U^{(x)2} A U^{(x)2 dagger}] = Tr[P_S A] P_S / d_S + Tr[P_A A] P_A / d_A,
/// d_S = d(d+1)/2, d_A = d(d-1)/2.
inline CMatrix haar_second_moment(const CMatrix &a, Eigen::Index d) {
    const CMatrix e = swap_operator(d);
    const CMatrix id = identity(d * d);
    const CMatrix ps = (id + e) / 2.0;
    const CMatrix pa = (id - e) / 2.0;
    const double ds = d * (d + 1.0) / 2.0;
    const double da = d * (d - 1.0) / 2.0;
    return detail::trace_product(ps, a) / ds * ps +
           detail::trace_product(pa, a) / da * pa;
}

/// Per-component z bound giving the same two-sided false-alarm rate over
/// `components` simultaneous tests as n_se gives for a single one.
inline double familywise_z(std::size_t components, double n_se) {
    if (components <= 1) {
        return n_se;
    }
    const double target =
        std::erfc(n_se / std::sqrt(2.0)) / static_cast<double>(components);
    double lo = n_se;
    double hi = n_se + 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::erfc(mid / std::sqrt(2.0)) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Moment checks compare every real and imaginary entry; the 3 SE level is
// held familywise so a correct sampler passes at the single-test rate.
struct HaarIdentityReport {
    int d = 0;
    std::size_t samples = 0;
    double swap_error = 0.0;
    double first_moment_max_z = 0.0;
    double first_moment_max_error = 0.0;
    double first_moment_z_bound = 0.0;
    bool first_moment_within_3se = false;
    double second_moment_max_z = 0.0;
    double second_moment_max_error = 0.0;
    double second_moment_z_bound = 0.0;
    bool second_moment_within_3se = false;

    [[nodiscard]] bool pass() const {
        return swap_error < 1e-12 && first_moment_within_3se &&
               second_moment_within_3se;
    }
};

inline HaarIdentityReport haar_identity_check(int d, std::size_t n,
                                              std::uint64_t seed,
                                              const CMatrix &a1,
                                              const CMatrix &a2,
                                              const CMatrix &b) {
    const auto dim = static_cast<Eigen::Index>(d);
    if (a1.rows() != dim || a1.cols() != dim || a2.rows() != dim * dim ||
        a2.cols() != dim * dim || b.rows() != dim || b.cols() != dim) {
        throw DimensionError("haar_identity_check: operator shapes do not "
                             "match d");
    }
    HaarIdentityReport report;
    report.d = d;
    report.samples = n;
    report.swap_error = std::abs(
        detail::trace_product(swap_operator(dim), kron(b, b)) -
        detail::trace_product(b, b));

    const MatrixEstimate first =
        matrix_monte_carlo(n, seed, dim, dim, [&](Rng &rng) {
            const CMatrix u = haar_unitary(dim, rng);
            return CMatrix(u * a1 * u.adjoint());
        });
    const CMatrix first_expected = haar_first_moment(a1);
    report.first_moment_max_z = first.max_z(first_expected);
    report.first_moment_max_error = (first.mean - first_expected).cwiseAbs().maxCoeff();
    report.first_moment_z_bound =
        familywise_z(2 * static_cast<std::size_t>(first.mean.size()), 3.0);
    report.first_moment_within_3se =
        first.within(first_expected, report.first_moment_z_bound);

    const MatrixEstimate second =
        matrix_monte_carlo(n, seed + 1, dim * dim, dim * dim, [&](Rng &rng) {
            const CMatrix u = haar_unitary(dim, rng);
            const CMatrix uu = kron(u, u);
            return CMatrix(uu * a2 * uu.adjoint());
        });
    const CMatrix second_expected = haar_second_moment(a2, dim);
    report.second_moment_max_z = second.max_z(second_expected);
    report.second_moment_max_error =
        (second.mean - second_expected).cwiseAbs().maxCoeff();
    report.second_moment_z_bound =
        familywise_z(2 * static_cast<std::size_t>(second.mean.size()), 3.0);
    report.second_moment_within_3se =
        second.within(second_expected, report.second_moment_z_bound);
    return report;
}

/// Uses random test operators drawn from the seed.
inline HaarIdentityReport haar_identity_check(int d, std::size_t n,
                                              std::uint64_t seed) {
    if (n < 1000) {
        throw ValidationError("haar_identity_check: need at least 1000 "
                              "samples");
    }
    const auto dim = static_cast<Eigen::Index>(d);
    Rng rng = make_stream(seed, 0xA11CEull);
    std::normal_distribution<double> normal;
    auto ginibre = [&](Eigen::Index n_rows) {
        CMatrix m(n_rows, n_rows);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            m.data()[i] = Complex(re, im);
        }
        return m;
    };
    const CMatrix a1 = ginibre(dim);
    const CMatrix a2 = ginibre(dim * dim);
    const CMatrix b = ginibre(dim);
    return haar_identity_check(d, n, seed + 2, a1, a2, b);
}

// --- sampling ---------------------------------------------------------------

inline std::vector<ShotRecord> sample_outcomes(const DensityMatrix &rho,
                                               const DensityMatrix *nu,
                                               const Povm &p, std::size_t n,
                                               std::uint64_t seed) {
    if (n == 0) {
        throw ValidationError("sample_outcomes: need at least one shot");
    }
    const std::vector<double> probs = outcome_probabilities(rho, nu, p);
    std::vector<ShotRecord> shots(n);
    for_each_chunk(n, seed, [&](const ChunkRange &chunk, Rng &rng) {
        std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
        for (std::size_t k = chunk.begin; k < chunk.end; ++k) {
            shots[k].outcome = dist(rng);
        }
    });
    return shots;
}

inline std::vector<ShotRecord> sample_outcomes(const DensityMatrix &rho,
                                               const DensityMatrix &nu,
                                               const Povm &p, std::size_t n,
                                               std::uint64_t seed) {
    return sample_outcomes(rho, &nu, p, n, seed);
}

/// Haar proposals U_k weighted by the outcome density d Tr[rho U nu^T U^dag].
inline std::vector<CovariantShot> covariant_sample(const DensityMatrix &rho,
                                                   const DensityMatrix &nu,
                                                   std::size_t n,
                                                   std::uint64_t seed) {
    if (rho.dim() != nu.dim()) {
        throw DimensionError("covariant_sample: state and ancilla dimensions "
                             "differ");
    }
    const Eigen::Index d = rho.dim();
    const CMatrix nu_t = nu.transpose();
    std::vector<CovariantShot> shots(n);
    for_each_chunk(n, seed, [&](const ChunkRange &chunk, Rng &rng) {
        for (std::size_t k = chunk.begin; k < chunk.end; ++k) {
            CMatrix u = haar_unitary(d, rng);
            const double w =
                static_cast<double>(d) *
                detail::trace_product(rho.matrix(), u * nu_t * u.adjoint()).real();
            shots[k] = {std::move(u), std::max(w, 0.0)};
        }
    });
    return shots;
}

// --- estimators -------------------------------------------------------------

/// Mean of f over the shots, standard error sample std / sqrt(n).
inline McEstimate mc_estimate(const std::vector<ShotRecord> &records,
                              const ProcessingFunction &f) {
    if (records.empty()) {
        throw ValidationError("mc_estimate: no records");
    }
    RunningMoments re;
    RunningMoments im;
    for (const ShotRecord &r : records) {
        if (r.outcome >= f.size()) {
            throw DimensionError("mc_estimate: outcome index out of range");
        }
        const Complex v = f.values(static_cast<Eigen::Index>(r.outcome));
        re.add(v.real());
        im.add(v.imag());
    }
    return {Complex(re.mean(), im.mean()), re.std_error(), im.std_error(),
            records.size()};
}

/**
 * Self-normalized importance-sampling mean sum_k w_k f_k / sum_k w_k with
 * delta-method standard error sqrt(sum_k w_k^2 (f_k - mean)^2) / sum_k w_k.
 */
inline McEstimate
mc_estimate(const std::vector<CovariantShot> &shots,
            const std::function<Complex(const CMatrix &)> &f) {
    if (shots.empty()) {
        throw ValidationError("mc_estimate: no records");
    }
    std::vector<Complex> values;
    values.reserve(shots.size());
    CompensatedSum w_sum;
    CompensatedSum wf_re;
    CompensatedSum wf_im;
    for (const CovariantShot &s : shots) {
        const Complex v = f(s.unitary);
        values.push_back(v);
        w_sum.add(s.weight);
        wf_re.add(s.weight * v.real());
        wf_im.add(s.weight * v.imag());
    }
    const double total = w_sum.value();
    if (!(total > 0.0)) {
        throw ValidationError("mc_estimate: importance weights sum to zero");
    }
    const Complex mean(wf_re.value() / total, wf_im.value() / total);
    CompensatedSum var_re;
    CompensatedSum var_im;
    for (std::size_t k = 0; k < shots.size(); ++k) {
        const double w2 = shots[k].weight * shots[k].weight;
        const Complex dev = values[k] - mean;
        var_re.add(w2 * dev.real() * dev.real());
        var_im.add(w2 * dev.imag() * dev.imag());
    }
    return {mean, std::sqrt(var_re.value()) / total,
            std::sqrt(var_im.value()) / total, shots.size()};
}

struct Covariance2x2 {
    double var_re = 0.0;
    double var_im = 0.0;
    double cov = 0.0;

    [[nodiscard]] Eigen::Matrix2d matrix() const {
        Eigen::Matrix2d c;
        c << var_re, cov, cov, var_im;
        return c;
    }
    [[nodiscard]] Eigen::Vector2d eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> s(matrix());
        return s.eigenvalues();
    }
};

/// C with moments g-bar = sum_i g_i p_i.
inline Covariance2x2 covariance_matrix(const CVector &f_values,
                                       const std::vector<double> &probs) {
    if (static_cast<std::size_t>(f_values.size()) != probs.size()) {
        throw DimensionError("covariance_matrix: length mismatch");
    }
    double m_re = 0.0;
    double m_im = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const Complex f = f_values(static_cast<Eigen::Index>(i));
        m_re += probs[i] * f.real();
        m_im += probs[i] * f.imag();
    }
    // centered second pass keeps C positive semidefinite in floating point
    Covariance2x2 c;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const Complex f = f_values(static_cast<Eigen::Index>(i));
        const double dr = f.real() - m_re;
        const double di = f.imag() - m_im;
        c.var_re += probs[i] * dr * dr;
        c.var_im += probs[i] * di * di;
        c.cov += probs[i] * dr * di;
    }
    return c;
}

// --- noise figures ------------------------------------------------------------

inline void require_hermitian_observable(const Observable &o, const char *what) {
    if (!is_hermitian(o.matrix)) {
        throw NotHermitianError(std::string(what) +
                                ": observable must be Hermitian");
    }
}

/// Pure-state average variance of an ideal measurement of O:
/// (Tr[O^2] - Tr[O]^2 / d) / (d + 1).
inline double delta_obs_analytic(const Observable &o, int d) {
    require_hermitian_observable(o, "delta_obs_analytic");
    if (o.matrix.rows() != d) {
        throw DimensionError("delta_obs_analytic: observable is not d x d");
    }
    const double tr = o.matrix.trace().real();
    const double tr2 = o.matrix.squaredNorm();
    return std::max(0.0, (tr2 - tr * tr / d) / (d + 1.0));
}

/// ((Tr[xi^2] - 1) / (d - 1)) * delta_obs.
inline double delta_xi_analytic(const CovariantXi &xi, const Observable &o,
                                int d) {
    if (xi.xi.rows() != d || xi.xi.cols() != d) {
        throw DimensionError("delta_xi_analytic: xi is not d x d");
    }
    if (!is_hermitian(xi.xi)) {
        throw NotHermitianError("delta_xi_analytic: xi must be Hermitian");
    }
    const double tr_xi2 = xi.xi.squaredNorm();
    return (tr_xi2 - 1.0) / (d - 1.0) * delta_obs_analytic(o, d);
}

/// Optimal added-noise coefficient (d^2 + d - 1 - p) / (d p - 1).
inline double delta_opt_analytic(double p, int d) {
    if (d < 2 || !(p > 1.0 / d) || p > 1.0 + 1e-12) {
        throw ValidationError("delta_opt_analytic: purity must lie in "
                              "(1/d, 1]");
    }
    return (static_cast<double>(d) * d + d - 1.0 - p) / (d * p - 1.0);
}

inline double expectation(const CVector &psi, const CMatrix &o) {
    return psi.dot(o * psi).real();
}

/// Haar Monte Carlo of the ideal-measurement variance averaged over pure
/// states U|0>.
inline McValue delta_obs_mc(const Observable &o, int d, std::size_t n,
                            std::uint64_t seed) {
    require_hermitian_observable(o, "delta_obs_mc");
    const auto dim = static_cast<Eigen::Index>(d);
    const CMatrix o2 = o.matrix * o.matrix;
    const std::vector<ChunkRange> chunks = make_chunks(n);
    std::vector<RunningMoments> acc(chunks.size());
    for_each_chunk(n, seed, [&](const ChunkRange &chunk, Rng &rng) {
        for (std::size_t k = chunk.begin; k < chunk.end; ++k) {
            const CVector psi = haar_state(dim, rng);
            const double mean = expectation(psi, o.matrix);
            acc[chunk.index].add(expectation(psi, o2) - mean * mean);
        }
    });
    RunningMoments total;
    for (const RunningMoments &a : acc) {
        total.merge(a);
    }
    return total.summary();
}

/**
 * Monte Carlo of the pure-state-averaged variance of the covariant
 * estimator f_U = Tr[U xi U^dagger O].
 *
 * For each of n_states Haar pure states psi, the second moment of f under
 * the outcome density d <psi|U nu^T U^dagger|psi> is estimated from n_group
 * Haar proposals by importance sampling (the density has unit Haar mean, so
 * no self-normalization is needed), and <psi|O|psi>^2 is subtracted.
 */
inline McValue delta_xi_mc(const CovariantXi &xi, const DensityMatrix &nu,
                           const Observable &o, std::size_t n_states,
                           std::size_t n_group, std::uint64_t seed) {
    require_hermitian_observable(o, "delta_xi_mc");
    if (!covariant_dual_check(xi, nu)) {
        throw ValidationError("delta_xi_mc: xi is not a covariant dual for "
                              "this ancilla");
    }
    if (n_states == 0 || n_group == 0) {
        throw ValidationError("delta_xi_mc: sample counts must be positive");
    }
    const Eigen::Index d = nu.dim();
    const CMatrix nu_t = nu.transpose();
    const CMatrix xi_h = (xi.xi + xi.xi.adjoint()) / 2.0;
    const std::vector<ChunkRange> chunks = make_chunks(n_states);
    std::vector<RunningMoments> acc(chunks.size());
    for_each_chunk(n_states, seed, [&](const ChunkRange &chunk, Rng &rng) {
        for (std::size_t k = chunk.begin; k < chunk.end; ++k) {
            const CVector psi = haar_state(d, rng);
            double second = 0.0;
            for (std::size_t g = 0; g < n_group; ++g) {
                const CMatrix u = haar_unitary(d, rng);
                const CVector u_psi = u.adjoint() * psi;
                const double w = static_cast<double>(d) * expectation(u_psi, nu_t);
                const double f =
                    hs_inner(u * xi_h * u.adjoint(), o.matrix).real();
                second += w * f * f;
            }
            const double mean = expectation(psi, o.matrix);
            acc[chunk.index].add(second / static_cast<double>(n_group) -
                                 mean * mean);
        }
    });
    RunningMoments total;
    for (const RunningMoments &a : acc) {
        total.merge(a);
    }
    return total.summary();
}

/**
 * Exact pure-state average of the estimator variance for a finite detector
 * with system frame Xi_i and processing values f_i (real parts used):
 * sum_i Tr[Xi_i] f_i^2 / d - (Tr[O]^2 + Tr[O^2]) / (d (d + 1)).
 */
inline double pure_state_average_variance(const OperatorFrame &frame,
                                          const ProcessingFunction &f,
                                          const Observable &o) {
    require_hermitian_observable(o, "pure_state_average_variance");
    if (f.size() != frame.size()) {
        throw DimensionError("pure_state_average_variance: length mismatch");
    }
    const auto d = static_cast<double>(frame.dim_h());
    double second = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const double fi = f.values(static_cast<Eigen::Index>(i)).real();
        const double w = i < frame.weights().size() ? frame.weights()[i] : 1.0;
        // elements carry sqrt(w) folded in
        second += std::sqrt(w) * frame[i].trace().real() * fi * fi / d;
    }
    const double tr = o.matrix.trace().real();
    const double tr2 = o.matrix.squaredNorm();
    return second - (tr * tr + tr2) / (d * (d + 1.0));
}

struct VarianceReport {
    int d = 0;
    double p = 0.0;
    double delta_obs = 0.0;
    double delta_xi = 0.0;
    double ratio = 0.0;
    double empirical_variance = 0.0;
    double empirical_std_error = 0.0;
    std::size_t shots = 0;
};

inline VarianceReport variance_report(const CovariantXi &xi,
                                      const DensityMatrix &nu,
                                      const Observable &o,
                                      std::size_t n_states,
                                      std::size_t n_group,
                                      std::uint64_t seed) {
    const int d = static_cast<int>(nu.dim());
    VarianceReport r;
    r.d = d;
    r.p = nu.purity();
    r.delta_obs = delta_obs_analytic(o, d);
    r.delta_xi = delta_xi_analytic(xi, o, d);
    r.ratio = (xi.xi.squaredNorm() - 1.0) / (d - 1.0);
    const McValue mc = delta_xi_mc(xi, nu, o, n_states, n_group, seed);
    r.empirical_variance = mc.value;
    r.empirical_std_error = mc.std_error;
    r.shots = n_states * n_group;
    return r;
}

/// O = H + iK with H, K Hermitian.
inline std::pair<CMatrix, CMatrix> hermitian_parts(const CMatrix &o) {
    return {(o + o.adjoint()) / 2.0, (o - o.adjoint()) / Complex(0.0, 2.0)};
}

/// Per-outcome estimator Re f_i(H) + i Re f_i(K): only real parts of the
/// processing functions of the Hermitian parts are kept.
inline ProcessingFunction estimator_values(const DualFrame &dual,
                                           const CMatrix &o) {
    const auto [h, k] = hermitian_parts(o);
    const ProcessingFunction fh = processing_function(dual, {h, true});
    const ProcessingFunction fk = processing_function(dual, {k, true});
    ProcessingFunction out;
    out.values.resize(fh.values.size());
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        out.values(i) = Complex(fh.values(i).real(), fk.values(i).real());
    }
    return out;
}

} // namespace uframe
