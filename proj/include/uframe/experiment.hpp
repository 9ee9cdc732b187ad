/**
 * @file
 * Experiment configurations and the runner behind `uframe estimate run`.
 *
 * Every report embeds the resolved configuration. Reports contain no
 * timestamps, so a fixed config and seed reproduce the same bytes.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "covariant.hpp"
#include "estimation.hpp"
#include "frames.hpp"
#include "io.hpp"
#include "povm.hpp"

namespace uframe {

enum class ExperimentKind {
    estimate,
    reconstruct,
    universality,
    variance_scan,
    optimality_demo,
    haar_check
};

enum class DetectorKind { weyl, sud };

NLOHMANN_JSON_SERIALIZE_ENUM(ExperimentKind,
                             {{ExperimentKind::estimate, "estimate"},
                              {ExperimentKind::reconstruct, "reconstruct"},
                              {ExperimentKind::universality, "universality"},
                              {ExperimentKind::variance_scan, "variance-scan"},
                              {ExperimentKind::optimality_demo,
                               "optimality-demo"},
                              {ExperimentKind::haar_check, "haar-check"}})

NLOHMANN_JSON_SERIALIZE_ENUM(DetectorKind, {{DetectorKind::weyl, "weyl"},
                                            {DetectorKind::sud, "sud"}})

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int io_error = 1;
inline constexpr int validation_failure = 2;
} // namespace exit_code

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::estimate;
    int d = 2;
    DetectorKind detector = DetectorKind::weyl;
    std::string ancilla = "paper-abelian";
    std::string observable = "pauli-z";
    std::string state = "random-pure";
    std::size_t shots = 100000;
    std::uint64_t seed = 1;
    std::string output;
    std::string csv;
};

inline nlohmann::json to_json(const ExperimentConfig &c) {
    return {{"experiment", c.experiment}, {"d", c.d},
            {"detector", c.detector},     {"ancilla", c.ancilla},
            {"observable", c.observable}, {"state", c.state},
            {"shots", c.shots},           {"seed", c.seed},
            {"output", c.output},         {"csv", c.csv}};
}

namespace detail {
template <class Enum>
Enum parse_enum(const nlohmann::json &j, const char *key) {
    const Enum value = j.at(key).get<Enum>();
    // the serializer maps unknown strings to the first enumerator
    if (nlohmann::json(value) != j.at(key)) {
        throw ValidationError(std::string("config: unknown ") + key + " '" +
                              j.at(key).dump() + "'");
    }
    return value;
}
} // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json &j) {
    ExperimentConfig c;
    try {
        if (j.contains("experiment")) {
            c.experiment = detail::parse_enum<ExperimentKind>(j, "experiment");
        }
        if (j.contains("detector")) {
            c.detector = detail::parse_enum<DetectorKind>(j, "detector");
        }
        c.d = j.value("d", c.d);
        c.ancilla = j.value("ancilla", c.ancilla);
        c.observable = j.value("observable", c.observable);
        c.state = j.value("state", c.state);
        if (j.contains("shots")) {
            const auto shots = j.at("shots").get<long long>();
            if (shots < 1) {
                throw ValidationError("config: shots must be at least 1");
            }
            c.shots = static_cast<std::size_t>(shots);
        }
        c.seed = j.value("seed", c.seed);
        c.output = j.value("output", c.output);
        c.csv = j.value("csv", c.csv);
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (c.d < 2) {
        throw ValidationError("config: d must be at least 2");
    }
    return c;
}

struct ExperimentResult {
    int exit_code = exit_code::ok;
    nlohmann::json report;
    std::string message;
    std::vector<std::vector<double>> csv_rows;
    std::vector<std::string> csv_header;
};

namespace detail {

inline CMatrix ginibre(Eigen::Index d, Rng &rng) {
    std::normal_distribution<double> normal;
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        m.data()[i] = Complex(re, im);
    }
    return m;
}

inline CMatrix random_hermitian(Eigen::Index d, Rng &rng) {
    const CMatrix g = ginibre(d, rng);
    return (g + g.adjoint()) / 2.0;
}

inline CMatrix basis_projector(Eigen::Index d) {
    CMatrix m = CMatrix::Zero(d, d);
    m(0, 0) = 1.0;
    return m;
}

/// Separate streams so that changing one input does not shift the others.
enum Stream : std::uint64_t {
    observable_stream = 0x0B5,
    state_stream = 0x57A,
    operators_stream = 0x0A1,
    sampling_stream = 0x5A3
};

inline std::uint64_t sub_seed(std::uint64_t seed, Stream s) {
    Rng rng = make_stream(seed, s);
    return rng();
}

} // namespace detail

/// Keyword (paper-abelian, pure-basis, maximally-mixed) or matrix file.
inline DensityMatrix resolve_ancilla(const std::string &source, int d) {
    const auto dim = static_cast<Eigen::Index>(d);
    if (source == "paper-abelian") {
        return abelian_ancilla(d);
    }
    if (source == "pure-basis") {
        return DensityMatrix::from(detail::basis_projector(dim));
    }
    if (source == "maximally-mixed") {
        return DensityMatrix::maximally_mixed(dim);
    }
    const DensityMatrix nu =
        DensityMatrix::from(io::matrix_from_json(io::read_json(source)));
    if (nu.dim() != dim) {
        throw DimensionError("ancilla file dimension differs from d");
    }
    return nu;
}

/// Keyword (pauli-z, random-hermitian) or matrix file. pauli-z is
/// diag(1, -1, 0, ..., 0).
inline CMatrix resolve_observable(const std::string &source, int d,
                                  std::uint64_t seed) {
    const auto dim = static_cast<Eigen::Index>(d);
    if (source == "pauli-z") {
        CMatrix z = CMatrix::Zero(dim, dim);
        z(0, 0) = 1.0;
        z(1, 1) = -1.0;
        return z;
    }
    if (source == "random-hermitian") {
        Rng rng = make_stream(seed, detail::observable_stream);
        return detail::random_hermitian(dim, rng);
    }
    CMatrix o = io::matrix_from_json(io::read_json(source));
    if (o.rows() != dim || o.cols() != dim) {
        throw DimensionError("observable file dimension differs from d");
    }
    return o;
}

inline DensityMatrix resolve_state(const std::string &source, int d,
                                   std::uint64_t seed) {
    const auto dim = static_cast<Eigen::Index>(d);
    if (source == "random-pure") {
        Rng rng = make_stream(seed, detail::state_stream);
        return DensityMatrix::pure(haar_state(dim, rng));
    }
    if (source == "pure-basis") {
        return DensityMatrix::from(detail::basis_projector(dim));
    }
    if (source == "maximally-mixed") {
        return DensityMatrix::maximally_mixed(dim);
    }
    const DensityMatrix rho =
        DensityMatrix::from(io::matrix_from_json(io::read_json(source)));
    if (rho.dim() != dim) {
        throw DimensionError("state file dimension differs from d");
    }
    return rho;
}

namespace detail {

inline bool is_maximally_mixed(const DensityMatrix &nu) {
    return std::abs(nu.purity() - 1.0 / static_cast<double>(nu.dim())) <= 1e-10;
}

inline ExperimentResult singular_result(const DensityMatrix &nu,
                                        nlohmann::json report) {
    ExperimentResult r;
    r.exit_code = exit_code::validation_failure;
    r.message = is_maximally_mixed(nu) ? "frame singular: nu = I/d"
                                       : "frame singular";
    report["universal"] = false;
    report["error"] = r.message;
    r.report = std::move(report);
    return r;
}

struct WeylDetector {
    WeylSystem weyl;
    BellPovm bell;
    OperatorFrame frame;
};

inline WeylDetector make_weyl_detector(int d, const DensityMatrix &nu) {
    WeylSystem w(d);
    BellPovm bell = bell_povm(w);
    OperatorFrame frame = xi_frame(bell.povm, nu);
    return {std::move(w), std::move(bell), std::move(frame)};
}

inline nlohmann::json nullable(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline ExperimentResult run_estimate(const ExperimentConfig &c,
                                     nlohmann::json report) {
    const DensityMatrix nu = resolve_ancilla(c.ancilla, c.d);
    const CMatrix o = resolve_observable(c.observable, c.d, c.seed);
    const DensityMatrix rho = resolve_state(c.state, c.d, c.seed);
    const Observable obs = Observable::from(o);
    const std::uint64_t seed = sub_seed(c.seed, sampling_stream);
    const Complex exact = detail::trace_product(rho.matrix(), o);
    const double delta_obs =
        obs.hermitian ? delta_obs_analytic(obs, c.d) : std::nan("");
    ExperimentResult r;

    if (c.detector == DetectorKind::weyl) {
        const WeylDetector det = make_weyl_detector(c.d, nu);
        if (!is_frame(det.frame)) {
            return singular_result(nu, std::move(report));
        }
        const DualFrame dual = canonical_dual(det.frame);
        const ProcessingFunction f = estimator_values(dual, o);
        const std::vector<ShotRecord> shots =
            sample_outcomes(rho, nu, det.bell.povm, c.shots, seed);
        const McEstimate est = mc_estimate(shots, f);
        const double delta_xi =
            obs.hermitian ? pure_state_average_variance(det.frame, f, obs)
                          : std::nan("");
        const Covariance2x2 cov =
            covariance_matrix(f.values, outcome_probabilities(rho, nu,
                                                              det.bell.povm));
        report["estimate"] = est.value.real();
        report["estimate_imag"] = est.value.imag();
        report["std_error"] = est.std_error;
        report["std_error_imag"] = est.std_error_imag;
        report["exact"] = exact.real();
        report["exact_imag"] = exact.imag();
        report["delta_obs"] = nullable(delta_obs);
        report["delta_xi"] = nullable(delta_xi);
        report["ratio"] = nullable(delta_xi / delta_obs);
        report["state_covariance"] = {cov.var_re, cov.cov, cov.var_im};
        r.csv_header = {"shot", "outcome", "f_re", "f_im"};
        for (std::size_t k = 0; k < shots.size(); ++k) {
            const Complex v = f.values(static_cast<Eigen::Index>(shots[k].outcome));
            r.csv_rows.push_back({static_cast<double>(k),
                                  static_cast<double>(shots[k].outcome),
                                  v.real(), v.imag()});
        }
    } else {
        if (nu.purity() <= 1.0 / c.d + 1e-10) {
            return singular_result(nu, std::move(report));
        }
        const CovariantXi xi = sud_canonical_dual_xi(nu);
        const auto [h, k] = hermitian_parts(o);
        const std::vector<CovariantShot> shots =
            covariant_sample(rho, nu, c.shots, seed);
        auto value = [&](const CMatrix &u) {
            return Complex(sud_processing_value(xi, u, {h, true}).real(),
                           sud_processing_value(xi, u, {k, true}).real());
        };
        const McEstimate est = mc_estimate(shots, value);
        const double delta_xi =
            obs.hermitian ? delta_xi_analytic(xi, obs, c.d) : std::nan("");
        report["estimate"] = est.value.real();
        report["estimate_imag"] = est.value.imag();
        report["std_error"] = est.std_error;
        report["std_error_imag"] = est.std_error_imag;
        report["exact"] = exact.real();
        report["exact_imag"] = exact.imag();
        report["delta_obs"] = nullable(delta_obs);
        report["delta_xi"] = nullable(delta_xi);
        report["ratio"] = nullable(delta_xi / delta_obs);
        r.csv_header = {"shot", "weight", "f_re", "f_im"};
        for (std::size_t s = 0; s < shots.size(); ++s) {
            const Complex v = value(shots[s].unitary);
            r.csv_rows.push_back({static_cast<double>(s), shots[s].weight,
                                  v.real(), v.imag()});
        }
    }
    r.report = std::move(report);
    return r;
}

inline constexpr std::size_t reconstruct_operators = 50;

inline ExperimentResult run_reconstruct(const ExperimentConfig &c,
                                        nlohmann::json report) {
    const DensityMatrix nu = resolve_ancilla(c.ancilla, c.d);
    ExperimentResult r;
    OperatorFrame frame;
    if (c.detector == DetectorKind::weyl) {
        frame = make_weyl_detector(c.d, nu).frame;
    } else {
        if (nu.purity() <= 1.0 / c.d + 1e-10) {
            return singular_result(nu, std::move(report));
        }
        frame = sud_haar_frame(nu, c.shots, sub_seed(c.seed, sampling_stream));
    }
    if (!is_frame(frame)) {
        return singular_result(nu, std::move(report));
    }
    const DualFrame dual = canonical_dual(frame);
    Rng rng = make_stream(c.seed, operators_stream);
    double max_error = 0.0;
    for (std::size_t i = 0; i < reconstruct_operators; ++i) {
        const CMatrix a = ginibre(c.d, rng);
        max_error = std::max(max_error,
                             (expand(a, frame, dual).reconstruction - a).norm());
    }
    const FrameBounds bounds = frame_bounds(frame);
    report["operators"] = reconstruct_operators;
    report["frame_elements"] = frame.size();
    report["frame_bounds"] = {bounds.lower, bounds.upper};
    report["completeness_defect"] = completeness_defect(frame, dual);
    report["max_reconstruction_error"] = max_error;
    if (c.detector == DetectorKind::weyl) {
        try {
            const DualFrame closed = abelian_dual(WeylSystem(c.d), nu);
            double diff = 0.0;
            for (std::size_t i = 0; i < dual.size(); ++i) {
                diff = std::max(diff,
                                (closed.elements[i] - dual.elements[i]).norm());
            }
            report["closed_form_dual_difference"] = diff;
        } catch (const SingularError &e) {
            report["closed_form_dual_difference"] = nullptr;
            report["closed_form_dual_error"] = e.what();
        }
    }
    report["pass"] = max_error < 1e-8;
    if (max_error >= 1e-8) {
        r.exit_code = exit_code::validation_failure;
        r.message = "reconstruction error exceeds 1e-8";
    }
    r.report = std::move(report);
    return r;
}

inline ExperimentResult run_universality(const ExperimentConfig &c,
                                         nlohmann::json report) {
    const DensityMatrix nu = resolve_ancilla(c.ancilla, c.d);
    report["purity"] = nu.purity();
    ExperimentResult r;
    if (c.detector == DetectorKind::weyl) {
        const WeylDetector det = make_weyl_detector(c.d, nu);
        const UniversalityReport u = is_universal(det.bell.povm, nu);
        report["frame_bounds"] = {u.bounds.lower, u.bounds.upper};
        if (!u.universal) {
            return singular_result(nu, std::move(report));
        }
        report["universal"] = true;
    } else {
        if (nu.purity() <= 1.0 / c.d + 1e-10) {
            return singular_result(nu, std::move(report));
        }
        const double lambda = sud_frame_eigenvalue(c.d, nu.purity());
        report["frame_bounds"] = {std::min(lambda, 1.0), std::max(lambda, 1.0)};
        report["universal"] = true;
    }
    r.report = std::move(report);
    return r;
}

/// Ancilla diag(l, (1-l)/(d-1), ...) with Tr[nu^2] = p.
inline DensityMatrix ancilla_with_purity(int d, double p) {
    const double l = (1.0 + std::sqrt((d - 1.0) * (d * p - 1.0))) / d;
    CMatrix m = CMatrix::Zero(d, d);
    m(0, 0) = l;
    for (int i = 1; i < d; ++i) {
        m(i, i) = (1.0 - l) / (d - 1.0);
    }
    return DensityMatrix::from(m);
}

inline ExperimentResult run_variance_scan(const ExperimentConfig &c,
                                          nlohmann::json report) {
    const CMatrix o = resolve_observable(c.observable, c.d, c.seed);
    const Observable obs = Observable::from(o);
    const double delta_obs = delta_obs_analytic(obs, c.d);
    const std::size_t n_group = 10;
    const std::size_t n_states = std::max<std::size_t>(1, c.shots / n_group);
    nlohmann::json rows = nlohmann::json::array();
    bool decreasing = true;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 20; ++k) {
        const double p = 1.0 / c.d + (1.0 - 1.0 / c.d) * k / 20.0;
        const double coefficient = delta_opt_analytic(p, c.d);
        decreasing = decreasing && coefficient < previous;
        previous = coefficient;
        const DensityMatrix nu = ancilla_with_purity(c.d, p);
        const McValue mc =
            delta_xi_mc(xi_opt(nu), nu, obs, n_states, n_group,
                        sub_seed(c.seed + static_cast<std::uint64_t>(k),
                                 sampling_stream));
        rows.push_back({{"p", p},
                        {"coefficient", coefficient},
                        {"delta_opt", coefficient * delta_obs},
                        {"delta_xi_mc", mc.value},
                        {"delta_xi_mc_std_error", mc.std_error}});
    }
    report["delta_obs"] = delta_obs;
    report["scan"] = rows;
    report["strictly_decreasing"] = decreasing;
    report["minimum_at_p"] = 1.0;
    ExperimentResult r;
    r.report = std::move(report);
    return r;
}

inline ExperimentResult run_optimality_demo(const ExperimentConfig &c,
                                            nlohmann::json report) {
    const DensityMatrix nu = resolve_ancilla(c.ancilla, c.d);
    const CMatrix o = resolve_observable(c.observable, c.d, c.seed);
    const Observable obs = Observable::from(o);
    ExperimentResult r;
    report["p"] = nu.purity();
    if (c.detector == DetectorKind::weyl) {
        const WeylDetector det = make_weyl_detector(c.d, nu);
        if (!is_frame(det.frame)) {
            return singular_result(nu, std::move(report));
        }
        const ProcessingFunction f =
            estimator_values(canonical_dual(det.frame), o);
        const double delta_obs = delta_obs_analytic(obs, c.d);
        const double delta_xi = pure_state_average_variance(det.frame, f, obs);
        report["delta_obs"] = delta_obs;
        report["delta_xi"] = delta_xi;
        report["ratio"] = delta_xi / delta_obs;
    } else {
        if (nu.purity() <= 1.0 / c.d + 1e-10) {
            return singular_result(nu, std::move(report));
        }
        const CovariantXi xi = xi_opt(nu);
        const std::size_t n_group = 10;
        const VarianceReport v = variance_report(
            xi, nu, obs, std::max<std::size_t>(1, c.shots / n_group), n_group,
            sub_seed(c.seed, sampling_stream));
        report["xi_opt"] = io::to_json(xi.xi);
        report["delta_obs"] = v.delta_obs;
        report["delta_xi"] = v.delta_xi;
        report["ratio"] = v.ratio;
        report["d_plus_2"] = c.d + 2;
        report["delta_opt_coefficient"] = delta_opt_analytic(v.p, c.d);
        report["empirical_delta_xi"] = v.empirical_variance;
        report["empirical_delta_xi_std_error"] = v.empirical_std_error;
        report["empirical_ratio"] = v.empirical_variance / v.delta_obs;
        report["empirical_ratio_std_error"] =
            v.empirical_std_error / v.delta_obs;
        report["samples"] = v.shots;
    }
    r.report = std::move(report);
    return r;
}

inline ExperimentResult run_haar_check(const ExperimentConfig &c,
                                       nlohmann::json report) {
    const HaarIdentityReport h =
        haar_identity_check(c.d, std::max<std::size_t>(c.shots, 1000),
                            sub_seed(c.seed, sampling_stream));
    report["samples"] = h.samples;
    report["swap_error"] = h.swap_error;
    report["first_moment_max_error"] = h.first_moment_max_error;
    report["first_moment_max_z"] = h.first_moment_max_z;
    report["first_moment_z_bound"] = h.first_moment_z_bound;
    report["second_moment_max_error"] = h.second_moment_max_error;
    report["second_moment_max_z"] = h.second_moment_max_z;
    report["second_moment_z_bound"] = h.second_moment_z_bound;
    report["pass"] = h.pass();
    ExperimentResult r;
    if (!h.pass()) {
        r.exit_code = exit_code::validation_failure;
        r.message = "Haar identities outside 3 standard errors";
    }
    r.report = std::move(report);
    return r;
}

} // namespace detail

/// Runs one experiment. Validation problems (singular frames, bad inputs)
/// become exit code 2 with a message; I/O errors propagate as io::FileError.
inline ExperimentResult run(const ExperimentConfig &config) {
    nlohmann::json report;
    report["config"] = to_json(config);
    report["experiment"] = config.experiment;
    try {
        switch (config.experiment) {
        case ExperimentKind::estimate:
            return detail::run_estimate(config, std::move(report));
        case ExperimentKind::reconstruct:
            return detail::run_reconstruct(config, std::move(report));
        case ExperimentKind::universality:
            return detail::run_universality(config, std::move(report));
        case ExperimentKind::variance_scan:
            return detail::run_variance_scan(config, std::move(report));
        case ExperimentKind::optimality_demo:
            return detail::run_optimality_demo(config, std::move(report));
        case ExperimentKind::haar_check:
            return detail::run_haar_check(config, std::move(report));
        }
    } catch (const io::FileError &) {
        throw;
    } catch (const io::FormatError &) {
        throw;
    } catch (const Error &e) {
        ExperimentResult r;
        r.exit_code = exit_code::validation_failure;
        r.message = e.what();
        report["error"] = r.message;
        r.report = std::move(report);
        return r;
    }
    throw Error("unreachable experiment kind");
}

inline std::string csv_text(const ExperimentResult &r) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < r.csv_header.size(); ++i) {
        out << (i ? "," : "") << r.csv_header[i];
    }
    out << '\n';
    for (const auto &row : r.csv_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << row[i];
        }
        out << '\n';
    }
    return out.str();
}

} // namespace uframe
