// uframe: command-line front end.
//
//   uframe frame check <file> [--tol]
//   uframe povm check <file> [--ancilla file|keyword] [--tol]
//   uframe covariant weyl --d N [--check]
//   uframe covariant sud --d N --ancilla file|keyword
//   uframe estimate run --config cfg.json [--d --seed --shots --output --csv]
//
// Exit codes: 0 success, 1 I/O error, 2 validation failure. Reports go to
// stdout (or --output) as JSON; diagnostics go to stderr.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "uframe/experiment.hpp"
#include "uframe/uframe.hpp"

namespace {

using nlohmann::json;
using namespace uframe;

void emit(const json &report, const std::string &output) {
    const std::string text = report.dump(2) + "\n";
    if (output.empty()) {
        std::cout << text;
    } else {
        io::write_text(output, text);
    }
}

int frame_check(const std::string &path, double tolerance,
                const std::string &output) {
    const OperatorFrame frame = io::frame_from_json(io::read_json(path));
    if (frame.empty()) {
        std::cerr << "frame check: frame has no elements\n";
        return exit_code::validation_failure;
    }
    const FrameBounds bounds = frame_bounds(frame);
    const bool ok = is_frame(frame, tolerance);
    emit({{"elements", frame.size()},
          {"dim_h", frame.dim_h()},
          {"dim_k", frame.dim_k()},
          {"a", bounds.lower},
          {"b", bounds.upper},
          {"is_frame", ok}},
         output);
    return ok ? exit_code::ok : exit_code::validation_failure;
}

int povm_check(const std::string &path, const std::string &ancilla,
               double tolerance, const std::string &output) {
    const Povm p = io::povm_from_json(io::read_json(path));
    const PovmReport report = validate_povm(p);
    json out = {{"elements", p.size()},
                {"dim", p.dim()},
                {"valid", report.valid},
                {"completeness_defect", report.completeness_defect},
                {"min_eigenvalues", report.min_eigenvalues},
                {"max_hermiticity_defect", report.max_hermiticity_defect},
                {"info_complete", report.valid && is_info_complete(p, tolerance)}};
    bool ok = report.valid;
    if (!ancilla.empty()) {
        if (!p.split) {
            std::cerr << "povm check: --ancilla needs dim_h and dim_k\n";
            return exit_code::validation_failure;
        }
        const DensityMatrix nu =
            resolve_ancilla(ancilla, static_cast<int>(p.split->dim_k));
        const UniversalityReport u = is_universal(p, nu, tolerance);
        out["universal"] = u.universal;
        out["frame_bounds"] = {u.bounds.lower, u.bounds.upper};
        ok = ok && u.universal;
    }
    emit(out, output);
    return ok ? exit_code::ok : exit_code::validation_failure;
}

int covariant_weyl(int d, bool check, const std::string &output) {
    const WeylSystem w(d);
    json out = {{"d", d}, {"elements", w.size()}};
    json labels = json::array();
    for (std::size_t alpha = 0; alpha < w.size(); ++alpha) {
        const auto [a, b] = w.pair(alpha);
        labels.push_back({a, b});
    }
    out["labels"] = labels;
    bool ok = true;
    if (check) {
        const WeylDiagnostics diag = weyl_diagnostics(w);
        const PovmReport bell = validate_povm(bell_povm(w).povm);
        out["unitarity_error"] = diag.unitarity_error;
        out["orthogonality_error"] = diag.orthogonality_error;
        out["cocycle_error"] = diag.cocycle_error;
        out["antisymmetry_error"] = diag.antisymmetry_error;
        out["bell_povm_completeness_defect"] = bell.completeness_defect;
        ok = diag.unitarity_error < 1e-12 && diag.orthogonality_error < 1e-10 &&
             diag.cocycle_error < 1e-10 && bell.valid;
        out["pass"] = ok;
    }
    emit(out, output);
    return ok ? exit_code::ok : exit_code::validation_failure;
}

int covariant_sud(int d, const std::string &ancilla, const std::string &output) {
    const DensityMatrix nu = resolve_ancilla(ancilla, d);
    const double p = nu.purity();
    json out = {{"d", d}, {"p", p}};
    const double lambda = sud_frame_eigenvalue(d, p);
    out["frame_eigenvalues"] = json::array(
        {{{"value", 1.0}, {"multiplicity", 1}},
         {{"value", lambda}, {"multiplicity", d * d - 1}}});
    if (p <= 1.0 / d + 1e-10) {
        out["error"] = "frame singular: nu = I/d";
        emit(out, output);
        std::cerr << "frame singular: nu = I/d\n";
        return exit_code::validation_failure;
    }
    const SudFrameParams params = sud_params(nu);
    const CovariantXi xi = xi_opt(nu);
    out["a"] = params.a;
    out["b"] = params.b;
    out["xi_opt"] = io::to_json(xi.xi);
    out["tr_xi_opt_squared"] = xi.xi.squaredNorm();
    out["noise_coefficient"] = delta_opt_analytic(p, d);
    emit(out, output);
    return exit_code::ok;
}

struct RunOverrides {
    std::optional<int> d;
    std::optional<std::uint64_t> seed;
    std::optional<long long> shots;
    std::string output;
    std::string csv;
};

int estimate_run(const std::string &config_path, const RunOverrides &ov) {
    ExperimentConfig config = parse_config(io::read_json(config_path));
    if (ov.d) {
        config.d = *ov.d;
    }
    if (ov.seed) {
        config.seed = *ov.seed;
    }
    if (ov.shots) {
        if (*ov.shots < 1) {
            throw ValidationError("--shots must be at least 1");
        }
        config.shots = static_cast<std::size_t>(*ov.shots);
    }
    if (!ov.output.empty()) {
        config.output = ov.output;
    }
    if (!ov.csv.empty()) {
        config.csv = ov.csv;
    }
    if (config.d < 2) {
        throw ValidationError("d must be at least 2");
    }
    const ExperimentResult result = run(config);
    emit(result.report, config.output);
    if (!config.csv.empty() && !result.csv_header.empty()) {
        io::write_text(config.csv, csv_text(result));
    }
    if (!result.message.empty()) {
        std::cerr << result.message << '\n';
    }
    return result.exit_code;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Operator frames and universal quantum detectors"};
    app.require_subcommand(1);

    double tolerance = tol::frame_relative;
    std::string output;

    auto *frame = app.add_subcommand("frame", "Operator frame tools");
    frame->require_subcommand(1);
    auto *frame_check_cmd = frame->add_subcommand("check", "Frame bounds and verdict");
    std::string frame_file;
    frame_check_cmd->add_option("file", frame_file, "Frame JSON")->required();
    frame_check_cmd->add_option("--tol", tolerance, "Relative eigenvalue threshold");
    frame_check_cmd->add_option("--output", output, "Write report here");

    auto *povm = app.add_subcommand("povm", "POVM tools");
    povm->require_subcommand(1);
    auto *povm_check_cmd = povm->add_subcommand("check", "Validate a POVM");
    std::string povm_file;
    std::string povm_ancilla;
    povm_check_cmd->add_option("file", povm_file, "POVM JSON")->required();
    povm_check_cmd->add_option("--ancilla", povm_ancilla,
                               "Ancilla matrix file or keyword");
    povm_check_cmd->add_option("--tol", tolerance, "Relative eigenvalue threshold");
    povm_check_cmd->add_option("--output", output, "Write report here");

    auto *covariant = app.add_subcommand("covariant", "Covariant detectors");
    covariant->require_subcommand(1);
    int d = 2;
    bool check = false;
    std::string sud_ancilla = "pure-basis";
    auto *weyl_cmd = covariant->add_subcommand("weyl", "Weyl-Heisenberg system");
    weyl_cmd->add_option("--d", d, "Dimension")->check(CLI::Range(2, 64));
    weyl_cmd->add_flag("--check", check, "Orthogonality and cocycle diagnostics");
    weyl_cmd->add_option("--output", output, "Write report here");
    auto *sud_cmd = covariant->add_subcommand("sud", "SU(d) Bell detector");
    sud_cmd->add_option("--d", d, "Dimension")->check(CLI::Range(2, 64));
    sud_cmd->add_option("--ancilla", sud_ancilla, "Ancilla matrix file or keyword");
    sud_cmd->add_option("--output", output, "Write report here");

    auto *estimate = app.add_subcommand("estimate", "Experiments");
    estimate->require_subcommand(1);
    auto *run_cmd = estimate->add_subcommand("run", "Run an experiment config");
    std::string config_path;
    RunOverrides overrides;
    run_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
    run_cmd->add_option("--d", overrides.d, "Override dimension");
    run_cmd->add_option("--seed", overrides.seed, "Override seed");
    run_cmd->add_option("--shots", overrides.shots, "Override shot count");
    run_cmd->add_option("--output", overrides.output, "Write report here");
    run_cmd->add_option("--csv", overrides.csv, "Write per-shot values here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code::validation_failure;
    }

    try {
        if (*frame_check_cmd) {
            return frame_check(frame_file, tolerance, output);
        }
        if (*povm_check_cmd) {
            return povm_check(povm_file, povm_ancilla, tolerance, output);
        }
        if (*weyl_cmd) {
            return covariant_weyl(d, check, output);
        }
        if (*sud_cmd) {
            return covariant_sud(d, sud_ancilla, output);
        }
        if (*run_cmd) {
            return estimate_run(config_path, overrides);
        }
    } catch (const io::FileError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::io_error;
    } catch (const io::FormatError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::io_error;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::validation_failure;
    }
    return exit_code::validation_failure;
}
