// sqkd - semiquantum key distribution simulator front end.
//
// Commands: run (single execution), sweep (efficiency sweep over a
// parameter grid), attack-eval (detection sweep over an attack-parameter
// grid), verify-golden (privacy-amplification regression vector).
//
// Exit codes: 0 success (protocol aborts are data, not failures), 2 invalid
// configuration, 3 internal error or golden mismatch, 4 unwritable output.

#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "sqkd/analysis.hpp"
#include "sqkd/config.hpp"
#include "sqkd/errors.hpp"
#include "sqkd/postprocess.hpp"

namespace {

using sqkd::ExperimentSpec;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;
constexpr int kExitOutput = 4;

class OutputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

sqkd::SweepResult execute_run(const ExperimentSpec& spec) {
    auto strategy = sqkd::make_strategy(spec.attack);
    const sqkd::RunResult run = sqkd::run_protocol(spec.config, *strategy);

    sqkd::SweepResult result;
    result.protocol = run.config.protocol;
    result.param_name = "seed";
    result.trials_per_point = 1;
    sqkd::SweepPoint point;
    point.param_value = static_cast<double>(run.config.seed);
    point.protocol = run.config.protocol;
    sqkd::TrialOutcome outcome;
    outcome.efficiency = run.efficiency();
    outcome.z_ctrl_err = run.error_rates.z_ctrl.rate;
    outcome.x_ctrl_err = run.error_rates.x_ctrl.rate;
    outcome.test_err = run.error_rates.test.rate;
    outcome.aborted = run.aborted;
    if (run.eve_report) {
        outcome.eve_accuracy = run.eve_report->guess_accuracy;
        outcome.eve_coverage = run.eve_report->coverage;
    }
    point.trials.push_back(outcome);
    result.points.push_back(std::move(point));
    return result;
}

sqkd::SweepResult execute_sweep(const ExperimentSpec& spec) {
    return spec.command == ExperimentSpec::Command::AttackEval
               ? sqkd::detection_sweep(spec.config, spec.attack, spec.sweep_axis,
                                       spec.sweep_values, spec.trials, spec.config.seed,
                                       spec.workers)
               : sqkd::efficiency_sweep(spec.config, spec.attack, spec.sweep_axis,
                                        spec.sweep_values, spec.trials, spec.config.seed,
                                        spec.workers);
}

std::string render_report(const ExperimentSpec& spec, const sqkd::SweepResult& result) {
    if (spec.format == ExperimentSpec::Format::Csv) {
        std::ostringstream out;
        sqkd::write_sweep_csv(out, result, spec.effective);
        return out.str();
    }
    nlohmann::ordered_json doc;
    nlohmann::ordered_json params;
    for (const auto& [key, value] : spec.effective) params[key] = value;
    doc["parameters"] = std::move(params);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const sqkd::SweepPoint& point : result.points) {
        for (std::size_t t = 0; t < point.trials.size(); ++t) {
            const sqkd::TrialOutcome& trial = point.trials[t];
            nlohmann::ordered_json row;
            row["protocol"] = sqkd::to_string(point.protocol);
            row["param_name"] = result.param_name;
            row["param_value"] = point.param_value;
            row["trial"] = t;
            row["efficiency"] = trial.efficiency;
            row["z_ctrl_err"] = trial.z_ctrl_err;
            row["x_ctrl_err"] = trial.x_ctrl_err;
            row["test_err"] = trial.test_err;
            row["aborted"] = trial.aborted;
            row["eve_accuracy"] = trial.eve_accuracy;
            row["eve_coverage"] = trial.eve_coverage;
            rows.push_back(std::move(row));
        }
    }
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

void write_report(const ExperimentSpec& spec, const std::string& payload) {
    if (spec.out_path.empty()) {
        std::cout << payload;
        if (!std::cout.good()) throw OutputError("cannot write to stdout");
        return;
    }
    std::ofstream out(spec.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot open output path " + spec.out_path);
    out << payload;
    out.close();
    if (!out.good()) throw OutputError("failed writing output path " + spec.out_path);
}

int run_command(ExperimentSpec::Command command, const std::string& config_path,
                const sqkd::CliOverrides& overrides) {
    ExperimentSpec spec = sqkd::parse_config_file(config_path, command);
    sqkd::apply_overrides(spec, overrides);
    sqkd::finalize_spec(spec);
    const sqkd::SweepResult result =
        command == ExperimentSpec::Command::Run ? execute_run(spec) : execute_sweep(spec);
    write_report(spec, render_report(spec, result));
    return kExitOk;
}

int verify_golden_command(const std::string& path) {
    const sqkd::GoldenVector vec = sqkd::load_golden_file(path);
    if (!sqkd::verify_golden(vec)) {
        std::cerr << "error: golden vector mismatch in " << path << "\n";
        return kExitInternal;
    }
    std::cout << "golden vector ok: " << path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semiquantum key distribution simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string golden_path;
    sqkd::CliOverrides overrides;
    std::uint64_t seed_flag = 0;
    std::size_t trials_flag = 0;
    unsigned workers_flag = 0;
    std::string out_flag;
    std::string format_flag;

    auto add_common = [&](CLI::App* cmd, bool with_trials) {
        cmd->add_option("--config", config_path, "configuration file (key=value, or JSON by extension)")
            ->required();
        cmd->add_option("--seed", seed_flag, "64-bit master seed (overrides SQKD_SEED and config)");
        cmd->add_option("--out", out_flag, "output path (default: stdout)");
        cmd->add_option("--format", format_flag, "report format: csv|json");
        cmd->add_option("--workers", workers_flag, "worker threads (does not affect output bytes)");
        if (with_trials) cmd->add_option("--trials", trials_flag, "trials per grid point");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "execute one protocol run");
    add_common(run_cmd, false);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "efficiency sweep over a parameter grid");
    add_common(sweep_cmd, true);
    CLI::App* eval_cmd =
        app.add_subcommand("attack-eval", "detection sweep over an attack parameter grid");
    add_common(eval_cmd, true);
    CLI::App* golden_cmd =
        app.add_subcommand("verify-golden", "check the privacy-amplification golden vector");
    golden_cmd->add_option("file", golden_path, "golden vector file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (golden_cmd->parsed()) return verify_golden_command(golden_path);

        if (const char* env = std::getenv("SQKD_SEED")) {
            try {
                overrides.seed_env = std::stoull(env);
            } catch (const std::exception&) {
                throw sqkd::ConfigError("SQKD_SEED: expected a non-negative integer");
            }
        }
        if (run_cmd->count("--seed") || sweep_cmd->count("--seed") || eval_cmd->count("--seed"))
            overrides.seed_flag = seed_flag;
        if (sweep_cmd->count("--trials") || eval_cmd->count("--trials"))
            overrides.trials = trials_flag;
        if (run_cmd->count("--workers") || sweep_cmd->count("--workers") ||
            eval_cmd->count("--workers"))
            overrides.workers = workers_flag;
        if (run_cmd->count("--out") || sweep_cmd->count("--out") || eval_cmd->count("--out"))
            overrides.out_path = out_flag;
        if (run_cmd->count("--format") || sweep_cmd->count("--format") ||
            eval_cmd->count("--format")) {
            if (format_flag == "csv") {
                overrides.format = ExperimentSpec::Format::Csv;
            } else if (format_flag == "json") {
                overrides.format = ExperimentSpec::Format::Json;
            } else {
                throw sqkd::ConfigError("format: expected csv|json, got '" + format_flag + "'");
            }
        }

        ExperimentSpec::Command command = ExperimentSpec::Command::Run;
        if (sweep_cmd->parsed()) command = ExperimentSpec::Command::Sweep;
        if (eval_cmd->parsed()) command = ExperimentSpec::Command::AttackEval;
        return run_command(command, config_path, overrides);
    } catch (const sqkd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const OutputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOutput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
