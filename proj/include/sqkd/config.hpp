// Experiment configuration: flat key=value documents (or a JSON mirror,
// selected by file extension) parsed and validated into an ExperimentSpec.
// Every parameter is range-checked up front; unknown keys are rejected; all
// effective values, including applied defaults, are echoed into the report
// header.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqkd/attack.hpp"
#include "sqkd/protocol.hpp"

namespace sqkd {

struct ExperimentSpec {
    enum class Command : std::uint8_t { Run, Sweep, AttackEval, VerifyGolden };
    enum class Format : std::uint8_t { Csv, Json };

    Command command = Command::Run;
    ProtocolConfig config;
    AttackSpec attack;
    std::string sweep_axis;
    std::vector<double> sweep_values;
    std::size_t trials = 32;
    unsigned workers = 1;
    std::string out_path;  // empty: stdout
    Format format = Format::Csv;
    std::string golden_path;

    // Result-affecting parameters in echo order (out path and worker count
    // are execution details and stay out of the report bytes).
    std::vector<std::pair<std::string, std::string>> effective;
};

// Parses a key=value document (tokens separated by whitespace or newlines;
// '#' starts a comment). Throws ConfigError naming the offending key.
ExperimentSpec parse_config_text(const std::string& text, ExperimentSpec::Command command);

// Same keys and validation, JSON object form.
ExperimentSpec parse_config_json(const std::string& text, ExperimentSpec::Command command);

// Dispatches on the file extension (.json selects the JSON parser).
ExperimentSpec parse_config_file(const std::string& path, ExperimentSpec::Command command);

struct CliOverrides {
    std::optional<std::uint64_t> seed_flag;  // --seed beats SQKD_SEED beats config
    std::optional<std::uint64_t> seed_env;
    std::optional<std::size_t> trials;
    std::optional<unsigned> workers;
    std::optional<std::string> out_path;
    std::optional<ExperimentSpec::Format> format;
};

void apply_overrides(ExperimentSpec& spec, const CliOverrides& overrides);

// Final validation (protocol ranges, attack construction) and computation
// of the effective echo list. Throws ConfigError.
void finalize_spec(ExperimentSpec& spec);

std::string to_string(ExperimentSpec::Command command);

}  // namespace sqkd
