#include "sqkd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sqkd/analysis.hpp"
#include "sqkd/errors.hpp"

namespace sqkd {

namespace {

using Command = ExperimentSpec::Command;

// Raw key=value pairs in document order.
using KvList = std::vector<std::pair<std::string, std::string>>;

bool is_protocol_key(const std::string& key) {
    static const std::vector<std::string> keys = {"protocol", "N",     "gamma1",      "gamma2",
                                                  "xi",       "kappa", "tau",         "lambda",
                                                  "delta",    "p_t",   "seed",        "exact_counts"};
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

bool is_attack_key(const std::string& key) {
    static const std::vector<std::string> keys = {"attack.name",          "attack.theta",
                                                  "attack.basis_policy",  "attack.legs",
                                                  "attack.unitary_forward", "attack.unitary_backward"};
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

bool key_allowed(Command command, const std::string& key) {
    if (is_protocol_key(key) || is_attack_key(key)) return true;
    if (key == "out" || key == "format" || key == "workers") return true;
    const bool sweep_like = command == Command::Sweep || command == Command::AttackEval;
    if (key == "sweep.axis" || key == "sweep.values" || key == "trials") return sweep_like;
    return false;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
    if (used != value.size()) throw ConfigError(key + ": trailing characters in '" + value + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    if (value.empty() || value[0] == '-')
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    std::size_t used = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(value, &used);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
    }
    if (used != value.size()) throw ConfigError(key + ": trailing characters in '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (item.empty()) throw ConfigError(key + ": empty list element");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError(key + ": expected at least one value");
    return out;
}

Matrix4 parse_unitary(const std::string& key, const std::string& value) {
    const std::vector<double> reals = parse_double_list(key, value);
    if (reals.size() != 32)
        throw ConfigError(key + ": expected 32 numbers (row-major 4x4, real,imag pairs)");
    Matrix4 u;
    for (std::size_t i = 0; i < 16; ++i) {
        u[i] = Amplitude{reals[2 * i], reals[2 * i + 1]};
    }
    if (!is_unitary(u)) throw ConfigError(key + ": matrix is not unitary");
    return u;
}

ProtocolId parse_protocol(const std::string& value) {
    if (value == "P1") return ProtocolId::P1;
    if (value == "P2") return ProtocolId::P2;
    if (value == "P3") return ProtocolId::P3;
    if (value == "BASELINE") return ProtocolId::Baseline;
    throw ConfigError("protocol: expected P1|P2|P3|BASELINE, got '" + value + "'");
}

BasisPolicy parse_policy(const std::string& value) {
    if (value == "always_Z") return BasisPolicy::AlwaysZ;
    if (value == "always_X") return BasisPolicy::AlwaysX;
    if (value == "random_per_round") return BasisPolicy::RandomPerRound;
    throw ConfigError(
        "attack.basis_policy: expected always_Z|always_X|random_per_round, got '" + value + "'");
}

AttackLegs parse_legs(const std::string& value) {
    if (value == "forward") return AttackLegs::Forward;
    if (value == "backward") return AttackLegs::Backward;
    if (value == "both") return AttackLegs::Both;
    throw ConfigError("attack.legs: expected forward|backward|both, got '" + value + "'");
}

ExperimentSpec::Format parse_format(const std::string& value) {
    if (value == "csv") return ExperimentSpec::Format::Csv;
    if (value == "json") return ExperimentSpec::Format::Json;
    throw ConfigError("format: expected csv|json, got '" + value + "'");
}

struct PresenceTracker {
    bool n = false, gamma1 = false, gamma2 = false, xi = false;
    bool kappa = false, tau = false, lambda = false, delta = false;
    bool protocol = false;
};

ExperimentSpec build_spec(const KvList& pairs, Command command) {
    ExperimentSpec spec;
    spec.command = command;
    spec.config.protocol = ProtocolId::P1;
    PresenceTracker seen;

    std::vector<std::string> keys_seen;
    for (const auto& [key, value] : pairs) {
        if (!key_allowed(command, key))
            throw ConfigError(key + ": unknown or inapplicable key for " + to_string(command));
        if (std::find(keys_seen.begin(), keys_seen.end(), key) != keys_seen.end())
            throw ConfigError(key + ": duplicate key");
        keys_seen.push_back(key);

        if (key == "protocol") {
            spec.config.protocol = parse_protocol(value);
            seen.protocol = true;
        } else if (key == "N") {
            spec.config.n = parse_u64(key, value);
            seen.n = true;
        } else if (key == "gamma1") {
            spec.config.gamma1 = parse_double(key, value);
            seen.gamma1 = true;
        } else if (key == "gamma2") {
            spec.config.gamma2 = parse_double(key, value);
            seen.gamma2 = true;
        } else if (key == "xi") {
            spec.config.xi = parse_double(key, value);
            seen.xi = true;
        } else if (key == "kappa") {
            spec.config.kappa = parse_u64(key, value);
            seen.kappa = true;
        } else if (key == "tau") {
            spec.config.tau = parse_u64(key, value);
            seen.tau = true;
        } else if (key == "lambda") {
            spec.config.lambda = parse_u64(key, value);
            seen.lambda = true;
        } else if (key == "delta") {
            spec.config.delta = parse_double(key, value);
            seen.delta = true;
        } else if (key == "p_t") {
            spec.config.p_t = parse_double(key, value);
        } else if (key == "seed") {
            spec.config.seed = parse_u64(key, value);
        } else if (key == "exact_counts") {
            spec.config.exact_counts = parse_bool(key, value);
        } else if (key == "attack.name") {
            spec.attack.name = value;
        } else if (key == "attack.theta") {
            spec.attack.theta = parse_double(key, value);
        } else if (key == "attack.basis_policy") {
            spec.attack.basis_policy = parse_policy(value);
        } else if (key == "attack.legs") {
            spec.attack.legs = parse_legs(value);
        } else if (key == "attack.unitary_forward") {
            spec.attack.unitary_forward = parse_unitary(key, value);
        } else if (key == "attack.unitary_backward") {
            spec.attack.unitary_backward = parse_unitary(key, value);
        } else if (key == "sweep.axis") {
            spec.sweep_axis = value;
        } else if (key == "sweep.values") {
            spec.sweep_values = parse_double_list(key, value);
        } else if (key == "trials") {
            spec.trials = parse_u64(key, value);
        } else if (key == "workers") {
            spec.workers = static_cast<unsigned>(parse_u64(key, value));
        } else if (key == "out") {
            spec.out_path = value;
        } else if (key == "format") {
            spec.format = parse_format(value);
        }
    }

    if (!seen.protocol) throw ConfigError("protocol: required key is missing");
    const ProtocolId id = spec.config.protocol;
    const bool four_state = id == ProtocolId::P1 || id == ProtocolId::Baseline;
    if (four_state) {
        if (!seen.n) throw ConfigError("N: required for P1/BASELINE");
        if (!seen.xi) throw ConfigError("xi: required for P1/BASELINE");
        if (id == ProtocolId::P1 && (!seen.gamma1 || !seen.gamma2))
            throw ConfigError("gamma1: gamma1 and gamma2 are required for P1");
        if (id == ProtocolId::Baseline) {
            // BASELINE pins the gammas; explicit other values are rejected
            // rather than silently overridden.
            if ((seen.gamma1 && spec.config.gamma1 != 0.5) ||
                (seen.gamma2 && spec.config.gamma2 != 0.5))
                throw ConfigError("gamma1: BASELINE fixes gamma1 = gamma2 = 1/2");
            spec.config.gamma1 = 0.5;
            spec.config.gamma2 = 0.5;
        }
        if (seen.kappa || seen.tau || seen.lambda || seen.delta)
            throw ConfigError("kappa: kappa/tau/lambda/delta apply to P2/P3 only");
    } else {
        if (!seen.kappa || !seen.tau || !seen.lambda || !seen.delta)
            throw ConfigError("kappa: kappa, tau, lambda and delta are required for P2/P3");
        if (seen.gamma1 || seen.gamma2 || seen.xi)
            throw ConfigError("gamma1: gamma1/gamma2/xi apply to P1/BASELINE only");
        const std::size_t derived = spec.config.derived_rounds();
        if (seen.n && spec.config.n != derived)
            throw ConfigError("N: must equal round((kappa+tau+lambda)(1+delta)) = " +
                              std::to_string(derived));
        spec.config.n = derived;
    }

    const bool sweep_like = command == Command::Sweep || command == Command::AttackEval;
    if (sweep_like) {
        if (spec.sweep_axis.empty()) throw ConfigError("sweep.axis: required key is missing");
        if (spec.sweep_values.empty()) throw ConfigError("sweep.values: required key is missing");
        if (spec.trials == 0) throw ConfigError("trials: must be >= 1");
    }
    return spec;
}

KvList tokenize_text(const std::string& text) {
    KvList pairs;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::stringstream tokens(line);
        std::string token;
        while (tokens >> token) {
            const std::size_t eq = token.find('=');
            if (eq == std::string::npos || eq == 0)
                throw ConfigError("malformed token '" + token + "': expected key=value");
            pairs.emplace_back(token.substr(0, eq), token.substr(eq + 1));
        }
    }
    return pairs;
}

std::string json_scalar_to_string(const std::string& key, const nlohmann::json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_number()) return value.dump();
    throw ConfigError(key + ": unsupported JSON value type");
}

}  // namespace

ExperimentSpec parse_config_text(const std::string& text, Command command) {
    return build_spec(tokenize_text(text), command);
}

ExperimentSpec parse_config_json(const std::string& text, Command command) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed JSON document: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("malformed JSON document: expected an object");
    KvList pairs;
    for (const auto& [key, value] : doc.items()) {
        if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) {
                if (!joined.empty()) joined.push_back(',');
                joined += json_scalar_to_string(key, item);
            }
            pairs.emplace_back(key, joined);
        } else {
            pairs.emplace_back(key, json_scalar_to_string(key, value));
        }
    }
    return build_spec(pairs, command);
}

ExperimentSpec parse_config_file(const std::string& path, Command command) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    return json ? parse_config_json(buffer.str(), command)
                : parse_config_text(buffer.str(), command);
}

void apply_overrides(ExperimentSpec& spec, const CliOverrides& overrides) {
    if (overrides.seed_env) spec.config.seed = *overrides.seed_env;
    if (overrides.seed_flag) spec.config.seed = *overrides.seed_flag;
    if (overrides.trials) {
        if (spec.command != Command::Sweep && spec.command != Command::AttackEval)
            throw ConfigError("trials: applies to sweep/attack-eval only");
        if (*overrides.trials == 0) throw ConfigError("trials: must be >= 1");
        spec.trials = *overrides.trials;
    }
    if (overrides.workers) {
        if (*overrides.workers == 0) throw ConfigError("workers: must be >= 1");
        spec.workers = *overrides.workers;
    }
    if (overrides.out_path) spec.out_path = *overrides.out_path;
    if (overrides.format) spec.format = *overrides.format;
}

void finalize_spec(ExperimentSpec& spec) {
    spec.config = spec.config.normalized();
    spec.config.validate();
    make_strategy(spec.attack);  // surfaces attack parameter errors now

    if (spec.command == Command::Sweep || spec.command == Command::AttackEval) {
        // Dry-run the axis application over the grid.
        for (double value : spec.sweep_values) {
            ProtocolConfig cfg = spec.config;
            AttackSpec atk = spec.attack;
            apply_axis(cfg, atk, spec.sweep_axis, value);
            cfg.normalized().validate();
            make_strategy(atk);
        }
    }

    auto& echo = spec.effective;
    echo.clear();
    echo.emplace_back("command", to_string(spec.command));
    echo.emplace_back("protocol", to_string(spec.config.protocol));
    echo.emplace_back("N", std::to_string(spec.config.n));
    if (spec.config.protocol == ProtocolId::P1 || spec.config.protocol == ProtocolId::Baseline) {
        echo.emplace_back("gamma1", format_double(spec.config.gamma1));
        echo.emplace_back("gamma2", format_double(spec.config.gamma2));
        echo.emplace_back("xi", format_double(spec.config.xi));
    } else {
        echo.emplace_back("kappa", std::to_string(spec.config.kappa));
        echo.emplace_back("tau", std::to_string(spec.config.tau));
        echo.emplace_back("lambda", std::to_string(spec.config.lambda));
        echo.emplace_back("delta", format_double(spec.config.delta));
    }
    echo.emplace_back("p_t", format_double(spec.config.p_t));
    echo.emplace_back("seed", std::to_string(spec.config.seed));
    echo.emplace_back("exact_counts", spec.config.exact_counts ? "true" : "false");
    echo.emplace_back("attack.name", spec.attack.name);
    if (spec.attack.name == "entangling_probe")
        echo.emplace_back("attack.theta", format_double(spec.attack.theta));
    if (spec.attack.name == "intercept_resend") {
        const char* policy = spec.attack.basis_policy == BasisPolicy::AlwaysZ    ? "always_Z"
                             : spec.attack.basis_policy == BasisPolicy::AlwaysX ? "always_X"
                                                                                : "random_per_round";
        const char* legs = spec.attack.legs == AttackLegs::Forward    ? "forward"
                           : spec.attack.legs == AttackLegs::Backward ? "backward"
                                                                      : "both";
        echo.emplace_back("attack.basis_policy", policy);
        echo.emplace_back("attack.legs", legs);
    }
    if (spec.command == Command::Sweep || spec.command == Command::AttackEval) {
        echo.emplace_back("sweep.axis", spec.sweep_axis);
        std::string values;
        for (double v : spec.sweep_values) {
            if (!values.empty()) values.push_back(',');
            values += format_double(v);
        }
        echo.emplace_back("sweep.values", values);
        echo.emplace_back("trials", std::to_string(spec.trials));
    }
    echo.emplace_back("format", spec.format == ExperimentSpec::Format::Csv ? "csv" : "json");
}

std::string to_string(ExperimentSpec::Command command) {
    switch (command) {
        case Command::Run: return "run";
        case Command::Sweep: return "sweep";
        case Command::AttackEval: return "attack-eval";
        case Command::VerifyGolden: return "verify-golden";
    }
    return "?";
}

}  // namespace sqkd
