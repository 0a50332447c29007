#include "sqkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "sqkd/errors.hpp"

namespace sqkd {

ProportionBreakdown theoretical_proportions_p1(double gamma1, double gamma2, double xi,
                                               XiConvention convention) {
    ProportionBreakdown out;
    out.z_sift = gamma1 * gamma2;
    out.x_sift = (1.0 - gamma1) * gamma2;
    out.z_ctrl = gamma1 * (1.0 - gamma2);
    out.x_ctrl = (1.0 - gamma1) * (1.0 - gamma2);
    out.ctrl = out.z_ctrl + out.x_ctrl;
    if (convention == XiConvention::Step6) {
        out.test = xi * out.z_sift;
        out.info = (1.0 - xi) * out.z_sift;
    } else {
        out.info = xi * out.z_sift;
        out.test = (1.0 - xi) * out.z_sift;
    }
    return out;
}

ProportionBreakdown theoretical_proportions_p23(std::size_t kappa, std::size_t tau,
                                                std::size_t lambda) {
    const double total = static_cast<double>(kappa + tau + lambda);
    ProportionBreakdown out;
    out.ctrl = static_cast<double>(lambda) / total;
    out.test = static_cast<double>(tau) / total;
    out.info = static_cast<double>(kappa) / total;
    // Category split: preparation is uniform under P2, all-X under P3, so
    // the category view is protocol-specific; the halved split below is the
    // P2 reading and tests use the role fields for both protocols.
    out.z_sift = (out.info + out.test) / 2.0;
    out.x_sift = (out.info + out.test) / 2.0;
    out.z_ctrl = out.ctrl / 2.0;
    out.x_ctrl = out.ctrl / 2.0;
    return out;
}

ProportionBreakdown empirical_proportions(const RunResult& run) {
    ProportionBreakdown out;
    const double n = static_cast<double>(run.rounds.size());
    if (n == 0) return out;
    std::size_t z_sift = 0, x_sift = 0, z_ctrl = 0, x_ctrl = 0;
    std::size_t info = 0, test = 0, ctrl = 0;
    for (const RoundRecord& rec : run.rounds) {
        switch (rec.category) {
            case RoundCategory::ZSift: ++z_sift; break;
            case RoundCategory::XSift: ++x_sift; break;
            case RoundCategory::ZCtrl: ++z_ctrl; break;
            case RoundCategory::XCtrl: ++x_ctrl; break;
        }
        switch (rec.role) {
            case RoundRole::Info: ++info; break;
            case RoundRole::Test: ++test; break;
            case RoundRole::CtrlCheck: ++ctrl; break;
            default: break;
        }
    }
    out.z_sift = static_cast<double>(z_sift) / n;
    out.x_sift = static_cast<double>(x_sift) / n;
    out.z_ctrl = static_cast<double>(z_ctrl) / n;
    out.x_ctrl = static_cast<double>(x_ctrl) / n;
    out.info = static_cast<double>(info) / n;
    out.test = static_cast<double>(test) / n;
    out.ctrl = static_cast<double>(ctrl) / n;
    return out;
}

double SweepPoint::mean_efficiency() const {
    double sum = 0.0;
    std::size_t completed = 0;
    for (const TrialOutcome& t : trials) {
        if (t.aborted) continue;
        sum += t.efficiency;
        ++completed;
    }
    return completed > 0 ? sum / static_cast<double>(completed) : 0.0;
}

double SweepPoint::stddev_efficiency() const {
    const double mean = mean_efficiency();
    double sum = 0.0;
    std::size_t completed = 0;
    for (const TrialOutcome& t : trials) {
        if (t.aborted) continue;
        sum += (t.efficiency - mean) * (t.efficiency - mean);
        ++completed;
    }
    return completed > 1 ? std::sqrt(sum / static_cast<double>(completed - 1)) : 0.0;
}

double SweepPoint::abort_frequency() const {
    if (trials.empty()) return 0.0;
    std::size_t aborted = 0;
    for (const TrialOutcome& t : trials) {
        if (t.aborted) ++aborted;
    }
    return static_cast<double>(aborted) / static_cast<double>(trials.size());
}

double SweepPoint::mean_ctrl_error() const {
    if (trials.empty()) return 0.0;
    double z = 0.0, x = 0.0;
    for (const TrialOutcome& t : trials) {
        z += t.z_ctrl_err;
        x += t.x_ctrl_err;
    }
    return std::max(z, x) / static_cast<double>(trials.size());
}

void apply_axis(ProtocolConfig& config, AttackSpec& attack, const std::string& axis,
                double value) {
    if (axis == "gamma") {
        if (config.protocol != ProtocolId::P1 && config.protocol != ProtocolId::Baseline)
            throw ConfigError("sweep.axis: gamma applies to P1/BASELINE only");
        // gamma = 1/2 is the symmetric anchor and runs as BASELINE.
        config.protocol = value == 0.5 ? ProtocolId::Baseline : ProtocolId::P1;
        config.gamma1 = value;
        config.gamma2 = value;
    } else if (axis == "gamma1") {
        config.gamma1 = value;
    } else if (axis == "gamma2") {
        config.gamma2 = value;
    } else if (axis == "xi") {
        config.xi = value;
    } else if (axis == "p_t") {
        config.p_t = value;
    } else if (axis == "delta") {
        config.delta = value;
    } else if (axis == "kappa") {
        config.kappa = static_cast<std::size_t>(std::llround(value));
    } else if (axis == "tau") {
        config.tau = static_cast<std::size_t>(std::llround(value));
    } else if (axis == "lambda") {
        config.lambda = static_cast<std::size_t>(std::llround(value));
    } else if (axis == "N") {
        config.n = static_cast<std::size_t>(std::llround(value));
    } else if (axis == "attack.theta") {
        attack.theta = value;
    } else {
        throw ConfigError("sweep.axis: unknown axis '" + axis + "'");
    }
}

namespace {

TrialOutcome to_outcome(const RunResult& run) {
    TrialOutcome out;
    out.efficiency = run.efficiency();
    out.z_ctrl_err = run.error_rates.z_ctrl.rate;
    out.x_ctrl_err = run.error_rates.x_ctrl.rate;
    out.test_err = run.error_rates.test.rate;
    out.aborted = run.aborted;
    if (run.eve_report) {
        out.eve_accuracy = run.eve_report->guess_accuracy;
        out.eve_coverage = run.eve_report->coverage;
    }
    return out;
}

SweepResult run_sweep(const ProtocolConfig& base, const AttackSpec& attack,
                      const std::string& axis, const std::vector<double>& grid,
                      std::size_t trials, std::uint64_t master_seed, unsigned workers) {
    SweepResult result;
    result.protocol = base.protocol;
    result.param_name = axis;
    result.trials_per_point = trials;
    result.points.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        result.points[g].param_value = grid[g];
        result.points[g].trials.resize(trials);
    }

    // Pre-validate every grid point so configuration errors surface before
    // any worker starts.
    for (std::size_t g = 0; g < grid.size(); ++g) {
        ProtocolConfig cfg = base;
        AttackSpec atk = attack;
        apply_axis(cfg, atk, axis, grid[g]);
        cfg.normalized().validate();
        make_strategy(atk);
        result.points[g].protocol = cfg.protocol;
    }

    const std::size_t total = grid.size() * trials;
    auto execute = [&](std::size_t flat) {
        const std::size_t g = flat / trials;
        const std::size_t t = flat % trials;
        ProtocolConfig cfg = base;
        AttackSpec atk = attack;
        apply_axis(cfg, atk, axis, grid[g]);
        cfg.seed = derive_seed(master_seed, g, t);
        auto strategy = make_strategy(atk);
        const RunResult run = run_protocol(cfg, *strategy);
        result.points[g].trials[t] = to_outcome(run);
    };

    const unsigned pool = std::max(1u, workers);
    if (pool == 1 || total <= 1) {
        for (std::size_t flat = 0; flat < total; ++flat) execute(flat);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (unsigned w = 0; w < pool; ++w) {
            threads.emplace_back([&, w] {
                for (std::size_t flat = w; flat < total; flat += pool) execute(flat);
            });
        }
        for (std::thread& t : threads) t.join();
    }
    return result;
}

}  // namespace

SweepResult efficiency_sweep(const ProtocolConfig& base, const AttackSpec& attack,
                             const std::string& axis, const std::vector<double>& grid,
                             std::size_t trials, std::uint64_t master_seed, unsigned workers) {
    return run_sweep(base, attack, axis, grid, trials, master_seed, workers);
}

SweepResult detection_sweep(const ProtocolConfig& base, const AttackSpec& attack,
                            const std::string& axis, const std::vector<double>& grid,
                            std::size_t trials, std::uint64_t master_seed, unsigned workers) {
    return run_sweep(base, attack, axis, grid, trials, master_seed, workers);
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result,
                     const std::vector<std::pair<std::string, std::string>>& header) {
    for (const auto& [key, value] : header) {
        out << "# " << key << "=" << value << "\n";
    }
    out << "protocol,param_name,param_value,trial,efficiency,z_ctrl_err,x_ctrl_err,test_err,"
           "aborted,eve_accuracy,eve_coverage\n";
    for (const SweepPoint& point : result.points) {
        for (std::size_t t = 0; t < point.trials.size(); ++t) {
            const TrialOutcome& trial = point.trials[t];
            out << to_string(point.protocol) << ',' << result.param_name << ','
                << format_double(point.param_value)
                << ',' << t << ',' << format_double(trial.efficiency) << ','
                << format_double(trial.z_ctrl_err) << ',' << format_double(trial.x_ctrl_err)
                << ',' << format_double(trial.test_err) << ',' << (trial.aborted ? 1 : 0) << ','
                << format_double(trial.eve_accuracy) << ',' << format_double(trial.eve_coverage)
                << "\n";
        }
    }
}

}  // namespace sqkd
