// Theoretical-vs-empirical bit-proportion accounting, efficiency sweeps and
// attack-detectability sweeps, with deterministic CSV reporting.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sqkd/attack.hpp"
#include "sqkd/protocol.hpp"

namespace sqkd {

// Round-category fractions plus role fractions, all denominated by the
// same total (N for empirical runs; kappa+tau+lambda for the P2/P3
// theoretical table, whose per-round counterpart carries a 1/(1+delta)).
struct ProportionBreakdown {
    double z_sift = 0.0;
    double x_sift = 0.0;
    double z_ctrl = 0.0;
    double x_ctrl = 0.0;
    double info = 0.0;
    double test = 0.0;
    double ctrl = 0.0;

    double category_sum() const { return z_sift + x_sift + z_ctrl + x_ctrl; }
};

// The published table and the protocol text disagree on whether xi scales
// the TEST or the INFO share of the Z-SIFT bits; both readings are
// computable. Step6 (TEST = xi * Z-SIFT) is the default everywhere else.
enum class XiConvention : std::uint8_t { Step6, Table1 };

ProportionBreakdown theoretical_proportions_p1(double gamma1, double gamma2, double xi,
                                               XiConvention convention = XiConvention::Step6);

ProportionBreakdown theoretical_proportions_p23(std::size_t kappa, std::size_t tau,
                                                std::size_t lambda);

ProportionBreakdown empirical_proportions(const RunResult& run);

struct TrialOutcome {
    double efficiency = 0.0;
    double z_ctrl_err = 0.0;
    double x_ctrl_err = 0.0;
    double test_err = 0.0;
    bool aborted = false;
    double eve_accuracy = 0.5;
    double eve_coverage = 0.0;
};

struct SweepPoint {
    double param_value = 0.0;
    // Protocol actually executed at this point; the gamma axis runs its
    // 0.5 grid value as BASELINE.
    ProtocolId protocol = ProtocolId::P1;
    std::vector<TrialOutcome> trials;

    // Aggregates. Efficiency statistics are over completed (non-aborted)
    // trials; abort frequency is over all trials.
    double mean_efficiency() const;
    double stddev_efficiency() const;
    double abort_frequency() const;
    double mean_ctrl_error() const;  // max of z/x means, the monitored signal
};

struct SweepResult {
    ProtocolId protocol = ProtocolId::P1;
    std::string param_name;
    std::size_t trials_per_point = 0;
    std::vector<SweepPoint> points;
};

// Applies one grid value to (config, attack): axis names gamma, gamma1,
// gamma2, xi, p_t, delta, kappa, tau, lambda, N, attack.theta. The gamma
// axis sets both gammas and runs the 0.5 point as BASELINE, which is
// outside P1's parameter regime but is the comparison anchor.
void apply_axis(ProtocolConfig& config, AttackSpec& attack, const std::string& axis, double value);

// Runs trials independent seeded executions per grid point; per-trial seeds
// derive from (master_seed, grid index, trial index), so results are
// independent of worker count and scheduling.
SweepResult efficiency_sweep(const ProtocolConfig& base, const AttackSpec& attack,
                             const std::string& axis, const std::vector<double>& grid,
                             std::size_t trials, std::uint64_t master_seed, unsigned workers = 1);

// Same machinery pointed at an attack-parameter axis; reports error rates,
// abort frequency at p_t and Eve's guess accuracy with coverage per point.
SweepResult detection_sweep(const ProtocolConfig& base, const AttackSpec& attack,
                            const std::string& axis, const std::vector<double>& grid,
                            std::size_t trials, std::uint64_t master_seed, unsigned workers = 1);

// CSV schema: one row per trial, grid-major, trial-minor; floats with six
// significant digits; `header` key=value pairs are echoed as # comments.
void write_sweep_csv(std::ostream& out, const SweepResult& result,
                     const std::vector<std::pair<std::string, std::string>>& header);

std::string format_double(double value);  // %.6g, shared by all reports

}  // namespace sqkd
