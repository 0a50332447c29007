// End-to-end execution of the four key-distribution protocols:
//
//   P1        four-state protocol; Alice prepares in the Z basis with
//             probability gamma1, Bob measure-resends (SIFT) with
//             probability gamma2; X-SIFT rounds are discarded.
//   P2        four-state protocol with uniform preparation; Alice defers
//             all of her return measurements until Bob announces his
//             action string, measures every returned SIFT qubit in Z, and
//             X-SIFT rounds become usable key material.
//   P3        as P2 but every prepared state is |+>.
//   BASELINE  P1 machinery pinned at gamma1 = gamma2 = 1/2, the symmetric
//             efficiency anchor.
//
// One run owns all of its state and its random stream; many runs may
// execute concurrently as long as they do not share either.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sqkd/attack.hpp"
#include "sqkd/quantum.hpp"
#include "sqkd/rng.hpp"
#include "sqkd/transcript.hpp"

namespace sqkd {

enum class ProtocolId : std::uint8_t { P1, P2, P3, Baseline };

std::string to_string(ProtocolId id);

struct ProtocolConfig {
    ProtocolId protocol = ProtocolId::P1;
    std::size_t n = 0;           // rounds; derived from kappa/tau/lambda/delta for P2/P3
    double gamma1 = 0.0;         // P(Alice prepares in Z), P1/BASELINE
    double gamma2 = 0.0;         // P(Bob SIFTs), P1/BASELINE
    double xi = 0.0;             // TEST fraction of the usable SIFT bits, P1/BASELINE
    std::size_t kappa = 0;       // INFO count, P2/P3
    std::size_t tau = 0;         // TEST count, P2/P3
    std::size_t lambda = 0;      // CTRL-check count, P2/P3
    double delta = 0.0;          // round-count slack, P2/P3
    double p_t = 0.05;           // abort threshold on monitored error rates
    std::uint64_t seed = 0;
    bool exact_counts = false;   // exact choice-string composition instead of i.i.d.

    // N = round((kappa+tau+lambda)(1+delta)).
    std::size_t derived_rounds() const;

    // Fills protocol-determined fields: forces gamma1 = gamma2 = 1/2 for
    // BASELINE and derives n for P2/P3.
    ProtocolConfig normalized() const;

    // Throws ConfigError naming the offending parameter.
    void validate() const;
};

enum class RoundCategory : std::uint8_t { ZSift, XSift, ZCtrl, XCtrl };

// How the round's bit ends up being used. Discard happens only for X-SIFT
// rounds under P1/BASELINE; Unused marks the delta-slack surplus under
// P2/P3 (rounds beyond the kappa/tau/lambda quotas).
enum class RoundRole : std::uint8_t { Info, Test, CtrlCheck, Discard, Unused };

std::string to_string(RoundCategory category);

struct RoundRecord {
    std::uint32_t index = 0;
    Basis alice_basis = Basis::Z;
    std::uint8_t alice_bit = 0;
    BobAction bob_action = BobAction::Sift;
    std::optional<std::uint8_t> bob_outcome;          // present iff SIFT
    std::optional<std::uint8_t> alice_return_outcome; // CTRL rounds; all SIFT rounds under P2/P3
    RoundCategory category = RoundCategory::ZSift;
    RoundRole role = RoundRole::Unused;
};

struct ErrorRate {
    double rate = 0.0;
    bool has_data = false;  // empty sample: rate 0 by convention, flagged
    std::size_t samples = 0;
    std::size_t mismatches = 0;
};

struct ErrorRates {
    ErrorRate z_ctrl;
    ErrorRate x_ctrl;
    ErrorRate test;
};

struct PostprocessSummary {
    std::size_t disclosed_bits = 0;
    std::size_t residual_mismatch = 0;
    std::size_t final_length = 0;
    bool keys_match = false;  // Alice's and Bob's final keys identical
};

struct RunResult {
    ProtocolConfig config;  // normalized
    std::vector<RoundRecord> rounds;
    bool aborted = false;
    std::optional<AbortReason> abort_reason;
    ErrorRates error_rates;
    // Bits of the usable SIFT rounds (INFO + TEST), ascending round order.
    std::vector<std::uint8_t> alice_sifted;
    std::vector<std::uint8_t> bob_sifted;
    std::vector<std::uint32_t> sift_indices;
    std::vector<std::uint32_t> info_indices;  // ascending, disjoint from TEST
    std::optional<std::vector<std::uint8_t>> final_key;  // absent on abort
    std::optional<PostprocessSummary> post;
    std::optional<EveReport> eve_report;
    PublicTranscript transcript;

    double efficiency() const {  // INFO / N, pre-reconciliation
        return rounds.empty() ? 0.0
                              : static_cast<double>(info_indices.size()) /
                                    static_cast<double>(rounds.size());
    }
};

// Bit string of length n with P(0) = p_zero: i.i.d. Bernoulli draws, or a
// random permutation of exactly round(p_zero * n) zeros when exact is set.
std::vector<std::uint8_t> sample_choice_string(std::size_t n, double p_zero, bool exact,
                                               RandomStream& rng);

RoundCategory classify_round(Basis alice_basis, BobAction bob_action);

// Mismatch fraction over (expected, observed) pairs; empty input yields
// rate 0 with has_data = false.
ErrorRate estimate_error_rate(const std::vector<std::pair<std::uint8_t, std::uint8_t>>& pairs);

// Abort evaluation in protocol order: shortfall, then CTRL rates, then the
// TEST rate; thresholds are strict ("higher than" p_t).
std::optional<AbortReason> abort_decision(const ErrorRates& rates, double p_t, bool shortfall);

// Runs the configured protocol to completion. The attack strategy must be
// fresh (bound to this run only).
RunResult run_protocol(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng);
RunResult run_protocol(const ProtocolConfig& config, AttackStrategy& attack);  // seeds from config

// Convenience wrappers that check config.protocol agrees.
RunResult run_protocol1(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng);
RunResult run_protocol2(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng);
RunResult run_protocol3(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng);
RunResult run_baseline(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng);

}  // namespace sqkd
