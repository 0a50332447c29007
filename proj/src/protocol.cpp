#include "sqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "sqkd/errors.hpp"
#include "sqkd/postprocess.hpp"

namespace sqkd {

namespace {

constexpr std::size_t kReconcileBlock = 16;
constexpr std::size_t kReconcilePasses = 4;
constexpr std::size_t kSafetyMargin = 0;

bool four_state(ProtocolId id) { return id == ProtocolId::P1 || id == ProtocolId::Baseline; }

// k distinct entries of `pool`, drawn uniformly, returned ascending.
std::vector<std::uint32_t> random_subset(std::vector<std::uint32_t> pool, std::size_t k,
                                         RandomStream& rng) {
    rng.shuffle(pool);
    pool.resize(std::min(k, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

struct RateAccumulator {
    std::size_t samples = 0;
    std::size_t mismatches = 0;

    void add(std::uint8_t expected, std::uint8_t observed) {
        ++samples;
        if (expected != observed) ++mismatches;
    }

    ErrorRate finish() const {
        ErrorRate rate;
        rate.samples = samples;
        rate.mismatches = mismatches;
        rate.has_data = samples > 0;
        rate.rate = samples > 0 ? static_cast<double>(mismatches) / static_cast<double>(samples)
                                : 0.0;
        return rate;
    }
};

}  // namespace

std::string to_string(ProtocolId id) {
    switch (id) {
        case ProtocolId::P1: return "P1";
        case ProtocolId::P2: return "P2";
        case ProtocolId::P3: return "P3";
        case ProtocolId::Baseline: return "BASELINE";
    }
    return "?";
}

std::string to_string(RoundCategory category) {
    switch (category) {
        case RoundCategory::ZSift: return "Z_SIFT";
        case RoundCategory::XSift: return "X_SIFT";
        case RoundCategory::ZCtrl: return "Z_CTRL";
        case RoundCategory::XCtrl: return "X_CTRL";
    }
    return "?";
}

std::size_t ProtocolConfig::derived_rounds() const {
    const double exact = static_cast<double>(kappa + tau + lambda) * (1.0 + delta);
    return static_cast<std::size_t>(std::llround(exact));
}

ProtocolConfig ProtocolConfig::normalized() const {
    ProtocolConfig out = *this;
    if (out.protocol == ProtocolId::Baseline) {
        out.gamma1 = 0.5;
        out.gamma2 = 0.5;
    }
    if (out.protocol == ProtocolId::P2 || out.protocol == ProtocolId::P3) {
        out.n = out.derived_rounds();
    }
    return out;
}

void ProtocolConfig::validate() const {
    if (!(p_t >= 0.0 && p_t < 0.5)) throw ConfigError("p_t must satisfy 0 <= p_t < 1/2");
    switch (protocol) {
        case ProtocolId::P1:
            if (n == 0) throw ConfigError("N must be positive");
            if (!(gamma1 > 0.5 && gamma1 < 1.0))
                throw ConfigError("gamma1 must satisfy 1/2 < gamma1 < 1");
            if (!(gamma2 > 0.5 && gamma2 < 1.0))
                throw ConfigError("gamma2 must satisfy 1/2 < gamma2 < 1");
            if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must satisfy 0 < xi < 1/2");
            break;
        case ProtocolId::Baseline:
            if (n == 0) throw ConfigError("N must be positive");
            if (gamma1 != 0.5 || gamma2 != 0.5)
                throw ConfigError("BASELINE fixes gamma1 = gamma2 = 1/2");
            if (!(xi > 0.0 && xi < 0.5)) throw ConfigError("xi must satisfy 0 < xi < 1/2");
            break;
        case ProtocolId::P2:
        case ProtocolId::P3:
            if (kappa == 0) throw ConfigError("kappa must be >= 1");
            if (tau == 0) throw ConfigError("tau must be >= 1");
            if (lambda == 0) throw ConfigError("lambda must be >= 1");
            if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
            if (n != derived_rounds())
                throw ConfigError("N must equal round((kappa+tau+lambda)(1+delta))");
            break;
    }
}

std::vector<std::uint8_t> sample_choice_string(std::size_t n, double p_zero, bool exact,
                                               RandomStream& rng) {
    std::vector<std::uint8_t> bits(n);
    if (exact) {
        const auto zeros = static_cast<std::size_t>(
            std::clamp<long long>(std::llround(p_zero * static_cast<double>(n)), 0,
                                  static_cast<long long>(n)));
        for (std::size_t i = 0; i < n; ++i) bits[i] = i < zeros ? 0 : 1;
        rng.shuffle(bits);
    } else {
        for (std::size_t i = 0; i < n; ++i) bits[i] = rng.bernoulli(p_zero) ? 0 : 1;
    }
    return bits;
}

RoundCategory classify_round(Basis alice_basis, BobAction bob_action) {
    if (bob_action == BobAction::Sift) {
        return alice_basis == Basis::Z ? RoundCategory::ZSift : RoundCategory::XSift;
    }
    return alice_basis == Basis::Z ? RoundCategory::ZCtrl : RoundCategory::XCtrl;
}

ErrorRate estimate_error_rate(const std::vector<std::pair<std::uint8_t, std::uint8_t>>& pairs) {
    RateAccumulator acc;
    for (const auto& [expected, observed] : pairs) acc.add(expected, observed);
    return acc.finish();
}

std::optional<AbortReason> abort_decision(const ErrorRates& rates, double p_t, bool shortfall) {
    if (shortfall) return AbortReason::Shortfall;
    if (rates.z_ctrl.has_data && rates.z_ctrl.rate > p_t) return AbortReason::CtrlError;
    if (rates.x_ctrl.has_data && rates.x_ctrl.rate > p_t) return AbortReason::CtrlError;
    if (rates.test.has_data && rates.test.rate > p_t) return AbortReason::TestError;
    return std::nullopt;
}

RunResult run_protocol(const ProtocolConfig& raw_config, AttackStrategy& attack,
                       RandomStream& rng) {
    const ProtocolConfig cfg = raw_config.normalized();
    cfg.validate();
    const std::size_t n = cfg.n;
    const ProtocolId id = cfg.protocol;

    RunResult run;
    run.config = cfg;
    run.rounds.reserve(n);

    // Choice strings. Draw order is fixed: Alice's bases, Alice's bits,
    // Bob's actions. P3 prepares |+> everywhere and consumes no draws for
    // either string.
    std::vector<std::uint8_t> alice_base_bits;  // 0 -> Z
    std::vector<std::uint8_t> alice_bits(n, 0);
    if (id == ProtocolId::P3) {
        alice_base_bits.assign(n, 1);
    } else {
        const double p_z = id == ProtocolId::P2 ? 0.5 : cfg.gamma1;
        alice_base_bits = sample_choice_string(n, p_z, cfg.exact_counts, rng);
        for (std::size_t i = 0; i < n; ++i) alice_bits[i] = static_cast<std::uint8_t>(rng.bit());
    }
    double p_sift;
    if (four_state(id)) {
        p_sift = cfg.gamma2;
    } else {
        p_sift = std::min(1.0, static_cast<double>(cfg.kappa + cfg.tau) * (1.0 + cfg.delta) /
                                   static_cast<double>(n));
    }
    const std::vector<std::uint8_t> bob_bits = sample_choice_string(n, p_sift, cfg.exact_counts, rng);

    // Quantum phase. Qubits travel strictly one at a time; every returned
    // state is stored so that Alice can defer her measurements until the
    // announcements (and so Eve's probes survive until her finalize).
    std::vector<JointState> returned;
    returned.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RoundRecord rec;
        rec.index = static_cast<std::uint32_t>(i);
        rec.alice_basis = alice_base_bits[i] == 0 ? Basis::Z : Basis::X;
        rec.alice_bit = alice_bits[i];
        rec.bob_action = bob_bits[i] == 0 ? BobAction::Sift : BobAction::Ctrl;
        rec.category = classify_round(rec.alice_basis, rec.bob_action);

        JointState state = JointState::prepare(StateLabel{rec.alice_basis, rec.alice_bit});
        state = attack.on_forward(i, std::move(state), rng);
        if (rec.bob_action == BobAction::Sift) {
            auto [outcome, post] = measure(state, QubitRole::Channel, Basis::Z, rng);
            rec.bob_outcome = static_cast<std::uint8_t>(outcome.bit);
            state = std::move(post);  // resent in the state he found
        }
        state = attack.on_backward(i, std::move(state), rng);
        returned.push_back(std::move(state));
        run.rounds.push_back(rec);
    }

    // Announcements.
    PublicTranscript& transcript = run.transcript;
    transcript.round_count = n;
    transcript.bob_actions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        transcript.bob_actions[i] = run.rounds[i].bob_action;
    }
    if (four_state(id)) {
        std::vector<Basis> bases(n);
        for (std::size_t i = 0; i < n; ++i) bases[i] = run.rounds[i].alice_basis;
        transcript.alice_bases = std::move(bases);
    }

    // Alice's deferred measurements, in round order: CTRL returns in the
    // basis she sent, and under P2/P3 every SIFT return in Z.
    for (std::size_t i = 0; i < n; ++i) {
        RoundRecord& rec = run.rounds[i];
        if (rec.bob_action == BobAction::Ctrl) {
            auto [outcome, post] = measure(returned[i], QubitRole::Channel, rec.alice_basis, rng);
            rec.alice_return_outcome = static_cast<std::uint8_t>(outcome.bit);
            returned[i] = std::move(post);
        } else if (!four_state(id)) {
            auto [outcome, post] = measure(returned[i], QubitRole::Channel, Basis::Z, rng);
            rec.alice_return_outcome = static_cast<std::uint8_t>(outcome.bit);
            returned[i] = std::move(post);
        }
    }

    std::vector<std::uint32_t> sift_rounds;    // usable sift pool
    std::vector<std::uint32_t> ctrl_rounds;
    for (const RoundRecord& rec : run.rounds) {
        if (rec.bob_action == BobAction::Ctrl) {
            ctrl_rounds.push_back(rec.index);
        } else if (four_state(id)) {
            if (rec.category == RoundCategory::ZSift) sift_rounds.push_back(rec.index);
        } else {
            sift_rounds.push_back(rec.index);
        }
    }

    // Role assignment. P1/BASELINE: every CTRL round is checked, X-SIFT is
    // discarded, TEST takes round(xi * |Z-SIFT|) of the Z-SIFT rounds.
    // P2/P3: exactly lambda CTRL rounds are checked and exactly tau SIFT
    // rounds become TEST (both drawn uniformly); INFO is the first kappa of
    // the remaining SIFT rounds; the delta-slack surplus stays Unused.
    bool shortfall = false;
    for (RoundRecord& rec : run.rounds) {
        if (four_state(id)) {
            rec.role = rec.bob_action == BobAction::Ctrl
                           ? RoundRole::CtrlCheck
                           : (rec.category == RoundCategory::ZSift ? RoundRole::Info
                                                                   : RoundRole::Discard);
        } else {
            rec.role = RoundRole::Unused;
        }
    }
    std::vector<std::uint32_t> test_rounds;
    if (four_state(id)) {
        const auto test_count = static_cast<std::size_t>(
            std::llround(cfg.xi * static_cast<double>(sift_rounds.size())));
        test_rounds = random_subset(sift_rounds, test_count, rng);
        for (std::uint32_t r : test_rounds) run.rounds[r].role = RoundRole::Test;
    } else {
        shortfall = sift_rounds.size() < cfg.kappa + cfg.tau || ctrl_rounds.size() < cfg.lambda;
        const std::vector<std::uint32_t> checked =
            random_subset(ctrl_rounds, cfg.lambda, rng);
        for (std::uint32_t r : checked) run.rounds[r].role = RoundRole::CtrlCheck;
        test_rounds = random_subset(sift_rounds, cfg.tau, rng);
        for (std::uint32_t r : test_rounds) run.rounds[r].role = RoundRole::Test;
        std::size_t assigned = 0;
        for (std::uint32_t r : sift_rounds) {
            if (assigned == cfg.kappa) break;
            if (run.rounds[r].role == RoundRole::Test) continue;
            run.rounds[r].role = RoundRole::Info;
            ++assigned;
        }
    }

    // Error estimation. CTRL rounds compare Alice's return measurement with
    // what she prepared; TEST rounds compare Bob's disclosed outcome with
    // Alice's reference (her prepared bit for Z-prepared rounds, her
    // deferred Z outcome for X-prepared rounds under P2/P3).
    RateAccumulator z_ctrl, x_ctrl, test;
    for (const RoundRecord& rec : run.rounds) {
        if (rec.role == RoundRole::CtrlCheck) {
            if (rec.category == RoundCategory::ZCtrl) {
                z_ctrl.add(rec.alice_bit, *rec.alice_return_outcome);
            } else {
                x_ctrl.add(rec.alice_bit, *rec.alice_return_outcome);
            }
        } else if (rec.role == RoundRole::Test) {
            const std::uint8_t reference = (four_state(id) || rec.alice_basis == Basis::Z)
                                               ? rec.alice_bit
                                               : *rec.alice_return_outcome;
            test.add(reference, *rec.bob_outcome);
        }
    }
    run.error_rates.z_ctrl = z_ctrl.finish();
    run.error_rates.x_ctrl = x_ctrl.finish();
    run.error_rates.test = test.finish();

    const std::optional<AbortReason> verdict =
        abort_decision(run.error_rates, cfg.p_t, shortfall);
    run.aborted = verdict.has_value();
    run.abort_reason = verdict;

    // The TEST set is announced only if the run survives the shortfall and
    // CTRL checks; the transcript truncates where the protocol stopped.
    if (!verdict || *verdict == AbortReason::TestError) {
        transcript.test_indices = test_rounds;
        transcript.test_values.reserve(test_rounds.size());
        for (std::uint32_t r : test_rounds) {
            transcript.test_values.push_back(*run.rounds[r].bob_outcome);
        }
    }
    transcript.abort_notice = verdict;

    // Sifted keys over the usable rounds (INFO + TEST), ascending. Alice's
    // key bit is her prepared bit under P1/BASELINE and her deferred Z
    // outcome under P2/P3.
    for (const RoundRecord& rec : run.rounds) {
        if (rec.role != RoundRole::Info && rec.role != RoundRole::Test) continue;
        run.sift_indices.push_back(rec.index);
        run.alice_sifted.push_back(four_state(id) ? rec.alice_bit : *rec.alice_return_outcome);
        run.bob_sifted.push_back(*rec.bob_outcome);
        if (rec.role == RoundRole::Info) run.info_indices.push_back(rec.index);
    }

    // Post-processing (reconciliation + privacy amplification) on the INFO
    // bits of completed runs.
    if (!run.aborted) {
        std::vector<std::uint8_t> alice_info, bob_info;
        alice_info.reserve(run.info_indices.size());
        bob_info.reserve(run.info_indices.size());
        for (std::size_t pos = 0; pos < run.sift_indices.size(); ++pos) {
            if (run.rounds[run.sift_indices[pos]].role != RoundRole::Info) continue;
            alice_info.push_back(run.alice_sifted[pos]);
            bob_info.push_back(run.bob_sifted[pos]);
        }
        const ReconciliationReport recon =
            reconcile(alice_info, bob_info, kReconcileBlock, kReconcilePasses, rng);
        const double qber = run.error_rates.test.rate;
        const std::size_t m =
            final_key_length(alice_info.size(), qber, recon.disclosed_bits, kSafetyMargin);
        const std::uint64_t pa_seed = rng.next_u64();
        std::vector<std::uint8_t> key_a = privacy_amplify(recon.corrected_key_a, m, pa_seed);
        // The hash is a pure function of (key, m, seed), so equal corrected
        // keys hash identically without recomputing.
        const bool keys_match =
            recon.residual_mismatch == 0 ||
            privacy_amplify(recon.corrected_key_b, m, pa_seed) == key_a;
        run.post = PostprocessSummary{recon.disclosed_bits, recon.residual_mismatch, m,
                                      keys_match};
        run.final_key = std::move(key_a);
    }

    // Eve's turn: the engine reads out every probe in Z, then the strategy
    // converts transcript + readouts into guesses.
    ProbeOutcomes probe_outcomes(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!returned[i].has_probe()) continue;
        auto [outcome, post] = measure(returned[i], QubitRole::Probe, Basis::Z, rng);
        probe_outcomes[i] = static_cast<std::uint8_t>(outcome.bit);
        returned[i] = std::move(post);
    }
    const EveGuesses guesses = attack.finalize(transcript, probe_outcomes);
    run.eve_report = eve_detection_and_gain(guesses, run);

    return run;
}

RunResult run_protocol(const ProtocolConfig& config, AttackStrategy& attack) {
    RandomStream rng(config.seed);
    return run_protocol(config, attack, rng);
}

namespace {

RunResult run_checked(ProtocolId expected, const ProtocolConfig& config, AttackStrategy& attack,
                      RandomStream& rng) {
    if (config.protocol != expected)
        throw std::invalid_argument("protocol: config.protocol does not match entry point");
    return run_protocol(config, attack, rng);
}

}  // namespace

RunResult run_protocol1(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng) {
    return run_checked(ProtocolId::P1, config, attack, rng);
}

RunResult run_protocol2(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng) {
    return run_checked(ProtocolId::P2, config, attack, rng);
}

RunResult run_protocol3(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng) {
    return run_checked(ProtocolId::P3, config, attack, rng);
}

RunResult run_baseline(const ProtocolConfig& config, AttackStrategy& attack, RandomStream& rng) {
    return run_checked(ProtocolId::Baseline, config, attack, rng);
}

}  // namespace sqkd
