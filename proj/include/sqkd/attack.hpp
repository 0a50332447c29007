// Pluggable eavesdropper strategies. A strategy gets two per-round hooks
// (forward leg Alice->Bob, backward leg Bob->Alice) that may transform the
// travelling qubit and Eve's own probe, plus a finalize hook that turns the
// public transcript and her probe readouts into key-bit guesses.
//
// A strategy instance accumulates per-round records and is therefore bound
// to a single protocol run; distinct runs need distinct instances.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sqkd/quantum.hpp"
#include "sqkd/rng.hpp"
#include "sqkd/transcript.hpp"

namespace sqkd {

// Per-round key-bit guesses; entries without a value are abstentions.
using EveGuesses = std::vector<std::optional<std::uint8_t>>;

// Z-basis readout of Eve's probe for each round that carried one, measured
// by the engine after all announcements.
using ProbeOutcomes = std::vector<std::optional<std::uint8_t>>;

class AttackStrategy {
  public:
    virtual ~AttackStrategy() = default;

    virtual JointState on_forward(std::size_t /*round_index*/, JointState state,
                                  RandomStream& /*rng*/) {
        return state;
    }

    virtual JointState on_backward(std::size_t /*round_index*/, JointState state,
                                   RandomStream& /*rng*/) {
        return state;
    }

    virtual EveGuesses finalize(const PublicTranscript& /*transcript*/,
                                const ProbeOutcomes& /*probe_outcomes*/) {
        return {};
    }
};

enum class BasisPolicy : std::uint8_t { AlwaysZ, AlwaysX, RandomPerRound };
enum class AttackLegs : std::uint8_t { Forward, Backward, Both };

// Configuration-level description of an attack; make_strategy turns it into
// a fresh strategy instance for one run.
struct AttackSpec {
    std::string name = "none";  // none | intercept_resend | entangling_probe | custom_unitary
    double theta = 0.0;
    BasisPolicy basis_policy = BasisPolicy::AlwaysZ;
    AttackLegs legs = AttackLegs::Forward;
    std::optional<Matrix4> unitary_forward;
    std::optional<Matrix4> unitary_backward;
};

// Identity on both legs, no guesses.
std::unique_ptr<AttackStrategy> no_attack();

// Eve measures the channel qubit in the policy basis on each configured leg
// and forwards the collapsed state. With random_per_round she draws one
// basis per round and uses it on every configured leg. finalize guesses
// each SIFT round's key bit from her latest Z-basis record for that round.
std::unique_ptr<AttackStrategy> intercept_resend(BasisPolicy policy, AttackLegs legs);

// On the forward leg Eve attaches a |0> probe and applies the controlled
// rotation |0>|0> -> |0>|0>, |1>|0> -> |1>(cos t |0> + sin t |1>); theta =
// pi/2 is the full CNOT probe. She guesses SIFT bits from the probe's
// Z readout. Throws ConfigError unless 0 <= theta <= pi/2.
std::unique_ptr<AttackStrategy> entangling_probe(double theta);

// User-supplied 4x4 unitaries on (channel, probe), per leg; the probe is
// attached lazily on first use. Guessing rule as for entangling_probe.
std::unique_ptr<AttackStrategy> custom_unitary_attack(std::optional<Matrix4> forward,
                                                      std::optional<Matrix4> backward);

// Builds a strategy from a spec; throws ConfigError on bad parameters.
std::unique_ptr<AttackStrategy> make_strategy(const AttackSpec& spec);

struct AttackCatalogEntry {
    std::string name;
    AttackSpec spec;
};

// The named attacks shipped with the simulator. Every entry must satisfy
// the information-disturbance coupling checks in the test suites.
const std::vector<AttackCatalogEntry>& attack_catalog();

// Detection/gain summary for one completed run.
struct EveReport {
    double ctrl_error = 0.0;      // pooled over checked CTRL rounds
    double test_error = 0.0;
    double guess_accuracy = 0.5;  // over guessed INFO rounds; 0.5 when none guessed
    double coverage = 0.0;        // guessed INFO rounds / all INFO rounds
    std::size_t guessed = 0;
    bool has_guesses = false;
};

struct RunResult;

// Observed error rates plus the fraction of INFO bits Eve guessed
// correctly, restricted to rounds where she emitted a guess.
EveReport eve_detection_and_gain(const EveGuesses& guesses, const RunResult& run);

}  // namespace sqkd
