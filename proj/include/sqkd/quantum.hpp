// Statevector engine for one channel qubit, optionally joined with one
// eavesdropper probe qubit. Everything is value-semantic: operations take a
// state and return a new one, so a state is never shared between runs.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <utility>

#include "sqkd/rng.hpp"

namespace sqkd {

using Amplitude = std::complex<double>;

// Row-major 2x2 / 4x4 complex matrices.
using Matrix2 = std::array<Amplitude, 4>;
using Matrix4 = std::array<Amplitude, 16>;

enum class Basis : std::uint8_t { Z, X };

// (basis, bit) labels the four protocol states:
// (Z,0) |0>, (Z,1) |1>, (X,0) |+>, (X,1) |->.
struct StateLabel {
    Basis basis;
    int bit;  // 0 or 1
};

enum class QubitRole : std::uint8_t { Channel, Probe };

struct Outcome {
    int bit;  // indexes the measured basis vector (0 -> first vector)
    Basis basis;
    QubitRole qubit;
};

// Normalized complex statevector. Tensor layout: the channel qubit is the
// high bit of the amplitude index, the probe (when attached) the low bit.
class JointState {
  public:
    JointState() : amps_{Amplitude{1.0, 0.0}}, qubit_count_(1) {}

    static JointState prepare(StateLabel label);

    int qubit_count() const { return qubit_count_; }
    bool has_probe() const { return qubit_count_ == 2; }
    std::size_t dimension() const { return std::size_t{1} << qubit_count_; }

    Amplitude amplitude(std::size_t index) const { return amps_[index]; }
    std::span<const Amplitude> amplitudes() const {
        return {amps_.data(), dimension()};
    }

    double norm_squared() const;

    friend JointState attach_probe(const JointState& state, StateLabel probe_label);
    friend JointState apply_unitary(const JointState& state, const Matrix2& u, QubitRole target);
    friend JointState apply_unitary(const JointState& state, const Matrix4& u, QubitRole high,
                                    QubitRole low);
    friend std::pair<double, double> born_probabilities(const JointState& state, QubitRole target,
                                                        Basis basis);
    friend std::pair<Outcome, JointState> measure(const JointState& state, QubitRole target,
                                                  Basis basis, RandomStream& rng);

  private:
    std::array<Amplitude, 4> amps_{};
    int qubit_count_ = 1;
};

// Tensor product state |state> (x) |probe_label>; the channel marginal is
// unchanged. Throws std::invalid_argument if a probe is already attached.
JointState attach_probe(const JointState& state, StateLabel probe_label);

// Applies u to the target qubit (identity on the other). Throws ConfigError
// if u is not unitary within 1e-10.
JointState apply_unitary(const JointState& state, const Matrix2& u, QubitRole target);

// Applies a two-qubit unitary; `high` names the qubit mapped to the high
// bit of u's row-major index, `low` the low bit.
JointState apply_unitary(const JointState& state, const Matrix4& u, QubitRole high, QubitRole low);

// Born-rule marginals (p0, p1) for measuring `target` in `basis`.
// Throws std::invalid_argument if the target is not part of the state.
std::pair<double, double> born_probabilities(const JointState& state, QubitRole target,
                                             Basis basis);

// Projective measurement of one qubit. Returns the sampled outcome and the
// renormalized post-measurement state. Throws std::logic_error if the input
// state norm deviates from 1 by more than 1e-9.
std::pair<Outcome, JointState> measure(const JointState& state, QubitRole target, Basis basis,
                                       RandomStream& rng);

bool is_unitary(const Matrix2& u, double tol = 1e-10);
bool is_unitary(const Matrix4& u, double tol = 1e-10);

Matrix2 hadamard();
Matrix2 identity2();
Matrix4 identity4();
// CNOT with the high-bit qubit as control.
Matrix4 cnot_high_control();
// |0>|p> -> |0>|p>, |1>|0> -> |1>(cos t |0> + sin t |1>): a probe rotation
// switched on by the high-bit qubit.
Matrix4 controlled_probe_rotation(double theta);

}  // namespace sqkd
