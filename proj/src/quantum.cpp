#include "sqkd/quantum.hpp"

#include <cmath>
#include <stdexcept>

#include "sqkd/errors.hpp"

namespace sqkd {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kNormTolerance = 1e-9;
// Outcomes below this probability are numerically impossible branches and
// are never sampled.
constexpr double kZeroBranch = 1e-15;

// Basis vectors as rows: basis_vector(basis, k) is the k-th vector.
std::array<Amplitude, 2> basis_vector(Basis basis, int k) {
    if (basis == Basis::Z) {
        return k == 0 ? std::array<Amplitude, 2>{Amplitude{1, 0}, Amplitude{0, 0}}
                      : std::array<Amplitude, 2>{Amplitude{0, 0}, Amplitude{1, 0}};
    }
    return k == 0 ? std::array<Amplitude, 2>{Amplitude{kInvSqrt2, 0}, Amplitude{kInvSqrt2, 0}}
                  : std::array<Amplitude, 2>{Amplitude{kInvSqrt2, 0}, Amplitude{-kInvSqrt2, 0}};
}

// Bit position of a role in the amplitude index (channel is the high bit).
int role_bit(const JointState& state, QubitRole role) {
    if (role == QubitRole::Channel) return state.qubit_count() - 1;
    if (!state.has_probe())
        throw std::invalid_argument("quantum: state has no probe qubit");
    return 0;
}

template <std::size_t Dim>
bool matrix_is_unitary(const std::array<Amplitude, Dim * Dim>& u, double tol) {
    for (std::size_t r = 0; r < Dim; ++r) {
        for (std::size_t c = 0; c < Dim; ++c) {
            Amplitude dot{0, 0};
            for (std::size_t k = 0; k < Dim; ++k) {
                dot += u[r * Dim + k] * std::conj(u[c * Dim + k]);
            }
            const Amplitude expected = (r == c) ? Amplitude{1, 0} : Amplitude{0, 0};
            if (std::abs(dot - expected) > tol) return false;
        }
    }
    return true;
}

}  // namespace

JointState JointState::prepare(StateLabel label) {
    JointState state;
    const auto v = basis_vector(label.basis, label.bit);
    state.amps_[0] = v[0];
    state.amps_[1] = v[1];
    return state;
}

double JointState::norm_squared() const {
    double total = 0.0;
    for (std::size_t i = 0; i < dimension(); ++i) total += std::norm(amps_[i]);
    return total;
}

JointState attach_probe(const JointState& state, StateLabel probe_label) {
    if (state.has_probe())
        throw std::invalid_argument("quantum: probe already attached");
    const auto v = basis_vector(probe_label.basis, probe_label.bit);
    JointState out;
    out.qubit_count_ = 2;
    // Channel keeps the high bit: index = channel*2 + probe.
    for (int c = 0; c < 2; ++c) {
        for (int p = 0; p < 2; ++p) {
            out.amps_[static_cast<std::size_t>(c * 2 + p)] = state.amps_[c] * v[p];
        }
    }
    return out;
}

JointState apply_unitary(const JointState& state, const Matrix2& u, QubitRole target) {
    if (!is_unitary(u)) throw ConfigError("quantum: 2x2 matrix is not unitary");
    const int bit = role_bit(state, target);
    const std::size_t stride = std::size_t{1} << bit;
    JointState out = state;
    for (std::size_t base = 0; base < state.dimension(); ++base) {
        if (base & stride) continue;
        const Amplitude a0 = state.amps_[base];
        const Amplitude a1 = state.amps_[base | stride];
        out.amps_[base] = u[0] * a0 + u[1] * a1;
        out.amps_[base | stride] = u[2] * a0 + u[3] * a1;
    }
    return out;
}

JointState apply_unitary(const JointState& state, const Matrix4& u, QubitRole high, QubitRole low) {
    if (!is_unitary(u)) throw ConfigError("quantum: 4x4 matrix is not unitary");
    if (high == low) throw std::invalid_argument("quantum: duplicate unitary target");
    const int high_bit = role_bit(state, high);
    const int low_bit = role_bit(state, low);
    JointState out = state;
    // Remap state indices into u's (high, low) ordering.
    std::array<std::size_t, 4> index{};
    for (int h = 0; h < 2; ++h) {
        for (int l = 0; l < 2; ++l) {
            index[static_cast<std::size_t>(h * 2 + l)] =
                (static_cast<std::size_t>(h) << high_bit) | (static_cast<std::size_t>(l) << low_bit);
        }
    }
    std::array<Amplitude, 4> in{};
    for (std::size_t k = 0; k < 4; ++k) in[k] = state.amps_[index[k]];
    for (std::size_t r = 0; r < 4; ++r) {
        Amplitude acc{0, 0};
        for (std::size_t c = 0; c < 4; ++c) acc += u[r * 4 + c] * in[c];
        out.amps_[index[r]] = acc;
    }
    return out;
}

std::pair<double, double> born_probabilities(const JointState& state, QubitRole target,
                                             Basis basis) {
    const int bit = role_bit(state, target);
    const std::size_t stride = std::size_t{1} << bit;
    const auto v0 = basis_vector(basis, 0);
    double p0 = 0.0;
    double total = 0.0;
    for (std::size_t base = 0; base < state.dimension(); ++base) {
        if (base & stride) continue;
        const Amplitude a0 = state.amps_[base];
        const Amplitude a1 = state.amps_[base | stride];
        const Amplitude onto0 = std::conj(v0[0]) * a0 + std::conj(v0[1]) * a1;
        p0 += std::norm(onto0);
        total += std::norm(a0) + std::norm(a1);
    }
    // Express both marginals relative to the actual norm so that p0+p1 = 1
    // holds exactly even with accumulated rounding.
    if (total <= 0.0) return {0.0, 0.0};
    p0 /= total;
    return {p0, 1.0 - p0};
}

std::pair<Outcome, JointState> measure(const JointState& state, QubitRole target, Basis basis,
                                       RandomStream& rng) {
    if (std::abs(state.norm_squared() - 1.0) > kNormTolerance)
        throw std::logic_error("quantum: measuring an unnormalized state");
    const auto [p0, p1] = born_probabilities(state, target, basis);

    int outcome;
    if (p0 < kZeroBranch) {
        outcome = 1;
    } else if (p1 < kZeroBranch) {
        outcome = 0;
    } else {
        outcome = rng.uniform() < p0 ? 0 : 1;
    }

    const int bit = role_bit(state, target);
    const std::size_t stride = std::size_t{1} << bit;
    const auto v = basis_vector(basis, outcome);
    const double scale = 1.0 / std::sqrt(outcome == 0 ? p0 : p1);

    JointState post = state;
    for (std::size_t base = 0; base < state.dimension(); ++base) {
        if (base & stride) continue;
        const Amplitude a0 = state.amps_[base];
        const Amplitude a1 = state.amps_[base | stride];
        const Amplitude coeff = (std::conj(v[0]) * a0 + std::conj(v[1]) * a1) * scale;
        post.amps_[base] = coeff * v[0];
        post.amps_[base | stride] = coeff * v[1];
    }
    return {Outcome{outcome, basis, target}, post};
}

bool is_unitary(const Matrix2& u, double tol) { return matrix_is_unitary<2>(u, tol); }
bool is_unitary(const Matrix4& u, double tol) { return matrix_is_unitary<4>(u, tol); }

Matrix2 hadamard() {
    return {Amplitude{kInvSqrt2, 0}, Amplitude{kInvSqrt2, 0}, Amplitude{kInvSqrt2, 0},
            Amplitude{-kInvSqrt2, 0}};
}

Matrix2 identity2() {
    return {Amplitude{1, 0}, Amplitude{0, 0}, Amplitude{0, 0}, Amplitude{1, 0}};
}

Matrix4 identity4() {
    Matrix4 u{};
    for (std::size_t i = 0; i < 4; ++i) u[i * 4 + i] = Amplitude{1, 0};
    return u;
}

Matrix4 cnot_high_control() {
    Matrix4 u{};
    u[0 * 4 + 0] = Amplitude{1, 0};
    u[1 * 4 + 1] = Amplitude{1, 0};
    u[2 * 4 + 3] = Amplitude{1, 0};
    u[3 * 4 + 2] = Amplitude{1, 0};
    return u;
}

Matrix4 controlled_probe_rotation(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Matrix4 u{};
    u[0 * 4 + 0] = Amplitude{1, 0};
    u[1 * 4 + 1] = Amplitude{1, 0};
    u[2 * 4 + 2] = Amplitude{c, 0};
    u[2 * 4 + 3] = Amplitude{-s, 0};
    u[3 * 4 + 2] = Amplitude{s, 0};
    u[3 * 4 + 3] = Amplitude{c, 0};
    return u;
}

}  // namespace sqkd
