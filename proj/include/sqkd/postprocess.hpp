// Classical post-processing of the INFO bits: block-parity reconciliation
// with binary search on mismatching blocks, leakage accounting, and
// Toeplitz-hash privacy amplification.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqkd/rng.hpp"

namespace sqkd {

struct ReconciliationReport {
    std::vector<std::uint8_t> corrected_key_a;
    std::vector<std::uint8_t> corrected_key_b;
    std::size_t disclosed_bits = 0;   // every announced parity counts
    std::size_t residual_mismatch = 0;  // oracle-computed; testing only, never public
    std::size_t passes = 0;
};

// Iterative block-parity exchange: per pass, Alice announces each block's
// parity and Bob binary-searches any mismatching block down to one bit and
// flips it; the index order is reshuffled (seeded) between passes. Stops
// early after a pass with no mismatching block, otherwise after max_passes.
// Throws std::invalid_argument on length mismatch or block_size < 2.
ReconciliationReport reconcile(std::span<const std::uint8_t> key_a,
                               std::span<const std::uint8_t> key_b, std::size_t block_size,
                               std::size_t max_passes, RandomStream& rng);

// GF(2) product of a seeded Toeplitz matrix (entry depends only on
// column - row) with the key; a pure function of (key, output_length, seed).
// Throws std::invalid_argument if output_length > key length.
std::vector<std::uint8_t> privacy_amplify(std::span<const std::uint8_t> key,
                                          std::size_t output_length, std::uint64_t seed);

double binary_entropy(double p);

// max(0, floor(n_info * (1 - 2 h2(qber))) - disclosed_bits - safety_margin).
std::size_t final_key_length(std::size_t n_info, double observed_qber,
                             std::size_t disclosed_bits, std::size_t safety_margin);

// Golden-file format: four whitespace-separated fields on one line or
// several - hex-encoded input key, seed (decimal), output length (decimal),
// hex-encoded expected output. Hex nibbles carry bits most significant
// first, so key length is 4x the hex digit count.
struct GoldenVector {
    std::vector<std::uint8_t> key;
    std::uint64_t seed = 0;
    std::size_t output_length = 0;
    std::vector<std::uint8_t> expected;
};

GoldenVector parse_golden(std::istream& in);
GoldenVector load_golden_file(const std::string& path);
bool verify_golden(const GoldenVector& vec);

std::string bits_to_hex(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> hex_to_bits(std::string_view hex);

}  // namespace sqkd
