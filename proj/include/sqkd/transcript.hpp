#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sqkd/quantum.hpp"

namespace sqkd {

enum class BobAction : std::uint8_t { Sift, Ctrl };

enum class AbortReason : std::uint8_t { CtrlError, TestError, Shortfall };

// Everything announced over the authenticated classical channel, in
// protocol order: Alice's basis string (four-state protocols only), Bob's
// action string, then - if the run got that far - the TEST index set and
// Bob's disclosed TEST outcomes, and finally any abort notice. An
// eavesdropper's finalize hook receives exactly this record, truncated at
// the point the protocol stopped.
struct PublicTranscript {
    std::size_t round_count = 0;
    std::vector<BobAction> bob_actions;
    std::optional<std::vector<Basis>> alice_bases;
    std::vector<std::uint32_t> test_indices;
    std::vector<std::uint8_t> test_values;
    std::optional<AbortReason> abort_notice;
};

}  // namespace sqkd
