#include "sqkd/postprocess.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace sqkd {

namespace {

// Minimal SplitMix64 stream for the Toeplitz diagonal bits; fixed here so
// the hash output is identical on every platform.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

std::uint8_t parity_over(std::span<const std::uint8_t> bits, std::span<const std::uint32_t> at) {
    std::uint8_t parity = 0;
    for (std::uint32_t index : at) parity ^= bits[index];
    return parity;
}

// Bits packed LSB-first into 64-bit words, zero-padded.
std::vector<std::uint64_t> pack_bits(std::span<const std::uint8_t> bits, std::size_t pad_words) {
    std::vector<std::uint64_t> words((bits.size() + 63) / 64 + pad_words, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) words[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
    return words;
}

std::uint64_t extract64(const std::vector<std::uint64_t>& words, std::size_t bit_pos) {
    const std::size_t q = bit_pos >> 6;
    const unsigned s = static_cast<unsigned>(bit_pos & 63);
    if (s == 0) return words[q];
    return (words[q] >> s) | (words[q + 1] << (64 - s));
}

}  // namespace

ReconciliationReport reconcile(std::span<const std::uint8_t> key_a,
                               std::span<const std::uint8_t> key_b, std::size_t block_size,
                               std::size_t max_passes, RandomStream& rng) {
    if (key_a.size() != key_b.size())
        throw std::invalid_argument("reconcile: key length mismatch");
    if (block_size < 2) throw std::invalid_argument("reconcile: block_size must be >= 2");

    ReconciliationReport report;
    report.corrected_key_a.assign(key_a.begin(), key_a.end());
    report.corrected_key_b.assign(key_b.begin(), key_b.end());
    const std::size_t n = key_a.size();

    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);

    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        if (pass > 0) rng.shuffle(order);
        ++report.passes;
        std::size_t mismatched_blocks = 0;

        for (std::size_t start = 0; start < n; start += block_size) {
            const std::size_t len = std::min(block_size, n - start);
            std::span<const std::uint32_t> block(order.data() + start, len);
            ++report.disclosed_bits;  // Alice announces the block parity
            if (parity_over(report.corrected_key_a, block) ==
                parity_over(report.corrected_key_b, block)) {
                continue;
            }
            ++mismatched_blocks;
            // Binary search: Alice announces the left-half parity at each
            // split until a single position remains, which Bob flips.
            std::size_t lo = 0;
            std::size_t hi = len;
            while (hi - lo > 1) {
                const std::size_t mid = lo + (hi - lo + 1) / 2;
                std::span<const std::uint32_t> left(block.data() + lo, mid - lo);
                ++report.disclosed_bits;
                if (parity_over(report.corrected_key_a, left) !=
                    parity_over(report.corrected_key_b, left)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            report.corrected_key_b[block[lo]] ^= 1;
        }
        if (mismatched_blocks == 0) break;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (report.corrected_key_a[i] != report.corrected_key_b[i]) ++report.residual_mismatch;
    }
    return report;
}

std::vector<std::uint8_t> privacy_amplify(std::span<const std::uint8_t> key,
                                          std::size_t output_length, std::uint64_t seed) {
    const std::size_t n = key.size();
    if (output_length > n)
        throw std::invalid_argument("privacy_amplify: output longer than input");
    if (output_length == 0) return {};
    const std::size_t m = output_length;

    // Diagonal bits r[0 .. n+m-2]; Toeplitz entry (i,j) = r[j - i + m - 1].
    const std::size_t diag_bits = n + m - 1;
    std::vector<std::uint64_t> diag((diag_bits + 63) / 64 + 1, 0);
    SplitMix64 stream(seed);
    for (std::size_t w = 0; w + 1 < diag.size(); ++w) diag[w] = stream.next();
    const std::size_t tail = diag_bits & 63;
    if (tail != 0) diag[diag.size() - 2] &= (std::uint64_t{1} << tail) - 1;

    const std::vector<std::uint64_t> key_words = pack_bits(key, 0);

    std::vector<std::uint8_t> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t offset = m - 1 - i;  // row i reads r[offset + j]
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < key_words.size(); ++w) {
            acc ^= extract64(diag, offset + (w << 6)) & key_words[w];
        }
        out[i] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
    }
    return out;
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

std::size_t final_key_length(std::size_t n_info, double observed_qber,
                             std::size_t disclosed_bits, std::size_t safety_margin) {
    const double qber = std::clamp(observed_qber, 0.0, 0.5);
    const double rate = 1.0 - 2.0 * binary_entropy(qber);
    const auto raw = static_cast<long long>(
        std::floor(static_cast<double>(n_info) * std::max(0.0, rate)));
    const long long usable = raw - static_cast<long long>(disclosed_bits) -
                             static_cast<long long>(safety_margin);
    return usable > 0 ? static_cast<std::size_t>(usable) : 0;
}

std::string bits_to_hex(std::span<const std::uint8_t> bits) {
    if (bits.size() % 4 != 0)
        throw std::invalid_argument("bits_to_hex: length must be a multiple of 4");
    static const char digits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(bits.size() / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        const int nibble = bits[i] << 3 | bits[i + 1] << 2 | bits[i + 2] << 1 | bits[i + 3];
        hex.push_back(digits[nibble]);
    }
    return hex;
}

std::vector<std::uint8_t> hex_to_bits(std::string_view hex) {
    std::vector<std::uint8_t> bits;
    bits.reserve(hex.size() * 4);
    for (char c : hex) {
        int nibble;
        if (c >= '0' && c <= '9') {
            nibble = c - '0';
        } else if (c >= 'a' && c <= 'f') {
            nibble = c - 'a' + 10;
        } else if (c >= 'A' && c <= 'F') {
            nibble = c - 'A' + 10;
        } else {
            throw std::invalid_argument("hex_to_bits: invalid hex digit");
        }
        bits.push_back(static_cast<std::uint8_t>((nibble >> 3) & 1));
        bits.push_back(static_cast<std::uint8_t>((nibble >> 2) & 1));
        bits.push_back(static_cast<std::uint8_t>((nibble >> 1) & 1));
        bits.push_back(static_cast<std::uint8_t>(nibble & 1));
    }
    return bits;
}

GoldenVector parse_golden(std::istream& in) {
    std::string key_hex, expected_hex;
    std::uint64_t seed = 0;
    std::size_t m = 0;
    if (!(in >> key_hex >> seed >> m >> expected_hex))
        throw std::runtime_error("golden: expected <key-hex> <seed> <m> <output-hex>");
    GoldenVector vec;
    vec.key = hex_to_bits(key_hex);
    vec.seed = seed;
    vec.output_length = m;
    vec.expected = hex_to_bits(expected_hex);
    if (vec.expected.size() != m)
        throw std::runtime_error("golden: output hex length disagrees with m");
    return vec;
}

GoldenVector load_golden_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("golden: cannot open " + path);
    return parse_golden(in);
}

bool verify_golden(const GoldenVector& vec) {
    return privacy_amplify(vec.key, vec.output_length, vec.seed) == vec.expected;
}

}  // namespace sqkd
