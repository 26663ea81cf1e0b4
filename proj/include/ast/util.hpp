#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ast {

/// SplitMix64 finaliser; a good 64-bit bijective mixer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for item `index` of a stream rooted at `base`. Independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// 64-bit FNV-1a of `bytes`, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Shortest decimal representation that parses back to the same double.
std::string format_shortest(double v);

/// printf-style "%.<digits>g".
std::string format_sig(double v, int digits);

/// printf-style "%.<decimals>f".
std::string format_fixed(double v, int decimals);

/// Strict full-string double parse; throws InputError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

}  // namespace ast
