#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace vdfd {

// Concatenates arbitrary streamable values into a string, for error messages.
template <class... Ts>
std::string cat(Ts&&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// Deterministic stream derivation: one master seed, named sub-streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull));
}

}  // namespace vdfd
