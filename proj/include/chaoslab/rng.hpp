#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace chaoslab {

using Engine = std::mt19937_64;

/// Deterministic random stream keyed by (master seed, label, replication).
///
/// Two streams with the same triple produce identical variate sequences.
/// Distinct labels or replication indices are mixed through splitmix64 before
/// seeding the engine, so substreams are independent for practical purposes.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t master_seed, std::string label, std::uint64_t replication = 0)
      : master_seed_(master_seed), label_(std::move(label)), replication_(replication) {}

  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t replication() const { return replication_; }

  /// Stream for the same label at another replication index.
  RngStream at(std::uint64_t replication) const { return {master_seed_, label_, replication}; }

  /// Nested label, e.g. "variance" -> "variance/pattern".
  RngStream child(std::string_view sublabel) const;

  Engine engine() const;

  /// "seed:label#replication", used in error messages and JSON reports.
  std::string describe() const;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t master_seed_ = 0;
  std::string label_;
  std::uint64_t replication_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Uniform variate in the open interval (0, 1).
inline double open_uniform(Engine& eng) {
  // 53 random mantissa bits, shifted by half an ulp to exclude both ends.
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential(Engine& eng) { return -std::log(open_uniform(eng)); }

}  // namespace chaoslab
