#include "chaoslab/rng.hpp"

#include <array>

namespace chaoslab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream RngStream::child(std::string_view sublabel) const {
  std::string l = label_;
  if (!l.empty()) l += '/';
  l += sublabel;
  return {master_seed_, std::move(l), replication_};
}

Engine RngStream::engine() const {
  std::uint64_t k = splitmix64(master_seed_);
  k = splitmix64(k ^ fnv1a(label_));
  k = splitmix64(k ^ replication_);
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    k = splitmix64(k);
    words[i] = static_cast<std::uint32_t>(k);
    words[i + 1] = static_cast<std::uint32_t>(k >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

std::string RngStream::describe() const {
  return std::to_string(master_seed_) + ":" + label_ + "#" + std::to_string(replication_);
}

}  // namespace chaoslab
