#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sybilwatch/core.hpp"

namespace fx {

using sybilwatch::Review;
using sybilwatch::Store;
using sybilwatch::Timestamp;

inline constexpr Timestamp kBase = 1420070400;  // a UTC midnight

inline Timestamp day(double d) { return kBase + static_cast<Timestamp>(d * 86400.0); }

inline Review rv(std::string id, std::string user, std::string store, Timestamp ts, int star) {
  return Review{std::move(id), std::move(user), std::move(store), ts, star};
}

inline Store st(std::string id, std::string district = "d0", std::optional<std::string> chain = std::nullopt) {
  Store s;
  s.store_id = std::move(id);
  s.district = std::move(district);
  s.chain_id = std::move(chain);
  return s;
}

// Stores s0..s{n-1}, all in district d0 and without a chain.
inline std::vector<Store> plain_stores(int n) {
  std::vector<Store> out;
  for (int i = 0; i < n; ++i) out.push_back(st("s" + std::to_string(i)));
  return out;
}

}  // namespace fx
