#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sybilwatch/classifier.hpp"
#include "sybilwatch/core.hpp"
#include "sybilwatch/synthgen.hpp"

namespace sybilwatch {

using Json = nlohmann::ordered_json;

// Rounds to 9 significant digits so serialized reports are byte-stable.
inline double round9(double x) {
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

inline std::string format9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace csv {

// Splits one CSV record. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field");
  out.push_back(std::move(field));
  return out;
}

inline std::string escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

// Reads non-empty lines, stripping '\r'; a first line equal to `header`
// is skipped. Calls fn(line_number, fields).
template <typename Fn>
void for_each_record(std::istream& in, std::string_view header, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == header) continue;
    }
    std::vector<std::string> fields;
    try {
      fields = split(line);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    fn(line_no, fields);
  }
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return value;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ValidationError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return v;
}

}  // namespace csv

enum class ReviewFormat { kCsv, kJsonl };

inline constexpr std::string_view kReviewsHeader = "review_id,user_id,store_id,timestamp,star";
inline constexpr std::string_view kStoresHeader = "store_id,district,chain_id,category";
inline constexpr std::string_view kLabelsHeader = "community_id,label";

inline void check_star(const Review& r) {
  if (!is_valid_star(r.star))
    throw ValidationError("review " + r.review_id + ": star " + std::to_string(r.star) + " out of range 1..5");
}

inline std::vector<Review> parse_reviews(std::istream& in, ReviewFormat format) {
  std::vector<Review> out;
  if (format == ReviewFormat::kCsv) {
    csv::for_each_record(in, kReviewsHeader, [&](std::size_t line_no, const std::vector<std::string>& f) {
      if (f.size() != 5)
        throw ValidationError("line " + std::to_string(line_no) + ": expected 5 columns, got " +
                              std::to_string(f.size()));
      Review r{f[0], f[1], f[2], csv::parse_number<Timestamp>(f[3], line_no, "timestamp"),
               csv::parse_number<int>(f[4], line_no, "star")};
      if (r.review_id.empty() || r.user_id.empty() || r.store_id.empty())
        throw ValidationError("line " + std::to_string(line_no) + ": empty identifier");
      check_star(r);
      out.push_back(std::move(r));
    });
  } else {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      Review r;
      try {
        const auto j = nlohmann::json::parse(line);
        r.review_id = j.at("review_id").get<std::string>();
        r.user_id = j.at("user_id").get<std::string>();
        r.store_id = j.at("store_id").get<std::string>();
        r.timestamp = j.at("timestamp").get<Timestamp>();
        r.star = j.at("star").get<int>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
      check_star(r);
      out.push_back(std::move(r));
    }
  }
  if (out.empty()) throw ValidationError("empty dataset");
  return out;
}

inline std::vector<Store> parse_stores(std::istream& in) {
  std::vector<Store> out;
  csv::for_each_record(in, kStoresHeader, [&](std::size_t line_no, const std::vector<std::string>& f) {
    if (f.size() < 2 || f.size() > 4)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 2-4 store columns");
    Store s;
    s.store_id = f[0];
    s.district = f[1].empty() ? "unknown" : f[1];
    if (f.size() > 2 && !f[2].empty()) s.chain_id = f[2];
    if (f.size() > 3 && !f[3].empty()) s.category = f[3];
    out.push_back(std::move(s));
  });
  if (out.empty()) throw ValidationError("empty store list");
  return out;
}

inline void write_reviews_csv(std::ostream& out, std::span<const Review> reviews) {
  out << kReviewsHeader << '\n';
  for (const Review& r : reviews) {
    out << csv::escape(r.review_id) << ',' << csv::escape(r.user_id) << ',' << csv::escape(r.store_id) << ','
        << r.timestamp << ',' << r.star << '\n';
  }
}

inline void write_stores_csv(std::ostream& out, std::span<const Store> stores) {
  out << kStoresHeader << '\n';
  for (const Store& s : stores) {
    out << csv::escape(s.store_id) << ',' << csv::escape(s.district) << ',' << csv::escape(s.chain_id.value_or(""))
        << ',' << csv::escape(s.category.value_or("")) << '\n';
  }
}

inline std::map<CommunityId, Label> parse_labels(std::istream& in) {
  std::map<CommunityId, Label> out;
  csv::for_each_record(in, kLabelsHeader, [&](std::size_t line_no, const std::vector<std::string>& f) {
    if (f.size() != 2) throw ValidationError("line " + std::to_string(line_no) + ": expected community_id,label");
    const auto id = csv::parse_number<CommunityId>(f[0], line_no, "community_id");
    try {
      if (!out.emplace(id, parse_label(f[1])).second)
        throw ValidationError("duplicate label for community " + f[0]);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

inline void write_labels_csv(std::ostream& out, const std::map<CommunityId, Label>& labels) {
  out << kLabelsHeader << '\n';
  for (const auto& [c, l] : labels) out << c << ',' << label_name(l) << '\n';
}

inline Json ground_truth_to_json(const GroundTruth& gt) {
  Json j;
  j["origin"] = gt.origin;
  j["sybil_users"] = gt.sybil_users;
  j["elite_users"] = gt.elite_users;
  Json communities = Json::object();
  for (const auto& [c, m] : gt.communities) communities[std::to_string(c)] = m;
  j["communities"] = communities;
  Json campaigns = Json::array();
  for (const auto& c : gt.campaigns) {
    campaigns.push_back({{"community_id", c.community},
                         {"store_id", c.store_id},
                         {"start_week", c.start_week},
                         {"end_week", c.end_week},
                         {"start_ts", c.start_ts},
                         {"end_ts", c.end_ts},
                         {"star", c.star}});
  }
  j["campaigns"] = campaigns;
  j["fake_reviews"] = gt.fake_reviews;
  return j;
}

inline GroundTruth ground_truth_from_json(const Json& j) {
  GroundTruth gt;
  try {
    gt.origin = j.value("origin", Timestamp{0});
    gt.sybil_users = j.at("sybil_users").get<std::vector<std::string>>();
    gt.elite_users = j.at("elite_users").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("communities").items())
      gt.communities[static_cast<std::uint32_t>(std::stoul(k))] = v.get<std::vector<std::string>>();
    for (const auto& c : j.at("campaigns")) {
      PlantedCampaign pc;
      pc.community = c.at("community_id").get<std::uint32_t>();
      pc.store_id = c.at("store_id").get<std::string>();
      pc.start_week = c.at("start_week").get<std::int64_t>();
      pc.end_week = c.at("end_week").get<std::int64_t>();
      pc.start_ts = c.value("start_ts", gt.origin + pc.start_week * kSecondsPerWeek);
      pc.end_ts = c.value("end_ts", gt.origin + (pc.end_week + 1) * kSecondsPerWeek - 1);
      pc.star = c.value("star", 5);
      gt.campaigns.push_back(pc);
    }
    if (j.contains("fake_reviews")) gt.fake_reviews = j.at("fake_reviews").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ground truth: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ValidationError(std::string("ground truth: bad community id: ") + e.what());
  }
  std::vector<std::string> elite = gt.elite_users, sybil = gt.sybil_users;
  std::sort(elite.begin(), elite.end());
  std::sort(sybil.begin(), sybil.end());
  std::vector<std::string> both;
  std::set_intersection(elite.begin(), elite.end(), sybil.begin(), sybil.end(), std::back_inserter(both));
  if (!both.empty()) throw ValidationError("ground truth: user " + both.front() + " is both elite and regular Sybil");
  for (const auto& c : gt.campaigns) {
    if (!gt.communities.contains(c.community))
      throw ValidationError("ground truth: campaign references unknown community " + std::to_string(c.community));
  }
  return gt;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

// FNV-1a 64-bit digest, hex encoded.
inline std::string digest(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline ReviewFormat format_for_path(const std::string& path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".jsonl") || ends_with(".ndjson") ? ReviewFormat::kJsonl : ReviewFormat::kCsv;
}

}  // namespace sybilwatch
