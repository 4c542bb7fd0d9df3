#include "inblock/oracles.hpp"

#include "inblock/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>

namespace inblock {

std::string_view to_string(OracleKind kind) noexcept {
  switch (kind) {
    case OracleKind::ExchangeRate: return "ExchangeRate";
    case OracleKind::GdpIndex: return "GdpIndex";
    case OracleKind::TxFeeEstimate: return "TxFeeEstimate";
  }
  return "Unknown";
}

OracleKind parse_oracle_kind(std::string_view name) {
  for (auto k : {OracleKind::ExchangeRate, OracleKind::GdpIndex, OracleKind::TxFeeEstimate})
    if (to_string(k) == name)
      return k;
  throw Error(errc::BadConfig, "unknown oracle kind: " + std::string(name));
}

StaticProvider& StaticProvider::set(OracleKind kind, Rational value, std::string source_id) {
  if (value <= 0)
    throw Error(errc::BadConfig, "oracle values must be positive");
  values_[kind] = {std::move(value), std::move(source_id)};
  return *this;
}

OracleSample StaticProvider::get_sample(OracleKind kind, Timestamp now) const {
  auto it = values_.find(kind);
  if (it == values_.end())
    throw Error(errc::NoSample, std::string(to_string(kind)));
  return OracleSample{kind, it->second.first, now, it->second.second};
}

FixtureProvider::FixtureProvider(std::vector<OracleSample> samples,
                                 std::optional<Timestamp> max_age)
  : max_age_(max_age) {
  for (auto& s : samples) {
    if (s.value <= 0)
      throw Error(errc::BadConfig, "oracle values must be positive");
    auto& series = series_[s.kind];
    if (!series.empty() && series.back().as_of >= s.as_of)
      throw Error(errc::BadConfig, "fixture samples must have strictly increasing as_of");
    series.push_back(std::move(s));
  }
}

FixtureProvider FixtureProvider::load(std::istream& in, std::optional<Timestamp> max_age) {
  std::vector<OracleSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      auto j = nlohmann::json::parse(line);
      OracleSample s;
      s.kind = parse_oracle_kind(j.at("kind").get<std::string>());
      s.value = parse_rational(j.at("value").get<std::string>());
      s.as_of = j.at("as_of").get<Timestamp>();
      s.source_id = j.value("source_id", "");
      samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::BadConfig, "fixture line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return FixtureProvider(std::move(samples), max_age);
}

FixtureProvider FixtureProvider::load_file(const std::string& path,
                                           std::optional<Timestamp> max_age) {
  std::ifstream in(path);
  if (!in)
    throw Error(errc::UnreadableInput, path);
  return load(in, max_age);
}

OracleSample FixtureProvider::get_sample(OracleKind kind, Timestamp now) const {
  auto it = series_.find(kind);
  if (it == series_.end() || it->second.empty() || it->second.front().as_of > now)
    throw Error(errc::NoSample, std::string(to_string(kind)) + " at " + std::to_string(now));
  const auto& series = it->second;
  auto after = std::upper_bound(series.begin(), series.end(), now,
                                [](Timestamp t, const OracleSample& s) { return t < s.as_of; });
  const OracleSample& latest = *std::prev(after);
  if (max_age_ && now - latest.as_of > *max_age_)
    throw Error(errc::StaleSample, std::string(to_string(kind)) + " as of "
                                     + std::to_string(latest.as_of));
  return latest;
}

std::vector<OracleSample> FixtureProvider::samples() const {
  std::vector<OracleSample> out;
  for (const auto& [kind, series] : series_)
    out.insert(out.end(), series.begin(), series.end());
  std::stable_sort(out.begin(), out.end(), [](const OracleSample& a, const OracleSample& b) {
    return a.as_of != b.as_of ? a.as_of < b.as_of : a.kind < b.kind;
  });
  return out;
}

} // namespace inblock
