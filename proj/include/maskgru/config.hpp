// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Sectioned key = value configuration with command-line overrides.
//
//   [train]
//   arch = GRU-256
//   steps = 2000
//
// Keys are addressed as "section.key". Overrides ("train.steps=10") win
// over file values.

#ifndef MASKGRU_CONFIG_HPP_
#define MASKGRU_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace maskgru {

class Config {
 public:
  static Config Load(const std::filesystem::path& path);
  static Config Parse(const std::string& text);

  void Set(const std::string& key, const std::string& value);
  // Each entry is "section.key=value". Throws InvalidConfig on malformed input.
  void ApplyOverrides(const std::vector<std::string>& overrides);

  bool Has(const std::string& key) const;
  std::string GetString(const std::string& key, const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  std::int64_t GetInt(const std::string& key, std::int64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;

  // Values read through a getter, including fallbacks, are recorded so the
  // snapshot captures the effective configuration.
  std::string Resolved() const;
  void WriteSnapshot(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const std::string* Find(const std::string& key) const;
  void Record(const std::string& key, const std::string& value) const;

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> used_;
};

}  // namespace maskgru

#endif  // MASKGRU_CONFIG_HPP_
