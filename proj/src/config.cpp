// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "maskgru/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "maskgru/error.hpp"

namespace maskgru {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void Flatten(const boost::property_tree::ptree& tree, const std::string& prefix,
             std::map<std::string, std::string>& out) {
  for (const auto& [key, child] : tree) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (child.empty())
      out[full] = Trim(child.data());
    else
      Flatten(child, full, out);
  }
}

}  // namespace

Config Config::Parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::kInvalidConfig, std::string("config parse error: ") + e.what());
  }
  Config c;
  Flatten(tree, "", c.values_);
  return c;
}

Config Config::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kInvalidConfig, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

void Config::Set(const std::string& key, const std::string& value) {
  if (key.empty()) throw Error(Errc::kInvalidConfig, "empty config key");
  values_[key] = value;
}

void Config::ApplyOverrides(const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(Errc::kInvalidConfig, "override '" + o + "' is not key=value");
    Set(Trim(o.substr(0, eq)), Trim(o.substr(eq + 1)));
  }
}

const std::string* Config::Find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void Config::Record(const std::string& key, const std::string& value) const {
  used_[key] = value;
}

bool Config::Has(const std::string& key) const { return Find(key) != nullptr; }

std::string Config::GetString(const std::string& key, const std::string& fallback) const {
  const std::string* v = Find(key);
  const std::string out = v ? *v : fallback;
  Record(key, out);
  return out;
}

double Config::GetDouble(const std::string& key, double fallback) const {
  const std::string* v = Find(key);
  double out = fallback;
  if (v) {
    std::size_t pos = 0;
    try {
      out = std::stod(*v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v->size())
      throw Error(Errc::kInvalidConfig, key + ": expected a number, got '" + *v + "'");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", out);
  Record(key, v ? *v : buf);
  return out;
}

std::int64_t Config::GetInt(const std::string& key, std::int64_t fallback) const {
  const std::string* v = Find(key);
  std::int64_t out = fallback;
  if (v) {
    std::size_t pos = 0;
    try {
      out = std::stoll(*v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v->size())
      throw Error(Errc::kInvalidConfig, key + ": expected an integer, got '" + *v + "'");
  }
  Record(key, std::to_string(out));
  return out;
}

bool Config::GetBool(const std::string& key, bool fallback) const {
  const std::string* v = Find(key);
  bool out = fallback;
  if (v) {
    if (*v == "1" || *v == "true" || *v == "yes" || *v == "on")
      out = true;
    else if (*v == "0" || *v == "false" || *v == "no" || *v == "off")
      out = false;
    else
      throw Error(Errc::kInvalidConfig, key + ": expected a boolean, got '" + *v + "'");
  }
  Record(key, out ? "true" : "false");
  return out;
}

std::string Config::Resolved() const {
  std::map<std::string, std::string> all = values_;
  for (const auto& [k, v] : used_) all[k] = v;
  std::map<std::string, std::map<std::string, std::string>> sections;
  for (const auto& [k, v] : all) {
    const auto dot = k.find('.');
    if (dot == std::string::npos)
      sections[""][k] = v;
    else
      sections[k.substr(0, dot)][k.substr(dot + 1)] = v;
  }
  std::ostringstream out;
  for (const auto& [k, v] : sections[""]) out << k << " = " << v << "\n";
  for (const auto& [name, entries] : sections) {
    if (name.empty()) continue;
    out << "[" << name << "]\n";
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

void Config::WriteSnapshot(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::kInvalidConfig, "cannot write snapshot " + path.string());
  out << Resolved();
}

}  // namespace maskgru
