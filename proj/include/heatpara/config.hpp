#pragma once

#include <map>
#include <string>
#include <vector>

#include "heatpara/experiments.hpp"

namespace heatpara {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string doc;
};

// Every accepted key with its default.
const std::vector<ConfigKey>& config_keys();

// Flat "key = value" document; '#' starts a comment. Every key is always present.
class Config {
 public:
  Config();
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  // Throws InvalidArgument for unknown keys.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;

  // Sorted key=value lines; the hash is the crc32 of this text.
  std::string canonical() const;
  std::string hash() const;

  StudyConfig study() const;
  json to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

std::vector<double> parse_double_list(const std::string& s);
// "1,2,5" or "1-10" or a mix of both.
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

}  // namespace heatpara
