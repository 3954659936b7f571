#ifndef ADAPTAA_CONFIG_HPP_
#define ADAPTAA_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace adaptaa {

/// Plain-text "key = value" settings; '#' starts a comment. Every key must
/// be read through a getter before check_all_used(), which rejects typos.
class KeyValueConfig {
 public:
  /// Throws FormatError on a line without "=" or with an empty key.
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  /// Throws std::invalid_argument naming any key never queried.
  void check_all_used() const;

  std::string to_text() const;

 private:
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace adaptaa

#endif  // ADAPTAA_CONFIG_HPP_
