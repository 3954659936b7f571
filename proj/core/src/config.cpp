#include "adaptaa/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adaptaa/t4f.hpp"

namespace adaptaa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("config line " + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
  used_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  const auto* v = lookup(key);
  return v ? *v : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  std::size_t used = 0;
  try {
    const long long r = std::stoll(*v, &used);
    if (used == v->size()) return r;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + *v + "'");
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  std::size_t used = 0;
  try {
    const double r = std::stod(*v, &used);
    if (used == v->size()) return r;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "' expects a number, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  std::istringstream is(*v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void KeyValueConfig::check_all_used() const {
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");
  }
}

std::string KeyValueConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace adaptaa
