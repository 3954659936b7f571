#include "adaptaa/report.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "adaptaa/t4f.hpp"

namespace adaptaa {

namespace {

constexpr const char* kJsonMarker = "--- json";

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

const MetricEntry& MetricReport::get(const std::string& metric) const {
  for (const auto& e : entries_) {
    if (e.metric == metric) return e;
  }
  throw std::out_of_range("report has no metric '" + metric + "'");
}

bool MetricReport::contains(const std::string& metric) const {
  for (const auto& e : entries_) {
    if (e.metric == metric) return true;
  }
  return false;
}

void MetricReport::append(const MetricReport& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << "# adaptaa report: " << title_ << '\n';
  nlohmann::ordered_json j;
  j["title"] = title_;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_) {
    os << "metric=" << e.metric << " value=" << format_value(e.value)
       << " pairs_used=" << e.pairs_used << " pairs_skipped=" << e.pairs_skipped
       << " seed=" << e.seed << '\n';
    nlohmann::ordered_json je;
    je["metric"] = e.metric;
    je["value"] = e.value;
    je["pairs_used"] = e.pairs_used;
    je["pairs_skipped"] = e.pairs_skipped;
    je["seed"] = e.seed;
    j["entries"].push_back(std::move(je));
  }
  os << kJsonMarker << '\n' << j.dump() << '\n';
  return os.str();
}

MetricReport MetricReport::parse(const std::string& text) {
  const auto pos = text.find(kJsonMarker);
  if (pos == std::string::npos) throw FormatError("report: missing json block");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.substr(pos + std::string(kJsonMarker).size()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  MetricReport r(j.at("title").get<std::string>());
  for (const auto& je : j.at("entries")) {
    // Non-finite values are serialized as null.
    const auto& v = je.at("value");
    const double value = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    r.add(MetricEntry{je.at("metric").get<std::string>(), value,
                      je.at("pairs_used").get<std::size_t>(),
                      je.at("pairs_skipped").get<std::size_t>(),
                      je.at("seed").get<std::uint64_t>()});
  }
  return r;
}

void MetricReport::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << to_text();
}

MetricReport MetricReport::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

}  // namespace adaptaa
