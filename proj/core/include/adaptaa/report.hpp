#ifndef ADAPTAA_REPORT_HPP_
#define ADAPTAA_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace adaptaa {

struct MetricEntry {
  std::string metric;
  double value = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricEntry&, const MetricEntry&) = default;
};

/// Named scalar metrics. Text form:
///
///   # adaptaa report: <title>
///   metric=<name> value=<%.9g> pairs_used=<n> pairs_skipped=<n> seed=<n>
///   ...
///   --- json
///   {"title": ..., "entries": [{"metric": ..., ...}, ...]}
///
/// Lines keep insertion order; the JSON block repeats the same entries.
class MetricReport {
 public:
  MetricReport() = default;
  explicit MetricReport(std::string title) : title_(std::move(title)) {}

  void add(MetricEntry e) { entries_.push_back(std::move(e)); }
  void add(const std::string& metric, double value, std::uint64_t seed = 0,
           std::size_t pairs_used = 0, std::size_t pairs_skipped = 0) {
    add(MetricEntry{metric, value, pairs_used, pairs_skipped, seed});
  }

  const std::string& title() const { return title_; }
  const std::vector<MetricEntry>& entries() const { return entries_; }
  /// First entry named `metric`; throws std::out_of_range when absent.
  const MetricEntry& get(const std::string& metric) const;
  bool contains(const std::string& metric) const;

  void append(const MetricReport& other);

  std::string to_text() const;
  /// Reads the JSON block of a text report.
  static MetricReport parse(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static MetricReport load(const std::filesystem::path& path);

 private:
  std::string title_;
  std::vector<MetricEntry> entries_;
};

}  // namespace adaptaa

#endif  // ADAPTAA_REPORT_HPP_
