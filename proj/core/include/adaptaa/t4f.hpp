#ifndef ADAPTAA_T4F_HPP_
#define ADAPTAA_T4F_HPP_

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaptaa/tensor.hpp"

namespace adaptaa {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// T4F layout: "T4F1", then n, c, h, w as little-endian uint32, then
// n*c*h*w little-endian IEEE-754 binary32 values.
void write_t4f(std::ostream& os, const Tensor& t);
Tensor read_t4f(std::istream& is);
void save_t4f(const std::filesystem::path& path, const Tensor& t);
Tensor load_t4f(const std::filesystem::path& path);

/// Ordered collection of named tensors persisted as a directory holding
/// `manifest.txt` (header line "T4F-MANIFEST 1", then one
/// "<name> <file>" line per tensor) and one T4F file per entry.
class Checkpoint {
 public:
  /// Replaces an existing entry of the same name in place.
  void put(const std::string& name, Tensor t);
  /// 1-D parameter vectors are stored with extents (1, len, 1, 1).
  void put_vector(const std::string& name, const std::vector<float>& v);

  bool contains(const std::string& name) const;
  /// Throws FormatError when the entry is missing.
  const Tensor& get(const std::string& name) const;
  std::vector<float> get_vector(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }

  void save(const std::filesystem::path& dir) const;
  static Checkpoint load(const std::filesystem::path& dir);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace adaptaa

#endif  // ADAPTAA_T4F_HPP_
