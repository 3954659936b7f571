#ifndef ADAPTAA_METRICS_HPP_
#define ADAPTAA_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace adaptaa {

/// Axis-aligned window; (y, x) is the top-left corner.
struct Rect {
  std::size_t y = 0;
  std::size_t x = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t area() const { return h * w; }
  bool empty() const { return h == 0 || w == 0; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Intersection of two rectangles in a shared frame (possibly empty).
Rect intersect(const Rect& a, const Rect& b);

/// Two crops of one source image. The overlap is stored in each crop's
/// local frame; both local rectangles have identical extents.
struct CropPair {
  std::size_t src_h = 0;
  std::size_t src_w = 0;
  Rect a;
  Rect b;
  Rect overlap_in_a;
  Rect overlap_in_b;
};

/// `count` crop pairs with non-empty overlap, drawn uniformly (rejection
/// sampling) from a seeded generator.
std::vector<CropPair> make_crop_pairs(std::size_t src_h, std::size_t src_w,
                                      std::size_t crop_h, std::size_t crop_w,
                                      std::size_t count, std::uint64_t seed);

/// Per-pixel class ids (non-negative).
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, std::vector<std::int32_t> ids);
  LabelMap(std::size_t h, std::size_t w, std::int32_t fill = 0)
      : LabelMap(h, w, std::vector<std::int32_t>(h * w, fill)) {}

  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  std::int32_t operator()(std::size_t i, std::size_t j) const { return ids_[i * w_ + j]; }
  std::int32_t& operator()(std::size_t i, std::size_t j) { return ids_[i * w_ + j]; }
  const std::vector<std::int32_t>& ids() const { return ids_; }

  LabelMap crop(const Rect& r) const;

 private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<std::int32_t> ids_;
};

/// Binary mask; any non-zero byte is foreground.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t h, std::size_t w) : h_(h), w_(w), bits_(h * w, 0) {}
  Mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> bits);

  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * w_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { bits_[i * w_ + j] = v ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::size_t count() const;
  Mask crop(const Rect& r) const;

 private:
  std::size_t h_ = 0;
  std::size_t w_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Instance {
  Mask mask;
  int class_id = 0;
  double confidence = 0.0;
};
using InstanceSet = std::vector<Instance>;

/// Crops every mask to `overlap` and drops instances left empty.
InstanceSet restrict_to_overlap(const InstanceSet& set, const Rect& overlap);

/// |a ∧ b| / |a ∨ b|, or 0 when the union is empty.
double iou(const Mask& a, const Mask& b);

/// Fraction of pairs whose top-1 predictions agree.
double classification_consistency(std::span<const int> pred_a,
                                  std::span<const int> pred_b);

/// Pixel agreement between two label maps over the same overlap.
double semantic_consistency(const LabelMap& a, const LabelMap& b);

struct AggregateScore {
  double value = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
};

/// Per-image mean of pair scores, then the mean over images.
using LabelMapPair = std::pair<LabelMap, LabelMap>;
AggregateScore massc(const std::vector<std::vector<LabelMapPair>>& images);

struct MaiscOptions {
  double iou_threshold = 0.9;
  bool require_class_match = true;
};

/// Share of instances in `set_b` with a consistent counterpart in `set_c`.
///
/// Instances of `set_b` are visited by descending confidence (stable on
/// ties). Each takes the highest-IoU still-unclaimed instance of `set_c`
/// (same class when required; first index on IoU ties) and is positive
/// when that IoU exceeds the threshold strictly. Only a positive match
/// claims its counterpart, and no counterpart is claimed twice.
/// Returns nullopt when `set_b` is empty.
std::optional<double> instance_consistency(const InstanceSet& set_b,
                                           const InstanceSet& set_c,
                                           const MaiscOptions& opts = {});

/// Mean of instance_consistency over all pairs; pairs with empty `set_b`
/// are skipped and counted.
AggregateScore maisc(const std::vector<std::pair<InstanceSet, InstanceSet>>& pairs,
                     const MaiscOptions& opts = {});

}  // namespace adaptaa

#endif  // ADAPTAA_METRICS_HPP_
