#include "adaptaa/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "adaptaa/tensor.hpp"

namespace adaptaa {

Rect intersect(const Rect& a, const Rect& b) {
  const std::size_t y0 = std::max(a.y, b.y);
  const std::size_t x0 = std::max(a.x, b.x);
  const std::size_t y1 = std::min(a.y + a.h, b.y + b.h);
  const std::size_t x1 = std::min(a.x + a.w, b.x + b.w);
  if (y1 <= y0 || x1 <= x0) return {y0, x0, 0, 0};
  return {y0, x0, y1 - y0, x1 - x0};
}

std::vector<CropPair> make_crop_pairs(std::size_t src_h, std::size_t src_w,
                                      std::size_t crop_h, std::size_t crop_w,
                                      std::size_t count, std::uint64_t seed) {
  if (crop_h == 0 || crop_w == 0 || crop_h > src_h || crop_w > src_w) {
    throw std::invalid_argument("crop " + std::to_string(crop_h) + "x" +
                                std::to_string(crop_w) + " does not fit image " +
                                std::to_string(src_h) + "x" + std::to_string(src_w));
  }
  if (count == 0) throw std::invalid_argument("crop pair count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> ys(0, src_h - crop_h);
  std::uniform_int_distribution<std::size_t> xs(0, src_w - crop_w);
  std::vector<CropPair> pairs;
  pairs.reserve(count);
  while (pairs.size() < count) {
    CropPair p;
    p.src_h = src_h;
    p.src_w = src_w;
    p.a = {ys(rng), xs(rng), crop_h, crop_w};
    p.b = {ys(rng), xs(rng), crop_h, crop_w};
    const Rect ov = intersect(p.a, p.b);
    if (ov.empty()) continue;
    p.overlap_in_a = {ov.y - p.a.y, ov.x - p.a.x, ov.h, ov.w};
    p.overlap_in_b = {ov.y - p.b.y, ov.x - p.b.x, ov.h, ov.w};
    pairs.push_back(p);
  }
  return pairs;
}

LabelMap::LabelMap(std::size_t h, std::size_t w, std::vector<std::int32_t> ids)
    : h_(h), w_(w), ids_(std::move(ids)) {
  if (ids_.size() != h * w) throw ShapeError("label map size mismatch");
  for (auto v : ids_) {
    if (v < 0) throw std::invalid_argument("label ids must be non-negative");
  }
}

namespace {

void check_rect(const Rect& r, std::size_t h, std::size_t w) {
  if (r.y + r.h > h || r.x + r.w > w) {
    throw ShapeError("crop rectangle exceeds " + std::to_string(h) + "x" +
                     std::to_string(w) + " extents");
  }
}

}  // namespace

LabelMap LabelMap::crop(const Rect& r) const {
  check_rect(r, h_, w_);
  std::vector<std::int32_t> out;
  out.reserve(r.area());
  for (std::size_t i = 0; i < r.h; ++i) {
    for (std::size_t j = 0; j < r.w; ++j) out.push_back((*this)(r.y + i, r.x + j));
  }
  return {r.h, r.w, std::move(out)};
}

Mask::Mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> bits)
    : h_(h), w_(w), bits_(std::move(bits)) {
  if (bits_.size() != h * w) throw ShapeError("mask size mismatch");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Mask Mask::crop(const Rect& r) const {
  check_rect(r, h_, w_);
  Mask out(r.h, r.w);
  for (std::size_t i = 0; i < r.h; ++i) {
    for (std::size_t j = 0; j < r.w; ++j) out.set(i, j, (*this)(r.y + i, r.x + j));
  }
  return out;
}

InstanceSet restrict_to_overlap(const InstanceSet& set, const Rect& overlap) {
  InstanceSet out;
  for (const auto& inst : set) {
    Mask m = inst.mask.crop(overlap);
    if (m.count() == 0) continue;
    out.push_back({std::move(m), inst.class_id, inst.confidence});
  }
  return out;
}

double iou(const Mask& a, const Mask& b) {
  if (a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("iou: mask extents differ");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += (x[i] & y[i]);
    uni += (x[i] | y[i]);
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

double classification_consistency(std::span<const int> pred_a,
                                  std::span<const int> pred_b) {
  if (pred_a.size() != pred_b.size()) {
    throw ShapeError("classification consistency: prediction lists differ in length");
  }
  if (pred_a.empty()) throw std::invalid_argument("classification consistency: no pairs");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pred_a.size(); ++i) agree += pred_a[i] == pred_b[i];
  return double(agree) / double(pred_a.size());
}

double semantic_consistency(const LabelMap& a, const LabelMap& b) {
  if (a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("semantic consistency: overlap extents differ");
  }
  if (a.ids().empty()) throw ShapeError("semantic consistency: empty overlap");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.ids().size(); ++i) agree += a.ids()[i] == b.ids()[i];
  return double(agree) / double(a.ids().size());
}

AggregateScore massc(const std::vector<std::vector<LabelMapPair>>& images) {
  if (images.empty()) throw std::invalid_argument("mASSC: no images");
  AggregateScore score;
  double total = 0.0;
  for (const auto& pairs : images) {
    if (pairs.empty()) throw std::invalid_argument("mASSC: image without crop pairs");
    double image_sum = 0.0;
    for (const auto& [a, b] : pairs) image_sum += semantic_consistency(a, b);
    total += image_sum / double(pairs.size());
    score.pairs_used += pairs.size();
  }
  score.value = total / double(images.size());
  return score;
}

std::optional<double> instance_consistency(const InstanceSet& set_b,
                                           const InstanceSet& set_c,
                                           const MaiscOptions& opts) {
  if (set_b.empty()) return std::nullopt;
  for (const auto* set : {&set_b, &set_c}) {
    for (const auto& inst : *set) {
      if (inst.mask.count() == 0) {
        throw std::invalid_argument("mAISC: instance with empty mask");
      }
    }
  }
  std::vector<std::size_t> order(set_b.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return set_b[l].confidence > set_b[r].confidence;
  });

  std::vector<bool> claimed(set_c.size(), false);
  std::size_t positives = 0;
  for (std::size_t ib : order) {
    const auto& mb = set_b[ib];
    double best = -1.0;
    std::size_t best_idx = set_c.size();
    for (std::size_t ic = 0; ic < set_c.size(); ++ic) {
      if (claimed[ic]) continue;
      if (opts.require_class_match && set_c[ic].class_id != mb.class_id) continue;
      const double v = iou(mb.mask, set_c[ic].mask);
      if (v > best) {
        best = v;
        best_idx = ic;
      }
    }
    if (best_idx < set_c.size() && best > opts.iou_threshold) {
      assert(!claimed[best_idx]);
      claimed[best_idx] = true;
      ++positives;
    }
  }
  return double(positives) / double(set_b.size());
}

AggregateScore maisc(const std::vector<std::pair<InstanceSet, InstanceSet>>& pairs,
                     const MaiscOptions& opts) {
  AggregateScore score;
  double total = 0.0;
  for (const auto& [b, c] : pairs) {
    const auto v = instance_consistency(b, c, opts);
    if (!v) {
      ++score.pairs_skipped;
      continue;
    }
    total += *v;
    ++score.pairs_used;
  }
  if (score.pairs_used == 0) {
    throw std::invalid_argument("mAISC: no pair with a non-empty instance set");
  }
  score.value = total / double(score.pairs_used);
  return score;
}

}  // namespace adaptaa
