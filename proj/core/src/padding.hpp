#ifndef ADAPTAA_SRC_PADDING_HPP_
#define ADAPTAA_SRC_PADDING_HPP_

#include <algorithm>
#include <vector>

#include "adaptaa/ops.hpp"

namespace adaptaa::detail {

// Pads every channel plane of image `in` into `buf`, laid out
// (c, h + 2p, w + 2p).
template <typename T>
inline void pad_image(const BasicTensor<T>& x, std::size_t in, int pad, PadMode mode,
               std::vector<T>& buf) {
  const auto h = static_cast<std::ptrdiff_t>(x.h());
  const auto w = static_cast<std::ptrdiff_t>(x.w());
  const std::ptrdiff_t ph = h + 2 * pad;
  const std::ptrdiff_t pw = w + 2 * pad;
  buf.assign(x.c() * static_cast<std::size_t>(ph * pw), T(0));
  for (std::size_t ic = 0; ic < x.c(); ++ic) {
    const auto src = x.plane(in, ic);
    T* dst = buf.data() + ic * static_cast<std::size_t>(ph * pw);
    for (std::ptrdiff_t y = 0; y < ph; ++y) {
      std::ptrdiff_t sy = y - pad;
      if (sy < 0 || sy >= h) {
        if (mode == PadMode::kZero) continue;
        sy = reflect_index(sy, h);
      }
      for (std::ptrdiff_t xx = 0; xx < pw; ++xx) {
        std::ptrdiff_t sx = xx - pad;
        if (sx < 0 || sx >= w) {
          if (mode == PadMode::kZero) continue;
          sx = reflect_index(sx, w);
        }
        dst[y * pw + xx] = src[static_cast<std::size_t>(sy * w + sx)];
      }
    }
  }
}

/// Adds a padded-layout gradient buffer back onto image `in` of `gx`,
/// routing reflected border positions to their source samples.
template <typename T>
inline void fold_padded_grad(const std::vector<T>& gpad, std::size_t in,
                             int pad, PadMode mode, BasicTensor<T>& gx) {
  const auto h = static_cast<std::ptrdiff_t>(gx.h());
  const auto w = static_cast<std::ptrdiff_t>(gx.w());
  const std::ptrdiff_t ph = h + 2 * pad;
  const std::ptrdiff_t pw = w + 2 * pad;
  for (std::size_t ic = 0; ic < gx.c(); ++ic) {
    auto dst = gx.plane(in, ic);
    const T* src = gpad.data() + ic * static_cast<std::size_t>(ph * pw);
    for (std::ptrdiff_t y = 0; y < ph; ++y) {
      std::ptrdiff_t sy = y - pad;
      if (sy < 0 || sy >= h) {
        if (mode == PadMode::kZero) continue;
        sy = reflect_index(sy, h);
      }
      for (std::ptrdiff_t xx = 0; xx < pw; ++xx) {
        std::ptrdiff_t sx = xx - pad;
        if (sx < 0 || sx >= w) {
          if (mode == PadMode::kZero) continue;
          sx = reflect_index(sx, w);
        }
        dst[static_cast<std::size_t>(sy * w + sx)] += src[y * pw + xx];
      }
    }
  }
}

// Unfolds a padded (c, ph, pw) buffer into a (c·k·k, oh·ow) row-major
// matrix; row (ic·k + ky)·k + kx holds the samples seen by that weight.
template <typename T>
inline void im2col(const std::vector<T>& padded, std::size_t c, std::size_t ph,
                   std::size_t pw, std::size_t k, std::size_t stride, std::size_t oh,
                   std::size_t ow, std::vector<T>& col) {
  col.resize(c * k * k * oh * ow);
  T* dst = col.data();
  for (std::size_t ic = 0; ic < c; ++ic) {
    const T* src = padded.data() + ic * ph * pw;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const T* row = src + (oy * stride + ky) * pw + kx;
          if (stride == 1) {
            std::copy(row, row + ow, dst);
          } else {
            for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] = row[ox * stride];
          }
          dst += ow;
        }
      }
    }
  }
}

// Adjoint of im2col: scatters a column matrix back into a padded buffer.
template <typename T>
inline void col2im_add(const std::vector<T>& col, std::size_t c, std::size_t ph,
                       std::size_t pw, std::size_t k, std::size_t stride, std::size_t oh,
                       std::size_t ow, std::vector<T>& padded) {
  const T* src = col.data();
  for (std::size_t ic = 0; ic < c; ++ic) {
    T* dst = padded.data() + ic * ph * pw;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          T* row = dst + (oy * stride + ky) * pw + kx;
          for (std::size_t ox = 0; ox < ow; ++ox) row[ox * stride] += src[ox];
          src += ow;
        }
      }
    }
  }
}

}  // namespace adaptaa::detail

#endif  // ADAPTAA_SRC_PADDING_HPP_
