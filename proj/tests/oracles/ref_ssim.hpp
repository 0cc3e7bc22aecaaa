#pragma once

// Stand-alone multi-scale SSIM in the style of the original MATLAB release:
// a full 2D Gaussian window evaluated directly at each valid position, 2x2
// box decimation between scales, dynamic range 1.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct Gray {
  int w = 0, h = 0;
  std::vector<double> p;
  double operator()(int x, int y) const { return p[y * w + x]; }
};

inline Gray gray_of(const std::vector<float>& rgb, int w, int h) {
  Gray g{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (int i = 0; i < w * h; ++i) g.p[i] = 0.2126 * rgb[3 * i] + 0.7152 * rgb[3 * i + 1] + 0.0722 * rgb[3 * i + 2];
  return g;
}

/// Returns {mean ssim, mean cs} over every valid 11x11 window.
inline std::pair<double, double> ref_ssim_cs(const Gray& a, const Gray& b) {
  double win[11][11];
  double total = 0.0;
  for (int j = 0; j < 11; ++j)
    for (int i = 0; i < 11; ++i) total += win[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  for (auto& row : win)
    for (double& v : row) v /= total;

  const double c1 = 1e-4, c2 = 9e-4;
  double ssim = 0.0, cs = 0.0;
  int n = 0;
  for (int y = 0; y + 11 <= a.h; ++y)
    for (int x = 0; x + 11 <= a.w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < 11; ++j)
        for (int i = 0; i < 11; ++i) {
          const double wv = win[j][i], va = a(x + i, y + j), vb = b(x + i, y + j);
          ma += wv * va;
          mb += wv * vb;
          saa += wv * va * va;
          sbb += wv * vb * vb;
          sab += wv * va * vb;
        }
      const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
      const double c = (2 * cov + c2) / (var_a + var_b + c2);
      const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      ssim += l * c;
      cs += c;
      ++n;
    }
  return {ssim / n, cs / n};
}

inline Gray decimate(const Gray& g) {
  Gray o{g.w / 2, g.h / 2, {}};
  o.p.resize(static_cast<std::size_t>(o.w) * o.h);
  for (int y = 0; y < o.h; ++y)
    for (int x = 0; x < o.w; ++x)
      o.p[y * o.w + x] = (g(2 * x, 2 * y) + g(2 * x + 1, 2 * y) + g(2 * x, 2 * y + 1) + g(2 * x + 1, 2 * y + 1)) / 4;
  return o;
}

inline double ref_ms_ssim(const std::vector<float>& a, const std::vector<float>& b, int w, int h, int levels) {
  static const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  Gray ga = gray_of(a, w, h), gb = gray_of(b, w, h);
  if (levels == 1) return ref_ssim_cs(ga, gb).first;
  double wsum = 0;
  for (int l = 0; l < levels; ++l) wsum += weights[l];
  double out = 1.0;
  for (int l = 0; l < levels; ++l) {
    const auto [s, c] = ref_ssim_cs(ga, gb);
    const double v = l + 1 == levels ? s : c;
    out *= std::pow(std::max(v, 0.0), weights[l] / wsum);
    ga = decimate(ga);
    gb = decimate(gb);
  }
  return out;
}

}  // namespace oracle
