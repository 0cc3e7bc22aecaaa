#pragma once

// Independent reference computations for the tests. Everything here is
// written against raw arrays in double precision and shares no code with the
// library beyond its public value types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dociiw/ad/tensor.hpp"
#include "dociiw/raster.hpp"

namespace oracle {

using dociiw::ad::Shape;
using dociiw::ad::Tensor;

// ---- generators -----------------------------------------------------------

struct Gen {
  std::mt19937_64 eng;
  explicit Gen(std::uint64_t seed) : eng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  std::vector<float> floats(std::size_t n, double lo, double hi) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(uniform(lo, hi));
    return v;
  }
  Tensor tensor(Shape s, double lo, double hi) {
    const std::size_t n = s.numel();
    return Tensor(std::move(s), floats(n, lo, hi));
  }
  Tensor mask(int h, int w, double p_on = 0.7) {
    Tensor m = Tensor::zeros(Shape{1, h, w});
    for (float& x : m.data) x = coin(p_on) ? 1.0f : 0.0f;
    return m;
  }
  dociiw::LinearImage image(int w, int h, double lo, double hi) {
    return dociiw::LinearImage(w, h, floats(static_cast<std::size_t>(w) * h * 3, lo, hi));
  }
  dociiw::ShadingMap shading(int w, int h, int c, double lo, double hi) {
    return dociiw::ShadingMap(w, h, c, floats(static_cast<std::size_t>(w) * h * c, lo, hi));
  }
  std::string text(int max_len, const std::string& alphabet) {
    const int n = integer(0, max_len);
    std::string s;
    for (int i = 0; i < n; ++i) s += alphabet[integer(0, static_cast<int>(alphabet.size()) - 1)];
    return s;
  }
};

// ---- naive loss terms on planar tensors -----------------------------------

inline double masked_l1(const Tensor& a, const Tensor& b, const Tensor& mask) {
  const int c = a.shape.c(), h = a.shape.h(), w = a.shape.w();
  double s = 0.0;
  long n = 0;
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (mask.at(0, y, x) != 0.0f) {
          s += std::abs(double(a.at(k, y, x)) - b.at(k, y, x));
          ++n;
        }
  return n ? s / n : 0.0;
}

inline double l1(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += std::abs(double(a[i]) - b[i]);
  return s / a.numel();
}

inline double grad_l1(const Tensor& f) {
  const int c = f.shape.c(), h = f.shape.h(), w = f.shape.w();
  double s = 0.0;
  long n = 0;
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) { s += std::abs(double(f.at(k, y, x + 1)) - f.at(k, y, x)); ++n; }
        if (y + 1 < h) { s += std::abs(double(f.at(k, y + 1, x)) - f.at(k, y, x)); ++n; }
      }
  return s / n;
}

inline double laplacian_l1(const Tensor& f) {
  const int c = f.shape.c(), h = f.shape.h(), w = f.shape.w();
  double s = 0.0;
  long n = 0;
  for (int k = 0; k < c; ++k)
    for (int y = 1; y + 1 < h; ++y)
      for (int x = 1; x + 1 < w; ++x) {
        const double v = double(f.at(k, y - 1, x)) + f.at(k, y + 1, x) + f.at(k, y, x - 1) + f.at(k, y, x + 1) -
                         4.0 * f.at(k, y, x);
        s += std::abs(v);
        ++n;
      }
  return s / n;
}

inline Tensor chroma(const Tensor& img, double eps = 1e-4) {
  Tensor out = img;
  const int h = img.shape.h(), w = img.shape.w();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double s = double(img.at(0, y, x)) + img.at(1, y, x) + img.at(2, y, x);
      for (int k = 0; k < 3; ++k) out.at(k, y, x) = static_cast<float>(img.at(k, y, x) / std::max(s, eps));
    }
  return out;
}

// ---- finite differences ---------------------------------------------------

/// Central-difference gradient of f at x, in double.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f(x);
    x[i] = keep - h;
    const double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---- edit distance --------------------------------------------------------

/// Full quadratic Levenshtein table.
template <class Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[n][m];
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---- Planckian locus ------------------------------------------------------

struct LocusPoint {
  double cct, x, y;
};

/// CIE 1931 chromaticities of blackbody radiators, from published tables.
inline constexpr std::array<LocusPoint, 5> kPlanckianTable{{
    {3000.0, 0.4369, 0.4041},
    {4000.0, 0.3805, 0.3768},
    {5000.0, 0.3451, 0.3516},
    {6500.0, 0.3135, 0.3236},
    {10000.0, 0.2807, 0.2883},
}};

}  // namespace oracle
