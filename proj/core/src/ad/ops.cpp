#include "dociiw/ad/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "dociiw/error.hpp"

namespace dociiw::ad {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

std::array<int, 3> as_chw(const Shape& s, const char* op) {
  if (s.rank() == 0) return {1, 1, 1};
  if (s.rank() != 3) throw Error(Errc::ShapeMismatch, std::string(op) + ": expected rank-3 tensor, got " + s.str());
  return {s[0], s[1], s[2]};
}

const Shape& rank3(Var v, const char* op) {
  if (v.shape().rank() != 3) {
    throw Error(Errc::ShapeMismatch, std::string(op) + ": expected rank-3 tensor, got " + v.shape().str());
  }
  return v.shape();
}

struct Broadcast {
  std::array<int, 3> out{};
  std::array<std::size_t, 3> sa{}, sb{};  // strides (0 on broadcast axes)
  Shape shape;
};

Broadcast broadcast(const Shape& a, const Shape& b, const char* op) {
  const auto da = as_chw(a, op), db = as_chw(b, op);
  Broadcast r;
  for (int i = 0; i < 3; ++i) {
    if (da[i] != db[i] && da[i] != 1 && db[i] != 1) {
      throw Error(Errc::ShapeMismatch, std::string(op) + ": cannot broadcast " + a.str() + " with " + b.str());
    }
    r.out[i] = std::max(da[i], db[i]);
  }
  const std::array<std::size_t, 3> full_a{static_cast<std::size_t>(da[1]) * da[2], static_cast<std::size_t>(da[2]), 1};
  const std::array<std::size_t, 3> full_b{static_cast<std::size_t>(db[1]) * db[2], static_cast<std::size_t>(db[2]), 1};
  for (int i = 0; i < 3; ++i) {
    r.sa[i] = da[i] == 1 ? 0 : full_a[i];
    r.sb[i] = db[i] == 1 ? 0 : full_b[i];
  }
  r.shape = (a.rank() == 0 && b.rank() == 0) ? Shape::scalar() : Shape::image(r.out[0], r.out[1], r.out[2]);
  return r;
}

// Visits every output element with its operand offsets.
template <class F>
void for_each_broadcast(const Broadcast& bc, F&& f) {
  std::size_t o = 0;
  for (int c = 0; c < bc.out[0]; ++c) {
    for (int y = 0; y < bc.out[1]; ++y) {
      std::size_t ia = c * bc.sa[0] + y * bc.sa[1];
      std::size_t ib = c * bc.sb[0] + y * bc.sb[1];
      for (int x = 0; x < bc.out[2]; ++x, ++o, ia += bc.sa[2], ib += bc.sb[2]) f(o, ia, ib);
    }
  }
}

// fwd(a, b) -> value; grad(a, b, out) -> {d out/d a, d out/d b}
template <class Fwd, class Grad>
Var binary(Var a, Var b, const char* name, Fwd fwd, Grad dgrad) {
  Tape& t = a.tape();
  Broadcast bc = broadcast(a.shape(), b.shape(), name);
  const auto& va = a.value().data;
  const auto& vb = b.value().data;
  Tensor out = Tensor::zeros(bc.shape);
  for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) { out.data[o] = fwd(va[ia], vb[ib]); });
  const int ida = a.id(), idb = b.id();
  return t.record(std::move(out), {a, b}, [bc, ida, idb, dgrad](Tape& tape, int self) {
    const auto g = tape.grad(self);
    const auto& xa = tape.value(ida).data;
    const auto& xb = tape.value(idb).data;
    const auto& xo = tape.value(self).data;
    const bool need_a = tape.requires_grad(ida), need_b = tape.requires_grad(idb);
    std::span<float> ga = need_a ? tape.grad(ida) : std::span<float>{};
    std::span<float> gb = need_b ? tape.grad(idb) : std::span<float>{};
    for_each_broadcast(bc, [&](std::size_t o, std::size_t ia, std::size_t ib) {
      const auto [da, db] = dgrad(xa[ia], xb[ib], xo[o]);
      if (need_a) ga[ia] += g[o] * da;
      if (need_b) gb[ib] += g[o] * db;
    });
  });
}

// fwd(x) -> y; deriv(x, y) -> dy/dx
template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tensor out = a.value();
  for (float& v : out.data) v = fwd(v);
  const int ida = a.id();
  return a.tape().record(std::move(out), {a}, [ida, deriv](Tape& tape, int self) {
    const auto g = tape.grad(self);
    const auto& x = tape.value(ida).data;
    const auto& y = tape.value(self).data;
    auto gx = tape.grad(ida);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(a, b, "add", [](float x, float y) { return x + y; },
                [](float, float, float) { return std::array<float, 2>{1.0f, 1.0f}; });
}

Var sub(Var a, Var b) {
  return binary(a, b, "sub", [](float x, float y) { return x - y; },
                [](float, float, float) { return std::array<float, 2>{1.0f, -1.0f}; });
}

Var mul(Var a, Var b) {
  return binary(a, b, "mul", [](float x, float y) { return x * y; },
                [](float x, float y, float) { return std::array<float, 2>{y, x}; });
}

Var div(Var a, Var b) {
  return binary(a, b, "div", [](float x, float y) { return x / y; },
                [](float, float y, float q) { return std::array<float, 2>{1.0f / y, -q / y}; });
}

Var scale(Var a, float s) {
  return unary(a, [s](float x) { return s * x; }, [s](float, float) { return s; });
}

Var add_scalar(Var a, float s) {
  return unary(a, [s](float x) { return x + s; }, [](float, float) { return 1.0f; });
}

Var abs(Var a) {
  return unary(a, [](float x) { return std::fabs(x); },
               [](float x, float) { return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f); });
}

Var clamp_min(Var a, float lo) {
  return unary(a, [lo](float x) { return std::max(x, lo); }, [lo](float x, float) { return x > lo ? 1.0f : 0.0f; });
}

Var leaky_relu(Var a, float slope) {
  return unary(a, [slope](float x) { return x > 0.0f ? x : slope * x; },
               [slope](float x, float) { return x > 0.0f ? 1.0f : slope; });
}

Var silu(Var a) {
  return unary(a, [](float x) { return x / (1.0f + std::exp(-x)); },
               [](float x, float) {
                 const float s = 1.0f / (1.0f + std::exp(-x));
                 return s * (1.0f + x * (1.0f - s));
               });
}

Var sigmoid(Var a) {
  return unary(a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
               [](float, float y) { return y * (1.0f - y); });
}

Var softplus(Var a) {
  return unary(
      a, [](float x) { return x > 20.0f ? x : std::log1p(std::exp(x)); },
      [](float x, float) { return 1.0f / (1.0f + std::exp(-x)); });
}

Var conv2d(Var x, Var w, Var bias) {
  const Shape xs = rank3(x, "conv2d");
  const Shape ws = w.shape();
  if (ws.rank() != 4 || ws[1] != xs.c() || ws[2] != ws[3] || ws[2] % 2 == 0) {
    throw Error(Errc::ShapeMismatch, "conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
  }
  const int co = ws[0], ci = ws[1], k = ws[2], pad = k / 2;
  if (bias.shape().rank() != 1 || bias.shape()[0] != co) {
    throw Error(Errc::ShapeMismatch, "conv2d: bias " + bias.shape().str() + " for " + std::to_string(co) + " outputs");
  }
  const int h = xs.h(), wd = xs.w();
  const std::size_t hw = static_cast<std::size_t>(h) * wd;
  const std::size_t rows = static_cast<std::size_t>(ci) * k * k;

  // im2col: row (c, ky, kx), column (y, x).
  // Eigen only ever sees Eigen-owned (aligned) operands: bit-identical across runs.
  auto col = std::make_shared<RowMatrix>(RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw)));
  const auto& xv = x.value().data;
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* dst = col->data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h || x1 <= x0) continue;
          const float* src = xv.data() + (static_cast<std::size_t>(c) * h + sy) * wd;
          float* row = dst + static_cast<std::size_t>(y) * wd;
          std::copy(src + x0 + dx, src + x1 + dx, row + x0);
        }
      }
    }
  }

  const RowMatrix wm = ConstMatMap(w.value().data.data(), co, static_cast<Eigen::Index>(rows));
  RowMatrix om = wm * *col;
  const auto& bv = bias.value().data;
  for (int o = 0; o < co; ++o) om.row(o).array() += bv[o];
  Tensor out(Shape::image(co, h, wd), std::vector<float>(om.data(), om.data() + om.size()));

  const int idx = x.id(), idw = w.id(), idb = bias.id();
  return x.tape().record(std::move(out), {x, w, bias}, [=](Tape& t, int self) {
    const RowMatrix gm = ConstMatMap(t.grad(self).data(), co, static_cast<Eigen::Index>(hw));
    if (t.requires_grad(idw)) {
      const RowMatrix dw = gm * col->transpose();
      auto gw = t.grad(idw);
      for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += dw.data()[i];
    }
    if (t.requires_grad(idb)) {
      auto gb = t.grad(idb);
      for (int o = 0; o < co; ++o) gb[o] += gm.row(o).sum();
    }
    if (t.requires_grad(idx)) {
      const RowMatrix dcol = wm.transpose() * gm;
      auto gx = t.grad(idx);
      for (int c = 0; c < ci; ++c) {
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float* src = dcol.data() + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
            const int dx = kx - pad;
            const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
            for (int y = 0; y < h; ++y) {
              const int sy = y + ky - pad;
              if (sy < 0 || sy >= h || x1 <= x0) continue;
              float* dst = gx.data() + (static_cast<std::size_t>(c) * h + sy) * wd;
              const float* row = src + static_cast<std::size_t>(y) * wd;
              for (int xx = x0; xx < x1; ++xx) dst[xx + dx] += row[xx];
            }
          }
        }
      }
    }
  });
}

Var avg_pool2(Var x) {
  const Shape s = rank3(x, "avg_pool2");
  if (s.h() % 2 || s.w() % 2) throw Error(Errc::ShapeMismatch, "avg_pool2: odd spatial size " + s.str());
  const int c = s.c(), h = s.h() / 2, w = s.w() / 2;
  Tensor out = Tensor::zeros(Shape::image(c, h, w));
  const Tensor& in = x.value();
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        out.at(ch, y, xx) = 0.25f * (in.at(ch, 2 * y, 2 * xx) + in.at(ch, 2 * y, 2 * xx + 1) +
                                     in.at(ch, 2 * y + 1, 2 * xx) + in.at(ch, 2 * y + 1, 2 * xx + 1));
      }
    }
  }
  const int idx = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad(idx);
    const int W = 2 * w, H = 2 * h;
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < H; ++y) {
        for (int xx = 0; xx < W; ++xx) {
          gx[(static_cast<std::size_t>(ch) * H + y) * W + xx] +=
              0.25f * g[(static_cast<std::size_t>(ch) * h + y / 2) * w + xx / 2];
        }
      }
    }
  });
}

Var upsample2(Var x) {
  const Shape s = rank3(x, "upsample2");
  const int c = s.c(), h = s.h(), w = s.w();
  Tensor out = Tensor::zeros(Shape::image(c, 2 * h, 2 * w));
  const Tensor& in = x.value();
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int xx = 0; xx < 2 * w; ++xx) out.at(ch, y, xx) = in.at(ch, y / 2, xx / 2);
    }
  }
  const int idx = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad(idx);
    const int W = 2 * w, H = 2 * h;
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < H; ++y) {
        for (int xx = 0; xx < W; ++xx) {
          gx[(static_cast<std::size_t>(ch) * h + y / 2) * w + xx / 2] +=
              g[(static_cast<std::size_t>(ch) * H + y) * W + xx];
        }
      }
    }
  });
}

Var concat(Var a, Var b) {
  const Shape sa = rank3(a, "concat");
  const Shape sb = rank3(b, "concat");
  if (sa.h() != sb.h() || sa.w() != sb.w()) {
    throw Error(Errc::ShapeMismatch, "concat: spatial sizes differ " + sa.str() + " vs " + sb.str());
  }
  Tensor out = Tensor::zeros(Shape::image(sa.c() + sb.c(), sa.h(), sa.w()));
  const std::size_t na = a.value().numel();
  std::copy(a.value().data.begin(), a.value().data.end(), out.data.begin());
  std::copy(b.value().data.begin(), b.value().data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(na));
  const int ida = a.id(), idb = b.id();
  return a.tape().record(std::move(out), {a, b}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    if (t.requires_grad(ida)) {
      auto ga = t.grad(ida);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(idb)) {
      auto gb = t.grad(idb);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

Var channel_sum(Var x) {
  const Shape s = rank3(x, "channel_sum");
  const std::size_t hw = static_cast<std::size_t>(s.h()) * s.w();
  const int c = s.c();
  Tensor out = Tensor::zeros(Shape::image(1, s.h(), s.w()));
  const auto& v = x.value().data;
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < hw; ++p) out.data[p] += v[ch * hw + p];
  }
  const int idx = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad(idx);
    for (int ch = 0; ch < c; ++ch) {
      for (std::size_t p = 0; p < hw; ++p) gx[ch * hw + p] += g[p];
    }
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (float v : x.value().data) acc += v;
  const int idx = x.id();
  return x.tape().record(Tensor::scalar(static_cast<float>(acc)), {x}, [=](Tape& t, int self) {
    const float g = t.grad(self)[0];
    for (float& gx : t.grad(idx)) gx += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().numel();
  if (n == 0) throw Error(Errc::ShapeMismatch, "mean of an empty tensor");
  return scale(sum(x), 1.0f / static_cast<float>(n));
}

Var diff_x(Var x) {
  const Shape s = rank3(x, "diff_x");
  if (s.w() < 2) throw Error(Errc::TooSmall, "diff_x: width < 2");
  const int c = s.c(), h = s.h(), w = s.w();
  Tensor out = Tensor::zeros(Shape::image(c, h, w - 1));
  const Tensor& in = x.value();
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx + 1 < w; ++xx) out.at(ch, y, xx) = in.at(ch, y, xx + 1) - in.at(ch, y, xx);
  const int idx = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad(idx);
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx + 1 < w; ++xx) {
          const float gv = g[(static_cast<std::size_t>(ch) * h + y) * (w - 1) + xx];
          const std::size_t base = (static_cast<std::size_t>(ch) * h + y) * w + xx;
          gx[base + 1] += gv;
          gx[base] -= gv;
        }
  });
}

Var diff_y(Var x) {
  const Shape s = rank3(x, "diff_y");
  if (s.h() < 2) throw Error(Errc::TooSmall, "diff_y: height < 2");
  const int c = s.c(), h = s.h(), w = s.w();
  Tensor out = Tensor::zeros(Shape::image(c, h - 1, w));
  const Tensor& in = x.value();
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y + 1 < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at(ch, y, xx) = in.at(ch, y + 1, xx) - in.at(ch, y, xx);
  const int idx = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad(idx);
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y + 1 < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const float gv = g[(static_cast<std::size_t>(ch) * (h - 1) + y) * w + xx];
          const std::size_t base = (static_cast<std::size_t>(ch) * h + y) * w + xx;
          gx[base + w] += gv;
          gx[base] -= gv;
        }
  });
}

Var laplacian(Var x) {
  const Shape s = rank3(x, "laplacian");
  if (s.h() < 3 || s.w() < 3) throw Error(Errc::TooSmall, "laplacian: field smaller than 3x3");
  const int c = s.c(), h = s.h(), w = s.w();
  Tensor out = Tensor::zeros(Shape::image(c, h - 2, w - 2));
  const Tensor& in = x.value();
  for (int ch = 0; ch < c; ++ch)
    for (int y = 1; y + 1 < h; ++y)
      for (int xx = 1; xx + 1 < w; ++xx) {
        out.at(ch, y - 1, xx - 1) = in.at(ch, y - 1, xx) + in.at(ch, y + 1, xx) + in.at(ch, y, xx - 1) +
                                    in.at(ch, y, xx + 1) - 4.0f * in.at(ch, y, xx);
      }
  const int idx = x.id();
  return x.tape().record(std::move(out), {x}, [=](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad(idx);
    for (int ch = 0; ch < c; ++ch)
      for (int y = 1; y + 1 < h; ++y)
        for (int xx = 1; xx + 1 < w; ++xx) {
          const float gv = g[(static_cast<std::size_t>(ch) * (h - 2) + y - 1) * (w - 2) + xx - 1];
          const std::size_t p = (static_cast<std::size_t>(ch) * h + y) * w + xx;
          gx[p - w] += gv;
          gx[p + w] += gv;
          gx[p - 1] += gv;
          gx[p + 1] += gv;
          gx[p] -= 4.0f * gv;
        }
  });
}

}  // namespace dociiw::ad
