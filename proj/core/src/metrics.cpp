#include "dociiw/metrics.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <sstream>

#include "dociiw/error.hpp"
#include "json.hpp"

namespace dociiw::metrics {

namespace {

constexpr std::array<double, 5> kScaleWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane luminance(const LinearImage& img) {
  Plane p{img.width(), img.height(), std::vector<double>(img.width() * static_cast<std::size_t>(img.height()))};
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      p.v[static_cast<std::size_t>(y) * p.w + x] =
          0.2126 * img.at(x, y, 0) + 0.7152 * img.at(x, y, 1) + 0.0722 * img.at(x, y, 2);
    }
  }
  return p;
}

std::array<double, kWindow> gaussian() {
  std::array<double, kWindow> g{};
  double s = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    s += g[i];
  }
  for (double& x : g) x /= s;
  return g;
}

// Separable valid-mode filtering.
Plane filter(const Plane& p) {
  static const auto g = gaussian();
  Plane tmp{p.w - kWindow + 1, p.h, {}};
  tmp.v.resize(static_cast<std::size_t>(tmp.w) * tmp.h);
  for (int y = 0; y < tmp.h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * p.at(x + k, y);
      tmp.v[static_cast<std::size_t>(y) * tmp.w + x] = s;
    }
  }
  Plane out{tmp.w, p.h - kWindow + 1, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * tmp.at(x, y + k);
      out.v[static_cast<std::size_t>(y) * out.w + x] = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane o{a.w, a.h, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) o.v[i] = a.v[i] * b.v[i];
  return o;
}

Plane downsample(const Plane& p) {
  Plane o{p.w / 2, p.h / 2, {}};
  o.v.resize(static_cast<std::size_t>(o.w) * o.h);
  for (int y = 0; y < o.h; ++y) {
    for (int x = 0; x < o.w; ++x) {
      o.v[static_cast<std::size_t>(y) * o.w + x] =
          0.25 * (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1));
    }
  }
  return o;
}

// Mean SSIM and mean contrast-structure term at one scale.
std::pair<double, double> ssim_cs(const Plane& a, const Plane& b) {
  const Plane mu_a = filter(a), mu_b = filter(b);
  const Plane aa = filter(product(a, a)), bb = filter(product(b, b)), ab = filter(product(a, b));
  double ssim = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = aa.v[i] - ma * ma, vb = bb.v[i] - mb * mb, cov = ab.v[i] - ma * mb;
    const double c = (2.0 * cov + kC2) / (va + vb + kC2);
    cs += c;
    ssim += c * (2.0 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {ssim / n, cs / n};
}

}  // namespace

int ms_ssim_levels(Extent e) {
  const int m = std::min(e.width, e.height);
  if (m < kWindow) throw Error(Errc::TooSmall, "ms_ssim needs at least 11x11 pixels");
  int levels = 1;
  while (levels < 5 && (kWindow << levels) <= m) ++levels;
  return levels;
}

double ms_ssim(const LinearImage& a, const LinearImage& b, int levels) {
  if (a.extent() != b.extent()) throw Error(Errc::ShapeMismatch, "ms_ssim: image sizes differ");
  if (levels < 1 || levels > 5) throw Error(Errc::InvalidArgument, "ms_ssim: levels must lie in [1, 5]");
  if (std::min(a.width(), a.height()) < (kWindow << (levels - 1))) {
    throw Error(Errc::TooSmall, "ms_ssim: image too small for " + std::to_string(levels) + " scales");
  }
  Plane pa = luminance(a), pb = luminance(b);
  if (levels == 1) return ssim_cs(pa, pb).first;

  double wsum = 0.0;
  for (int l = 0; l < levels; ++l) wsum += kScaleWeights[l];
  double result = 1.0;
  for (int l = 0; l < levels; ++l) {
    const auto [ssim, cs] = ssim_cs(pa, pb);
    const double term = l == levels - 1 ? ssim : cs;
    result *= std::pow(std::max(term, 0.0), kScaleWeights[l] / wsum);
    if (l + 1 < levels) {
      pa = downsample(pa);
      pb = downsample(pb);
    }
  }
  return result;
}

double local_distortion(const LinearImage& a, const LinearImage& b, int block, int search) {
  if (a.extent() != b.extent()) throw Error(Errc::ShapeMismatch, "local_distortion: image sizes differ");
  if (block < 2 || search < 0) throw Error(Errc::InvalidArgument, "local_distortion: block >= 2, search >= 0");
  if (a.width() < block || a.height() < block) throw Error(Errc::TooSmall, "local_distortion: image below one block");
  const Plane pa = luminance(a), pb = luminance(b);
  const int n = block * block;

  auto stats = [&](const Plane& p, int x0, int y0, std::vector<double>& centered) {
    double mean = 0.0;
    for (int y = 0; y < block; ++y) {
      for (int x = 0; x < block; ++x) mean += p.at(x0 + x, y0 + y);
    }
    mean /= n;
    double norm = 0.0;
    for (int y = 0; y < block; ++y) {
      for (int x = 0; x < block; ++x) {
        const double d = p.at(x0 + x, y0 + y) - mean;
        centered[static_cast<std::size_t>(y) * block + x] = d;
        norm += d * d;
      }
    }
    return std::sqrt(norm);
  };

  std::vector<double> ca(n), cb(n);
  double total = 0.0;
  int counted = 0;
  for (int by = 0; by + block <= pa.h; by += block) {
    for (int bx = 0; bx + block <= pa.w; bx += block) {
      const double na = stats(pa, bx, by, ca);
      if (na < 1e-6) continue;
      double best = -2.0, best_len = 0.0;
      for (int dy = -search; dy <= search; ++dy) {
        for (int dx = -search; dx <= search; ++dx) {
          const int x0 = bx + dx, y0 = by + dy;
          if (x0 < 0 || y0 < 0 || x0 + block > pb.w || y0 + block > pb.h) continue;
          const double nb = stats(pb, x0, y0, cb);
          if (nb < 1e-6) continue;
          double dot = 0.0;
          for (int i = 0; i < n; ++i) dot += ca[i] * cb[i];
          const double score = dot / (na * nb);
          const double len = std::hypot(dx, dy);
          if (score > best + 1e-9 || (std::abs(score - best) <= 1e-9 && len < best_len)) {
            best = score;
            best_len = len;
          }
        }
      }
      if (best > -2.0) {
        total += best_len;
        ++counted;
      }
    }
  }
  return counted == 0 ? 0.0 : total / counted;
}

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) {
      out.push_back(c);
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? c : c & (0x7F >> len);
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double cer(std::string_view reference, std::string_view hypothesis) {
  const auto r = code_points(reference);
  if (r.empty()) throw Error(Errc::EmptyReference, "cer: empty reference");
  return static_cast<double>(edit_distance(r, code_points(hypothesis))) / static_cast<double>(r.size());
}

double wer(std::string_view reference, std::string_view hypothesis) {
  const auto r = words(reference);
  if (r.empty()) throw Error(Errc::EmptyReference, "wer: reference has no words");
  return static_cast<double>(edit_distance(r, words(hypothesis))) / static_cast<double>(r.size());
}

double angular_error(const Rgb& a, const Rgb& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int c = 0; c < 3; ++c) {
    dot += static_cast<double>(a[c]) * b[c];
    na += static_cast<double>(a[c]) * a[c];
    nb += static_cast<double>(b[c]) * b[c];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(Errc::ZeroVector, "angular_error: zero-length vector");
  const double cosv = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return std::acos(cosv) * 180.0 / std::numbers::pi;
}

std::string_view to_string(OcrStatus s) noexcept {
  switch (s) {
    case OcrStatus::Ok: return "Ok";
    case OcrStatus::Unavailable: return "OcrUnavailable";
    case OcrStatus::Timeout: return "Timeout";
  }
  return "?";
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::mutex ocr_mutex;

}  // namespace

OcrResult run_ocr(const std::filesystem::path& image, const std::string& command_template,
                  std::chrono::milliseconds timeout) {
  OcrResult res;
  const std::string placeholder = "{input}";
  if (command_template.find(placeholder) == std::string::npos) {
    res.message = "command template lacks {input}";
    return res;
  }
  std::string cmd = command_template;
  const std::string quoted = shell_quote(image.string());
  for (std::size_t pos = cmd.find(placeholder); pos != std::string::npos;
       pos = cmd.find(placeholder, pos + quoted.size())) {
    cmd.replace(pos, placeholder.size(), quoted);
  }

  std::lock_guard lock(ocr_mutex);
  int fds[2];
  if (pipe(fds) != 0) {
    res.message = "pipe failed";
    return res;
  }
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    res.message = "fork failed";
    return res;
  }
  if (pid == 0) {
    dup2(fds[1], STDOUT_FILENO);
    const int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string out;
  bool timed_out = false;
  char buf[4096];
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd p{fds[0], POLLIN, 0};
    const int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) {
      timed_out = r == 0;
      break;
    }
    const ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) {
    res.status = OcrStatus::Timeout;
    res.message = "OCR command exceeded " + std::to_string(timeout.count()) + " ms";
    return res;
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    res.message = WIFEXITED(status) ? "OCR command exited with status " + std::to_string(WEXITSTATUS(status))
                                    : "OCR command terminated by a signal";
    return res;
  }
  res.status = OcrStatus::Ok;
  res.text = std::move(out);
  return res;
}

void MetricReport::add(std::string id, std::map<std::string, double> values) {
  rows_.emplace_back(std::move(id), std::move(values));
}

std::map<std::string, double> MetricReport::aggregate() const {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [id, row] : rows_) {
    for (const auto& [k, v] : row) {
      acc[k].first += v;
      acc[k].second += 1;
    }
  }
  std::map<std::string, double> out;
  for (const auto& [k, sn] : acc) out[k] = sn.first / static_cast<double>(sn.second);
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["samples"] = rows_.size();
  j["aggregate"] = aggregate();
  j["per_sample"] = nlohmann::json::array();
  for (const auto& [id, row] : rows_) j["per_sample"].push_back({{"id", id}, {"metrics", row}});
  return j.dump(2);
}

std::string MetricReport::to_table() const {
  const auto agg = aggregate();
  std::ostringstream os;
  char buf[64];
  os << "id        ";
  for (const auto& [k, v] : agg) {
    std::snprintf(buf, sizeof buf, " %14s", k.c_str());
    os << buf;
  }
  os << '\n';
  auto row_line = [&](const std::string& id, const std::map<std::string, double>& row) {
    std::snprintf(buf, sizeof buf, "%-10s", id.c_str());
    os << buf;
    for (const auto& [k, v] : agg) {
      const auto it = row.find(k);
      if (it == row.end()) {
        std::snprintf(buf, sizeof buf, " %14s", "-");
      } else {
        std::snprintf(buf, sizeof buf, " %14.6f", it->second);
      }
      os << buf;
    }
    os << '\n';
  };
  for (const auto& [id, row] : rows_) row_line(id, row);
  row_line("mean", agg);
  return os.str();
}

}  // namespace dociiw::metrics
