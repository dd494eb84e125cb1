// Copyright 2026 The advmoco Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "advmoco/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "advmoco/evalharness.hpp"
#include "advmoco/experiment.hpp"
#include "advmoco/fileio.hpp"
#include "advmoco/trainloop.hpp"

namespace advmoco {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 760, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt_num(double v) { return std::isnan(v) ? "" : fmt::format("{:.17g}", v); }

struct Axis {
  double lo, hi;
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Axis make_axis(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string frame(const std::string& title, const std::string& x_label, const std::string& y_label, const Axis& y,
                  std::string body) {
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  s += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"15\">{}</text>\n", kLeft, escape(title));
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", kLeft, kTop,
                   plot_w, plot_h);
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v, kTop + plot_h, kTop);
    s += fmt::format("<line x1=\"{}\" x2=\"{}\" y1=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", kLeft, kLeft + plot_w,
                     py, py);
    s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 6, py + 4, v);
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + plot_w / 2, kHeight - 12,
                   escape(x_label));
  s += fmt::format("<text transform=\"translate(16,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                   kTop + plot_h / 2, escape(y_label));
  s += body;
  s += "</svg>\n";
  return s;
}

std::string legend(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10 + 18 * i;
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", kWidth - kRight + 12, y,
                     kPalette[i % 7]);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", kWidth - kRight + 30, y + 10, escape(names[i]));
  }
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, sep);) f.push_back(item);
  if (!line.empty() && line.back() == sep) f.emplace_back();
  return f;
}

struct PendingFile {
  std::string name;
  std::string contents;
};

void loss_plots(const std::string& dir, std::vector<PendingFile>& out) {
  const fs::path path = fs::path(dir) / "metrics.csv";
  if (!fs::exists(path)) return;
  std::istringstream in(read_file(path.string()));
  std::string line;
  std::getline(in, line);
  Series plain{"InfoNCE", {}, {}}, decayed{"decayed InfoNCE", {}, {}}, adv{"generator L1", {}, {}};
  std::string csv = "step,epoch,phase,infonce_loss,decayed_loss,generator_l1\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const StepRecord r = parse_record(line);
    const double x = static_cast<double>(r.step);
    for (auto [s, v] : {std::pair{&plain, r.infonce_loss}, {&decayed, r.decayed_loss}, {&adv, r.generator_l1}}) {
      s->x.push_back(x);
      s->y.push_back(v);
    }
    csv += fmt::format("{},{},{},{},{},{}\n", r.step, r.epoch, r.phase, fmt_num(r.infonce_loss), fmt_num(r.decayed_loss),
                       fmt_num(r.generator_l1));
  }
  if (plain.x.empty()) return;
  out.push_back({"loss_curve.svg", svg_line_chart("Training objectives", "step", "value", {plain, decayed, adv})});
  out.push_back({"loss_curve.csv", csv});
}

void entropy_plots(const std::string& dir, std::vector<PendingFile>& out) {
  std::vector<std::pair<std::string, fs::path>> models;
  if (fs::exists(fs::path(dir) / "report.tsv")) models.emplace_back(".", fs::path(dir) / "report.tsv");
  for (const fs::path& sub : {fs::path(dir), fs::path(dir) / "cells"}) {
    if (!fs::is_directory(sub)) continue;
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(sub))
      if (e.is_directory() && fs::exists(e.path() / "report.tsv")) found.push_back(e.path());
    std::sort(found.begin(), found.end());
    for (const auto& f : found) models.emplace_back(f.lexically_relative(dir).string(), f / "report.tsv");
  }
  if (models.empty()) return;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values(2);
  std::string csv = "model,videos,mean_entropy_clean,mean_entropy_occluded,mean_entropy_delta\n";
  for (const auto& [name, path] : models) {
    const OcclusionSummary s = parse_report_tsv(read_file(path.string())).summary;
    names.push_back(name);
    values[0].push_back(s.mean_entropy_clean);
    values[1].push_back(s.mean_entropy_occluded);
    csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", name, s.videos, s.mean_entropy_clean,
                       s.mean_entropy_occluded, s.mean_entropy_delta);
  }
  out.push_back({"entropy_bars.svg", svg_bar_chart("Prediction entropy, clean vs occluded", "mean entropy (nats)",
                                                   names, {"clean", "occluded"}, values)});
  out.push_back({"entropy_bars.csv", csv});
}

void attention_plots(const std::string& dir, std::vector<PendingFile>& out) {
  const fs::path adir = fs::path(dir) / "attention";
  if (!fs::is_directory(adir)) return;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(adir))
    if (e.path().extension() == ".tsv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    struct Pixel {
      int t, y, x;
      double a, rgb[3];
    };
    std::vector<Pixel> px;
    std::istringstream in(read_file(file.string()));
    std::string line;
    std::getline(in, line);
    int frames = 0, height = 0, width = 0;
    std::string csv = "t,y,x,attention\n";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, '\t');
      if (f.size() != 7) throw std::runtime_error(fmt::format("{}: malformed row", file.string()));
      Pixel p{std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2]), std::stod(f[3]),
              {std::stod(f[4]), std::stod(f[5]), std::stod(f[6])}};
      frames = std::max(frames, p.t + 1);
      height = std::max(height, p.y + 1);
      width = std::max(width, p.x + 1);
      csv += fmt::format("{},{},{},{}\n", p.t, p.y, p.x, f[3]);
      px.push_back(p);
    }
    if (px.empty()) continue;
    // Top row: input frames. Bottom row: heat overlay.
    const int scale = 2, w = frames * width * scale, h = 2 * height * scale;
    std::string img = fmt::format("P6\n{} {}\n255\n", w, h);
    std::vector<unsigned char> raster(static_cast<std::size_t>(w) * h * 3, 0);
    auto put = [&](int row, const Pixel& p, const double rgb[3]) {
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx) {
          const std::size_t yy = static_cast<std::size_t>(row * height + p.y) * scale + dy;
          const std::size_t xx = static_cast<std::size_t>(p.t * width + p.x) * scale + dx;
          for (int c = 0; c < 3; ++c)
            raster[(yy * w + xx) * 3 + c] =
                static_cast<unsigned char>(std::lround(255.0 * std::clamp(rgb[c], 0.0, 1.0)));
        }
    };
    for (const auto& p : px) {
      double heat[3], blend[3];
      heat_color(p.a, heat);
      for (int c = 0; c < 3; ++c) blend[c] = 0.5 * p.rgb[c] + 0.5 * heat[c];
      put(0, p, p.rgb);
      put(1, p, blend);
    }
    img.append(raster.begin(), raster.end());
    const std::string stem = file.stem().string();
    out.push_back({"attention_" + stem + ".ppm", std::move(img)});
    out.push_back({"attention_" + stem + ".csv", std::move(csv)});
  }
}

void ablation_plots(const std::string& dir, std::vector<PendingFile>& out) {
  const fs::path path = fs::path(dir) / "ablate_summary.csv";
  if (!fs::exists(path)) return;
  std::istringstream in(read_file(path.string()));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  std::vector<std::vector<double>> means(1), errors(1);
  std::string csv = "cell,probe_top1_mean,probe_top1_std\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw std::runtime_error("ablate_summary.csv: malformed row");
    const std::string name = fmt::format("{} k={} t={:.6g}", f[0], f[1], std::stod(f[2]));
    names.push_back(name);
    means[0].push_back(std::stod(f[4]));
    errors[0].push_back(std::stod(f[5]));
    csv += fmt::format("{},{},{}\n", name, f[4], f[5]);
  }
  if (names.empty()) return;
  out.push_back({"ablation_probe.svg",
                 svg_bar_chart("Linear-probe top-1 per ablation cell", "top-1", names, {"probe"}, means, errors)});
  out.push_back({"ablation_probe.csv", csv});
}

}  // namespace

void heat_color(double v, double rgb[3]) {
  v = std::clamp(v, 0.0, 1.0);
  rgb[0] = std::clamp(1.5 - std::abs(4.0 * v - 3.0), 0.0, 1.0);
  rgb[1] = std::clamp(1.5 - std::abs(4.0 * v - 2.0), 0.0, 1.0);
  rgb[2] = std::clamp(1.5 - std::abs(4.0 * v - 1.0), 0.0, 1.0);
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isnan(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (!std::isfinite(xlo)) xlo = xhi = ylo = yhi = 0.0;
  const Axis xa = make_axis(xlo, xhi), ya = make_axis(ylo, yhi);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  std::string body;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    names.push_back(series[k].name);
    std::string points;
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      if (std::isnan(series[k].y[i])) continue;
      points += fmt::format("{:.1f},{:.1f} ", xa.map(series[k].x[i], kLeft, kLeft + plot_w),
                            ya.map(series[k].y[i], kTop + plot_h, kTop));
    }
    body += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                        kPalette[k % 7], points);
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = xa.lo + (xa.hi - xa.lo) * i / 4.0;
    body += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n",
                        xa.map(v, kLeft, kLeft + plot_w), kTop + plot_h + 16, v);
  }
  return frame(title, x_label, y_label, ya, body + legend(names));
}

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& categories, const std::vector<std::string>& series,
                          const std::vector<std::vector<double>>& values,
                          const std::vector<std::vector<double>>& errors) {
  if (values.size() != series.size() || (!errors.empty() && errors.size() != series.size()))
    throw std::invalid_argument("bar chart: one value row per series");
  for (std::size_t s = 0; s < values.size(); ++s)
    if (values[s].size() != categories.size() || (!errors.empty() && errors[s].size() != categories.size()))
      throw std::invalid_argument("bar chart: one value per category");
  double hi = 0.0;
  for (std::size_t s = 0; s < values.size(); ++s)
    for (std::size_t c = 0; c < values[s].size(); ++c)
      hi = std::max(hi, values[s][c] + (errors.empty() ? 0.0 : errors[s][c]));
  const Axis ya{0.0, hi > 0.0 ? hi * 1.1 : 1.0};
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double group = plot_w / std::max<std::size_t>(1, categories.size());
  const double bar = 0.8 * group / std::max<std::size_t>(1, series.size());
  std::string body;
  for (std::size_t c = 0; c < categories.size(); ++c) {
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = values[s][c];
      const double x = kLeft + group * c + 0.1 * group + bar * s;
      const double y = ya.map(v, kTop + plot_h, kTop);
      body += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", x, y,
                          bar, kTop + plot_h - y, kPalette[s % 7]);
      if (!errors.empty()) {
        const double e = errors[s][c];
        body += fmt::format("<line x1=\"{0:.1f}\" x2=\"{0:.1f}\" y1=\"{1:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                            x + bar / 2, ya.map(v - e, kTop + plot_h, kTop), ya.map(v + e, kTop + plot_h, kTop));
      }
    }
    body += fmt::format(
        "<text transform=\"translate({:.1f},{}) rotate(20)\" font-size=\"9\">{}</text>\n", kLeft + group * c + 4,
        kTop + plot_h + 12, escape(categories[c]));
  }
  return frame(title, "", y_label, ya, body + legend(series));
}

std::vector<std::string> make_plots(const std::string& run_dir) {
  if (!fs::is_directory(run_dir)) throw UsageError(fmt::format("{} is not a directory", run_dir));
  std::vector<PendingFile> pending;
  loss_plots(run_dir, pending);
  entropy_plots(run_dir, pending);
  attention_plots(run_dir, pending);
  ablation_plots(run_dir, pending);
  if (pending.empty())
    throw UsageError(fmt::format("{} has no metrics.csv, report.tsv, attention maps or ablate_summary.csv", run_dir));
  std::vector<std::string> written;
  for (const auto& f : pending) {
    const std::string path = (fs::path(run_dir) / "plots" / f.name).string();
    write_file_atomic(path, f.contents);
    written.push_back(path);
  }
  return written;
}

}  // namespace advmoco
