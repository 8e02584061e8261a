#include "arlp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "arlp/errors.hpp"

namespace arlp {

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "model,mae,rmse,mape_percent,n,excluded_zero_targets\n";
  char buf[160];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g", r.mae, r.rmse, r.mape_percent);
    out << r.model << ',' << buf << ',' << r.n << ',' << r.excluded_zero_targets << '\n';
  }
  if (!out) throw DataError("short write on '" + path + "'");
}

namespace {

struct Canvas {
  int w, h;
  std::vector<unsigned char> px;  // rgb

  Canvas(int w_, int h_, unsigned char r, unsigned char g, unsigned char b)
      : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3) {
    for (int i = 0; i < w * h; ++i) {
      px[3 * i] = r;
      px[3 * i + 1] = g;
      px[3 * i + 2] = b;
    }
  }

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }

  void line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
            unsigned char b) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, r, g, b);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void save(const std::string& path, const std::string& stamp) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "P6\n";
    if (!stamp.empty()) out << "# " << stamp << "\n";
    out << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(px.data()),
              static_cast<std::streamsize>(px.size()));
    if (!out) throw DataError("short write on '" + path + "'");
  }
};

void ramp(double v, unsigned char& r, unsigned char& g, unsigned char& b) {
  // cold (40,60,220) -> warm (220,50,40)
  v = std::clamp(v, 0.0, 1.0);
  r = static_cast<unsigned char>(std::lround(40.0 + v * 180.0));
  g = static_cast<unsigned char>(std::lround(60.0 - v * 10.0));
  b = static_cast<unsigned char>(std::lround(220.0 - v * 180.0));
}

}  // namespace

void write_heatmap_ppm(const std::string& path, const std::vector<double>& cell_values,
                       int rows, int cols, int cell_px, const std::string& stamp) {
  if (rows < 1 || cols < 1 ||
      cell_values.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("heatmap grid shape disagrees with the values");
  double lo = cell_values[0], hi = cell_values[0];
  for (double v : cell_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;

  Canvas canvas(cols * cell_px, rows * cell_px, 255, 255, 255);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = span > 0.0 ? (cell_values[r * cols + c] - lo) / span : 0.5;
      unsigned char cr, cg, cb;
      ramp(v, cr, cg, cb);
      for (int y = 0; y < cell_px; ++y)
        for (int x = 0; x < cell_px; ++x)
          canvas.set(c * cell_px + x, r * cell_px + y, cr, cg, cb);
    }
  canvas.save(path, stamp);
}

void write_loss_curve_ppm(const std::string& path, const std::vector<double>& losses,
                          int width, int height, const std::string& stamp) {
  if (losses.empty()) throw std::invalid_argument("loss curve needs at least one point");
  Canvas canvas(width, height, 255, 255, 255);
  const int margin = 24;
  canvas.line(margin, height - margin, width - 8, height - margin, 60, 60, 60);
  canvas.line(margin, height - margin, margin, 8, 60, 60, 60);

  double lo = losses[0], hi = losses[0];
  for (double v : losses) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo > 0.0 ? hi - lo : 1.0;
  const int plot_w = width - margin - 8, plot_h = height - margin - 8;
  const std::size_t n = losses.size();

  auto px = [&](std::size_t i) {
    const double fx = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
    return margin + static_cast<int>(std::lround(fx * plot_w));
  };
  auto py = [&](double v) {
    const double fy = (v - lo) / span;
    return height - margin - static_cast<int>(std::lround(fy * plot_h));
  };

  for (std::size_t i = 0; i + 1 < n; ++i)
    canvas.line(px(i), py(losses[i]), px(i + 1), py(losses[i + 1]), 40, 70, 200);
  if (n == 1) canvas.set(px(0), py(losses[0]), 40, 70, 200);
  canvas.save(path, stamp);
}

}  // namespace arlp
