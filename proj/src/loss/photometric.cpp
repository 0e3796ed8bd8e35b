#include <array>
#include <cmath>

#include "trisoup/core/error.hpp"
#include "trisoup/loss/losses.hpp"

namespace trisoup {

namespace {

constexpr int kWindow = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& gaussian_window() {
  static const std::array<double, kWindow> g = [] {
    std::array<double, kWindow> out{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - (kWindow - 1) / 2.0;
      out[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
  }();
  return g;
}

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane extract_channel(const ImageD& img, int c) {
  Plane p(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p.at(x, y) = img.at(x, y, c);
  return p;
}

// valid separable filter: output (w - 10) x (h - 10), window anchored top-left
Plane filter_valid(const Plane& src) {
  const auto& g = gaussian_window();
  Plane rows(src.w - kWindow + 1, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < rows.w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * src.at(x + k, y);
      rows.at(x, y) = acc;
    }
  }
  Plane out(rows.w, src.h - kWindow + 1);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * rows.at(x, y + k);
      out.at(x, y) = acc;
    }
  }
  return out;
}

// adjoint of filter_valid: scatters window-anchored maps back onto pixels
Plane filter_scatter(const Plane& src, int out_w, int out_h) {
  const auto& g = gaussian_window();
  Plane cols(src.w, out_h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      const double val = src.at(x, y);
      if (val == 0.0) continue;
      for (int k = 0; k < kWindow; ++k) cols.at(x, y + k) += g[k] * val;
    }
  }
  Plane out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < cols.w; ++x) {
      const double val = cols.at(x, y);
      if (val == 0.0) continue;
      for (int k = 0; k < kWindow; ++k) out.at(x + k, y) += g[k] * val;
    }
  }
  return out;
}

Plane hadamard(const Plane& a, const Plane& b) {
  Plane out(a.w, a.h);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

}  // namespace

double ssim(const ImageD& a, const ImageD& b) {
  require_same_shape(a, b, "ssim");
  if (a.width < kWindow || a.height < kWindow) return 1.0;
  double total = 0.0;
  int windows = 0;
  for (int c = 0; c < a.channels; ++c) {
    const Plane x = extract_channel(a, c);
    const Plane y = extract_channel(b, c);
    const Plane mu_x = filter_valid(x);
    const Plane mu_y = filter_valid(y);
    const Plane xx = filter_valid(hadamard(x, x));
    const Plane yy = filter_valid(hadamard(y, y));
    const Plane xy = filter_valid(hadamard(x, y));
    for (int wy = 0; wy < mu_x.h; ++wy) {
      for (int wx = 0; wx < mu_x.w; ++wx) {
        const double mx = mu_x.at(wx, wy), my = mu_y.at(wx, wy);
        const double sx = xx.at(wx, wy) - mx * mx;
        const double sy = yy.at(wx, wy) - my * my;
        const double sxy = xy.at(wx, wy) - mx * my;
        const double s = ((2 * mx * my + kC1) * (2 * sxy + kC2)) /
                         ((mx * mx + my * my + kC1) * (sx + sy + kC2));
        total += s;
        ++windows;
      }
    }
  }
  return windows > 0 ? total / windows : 1.0;
}

PhotometricResult photometric_loss(const ImageD& rendered, const ImageD& target,
                                   double gamma, bool with_grad) {
  require_same_shape(rendered, target, "photometric_loss");
  PhotometricResult res;
  if (with_grad) res.grad = ImageD(rendered.width, rendered.height, rendered.channels);

  const std::size_t n_px = rendered.data.size();
  double l1 = 0.0;
  for (std::size_t i = 0; i < n_px; ++i) {
    l1 += std::abs(rendered.data[i] - target.data[i]);
  }
  l1 /= static_cast<double>(n_px);
  res.l1 = l1;
  if (with_grad) {
    const double scale = (1.0 - gamma) / static_cast<double>(n_px);
    for (std::size_t i = 0; i < n_px; ++i) {
      const double d = rendered.data[i] - target.data[i];
      res.grad.data[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
  }

  const bool ssim_possible = rendered.width >= kWindow && rendered.height >= kWindow;
  double mean_ssim = 1.0;
  if (ssim_possible && gamma > 0.0) {
    double total = 0.0;
    int windows = 0;
    for (int c = 0; c < rendered.channels; ++c) {
      const Plane x = extract_channel(rendered, c);
      const Plane y = extract_channel(target, c);
      const Plane mu_x = filter_valid(x);
      const Plane mu_y = filter_valid(y);
      const Plane xx = filter_valid(hadamard(x, x));
      const Plane yy = filter_valid(hadamard(y, y));
      const Plane xy = filter_valid(hadamard(x, y));
      windows += mu_x.w * mu_x.h;
      for (int wy = 0; wy < mu_x.h; ++wy)
        for (int wx = 0; wx < mu_x.w; ++wx) {
          const double mx = mu_x.at(wx, wy), my = mu_y.at(wx, wy);
          const double sx = xx.at(wx, wy) - mx * mx;
          const double sy = yy.at(wx, wy) - my * my;
          const double sxy = xy.at(wx, wy) - mx * my;
          total += ((2 * mx * my + kC1) * (2 * sxy + kC2)) /
                   ((mx * mx + my * my + kC1) * (sx + sy + kC2));
        }
    }
    const int n_windows = windows;
    mean_ssim = n_windows > 0 ? total / n_windows : 1.0;

    if (with_grad && n_windows > 0) {
      for (int c = 0; c < rendered.channels; ++c) {
        const Plane x = extract_channel(rendered, c);
        const Plane y = extract_channel(target, c);
        const Plane mu_x = filter_valid(x);
        const Plane mu_y = filter_valid(y);
        const Plane xx = filter_valid(hadamard(x, x));
        const Plane yy = filter_valid(hadamard(y, y));
        const Plane xy = filter_valid(hadamard(x, y));

        // dS/dx_p = w_(p-q) (F1 + y_p F2 + x_p F3) summed over windows q
        Plane f1(mu_x.w, mu_x.h), f2(mu_x.w, mu_x.h), f3(mu_x.w, mu_x.h);
        for (int wy = 0; wy < mu_x.h; ++wy)
          for (int wx = 0; wx < mu_x.w; ++wx) {
            const double mx = mu_x.at(wx, wy), my = mu_y.at(wx, wy);
            const double sx = xx.at(wx, wy) - mx * mx;
            const double sy = yy.at(wx, wy) - my * my;
            const double sxy = xy.at(wx, wy) - mx * my;
            const double A = 2 * mx * my + kC1;
            const double B = 2 * sxy + kC2;
            const double C = mx * mx + my * my + kC1;
            const double D = sx + sy + kC2;
            const double S = (A * B) / (C * D);
            f1.at(wx, wy) =
                2 * my * B / (C * D) - 2 * A * my / (C * D) - 2 * S * mx / C + 2 * S * mx / D;
            f2.at(wx, wy) = 2 * A / (C * D);
            f3.at(wx, wy) = -2 * S / D;
          }
        const Plane s1 = filter_scatter(f1, rendered.width, rendered.height);
        const Plane s2 = filter_scatter(f2, rendered.width, rendered.height);
        const Plane s3 = filter_scatter(f3, rendered.width, rendered.height);
        const double scale = -gamma / (2.0 * n_windows);
        for (int py = 0; py < rendered.height; ++py)
          for (int px = 0; px < rendered.width; ++px) {
            const double g = s1.at(px, py) + y.at(px, py) * s2.at(px, py) +
                             x.at(px, py) * s3.at(px, py);
            res.grad.at(px, py, c) += scale * g;
          }
      }
    }
  }

  res.ssim = mean_ssim;
  res.value = (1.0 - gamma) * l1 + gamma * (1.0 - mean_ssim) / 2.0;
  return res;
}

}  // namespace trisoup
