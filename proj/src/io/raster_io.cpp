#include "trisoup/io/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "trisoup/core/error.hpp"

namespace trisoup {

namespace {

void skip_ppm_whitespace(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

void write_ppm(const std::string& path, const ImageD& img) {
  TRISOUP_CHECK(img.channels == 3, "write_ppm: expected 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write image: " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
        row[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

ImageD read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw ParseError(path + ": not a binary PPM (P6) file");
  skip_ppm_whitespace(in);
  int w = 0, h = 0, maxval = 0;
  in >> w;
  skip_ppm_whitespace(in);
  in >> h;
  skip_ppm_whitespace(in);
  in >> maxval;
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw ParseError(path + ": unsupported PPM header");
  }
  in.get();  // single whitespace before pixel data
  ImageD img(w, h, 3);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!in) throw ParseError(path + ": truncated PPM pixel data");
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[x * 3 + c] / 255.0;
    }
  }
  return img;
}

void write_pfm(const std::string& path, const ImageD& img) {
  TRISOUP_CHECK(img.channels == 1 || img.channels == 3, "write_pfm: 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write raster: " + path);
  out << (img.channels == 1 ? "Pf" : "PF") << "\n"
      << img.width << " " << img.height << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {  // bottom-up
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        row[x * img.channels + c] = static_cast<float>(img.at(x, y, c));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
  }
}

ImageD read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open raster: " + path);
  std::string magic;
  in >> magic;
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw ParseError(path + ": not a PFM file");
  }
  int w = 0, h = 0;
  double scale = 0.0;
  in >> w >> h >> scale;
  if (w <= 0 || h <= 0 || scale >= 0.0) {
    throw ParseError(path + ": unsupported PFM header (big-endian or empty)");
  }
  in.get();
  ImageD img(w, h, channels);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
    if (!in) throw ParseError(path + ": truncated PFM pixel data");
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) img.at(x, y, c) = row[x * channels + c];
    }
  }
  return img;
}

ImageD read_raster(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".pfm") return read_pfm(path);
  throw ValidationError("unsupported raster extension (want .ppm or .pfm): " + path);
}

}  // namespace trisoup
