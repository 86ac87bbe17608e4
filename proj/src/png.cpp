#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "lmd/io.hpp"
#include "lmd/qoi.hpp"

namespace lmd {
namespace {

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const unsigned char* data, std::size_t len) {
  put_be32(out, static_cast<std::uint32_t>(len));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  if (len) out.insert(out.end(), data, data + len);
  const uLong crc =
      crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

// Minimal RGB8 PNG encoder with fixed zlib settings (deterministic bytes).
void write_png(const std::string& path, int width, int height,
               const std::vector<unsigned char>& rgb) {
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * width));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    const unsigned char* row = rgb.data() + static_cast<std::size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + 3 * width);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("write_png: compression failed");
  comp.resize(comp_len);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  unsigned char ihdr[13];
  ihdr[0] = static_cast<unsigned char>((width >> 24) & 0xff);
  ihdr[1] = static_cast<unsigned char>((width >> 16) & 0xff);
  ihdr[2] = static_cast<unsigned char>((width >> 8) & 0xff);
  ihdr[3] = static_cast<unsigned char>(width & 0xff);
  ihdr[4] = static_cast<unsigned char>((height >> 24) & 0xff);
  ihdr[5] = static_cast<unsigned char>((height >> 16) & 0xff);
  ihdr[6] = static_cast<unsigned char>((height >> 8) & 0xff);
  ihdr[7] = static_cast<unsigned char>(height & 0xff);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // color type: RGB
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // interlace
  put_chunk(out, "IHDR", ihdr, 13);
  put_chunk(out, "IDAT", comp.data(), comp.size());
  put_chunk(out, "IEND", nullptr, 0);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write_png: write failed for " + path);
}

// Linear colormap on [0,1]: dark blue -> white-ish ramp per channel.
void colormap(double v, unsigned char* px) {
  v = std::clamp(v, 0.0, 1.0);
  px[0] = static_cast<unsigned char>(std::lround(255.0 * v));
  px[1] = static_cast<unsigned char>(std::lround(255.0 * v));
  px[2] = static_cast<unsigned char>(std::lround(64.0 + 191.0 * v));
}

}  // namespace

void render_field(const FieldState& s, const std::string& path) {
  const int gap = 2;
  const int width = 3 * s.W + 2 * gap;
  const int height = s.H;
  std::vector<unsigned char> rgb(static_cast<std::size_t>(width) * height * 3,
                                 255);
  const std::vector<double>* fields[3] = {&s.phi, &s.cA, &s.cB};
  for (int panel = 0; panel < 3; ++panel) {
    const int x0 = panel * (s.W + gap);
    for (int r = 0; r < s.H; ++r)
      for (int c = 0; c < s.W; ++c)
        colormap((*fields[panel])[s.idx(r, c)],
                 rgb.data() +
                     (static_cast<std::size_t>(r) * width + x0 + c) * 3);
  }
  // overdraw the phi=0.5 contour in black on all three panels
  const InterfaceContour contour = extract_interface(s);
  for (const auto& pl : contour.lines) {
    for (std::size_t i = 0; i + 1 < pl.pts.size(); ++i) {
      const double ax = pl.pts[i][0] / s.dx, ay = pl.pts[i][1] / s.dx;
      const double bx = pl.pts[i + 1][0] / s.dx, by = pl.pts[i + 1][1] / s.dx;
      const int steps =
          1 + static_cast<int>(4.0 * std::max(std::abs(bx - ax),
                                              std::abs(by - ay)));
      for (int k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / steps;
        const double x = ax + t * (bx - ax), y = ay + t * (by - ay);
        int col = static_cast<int>(std::llround(x)) % s.W;
        if (col < 0) col += s.W;
        const int row = static_cast<int>(std::llround(y));
        if (row < 0 || row >= s.H) continue;
        for (int panel = 0; panel < 3; ++panel) {
          const int x0 = panel * (s.W + gap);
          unsigned char* px =
              rgb.data() +
              (static_cast<std::size_t>(row) * width + x0 + col) * 3;
          px[0] = px[1] = px[2] = 0;
        }
      }
    }
  }
  write_png(path, width, height, rgb);
}

}  // namespace lmd
