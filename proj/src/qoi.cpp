#include "lmd/qoi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace lmd {
namespace {

struct Segment {
  std::array<double, 2> a, b;
};

// Quantized periodic endpoint key for segment chaining.
std::pair<long long, long long> key_of(const std::array<double, 2>& p,
                                       double dx, int W) {
  double xu = p[0] / dx;  // in grid units
  xu = std::fmod(xu, static_cast<double>(W));
  if (xu < 0) xu += W;
  long long qx = std::llround(xu * 65536.0);
  if (qx == static_cast<long long>(W) * 65536) qx = 0;
  const long long qy = std::llround(p[1] / dx * 65536.0);
  return {qx, qy};
}

struct KeyHash {
  std::size_t operator()(const std::pair<long long, long long>& k) const {
    return std::hash<long long>()(k.first * 1000003LL + k.second);
  }
};

}  // namespace

InterfaceContour extract_interface(const std::vector<double>& phi, int H,
                                   int W, double dx) {
  InterfaceContour contour;
  contour.period = W * dx;
  auto at = [&](int r, int c) { return phi[static_cast<std::size_t>(r) * W + c]; };

  std::vector<Segment> segs;
  for (int r = 0; r + 1 < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const int c1 = (c + 1) % W;
      const double tl = at(r, c), tr = at(r, c1);
      const double bl = at(r + 1, c), br = at(r + 1, c1);
      int mask = 0;
      if (tl >= 0.5) mask |= 1;
      if (tr >= 0.5) mask |= 2;
      if (br >= 0.5) mask |= 4;
      if (bl >= 0.5) mask |= 8;
      if (mask == 0 || mask == 15) continue;

      const double x0 = c * dx, y0 = r * dx;
      auto lerp = [](double v0, double v1) { return (0.5 - v0) / (v1 - v0); };
      // crossing points on the four cell edges
      const std::array<double, 2> top = {x0 + lerp(tl, tr) * dx, y0};
      const std::array<double, 2> right = {x0 + dx, y0 + lerp(tr, br) * dx};
      const std::array<double, 2> bottom = {x0 + lerp(bl, br) * dx, y0 + dx};
      const std::array<double, 2> left = {x0, y0 + lerp(tl, bl) * dx};

      auto add = [&](const std::array<double, 2>& a,
                     const std::array<double, 2>& b) {
        // a contour passing exactly through a grid node produces a
        // zero-length segment in the diagonal cell; it would break the
        // chain at that node
        if (std::hypot(a[0] - b[0], a[1] - b[1]) < 1e-9 * dx) return;
        segs.push_back({a, b});
      };
      switch (mask) {
        case 1: add(left, top); break;
        case 2: add(top, right); break;
        case 3: add(left, right); break;
        case 4: add(right, bottom); break;
        case 5:  // saddle, resolved by the cell average
          if ((tl + tr + bl + br) * 0.25 >= 0.5) {
            add(top, right);
            add(bottom, left);
          } else {
            add(top, left);
            add(bottom, right);
          }
          break;
        case 6: add(top, bottom); break;
        case 7: add(left, bottom); break;
        case 8: add(left, bottom); break;
        case 9: add(top, bottom); break;
        case 10:
          if ((tl + tr + bl + br) * 0.25 >= 0.5) {
            add(top, left);
            add(bottom, right);
          } else {
            add(top, right);
            add(bottom, left);
          }
          break;
        case 11: add(right, bottom); break;
        case 12: add(left, right); break;
        case 13: add(top, right); break;
        case 14: add(left, top); break;
        default: break;
      }
    }
  }
  if (segs.empty()) return contour;

  // Chain segments into polylines by periodic endpoint matching.
  using Key = std::pair<long long, long long>;
  std::unordered_multimap<Key, std::pair<int, int>, KeyHash> ends;  // seg, end
  for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
    ends.emplace(key_of(segs[i].a, dx, W), std::make_pair(i, 0));
    ends.emplace(key_of(segs[i].b, dx, W), std::make_pair(i, 1));
  }
  std::vector<bool> used(segs.size(), false);

  auto take_next = [&](const Key& k, int skip_seg) -> std::pair<int, int> {
    auto range = ends.equal_range(k);
    for (auto it = range.first; it != range.second; ++it) {
      const int si = it->second.first;
      if (!used[si] && si != skip_seg) return it->second;
    }
    return {-1, -1};
  };

  const double period = contour.period;
  for (int start = 0; start < static_cast<int>(segs.size()); ++start) {
    if (used[start]) continue;
    used[start] = true;
    // unwrapped working polyline, grown at the back
    std::vector<std::array<double, 2>> pts = {segs[start].a, segs[start].b};
    bool closed = false;
    const Key start_key = key_of(segs[start].a, dx, W);
    // extend forward from the back
    while (true) {
      const Key back_key = key_of(pts.back(), dx, W);
      if (pts.size() > 2 && back_key == start_key) {
        closed = true;
        break;
      }
      auto [si, end] = take_next(back_key, -1);
      if (si < 0) break;
      used[si] = true;
      std::array<double, 2> nxt = (end == 0) ? segs[si].b : segs[si].a;
      // unwrap x relative to the current end
      double dxw = nxt[0] - pts.back()[0];
      if (dxw > period / 2) nxt[0] -= period;
      if (dxw < -period / 2) nxt[0] += period;
      pts.push_back(nxt);
    }
    if (!closed) {
      // extend backward from the front
      std::reverse(pts.begin(), pts.end());
      while (true) {
        const Key back_key = key_of(pts.back(), dx, W);
        auto [si, end] = take_next(back_key, -1);
        if (si < 0) break;
        used[si] = true;
        std::array<double, 2> nxt = (end == 0) ? segs[si].b : segs[si].a;
        double dxw = nxt[0] - pts.back()[0];
        if (dxw > period / 2) nxt[0] -= period;
        if (dxw < -period / 2) nxt[0] += period;
        pts.push_back(nxt);
      }
      std::reverse(pts.begin(), pts.end());
    }
    contour.lines.push_back({std::move(pts), closed});
  }
  return contour;
}

InterfaceContour extract_interface(const FieldState& s) {
  return extract_interface(s.phi, s.H, s.W, s.dx);
}

double perimeter(const InterfaceContour& contour) {
  double total = 0.0;
  for (const auto& pl : contour.lines) {
    for (std::size_t i = 0; i + 1 < pl.pts.size(); ++i) {
      const double ddx = pl.pts[i + 1][0] - pl.pts[i][0];
      const double ddy = pl.pts[i + 1][1] - pl.pts[i][1];
      total += std::sqrt(ddx * ddx + ddy * ddy);
    }
  }
  return total;
}

namespace {

// Cumulative arclength of a polyline's vertices.
std::vector<double> arclengths(const std::vector<std::array<double, 2>>& p) {
  std::vector<double> arc(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double ddx = p[i][0] - p[i - 1][0], ddy = p[i][1] - p[i - 1][1];
    arc[i] = arc[i - 1] + std::sqrt(ddx * ddx + ddy * ddy);
  }
  return arc;
}

// Point at arclength s, linearly interpolated; s is clamped for open
// polylines and wrapped for closed ones by the caller.
std::array<double, 2> point_at(const std::vector<std::array<double, 2>>& p,
                               const std::vector<double>& arc, double s) {
  s = std::clamp(s, 0.0, arc.back());
  std::size_t j = 1;
  while (j + 1 < p.size() && arc[j] < s) ++j;
  const double seg = arc[j] - arc[j - 1];
  const double t = seg > 0.0 ? (s - arc[j - 1]) / seg : 0.0;
  return {p[j - 1][0] + t * (p[j][0] - p[j - 1][0]),
          p[j - 1][1] + t * (p[j][1] - p[j - 1][1])};
}

double menger_curvature(const std::array<double, 2>& a,
                        const std::array<double, 2>& b,
                        const std::array<double, 2>& c) {
  const double abx = b[0] - a[0], aby = b[1] - a[1];
  const double acx = c[0] - a[0], acy = c[1] - a[1];
  const double bcx = c[0] - b[0], bcy = c[1] - b[1];
  const double area2 = std::abs(abx * acy - aby * acx);  // 2 * triangle area
  const double la = std::sqrt(abx * abx + aby * aby);
  const double lb = std::sqrt(bcx * bcx + bcy * bcy);
  const double lc = std::sqrt(acx * acx + acy * acy);
  const double denom = la * lb * lc;
  return denom > 0.0 ? 2.0 * area2 / denom : 0.0;
}

}  // namespace

double mean_abs_curvature(const InterfaceContour& contour, double spacing) {
  // curvature is sampled at the contour's own vertices, with neighbors
  // interpolated one spacing of arclength to either side; the vertex set
  // follows the geometry, so cyclic shifts of the grid cannot change it
  double sum = 0.0;
  long count = 0;
  for (const auto& pl : contour.lines) {
    const auto& p = pl.pts;
    if (p.size() < 3) continue;
    const auto arc = arclengths(p);
    const double len = arc.back();
    if (len <= 0.0) continue;
    if (pl.closed) {
      if (len <= 2.0 * spacing) continue;
      // loops that wind around the seam close one period over in x
      const double xshift = p.back()[0] - p.front()[0];
      auto at = [&](double s) {
        double shift = 0.0;
        if (s < 0.0) {
          s += len;
          shift = -xshift;
        } else if (s > len) {
          s -= len;
          shift = xshift;
        }
        auto q = point_at(p, arc, s);
        q[0] += shift;
        return q;
      };
      // the final vertex duplicates the first; skip it
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        sum += menger_curvature(at(arc[i] - spacing), p[i],
                                at(arc[i] + spacing));
        ++count;
      }
    } else {
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (arc[i] < spacing || arc[i] > len - spacing) continue;
        sum += menger_curvature(point_at(p, arc, arc[i] - spacing), p[i],
                                point_at(p, arc, arc[i] + spacing));
        ++count;
      }
    }
  }
  if (count == 0)
    throw std::runtime_error(
        "mean_abs_curvature: contour too short, curvature undefined");
  return sum / static_cast<double>(count);
}

double penetration_depth(const FieldState& s, int r0) {
  if (r0 < 0 || r0 >= s.H)
    throw std::invalid_argument("penetration_depth: r0 out of grid");
  int deepest = -1;
  for (int c = 0; c < s.W; ++c)
    for (int r = s.H - 1; r > deepest; --r)
      if (s.phi[s.idx(r, c)] < 0.5) {
        deepest = std::max(deepest, r);
        break;
      }
  if (deepest <= r0) return 0.0;
  return (deepest - r0) * s.dx;
}

void species_volumes(const FieldState& s, double& vol_A, double& vol_B) {
  vol_A = 0.0;
  vol_B = 0.0;
  const double cell = s.dx * s.dx;
  for (std::size_t i = 0; i < s.cells(); ++i)
    if (s.phi[i] >= 0.5) {
      vol_A += s.cA[i] * cell;
      vol_B += s.cB[i] * cell;
    }
}

double mean_ligament_height(const FieldState& s) {
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < s.W; ++c) {
    int deepest = -1;
    for (int r = s.H - 1; r >= 0; --r)
      if (s.phi[s.idx(r, c)] < 0.5) {
        deepest = r;
        break;
      }
    if (deepest < 0) continue;
    int solid_above = 0;
    for (int r = 0; r < deepest; ++r)
      if (s.phi[s.idx(r, c)] >= 0.5) ++solid_above;
    if (solid_above > 0) {
      sum += solid_above * s.dx;
      ++count;
    }
  }
  return count > 0 ? sum / count : 0.0;
}

QoiRecord qoi_record(const FieldState& s, int r0) {
  QoiRecord q;
  q.time = s.time;
  const InterfaceContour contour = extract_interface(s);
  q.perimeter = perimeter(contour);
  if (!contour.empty()) {
    try {
      q.mean_abs_curvature = mean_abs_curvature(contour, s.dx);
    } catch (const std::runtime_error&) {
      q.mean_abs_curvature = 0.0;  // degenerate contour in a series
    }
  }
  q.penetration_depth = penetration_depth(s, r0);
  species_volumes(s, q.vol_A, q.vol_B);
  q.mean_ligament_height = mean_ligament_height(s);
  return q;
}

std::vector<QoiRecord> qoi_series(const std::vector<FieldState>& traj,
                                  int r0) {
  std::vector<QoiRecord> out;
  out.reserve(traj.size());
  for (const auto& s : traj) out.push_back(qoi_record(s, r0));
  return out;
}

std::map<std::string, double> qoi_errors(const std::vector<QoiRecord>& pred,
                                         const std::vector<QoiRecord>& ref) {
  if (pred.empty() || ref.empty())
    throw std::invalid_argument("qoi_errors: empty series");
  const double t0 = ref.front().time, t1 = ref.back().time;
  for (const auto& p : pred)
    if (p.time < t0 - 1e-9 || p.time > t1 + 1e-9)
      throw std::runtime_error(
          "qoi_errors: prediction time " + std::to_string(p.time) +
          " outside reference range [" + std::to_string(t0) + ", " +
          std::to_string(t1) + "]");

  auto component = [](const QoiRecord& q, int k) {
    switch (k) {
      case 0: return q.perimeter;
      case 1: return q.mean_abs_curvature;
      case 2: return q.penetration_depth;
      case 3: return q.vol_A;
      case 4: return q.vol_B;
      default: return q.mean_ligament_height;
    }
  };
  std::map<std::string, double> out;
  for (int k = 0; k < 6; ++k) {
    std::vector<double> pv, rv;
    for (const auto& p : pred) {
      pv.push_back(component(p, k));
      // linear interpolation of the reference at time p.time
      const double t = std::clamp(p.time, t0, t1);
      std::size_t j = 1;
      while (j + 1 < ref.size() && ref[j].time < t) ++j;
      const double span = ref[j].time - ref[j - 1].time;
      const double a = span > 0.0 ? (t - ref[j - 1].time) / span : 0.0;
      rv.push_back(component(ref[j - 1], k) +
                   a * (component(ref[j], k) - component(ref[j - 1], k)));
    }
    out[kQoiNames[k]] = relative_l2(pv, rv);
  }
  return out;
}

void write_qoi_csv(const std::vector<QoiRecord>& series,
                   const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_qoi_csv: cannot open " + path);
  f << "time,perimeter,mean_abs_curvature,penetration_depth,vol_A,vol_B,"
       "mean_ligament_height\n";
  char buf[256];
  for (const auto& q : series) {
    std::snprintf(buf, sizeof(buf),
                  "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", q.time, q.perimeter,
                  q.mean_abs_curvature, q.penetration_depth, q.vol_A, q.vol_B,
                  q.mean_ligament_height);
    f << buf;
  }
}

std::vector<QoiRecord> read_qoi_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_qoi_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("read_qoi_csv: empty file " + path);
  std::vector<QoiRecord> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    double vals[7];
    for (int k = 0; k < 7; ++k) {
      if (!std::getline(ss, tok, ','))
        throw std::runtime_error("read_qoi_csv: short row in " + path);
      vals[k] = std::stod(tok);
    }
    out.push_back({vals[0], vals[1], vals[2], vals[3], vals[4], vals[5],
                   vals[6]});
  }
  return out;
}

}  // namespace lmd
