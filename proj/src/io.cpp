#include "lmd/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace lmd {
namespace {

constexpr std::uint32_t kSnapshotVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& f, double v) {
  static_assert(sizeof(double) == 8);
  f.write(reinterpret_cast<const char*>(&v), 8);  // little-endian host
}

class Reader {
 public:
  Reader(const std::string& path, const char* what) : path_(path), what_(what) {
    f_.open(path, std::ios::binary);
    if (!f_) throw std::runtime_error(std::string(what) + ": cannot open " + path);
    f_.seekg(0, std::ios::end);
    size_ = static_cast<std::size_t>(f_.tellg());
    f_.seekg(0);
  }

  void need(std::size_t n) {
    if (offset_ + n > size_)
      throw std::runtime_error(
          std::string(what_) + ": truncated file " + path_ + " at byte offset " +
          std::to_string(offset_) + " (need " + std::to_string(n) +
          " more bytes, file size " + std::to_string(size_) + ")");
  }

  void raw(void* dst, std::size_t n) {
    need(n);
    f_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    offset_ += n;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }

  std::size_t offset() const { return offset_; }
  std::size_t size() const { return size_; }

 private:
  std::ifstream f_;
  std::string path_;
  const char* what_;
  std::size_t size_ = 0, offset_ = 0;
};

}  // namespace

void write_snapshot(const FieldState& s, const std::string& path,
                    double cA_ref, SnapshotDtype dtype) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_snapshot: cannot open " + path);
  f.write("LMDF", 4);
  put_u32(f, kSnapshotVersion);
  put_u32(f, static_cast<std::uint32_t>(s.H));
  put_u32(f, static_cast<std::uint32_t>(s.W));
  put_u32(f, 3);
  put_u32(f, static_cast<std::uint32_t>(dtype));
  put_f64(f, s.time);
  put_f64(f, cA_ref);
  put_f64(f, s.dx);
  const std::vector<double>* fields[3] = {&s.phi, &s.cA, &s.cB};
  for (const auto* fld : fields) {
    if (dtype == SnapshotDtype::f64) {
      f.write(reinterpret_cast<const char*>(fld->data()),
              static_cast<std::streamsize>(fld->size() * 8));
    } else {
      std::vector<float> tmp(fld->begin(), fld->end());
      f.write(reinterpret_cast<const char*>(tmp.data()),
              static_cast<std::streamsize>(tmp.size() * 4));
    }
  }
  if (!f) throw std::runtime_error("write_snapshot: write failed for " + path);
}

FieldState read_snapshot(const std::string& path, double* cA_ref_out) {
  Reader r(path, "read_snapshot");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "LMDF", 4) != 0)
    throw std::runtime_error("read_snapshot: bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion)
    throw std::runtime_error("read_snapshot: unsupported version " +
                             std::to_string(version) + " in " + path);
  const std::uint32_t H = r.u32(), W = r.u32(), n_fields = r.u32(),
                      dtype = r.u32();
  if (n_fields != 3)
    throw std::runtime_error("read_snapshot: expected 3 fields, got " +
                             std::to_string(n_fields));
  if (dtype > 1)
    throw std::runtime_error("read_snapshot: unknown dtype " +
                             std::to_string(dtype));
  const double time = r.f64();
  const double cA_ref = r.f64();
  const double dx = r.f64();
  if (H == 0 || W == 0 || dx <= 0)
    throw std::runtime_error("read_snapshot: invalid header in " + path);
  const std::size_t n = static_cast<std::size_t>(H) * W;
  const std::size_t expect =
      r.offset() + 3 * n * (dtype == 1 ? 8 : 4);
  if (r.size() != expect)
    throw std::runtime_error("read_snapshot: size mismatch in " + path +
                             ": expected " + std::to_string(expect) +
                             " bytes, actual " + std::to_string(r.size()));

  FieldState s(static_cast<int>(H), static_cast<int>(W), dx);
  s.time = time;
  std::vector<double>* fields[3] = {&s.phi, &s.cA, &s.cB};
  for (auto* fld : fields) {
    if (dtype == 1) {
      r.raw(fld->data(), n * 8);
    } else {
      std::vector<float> tmp(n);
      r.raw(tmp.data(), n * 4);
      std::copy(tmp.begin(), tmp.end(), fld->begin());
    }
  }
  // field invariants (small slack for f32 rounding)
  const double tol = 1e-6;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.phi[i] < -tol || s.phi[i] > 1 + tol || s.cA[i] < -tol ||
        s.cB[i] < -tol || s.cA[i] + s.cB[i] > 1 + tol)
      throw std::runtime_error("read_snapshot: field invariant violated at cell " +
                               std::to_string(i) + " in " + path);
  }
  if (cA_ref_out) *cA_ref_out = cA_ref;
  return s;
}

void save_checkpoint(UNet& net, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  auto manifest = net.manifest();
  f.write("LMDW", 4);
  put_u32(f, kCheckpointVersion);
  put_u32(f, static_cast<std::uint32_t>(manifest.size()));
  for (const auto& e : manifest) {
    put_u32(f, static_cast<std::uint32_t>(e.name.size()));
    f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(f, static_cast<std::uint32_t>(e.p->shape.size()));
    for (int d : e.p->shape) put_u32(f, static_cast<std::uint32_t>(d));
  }
  for (const auto& e : manifest)
    f.write(reinterpret_cast<const char*>(e.p->w.data()),
            static_cast<std::streamsize>(e.p->w.size() * 8));
  const UNetConfig& c = net.config();
  put_u32(f, static_cast<std::uint32_t>(c.levels));
  put_u32(f, static_cast<std::uint32_t>(c.base_channels));
  put_u32(f, static_cast<std::uint32_t>(c.in_channels));
  put_u32(f, static_cast<std::uint32_t>(c.out_channels));
  put_u32(f, c.attention_in_bottleneck ? 1 : 0);
  put_u32(f, static_cast<std::uint32_t>(c.norm_groups));
  put_f64(f, c.cond_range.dtau_min);
  put_f64(f, c.cond_range.dtau_max);
  put_f64(f, c.cond_range.ca_min);
  put_f64(f, c.cond_range.ca_max);
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::unique_ptr<UNet> load_checkpoint(const std::string& path) {
  Reader r(path, "load_checkpoint");
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "LMDW", 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported version " +
                             std::to_string(version));
  struct Entry {
    std::string name;
    std::vector<int> shape;
  };
  const std::uint32_t n_entries = r.u32();
  std::vector<Entry> entries(n_entries);
  for (auto& e : entries) {
    const std::uint32_t len = r.u32();
    e.name.resize(len);
    r.raw(e.name.data(), len);
    const std::uint32_t rank = r.u32();
    e.shape.resize(rank);
    for (auto& d : e.shape) d = static_cast<int>(r.u32());
  }
  // weights are read against the manifest of the reconstructed config,
  // which must match the stored manifest exactly
  std::vector<std::vector<double>> weights(n_entries);
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    std::size_t n = 1;
    for (int d : entries[i].shape) n *= static_cast<std::size_t>(d);
    weights[i].resize(n);
    r.raw(weights[i].data(), n * 8);
  }
  UNetConfig c;
  c.levels = static_cast<int>(r.u32());
  c.base_channels = static_cast<int>(r.u32());
  c.in_channels = static_cast<int>(r.u32());
  c.out_channels = static_cast<int>(r.u32());
  c.attention_in_bottleneck = r.u32() != 0;
  c.norm_groups = static_cast<int>(r.u32());
  c.cond_range.dtau_min = r.f64();
  c.cond_range.dtau_max = r.f64();
  c.cond_range.ca_min = r.f64();
  c.cond_range.ca_max = r.f64();

  auto net = std::make_unique<UNet>(c);
  auto manifest = net->manifest();
  if (manifest.size() != entries.size())
    throw std::runtime_error("load_checkpoint: manifest size mismatch in " +
                             path);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (manifest[i].name != entries[i].name ||
        manifest[i].p->shape != entries[i].shape)
      throw std::runtime_error("load_checkpoint: manifest entry '" +
                               entries[i].name + "' does not match architecture");
    manifest[i].p->w = std::move(weights[i]);
  }
  return net;
}

}  // namespace lmd
