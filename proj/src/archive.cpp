#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "heatpara/noise.hpp"

namespace heatpara {

namespace {

constexpr char kMagic[6] = {'H', 'P', 'A', 'R', 'A', '1'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
  }
  std::vector<unsigned char> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& b, std::size_t end) : buf(b), end(end) {}
  template <class T>
  T get() {
    if (pos + sizeof(T) > end) throw ArchiveError("archive truncated");
    unsigned char b[sizeof(T)];
    std::memcpy(b, buf.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  const std::vector<unsigned char>& buf;
  std::size_t end;
  std::size_t pos = 0;
};

std::uint32_t checksum(const unsigned char* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), p, static_cast<uInt>(n)));
}

}  // namespace

std::vector<unsigned char> archive_bytes(const EnhancedNoise& e) {
  const Geometry& g = *e.geometry();
  Writer w;
  w.out.insert(w.out.end(), kMagic, kMagic + 6);
  w.put<std::uint32_t>(kArchiveVersion);
  w.put<std::uint8_t>(g.is_torus() ? 0 : 1);
  w.put<std::uint8_t>(static_cast<std::uint8_t>((e.zero_noise ? 1 : 0) | (e.plain_product ? 2 : 0)));
  w.put<std::int32_t>(g.n());
  w.put<std::uint64_t>(e.seed);
  w.put<double>(e.eps);
  w.put<double>(e.alpha);
  w.put<std::int32_t>(e.b);
  w.put<std::int32_t>(e.n_t);
  for (double v : {e.norm_xi, e.norm_Xi2, e.norm_X1, e.norm_X2, e.x}) w.put<double>(v);
  w.put<std::uint64_t>(g.real_dim());
  for (const Field* f : {&e.xi, &e.xi_eps, &e.X1, &e.X2, &e.Xi2, &e.c_eps})
    for (double v : g.pack_raw(*f)) w.put<double>(v);
  w.put<std::uint32_t>(checksum(w.out.data(), w.out.size()));
  return w.out;
}

EnhancedNoise archive_parse(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0) throw ArchiveError("not an HPARA1 archive");
  const std::size_t body = bytes.size() - 4;
  Reader tail(bytes, bytes.size());
  tail.pos = body;
  if (tail.get<std::uint32_t>() != checksum(bytes.data(), body)) throw ArchiveError("archive checksum mismatch");
  Reader r(bytes, body);
  r.pos = 6;
  const auto version = r.get<std::uint32_t>();
  if (version != kArchiveVersion)
    throw ArchiveError("archive version " + std::to_string(version) + " is not supported");
  const auto kind = r.get<std::uint8_t>();
  const auto flags = r.get<std::uint8_t>();
  const int n = r.get<std::int32_t>();
  if (kind > 1) throw ArchiveError("unknown geometry kind in archive");
  GeometryPtr geo = Geometry::make(kind == 0 ? GeometryKind::Torus : GeometryKind::DirichletSquare, n);
  EnhancedNoise e;
  e.zero_noise = flags & 1;
  e.plain_product = flags & 2;
  e.seed = r.get<std::uint64_t>();
  e.eps = r.get<double>();
  e.alpha = r.get<double>();
  e.b = r.get<std::int32_t>();
  e.n_t = r.get<std::int32_t>();
  for (double* v : {&e.norm_xi, &e.norm_Xi2, &e.norm_X1, &e.norm_X2, &e.x}) *v = r.get<double>();
  const auto dim = r.get<std::uint64_t>();
  if (dim != geo->real_dim()) throw ArchiveError("archive block length does not match the geometry");
  for (Field* f : {&e.xi, &e.xi_eps, &e.X1, &e.X2, &e.Xi2, &e.c_eps}) {
    std::vector<double> v(dim);
    for (auto& x : v) x = r.get<double>();
    *f = geo->unpack_raw(v);
  }
  if (r.pos != body) throw ArchiveError("trailing bytes in archive");
  return e;
}

void archive_write(const EnhancedNoise& e, const std::string& path) {
  const auto bytes = archive_bytes(e);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArchiveError("write to '" + path + "' failed");
}

EnhancedNoise archive_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open archive '" + path + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return archive_parse(bytes);
}

}  // namespace heatpara
