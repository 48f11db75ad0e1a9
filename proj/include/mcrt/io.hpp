#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mcrt/brownian.hpp"
#include "mcrt/curve.hpp"
#include "mcrt/embedding.hpp"
#include "mcrt/error.hpp"
#include "mcrt/map.hpp"

namespace mcrt {

namespace detail {

inline constexpr char kPathMagic[8] = {'M', 'C', 'R', 'T', 'P', 'A', 'T', 'H'};
inline constexpr char kMapMagic[8] = {'M', 'C', 'R', 'T', 'M', 'A', 'P', '0'};
inline constexpr char kPathTail[8] = {'M', 'C', 'R', 'T', 'T', 'A', 'I', 'L'};
inline constexpr char kMapTail[8] = {'M', 'C', 'R', 'T', 'T', 'I', 'M', 'E'};
inline constexpr std::uint32_t kPathVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& file) : out_(file, std::ios::binary | std::ios::trunc), name_(file) {
    if (!out_) throw IoError("cannot open " + file + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename T>
  void le(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    U u = std::bit_cast<U>(v);
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFF);
    bytes(buf, sizeof(T));
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + name_);
  }

 private:
  std::ofstream out_;
  std::string name_;
};

class Reader {
 public:
  explicit Reader(const std::string& file) : in_(file, std::ios::binary), name_(file) {
    if (!in_) throw IoError("cannot open " + file + " for reading");
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated file " + name_);
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    return std::bit_cast<T>(u);
  }
  void magic(const char (&expect)[8], const char* what) {
    char m[8];
    bytes(m, 8);
    if (std::memcmp(m, expect, 8) != 0) throw IoError(name_ + " is not " + what);
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::string name_;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_text(const std::string& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw IoError("cannot open " + file + " for writing");
  return out;
}

}  // namespace detail

// Little-endian header, n (L, R) pairs, then a trailer carrying the start time.
inline void write_path(const std::string& file, const BrownianPath& p) {
  detail::Writer w(file);
  w.bytes(detail::kPathMagic, 8);
  w.le<std::uint32_t>(detail::kPathVersion);
  w.le<double>(p.gamma);
  w.le<double>(p.step);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(p.topology));
  w.le<std::uint64_t>(p.size());
  w.le<double>(p.index_shift);
  w.le<double>(p.total_time);
  w.le<double>(p.boundary_length);
  w.le<std::uint64_t>(p.seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    w.le<double>(p.L[i]);
    w.le<double>(p.R[i]);
  }
  w.bytes(detail::kPathTail, 8);
  w.le<double>(p.start_time);
  w.finish();
}

inline BrownianPath read_path(const std::string& file) {
  detail::Reader r(file);
  r.magic(detail::kPathMagic, "a path file");
  const auto version = r.le<std::uint32_t>();
  if (version != detail::kPathVersion) throw IoError("unsupported path file version " + std::to_string(version));
  BrownianPath p;
  p.gamma = r.le<double>();
  p.step = r.le<double>();
  const auto topo = r.le<std::uint8_t>();
  if (topo > 2) throw IoError("invalid topology tag in " + file);
  p.topology = static_cast<Topology>(topo);
  const auto n = r.le<std::uint64_t>();
  if (n > (std::uint64_t{1} << 33)) throw IoError("implausible path length in " + file);
  p.index_shift = r.le<double>();
  p.total_time = r.le<double>();
  p.boundary_length = r.le<double>();
  p.seed = r.le<std::uint64_t>();
  p.L.resize(n);
  p.R.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.L[i] = r.le<double>();
    p.R[i] = r.le<double>();
  }
  p.start_time = 0.0;
  if (!r.at_end()) {
    r.magic(detail::kPathTail, "a path file with a valid trailer");
    p.start_time = r.le<double>();
  }
  return p;
}

inline void write_path_csv(const std::string& file, const BrownianPath& p) {
  auto out = detail::open_text(file);
  out << "t,L,R\n";
  for (std::size_t i = 0; i < p.size(); ++i)
    out << detail::fmt(p.time(i)) << ',' << detail::fmt(p.L[i]) << ',' << detail::fmt(p.R[i]) << '\n';
}

// Header, CSR adjacency, boundary list, then a trailer with vertex times.
inline void write_map(const std::string& file, const MatedCrtMap& m) {
  detail::Writer w(file);
  w.bytes(detail::kMapMagic, 8);
  w.le<std::uint64_t>(m.size());
  w.le<std::uint8_t>(static_cast<std::uint8_t>(m.topology));
  w.le<double>(m.step);
  for (auto o : m.offsets) w.le<std::uint64_t>(o);
  for (const auto& nb : m.adjacency) {
    w.le<std::uint32_t>(nb.v);
    w.le<std::uint8_t>(nb.mult);
    w.le<std::uint8_t>(static_cast<std::uint8_t>(nb.side));
  }
  w.le<std::uint64_t>(m.boundary_order.size());
  for (auto b : m.boundary_order) w.le<std::uint32_t>(b);
  w.bytes(detail::kMapTail, 8);
  for (double t : m.vertex_times) w.le<double>(t);
  w.finish();
}

inline MatedCrtMap read_map(const std::string& file) {
  detail::Reader r(file);
  r.magic(detail::kMapMagic, "a map file");
  MatedCrtMap m;
  const auto n = r.le<std::uint64_t>();
  if (n > (std::uint64_t{1} << 32)) throw IoError("implausible vertex count in " + file);
  const auto topo = r.le<std::uint8_t>();
  if (topo > 2) throw IoError("invalid topology tag in " + file);
  m.topology = static_cast<Topology>(topo);
  m.step = r.le<double>();
  m.offsets.resize(n + 1);
  for (auto& o : m.offsets) o = r.le<std::uint64_t>();
  for (std::size_t i = 0; i < n; ++i)
    if (m.offsets[i + 1] < m.offsets[i]) throw IoError("corrupt offsets in " + file);
  if (m.offsets[0] != 0 || m.offsets[n] > (std::uint64_t{1} << 36)) throw IoError("corrupt offsets in " + file);
  m.adjacency.resize(m.offsets[n]);
  for (auto& nb : m.adjacency) {
    nb.v = r.le<std::uint32_t>();
    nb.mult = r.le<std::uint8_t>();
    const auto side = r.le<std::uint8_t>();
    if (side > 3 || nb.v >= n) throw IoError("corrupt adjacency in " + file);
    nb.side = static_cast<Side>(side);
  }
  const auto b = r.le<std::uint64_t>();
  if (b > n) throw IoError("corrupt boundary list in " + file);
  m.boundary_order.resize(b);
  for (auto& v : m.boundary_order) v = r.le<std::uint32_t>();
  m.vertex_times.resize(n);
  if (!r.at_end()) {
    r.magic(detail::kMapTail, "a map file with a valid trailer");
    for (auto& t : m.vertex_times) t = r.le<double>();
  } else {
    for (std::size_t i = 0; i < n; ++i) m.vertex_times[i] = static_cast<double>(i) * m.step;
  }
  return m;
}

inline void write_edges_csv(const std::string& file, const MatedCrtMap& m) {
  auto out = detail::open_text(file);
  out << "u,v,mult,side\n";
  for (const auto& e : m.edges()) out << e.u << ',' << e.v << ',' << int(e.mult) << ',' << to_string(e.side) << '\n';
}

inline void write_degree_histogram_csv(const std::string& file, const MatedCrtMap& m) {
  auto out = detail::open_text(file);
  out << "degree,count\n";
  const auto h = degree_histogram(m);
  for (std::size_t d = 0; d < h.size(); ++d)
    if (h[d]) out << d << ',' << h[d] << '\n';
}

inline void write_embedding_csv(const std::string& file, const MatedCrtMap& m, const TutteEmbedding& e) {
  auto out = detail::open_text(file);
  out << "vertex,time,x,y,boundary_flag,embedded_flag\n";
  for (std::size_t v = 0; v < m.size(); ++v)
    out << v << ',' << detail::fmt(m.vertex_times[v]) << ',' << detail::fmt(e.positions[v].real()) << ','
        << detail::fmt(e.positions[v].imag()) << ',' << int(e.on_boundary[v]) << ',' << int(e.embedded[v]) << '\n';
}

inline void write_field_csv(const std::string& file, std::span<const double> values) {
  auto out = detail::open_text(file);
  out << "vertex,value\n";
  for (std::size_t v = 0; v < values.size(); ++v) out << v << ',' << detail::fmt(values[v]) << '\n';
}

inline void write_curve_csv(const std::string& file, const EmbeddedCurve& c) {
  auto out = detail::open_text(file);
  out << "t,x,y\n";
  for (std::size_t i = 0; i < c.size(); ++i)
    out << detail::fmt(c.times[i]) << ',' << detail::fmt(c.points[i].real()) << ',' << detail::fmt(c.points[i].imag())
        << '\n';
}

inline EmbeddedCurve read_curve_csv(const std::string& file, CurveKind kind = CurveKind::Walk) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file + " for reading");
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y") throw IoError(file + " lacks the t,x,y header");
  EmbeddedCurve c;
  c.kind = kind;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, x, y;
    char c1, c2;
    std::istringstream ss(line);
    if (!(ss >> t >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',') throw IoError("malformed row in " + file + ": " + line);
    c.times.push_back(t);
    c.points.push_back({x, y});
  }
  return c;
}

struct SvgOptions {
  double size = 800.0;
  bool color_by_time = true;
  bool draw_edges = true;
};

// Vertices as disks scaled by log-degree, edges as segments; unembedded
// vertices are left out.
inline void write_svg(const std::string& file, const MatedCrtMap& m, const TutteEmbedding& e, const SvgOptions& opt = {}) {
  auto out = detail::open_text(file);
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (std::size_t v = 0; v < m.size(); ++v)
    if (e.embedded[v]) {
      x0 = std::min(x0, e.positions[v].real());
      x1 = std::max(x1, e.positions[v].real());
      y0 = std::min(y0, e.positions[v].imag());
      y1 = std::max(y1, e.positions[v].imag());
    }
  const double span = std::max({x1 - x0, y1 - y0, 1e-12});
  const double pad = 0.02 * opt.size, scale = (opt.size - 2 * pad) / span;
  auto px = [&](Point z) { return pad + (z.real() - x0) * scale; };
  auto py = [&](Point z) { return opt.size - pad - (z.imag() - y0) * scale; };  // y up
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.size << "\" height=\"" << opt.size
      << "\" viewBox=\"0 0 " << opt.size << ' ' << opt.size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (opt.draw_edges) {
    out << "<g stroke=\"#888\" stroke-width=\"0.3\" stroke-opacity=\"0.6\">\n";
    for (std::size_t u = 0; u < m.size(); ++u) {
      if (!e.embedded[u]) continue;
      for (const auto& nb : m.neighbors(u)) {
        if (nb.v <= u || !e.embedded[nb.v]) continue;
        std::snprintf(buf, sizeof buf, "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\"/>\n", px(e.positions[u]),
                      py(e.positions[u]), px(e.positions[nb.v]), py(e.positions[nb.v]));
        out << buf;
      }
    }
    out << "</g>\n";
  }
  out << "<g stroke=\"none\">\n";
  const double n = static_cast<double>(std::max<std::size_t>(1, m.size() - 1));
  for (std::size_t v = 0; v < m.size(); ++v) {
    if (!e.embedded[v]) continue;
    const double r = 0.25 * std::log1p(static_cast<double>(m.degree(v)));
    int red = 40, green = 40, blue = 40;
    if (opt.color_by_time) {
      // blue (early) to red (late)
      const double t = static_cast<double>(v) / n;
      red = static_cast<int>(std::lround(255 * t));
      green = static_cast<int>(std::lround(80 * (1 - std::abs(2 * t - 1))));
      blue = static_cast<int>(std::lround(255 * (1 - t)));
    }
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"#%02x%02x%02x\"/>\n",
                  px(e.positions[v]), py(e.positions[v]), r, red, green, blue);
    out << buf;
  }
  out << "</g>\n</svg>\n";
}

// Flat key = value file; '#' starts a comment; later keys override earlier.
inline std::map<std::string, std::string> read_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(file + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw IoError(file + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace mcrt
