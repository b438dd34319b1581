#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fqe/error.hpp"
#include "fqe/wavefunction.hpp"

namespace fqe {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume a little-endian host");

/// Dense complex tensor, row-major.
struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<cd> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> d) : dims(std::move(d)) {
    std::size_t total = 1;
    for (auto x : dims) total *= x;
    data.assign(total, cd{0.0, 0.0});
  }

  std::size_t rank() const { return dims.size(); }
  std::size_t size() const { return data.size(); }

  std::size_t offset(std::span<const std::size_t> idx) const {
    std::size_t off = 0;
    for (std::size_t r = 0; r < dims.size(); ++r) off = off * dims[r] + idx[r];
    return off;
  }
  cd& operator()(std::initializer_list<std::size_t> idx) {
    return data[offset({idx.begin(), idx.size()})];
  }
  const cd& operator()(std::initializer_list<std::size_t> idx) const {
    return data[offset({idx.begin(), idx.size()})];
  }
};

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void put_complex(cd z) {
    put(z.real());
    put(z.imag());
  }
  void write_to(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw FormatError("short write to '" + path + "'");
  }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::string path, std::string what) : path_(std::move(path)), what_(std::move(what)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path_ + "'");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  cd get_complex() {
    const double re = get<double>();
    const double im = get<double>();
    return {re, im};
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + " file '" + path_ + "': " + msg);
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) fail("truncated at byte " + std::to_string(pos_));
  }

  std::string path_;
  std::string what_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kWavefunctionFormatVersion = 1;
inline constexpr std::uint32_t kTensorFormatVersion = 1;

/// FQEW layout (little-endian): "FQEW", u32 version, u32 sector count; per sector
/// i32 n, i32 sz, u32 m, u64 rows, u64 cols, then rows*cols (f64 re, f64 im) row-major.
inline void save(const Wavefunction& w, const std::string& path) {
  detail::ByteWriter out;
  out.put_bytes("FQEW");
  out.put(kWavefunctionFormatVersion);
  out.put(static_cast<std::uint32_t>(w.sectors().size()));
  for (const auto& [k, s] : w.sectors()) {
    out.put(static_cast<std::int32_t>(k.n));
    out.put(static_cast<std::int32_t>(k.sz));
    out.put(static_cast<std::uint32_t>(w.norb()));
    out.put(static_cast<std::uint64_t>(s.coeff.rows()));
    out.put(static_cast<std::uint64_t>(s.coeff.cols()));
    for (Eigen::Index i = 0; i < s.coeff.rows(); ++i)
      for (Eigen::Index j = 0; j < s.coeff.cols(); ++j) out.put_complex(s.coeff(i, j));
  }
  out.write_to(path);
}

inline Wavefunction load(const std::string& path) {
  detail::ByteReader in(path, "FQEW");
  if (in.get_bytes(4) != "FQEW") in.fail("bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kWavefunctionFormatVersion)
    in.fail("unsupported version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  Wavefunction w;
  bool first = true;
  for (std::uint32_t s = 0; s < count; ++s) {
    const SectorKey key{in.get<std::int32_t>(), in.get<std::int32_t>()};
    const auto m = static_cast<int>(in.get<std::uint32_t>());
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    if (first) {
      if (m > kMaxOrbitals) in.fail("orbital count " + std::to_string(m) + " out of range");
      w = Wavefunction(m, std::span<const SectorKey>{});
      first = false;
    } else if (m != w.norb()) {
      in.fail("mixed orbital counts");
    }
    Sector* sec = nullptr;
    try {
      sec = &w.add_sector(key);
    } catch (const DomainError& e) {
      in.fail(e.what());
    }
    if (rows != static_cast<std::uint64_t>(sec->coeff.rows()) ||
        cols != static_cast<std::uint64_t>(sec->coeff.cols()))
      in.fail("sector " + to_string(key) + " has shape " + std::to_string(rows) + "x" +
              std::to_string(cols) + ", expected " + std::to_string(sec->coeff.rows()) + "x" +
              std::to_string(sec->coeff.cols()));
    if (in.remaining() / 16 < rows * cols) in.fail("truncated sector data");
    for (Eigen::Index i = 0; i < sec->coeff.rows(); ++i)
      for (Eigen::Index j = 0; j < sec->coeff.cols(); ++j) sec->coeff(i, j) = in.get_complex();
  }
  if (in.remaining() != 0) in.fail("trailing bytes");
  return w;
}

/// FQET layout: "FQET", u32 version, u32 rank, u64 dims[rank], complex128 row-major.
inline void save_tensor(const Tensor& t, const std::string& path) {
  detail::ByteWriter out;
  out.put_bytes("FQET");
  out.put(kTensorFormatVersion);
  out.put(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.dims) out.put(static_cast<std::uint64_t>(d));
  for (const auto& z : t.data) out.put_complex(z);
  out.write_to(path);
}

inline Tensor load_tensor(const std::string& path) {
  detail::ByteReader in(path, "FQET");
  if (in.get_bytes(4) != "FQET") in.fail("bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kTensorFormatVersion) in.fail("unsupported version " + std::to_string(version));
  const auto rank = in.get<std::uint32_t>();
  std::vector<std::size_t> dims;
  for (std::uint32_t r = 0; r < rank; ++r) dims.push_back(in.get<std::uint64_t>());
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (in.remaining() != total * 16) in.fail("payload size does not match dims");
  Tensor t(dims);
  for (auto& z : t.data) z = in.get_complex();
  return t;
}

// ---------------------------------------------------------------------------
// Text printing

/// Python-style complex literal using shortest round-trip digits, e.g. "(1+0j)".
inline std::string format_complex(cd z) {
  auto shortest = [](double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
  };
  std::string re = shortest(z.real());
  std::string im = shortest(std::abs(z.imag()));
  return "(" + re + (std::signbit(z.imag()) ? "-" : "+") + im + "j)";
}

/// One header per sector, "Sector N = <n> : S_z = <sz>", followed by
/// "a'<alpha bits>'b'<beta bits>' <amplitude>" for each |amplitude| >= threshold.
inline std::string print_wfn(const Wavefunction& w, double threshold = 1.0e-3) {
  std::ostringstream os;
  for (const auto& [k, s] : w.sectors()) {
    os << "Sector N = " << k.n << " : S_z = " << k.sz << "\n";
    const auto& sa = s.graph->alpha();
    const auto& sb = s.graph->beta();
    for (std::size_t ia = 0; ia < sa.size(); ++ia)
      for (std::size_t ib = 0; ib < sb.size(); ++ib) {
        const cd z = s.coeff(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib));
        if (std::abs(z) < threshold) continue;
        os << "a'" << bits_to_string(sa.string(ia), w.norb()) << "'b'"
           << bits_to_string(sb.string(ib), w.norb()) << "' " << format_complex(z) << "\n";
      }
  }
  return os.str();
}

namespace detail {
inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError("invalid number '" + std::string(s) + "' in " + context);
  return v;
}

inline bits_t parse_bits(std::string_view s, const std::string& context) {
  bits_t b = 0;
  const auto m = static_cast<int>(s.size());
  for (int i = 0; i < m; ++i) {
    const char c = s[static_cast<std::size_t>(i)];
    if (c == '1')
      b |= bits_t{1} << (m - 1 - i);
    else if (c != '0')
      throw ParseError("invalid occupation string '" + std::string(s) + "' in " + context);
  }
  return b;
}
}  // namespace detail

/// Parses "(re+imj)" / "(re-imj)" as printed by format_complex.
inline cd parse_complex(std::string_view s) {
  const std::string ctx = "complex literal '" + std::string(s) + "'";
  if (s.size() < 4 || s.front() != '(' || s.back() != ')' || s[s.size() - 2] != 'j')
    throw ParseError("malformed " + ctx);
  std::string_view body = s.substr(1, s.size() - 3);
  // split at the sign separating real and imaginary parts (skip exponent signs)
  std::size_t cut = std::string_view::npos;
  for (std::size_t i = 1; i < body.size(); ++i)
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') cut = i;
  if (cut == std::string_view::npos) throw ParseError("malformed " + ctx);
  const double re = detail::parse_double(body.substr(0, cut), ctx);
  double im = detail::parse_double(body.substr(cut + 1), ctx);
  if (body[cut] == '-') im = -im;
  return {re, im};
}

/// Reads print_wfn output back into a wavefunction with the printed sectors.
inline Wavefunction parse_wfn_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<SectorKey> keys;
  std::vector<Assignment> assignments;
  int m = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("Sector N = ", 0) == 0) {
      int n = 0;
      int sz = 0;
      if (std::sscanf(line.c_str(), "Sector N = %d : S_z = %d", &n, &sz) != 2)
        throw ParseError("malformed sector header '" + line + "'");
      keys.push_back({n, sz});
      continue;
    }
    const auto q1 = line.find("a'");
    const auto q2 = line.find("'b'");
    const auto q3 = line.find("' ", q2 + 3);
    if (q1 != 0 || q2 == std::string::npos || q3 == std::string::npos)
      throw ParseError("malformed determinant line '" + line + "'");
    const std::string_view sv(line);
    const auto abits = sv.substr(2, q2 - 2);
    const auto bbits = sv.substr(q2 + 3, q3 - q2 - 3);
    if (m < 0) m = static_cast<int>(abits.size());
    if (static_cast<int>(abits.size()) != m || static_cast<int>(bbits.size()) != m)
      throw ParseError("inconsistent orbital count in '" + line + "'");
    assignments.push_back({detail::parse_bits(abits, line), detail::parse_bits(bbits, line),
                           parse_complex(sv.substr(q3 + 2))});
  }
  if (m < 0) throw ParseError("no determinant lines; orbital count unknown");
  Wavefunction w(m, keys);
  return initialize(w, ExplicitInit{assignments});
}

}  // namespace fqe
