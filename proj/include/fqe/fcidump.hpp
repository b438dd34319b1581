#pragma once

#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>

#include "fqe/error.hpp"
#include "fqe/operators.hpp"

namespace fqe {

struct FcidumpHeader {
  int norb = 0;
  int nelec = 0;
  int ms2 = 0;
};

/// Converts chemists'-notation integrals (ij|kl) into the V_ijkl of
/// Σ V_ijkl a†_iσ a†_jρ a_kσ a_lρ. Using
///   ½ Σ (ij|kl) a†_iσ a†_kρ a_lρ a_jσ = -½ Σ (ij|kl) a†_iσ a†_kρ a_jσ a_lρ,
/// the coefficient of a†_pσ a†_qρ a_rσ a_sρ is V_pqrs = -½ (pr|qs).
inline Tensor4 chemist_to_v2(const Tensor4& eri) {
  const int m = eri.m;
  Tensor4 v(m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      for (int r = 0; r < m; ++r)
        for (int s = 0; s < m; ++s) v(p, q, r, s) = -0.5 * eri(p, r, q, s);
  return v;
}

namespace detail {
inline int header_int(const std::string& header, const std::string& name, bool required,
                      const std::string& path) {
  std::regex re("\\b" + name + "\\s*=\\s*(-?\\d+)", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(header, m, re)) {
    if (required) throw FormatError("FCIDUMP '" + path + "': missing header field " + name);
    return 0;
  }
  return std::stoi(m[1].str());
}
}  // namespace detail

/// FCIDUMP reader: namelist header (&FCI ... &END or /), then "value i j k l" lines with
/// 1-based indices. (ij|kl) lines are expanded over the 8-fold permutational symmetry,
/// "value i j 0 0" sets h_ij = h_ji, "value 0 0 0 0" is the core energy.
inline RestrictedHamiltonian load_fcidump(const std::string& path, FcidumpHeader* header_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open FCIDUMP '" + path + "'");
  std::string line;
  std::string header;
  bool in_header = false;
  bool header_done = false;
  while (!header_done && std::getline(in, line)) {
    std::string upper = line;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (!in_header) {
      if (upper.find("&FCI") == std::string::npos) {
        if (upper.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw FormatError("FCIDUMP '" + path + "': expected &FCI header");
      }
      in_header = true;
    }
    header += " " + line;
    const auto trimmed_end = upper.find_last_not_of(" \t\r");
    if (upper.find("&END") != std::string::npos ||
        (trimmed_end != std::string::npos && upper[trimmed_end] == '/'))
      header_done = true;
  }
  if (!header_done) throw FormatError("FCIDUMP '" + path + "': unterminated header");

  FcidumpHeader hdr;
  hdr.norb = detail::header_int(header, "NORB", true, path);
  hdr.nelec = detail::header_int(header, "NELEC", true, path);
  hdr.ms2 = detail::header_int(header, "MS2", true, path);
  if (hdr.norb <= 0 || hdr.norb > kMaxOrbitals)
    throw FormatError("FCIDUMP '" + path + "': NORB=" + std::to_string(hdr.norb) + " out of range");
  const int m = hdr.norb;

  RestrictedHamiltonian h;
  h.h1 = CMatrix::Zero(m, m);
  Tensor4 eri(m);
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double value = 0.0;
    int i = 0, j = 0, k = 0, l = 0;
    std::string vtok;
    ls >> vtok;
    for (auto& c : vtok)
      if (c == 'D' || c == 'd') c = 'E';
    try {
      std::size_t used = 0;
      value = std::stod(vtok, &used);
      if (used != vtok.size()) throw std::invalid_argument(vtok);
    } catch (const std::exception&) {
      throw FormatError("FCIDUMP '" + path + "': bad value on data line " + std::to_string(line_no));
    }
    if (!(ls >> i >> j >> k >> l))
      throw FormatError("FCIDUMP '" + path + "': expected 4 indices on data line " +
                        std::to_string(line_no));
    for (int idx : {i, j, k, l})
      if (idx < 0 || idx > m)
        throw FormatError("FCIDUMP '" + path + "': index " + std::to_string(idx) +
                          " out of range for NORB=" + std::to_string(m) + " on data line " +
                          std::to_string(line_no));
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      h.e0 += value;
    } else if (k == 0 && l == 0) {
      if (i == 0 || j == 0)
        throw FormatError("FCIDUMP '" + path + "': malformed one-body line " + std::to_string(line_no));
      h.h1(i - 1, j - 1) = value;
      h.h1(j - 1, i - 1) = value;
    } else if (i == 0 || j == 0 || k == 0 || l == 0) {
      // orbital energies and other auxiliary records are ignored
      continue;
    } else {
      const int a = i - 1, b = j - 1, c = k - 1, d = l - 1;
      for (auto [p, q, r, s] : {std::array{a, b, c, d}, std::array{b, a, c, d},
                                std::array{a, b, d, c}, std::array{b, a, d, c},
                                std::array{c, d, a, b}, std::array{d, c, a, b},
                                std::array{c, d, b, a}, std::array{d, c, b, a}})
        eri(p, q, r, s) = value;
    }
  }
  h.v2 = chemist_to_v2(eri);
  if (header_out) *header_out = hdr;
  return h;
}

/// Square matrix text file:
///   first non-comment line "<TAG> <m>" (TAG is DIAGONAL_COULOMB or QUADRATIC),
///   then m rows of m entries, each a real number or "(re+imj)". '#' starts a comment.
inline std::pair<std::string, CMatrix> load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open matrix file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    for (std::string tok; ls >> tok;) tokens.push_back(tok);
  }
  if (tokens.size() < 2) throw FormatError("matrix file '" + path + "': missing header");
  const std::string tag = tokens[0];
  int m = 0;
  try {
    m = std::stoi(tokens[1]);
  } catch (const std::exception&) {
    throw FormatError("matrix file '" + path + "': bad dimension '" + tokens[1] + "'");
  }
  if (m <= 0 || m > kMaxOrbitals) throw FormatError("matrix file '" + path + "': bad dimension");
  if (tokens.size() != 2 + static_cast<std::size_t>(m) * m)
    throw FormatError("matrix file '" + path + "': expected " + std::to_string(m * m) +
                      " entries, found " + std::to_string(tokens.size() - 2));
  CMatrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const auto& tok = tokens[2 + static_cast<std::size_t>(i) * m + j];
      try {
        a(i, j) = tok.front() == '(' ? parse_complex(tok) : cd(detail::parse_double(tok, path), 0.0);
      } catch (const ParseError& e) {
        throw FormatError("matrix file '" + path + "': " + e.what());
      }
    }
  return {tag, a};
}

inline void save_matrix_file(const std::string& path, const std::string& tag, const CMatrix& a) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << tag << " " << a.rows() << "\n";
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out << (j ? " " : "") << format_complex(a(i, j));
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Hamiltonian files of any supported kind

enum class HamiltonianFile { fcidump, operator_text, diagonal_coulomb, quadratic };

inline const char* to_string(HamiltonianFile k) {
  switch (k) {
    case HamiltonianFile::fcidump: return "fcidump";
    case HamiltonianFile::operator_text: return "operator";
    case HamiltonianFile::diagonal_coulomb: return "diagonal";
    case HamiltonianFile::quadratic: return "quadratic";
  }
  return "unknown";
}

inline std::optional<HamiltonianFile> parse_hamiltonian_file_kind(std::string_view s) {
  for (auto k : {HamiltonianFile::fcidump, HamiltonianFile::operator_text, HamiltonianFile::diagonal_coulomb,
                 HamiltonianFile::quadratic})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

/// ".fcidump" extension or "FCIDUMP" in the file name, else the first token: "&FCI..." for
/// FCIDUMP, DIAGONAL_COULOMB / QUADRATIC for matrix files, anything else is operator text.
inline HamiltonianFile detect_hamiltonian_file(const std::string& path) {
  const std::filesystem::path fp(path);
  std::string name = fp.filename().string(), ext = fp.extension().string();
  for (auto* str : {&name, &ext})
    for (auto& c : *str) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (ext == ".FCIDUMP" || name.find("FCIDUMP") != std::string::npos) return HamiltonianFile::fcidump;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open Hamiltonian file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    for (auto& c : tok) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (tok.rfind("&FCI", 0) == 0) return HamiltonianFile::fcidump;
    if (tok == "DIAGONAL_COULOMB") return HamiltonianFile::diagonal_coulomb;
    if (tok == "QUADRATIC") return HamiltonianFile::quadratic;
    return HamiltonianFile::operator_text;
  }
  throw FormatError("Hamiltonian file '" + path + "' is empty");
}

/// Operator text is read as a generator ĝ of the Hermitian Ĥ = Σ (ĝ_k + ĝ_k†).
inline Hamiltonian load_hamiltonian(const std::string& path, std::optional<HamiltonianFile> kind = std::nullopt) {
  const HamiltonianFile k = kind.value_or(detect_hamiltonian_file(path));
  switch (k) {
    case HamiltonianFile::fcidump: return load_fcidump(path);
    case HamiltonianFile::diagonal_coulomb:
    case HamiltonianFile::quadratic: {
      auto [tag, a] = load_matrix_file(path);
      const bool diag = tag == "DIAGONAL_COULOMB";
      if (!diag && tag != "QUADRATIC") throw FormatError("matrix file '" + path + "': unknown tag '" + tag + "'");
      if (diag != (k == HamiltonianFile::diagonal_coulomb))
        throw FormatError("matrix file '" + path + "' holds " + tag + ", not the requested kind");
      if (diag) return DiagonalCoulomb{a};
      return QuadraticHamiltonian{a};
    }
    case HamiltonianFile::operator_text: {
      std::ifstream in(path);
      if (!in) throw FormatError("cannot open operator file '" + path + "'");
      std::string text, line;
      while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        text += line + "\n";
      }
      return SparseHamiltonian{parse_operator_string(text)};
    }
  }
  throw FormatError("unknown Hamiltonian kind");
}

}  // namespace fqe
