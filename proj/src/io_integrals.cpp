#include "rdmsdp/io.hpp"

#include "io_detail.hpp"
#include "rdmsdp/error.hpp"

#include <sstream>

namespace rdmsdp::io {

using detail::parse_double;
using detail::parse_int;
using detail::split_tokens;

namespace {

constexpr const char* kMagic = "RDM-INT";

int header_value(const std::string& tok, const std::string& key, int line) {
  if (tok.rfind(key + "=", 0) != 0) throw ParseError("expected " + key + "=<int> in header", line);
  return static_cast<int>(parse_int(tok.substr(key.size() + 1), line));
}

bool is_comment(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

bool looks_like_integrals(const std::string& text) {
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    if (is_comment(line)) continue;
    const auto tokens = split_tokens(line);
    return !tokens.empty() && tokens[0] == kMagic;
  }
  return false;
}

rdm::IntegralData read_integrals(std::istream& in) {
  std::string line;
  int lineno = 0;
  bool have_header = false;
  rdm::IntegralData h;
  std::vector<char> t_set, v_set;

  auto set = [&](double& slot, char& flag, double value, int at) {
    if (flag && slot != value) throw ParseError("conflicting value for a symmetric entry", at);
    slot = value;
    flag = 1;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (is_comment(line)) continue;
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(tok);

    if (!have_header) {
      if (tokens.size() != 4 || tokens[0] != kMagic || tokens[1] != "v1")
        throw ParseError("expected header 'RDM-INT v1 d=<d> N=<N>'", lineno);
      const int d = header_value(tokens[2], "d", lineno);
      const int n = header_value(tokens[3], "N", lineno);
      if (d <= 0 || d % 2 != 0) throw ParseError("d must be positive and even", lineno);
      if (n < 1 || n > d) throw ParseError("N must satisfy 1 <= N <= d", lineno);
      h = rdm::IntegralData::zeros(d, n);
      t_set.assign(static_cast<std::size_t>(d) * d, 0);
      v_set.assign(static_cast<std::size_t>(d) * d * d * d, 0);
      have_header = true;
      continue;
    }

    const int d = h.d;
    auto index = [&](const std::string& tok) {
      const long v = parse_int(tok, lineno);
      if (v < 1 || v > d) throw ParseError("orbital index out of range", lineno);
      return static_cast<int>(v - 1);
    };
    if (tokens[0] == "T") {
      if (tokens.size() != 4) throw ParseError("expected 'T i j value'", lineno);
      const int i = index(tokens[1]), j = index(tokens[2]);
      const double value = parse_double(tokens[3], lineno);
      set(h.t(i, j), t_set[static_cast<std::size_t>(i * d + j)], value, lineno);
      set(h.t(j, i), t_set[static_cast<std::size_t>(j * d + i)], value, lineno);
    } else if (tokens[0] == "V") {
      if (tokens.size() != 6) throw ParseError("expected 'V i j k l value'", lineno);
      const int i = index(tokens[1]), j = index(tokens[2]), k = index(tokens[3]), l = index(tokens[4]);
      const double value = parse_double(tokens[5], lineno);
      auto flat = [d](int a, int b, int c, int e) {
        return ((static_cast<std::size_t>(a) * d + b) * d + c) * d + e;
      };
      set(h.v(i, j, k, l), v_set[flat(i, j, k, l)], value, lineno);
      set(h.v(k, l, i, j), v_set[flat(k, l, i, j)], value, lineno);
    } else {
      throw ParseError("unknown record '" + tokens[0] + "'", lineno);
    }
  }
  if (!have_header) throw ParseError("missing 'RDM-INT v1' header", lineno);
  return h;
}

rdm::IntegralData read_integrals(const std::string& text) {
  std::istringstream is(text);
  return read_integrals(is);
}

std::string write_integrals(const rdm::IntegralData& h) {
  h.validate(0.0);
  const int d = h.d;
  std::ostringstream os;
  os << kMagic << " v1 d=" << d << " N=" << h.n << '\n';
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      if (h.t(i, j) != 0.0) os << "T " << i + 1 << ' ' << j + 1 << ' ' << format_double(h.t(i, j)) << '\n';
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          if (i * d + j > k * d + l) continue;
          const double value = h.v(i, j, k, l);
          if (value != 0.0)
            os << "V " << i + 1 << ' ' << j + 1 << ' ' << k + 1 << ' ' << l + 1 << ' ' << format_double(value) << '\n';
        }
  return os.str();
}

}  // namespace rdmsdp::io
