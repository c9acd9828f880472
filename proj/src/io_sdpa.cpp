#include "rdmsdp/io.hpp"

#include "rdmsdp/error.hpp"
#include "io_detail.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace rdmsdp::io {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

std::vector<std::string> split_tokens(const std::string& line) {
  std::string s = line;
  for (char& ch : s)
    if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}') ch = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

long parse_int(const std::string& tok, int line) {
  long v = 0;
  const char* first = tok.data() + (tok.size() > 1 && tok[0] == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError("expected an integer, got '" + tok + "'", line);
  return v;
}

double parse_double(const std::string& tok, int line) {
  double v = 0.0;
  const char* first = tok.data() + (tok.size() > 1 && tok[0] == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError("expected a number, got '" + tok + "'", line);
  return v;
}

}  // namespace detail

using detail::parse_double;
using detail::parse_int;
using detail::split_tokens;

namespace {

struct Record {
  long mat;
  long blk;
  long i;
  long j;
  double value;
  int line;
};

}  // namespace

SdpProblem read_sdpa(std::istream& in) {
  enum class Stage { M, NBlocks, Sizes, Objective, Entries } stage = Stage::M;
  long m = 0, nblocks = 0;
  std::vector<long> sizes;
  std::vector<double> objective;
  std::vector<Record> records;
  std::map<long, std::string> labels;
  std::set<long> free_marked;
  int free_line = 0;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '"' || line[first] == '*') {
      std::istringstream is(line.substr(first + 1));
      std::string key;
      is >> key;
      if (key == "free") {
        for (std::string tok; is >> tok;) free_marked.insert(parse_int(tok, lineno));
        free_line = lineno;
      } else if (key == "label") {
        std::string tok;
        is >> tok;
        const long blk = parse_int(tok, lineno);
        std::string text;
        std::getline(is >> std::ws, text);
        while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
        labels[blk] = text;
      }
      continue;
    }
    const auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    switch (stage) {
      case Stage::M:
        m = parse_int(tokens[0], lineno);
        if (m < 0) throw ParseError("negative constraint count", lineno);
        stage = Stage::NBlocks;
        break;
      case Stage::NBlocks:
        nblocks = parse_int(tokens[0], lineno);
        if (nblocks < 1) throw ParseError("block count must be positive", lineno);
        stage = Stage::Sizes;
        break;
      case Stage::Sizes:
        for (const auto& tok : tokens) {
          if (static_cast<long>(sizes.size()) == nblocks) break;
          const long s = parse_int(tok, lineno);
          if (s == 0) throw ParseError("block size 0", lineno);
          sizes.push_back(s);
        }
        if (static_cast<long>(sizes.size()) == nblocks) stage = m > 0 ? Stage::Objective : Stage::Entries;
        break;
      case Stage::Objective:
        for (const auto& tok : tokens) {
          if (static_cast<long>(objective.size()) == m) break;
          objective.push_back(parse_double(tok, lineno));
        }
        if (static_cast<long>(objective.size()) == m) stage = Stage::Entries;
        break;
      case Stage::Entries: {
        if (tokens.size() < 5) throw ParseError("entry line needs 'matrix block i j value'", lineno);
        Record r{parse_int(tokens[0], lineno), parse_int(tokens[1], lineno), parse_int(tokens[2], lineno),
                 parse_int(tokens[3], lineno), parse_double(tokens[4], lineno), lineno};
        if (r.mat < 0 || r.mat > m) throw ParseError("matrix number out of range", lineno);
        if (r.blk < 1 || r.blk > nblocks) throw ParseError("block number out of range", lineno);
        const long n = std::abs(sizes[static_cast<std::size_t>(r.blk - 1)]);
        if (r.i < 1 || r.j < 1 || r.i > n || r.j > n) throw ParseError("entry index out of range", lineno);
        if (r.i > r.j) std::swap(r.i, r.j);
        if (sizes[static_cast<std::size_t>(r.blk - 1)] < 0 && r.i != r.j)
          throw ParseError("off-diagonal entry in a diagonal block", lineno);
        records.push_back(r);
        break;
      }
    }
  }
  if (stage != Stage::Entries) throw ParseError("unexpected end of file in header", lineno);

  for (long blk : free_marked) {
    if (blk < 1 || blk > nblocks) throw ParseError("free marker names a missing block", free_line);
    const long s = sizes[static_cast<std::size_t>(blk - 1)];
    if (s > 0 || s % 2 != 0) throw ParseError("free marker needs an even diagonal block", free_line);
  }

  ConeSpec cone;
  for (long j = 0; j < nblocks; ++j) {
    const long s = sizes[static_cast<std::size_t>(j)];
    if (free_marked.count(j + 1))
      cone.add(BlockKind::Free, static_cast<int>(-s / 2));
    else
      cone.add(s > 0 ? BlockKind::Psd : BlockKind::Nonneg, static_cast<int>(std::abs(s)));
  }

  // Fold mirrored free blocks after checking that the halves agree.
  std::map<std::tuple<long, long, long>, std::pair<double, double>> halves;
  std::map<std::tuple<long, long, long>, int> first_line;
  std::vector<Record> kept;
  for (const auto& r : records) {
    if (!free_marked.count(r.blk)) {
      kept.push_back(r);
      continue;
    }
    const long q = cone[static_cast<std::size_t>(r.blk - 1)].size;
    const bool lower = r.i > q;
    const std::tuple<long, long, long> key{r.mat, r.blk, lower ? r.i - q : r.i};
    auto& h = halves[key];
    (lower ? h.second : h.first) += r.value;
    first_line.emplace(key, r.line);
    if (!lower) kept.push_back(r);
  }
  for (const auto& [key, h] : halves)
    if (h.second != -h.first) throw ParseError("free block halves are not mirror images", first_line[key]);

  SdpProblem p;
  p.cone = cone;
  p.b = Eigen::Map<const Eigen::VectorXd>(objective.data(), static_cast<Eigen::Index>(objective.size()));
  p.c = BlockVec(cone);
  std::vector<MatrixEntry> entries;
  for (const auto& r : kept) {
    const int blk = static_cast<int>(r.blk - 1);
    const int i = static_cast<int>(r.i - 1), j = static_cast<int>(r.j - 1);
    if (r.mat == 0) {
      auto& c = p.c[static_cast<std::size_t>(blk)];
      if (cone[static_cast<std::size_t>(blk)].is_matrix()) {
        c(i, j) += r.value;
        if (i != j) c(j, i) += r.value;
      } else {
        c(i, 0) += r.value;
      }
    } else {
      entries.push_back({static_cast<int>(r.mat - 1), blk, i, j, r.value});
    }
  }
  p.op = ConstraintOperator(cone, static_cast<int>(m), std::move(entries));
  if (!labels.empty()) {
    p.labels.resize(cone.size());
    for (std::size_t j = 0; j < cone.size(); ++j) {
      const auto it = labels.find(static_cast<long>(j + 1));
      p.labels[j] = it != labels.end() ? it->second : "block" + std::to_string(j);
    }
  }
  p.validate();
  return p;
}

SdpProblem read_sdpa(const std::string& text) {
  std::istringstream is(text);
  return read_sdpa(is);
}

std::string write_sdpa(const SdpProblem& input) {
  const SdpProblem p = split_box_blocks(input);
  p.validate();
  const ConeSpec& cone = p.cone;
  std::ostringstream os;

  std::vector<int> free_blocks;
  for (std::size_t j = 0; j < cone.size(); ++j)
    if (cone[j].kind == BlockKind::Free) free_blocks.push_back(static_cast<int>(j + 1));
  if (!free_blocks.empty()) {
    os << "*free";
    for (int b : free_blocks) os << ' ' << b;
    os << '\n';
  }
  for (std::size_t j = 0; j < p.labels.size(); ++j) os << "*label " << j + 1 << ' ' << p.labels[j] << '\n';

  os << p.rows() << '\n' << cone.size() << '\n';
  for (std::size_t j = 0; j < cone.size(); ++j) {
    const auto& blk = cone[j];
    const int s = blk.kind == BlockKind::Psd ? blk.size : (blk.kind == BlockKind::Free ? -2 * blk.size : -blk.size);
    os << (j ? " " : "") << s;
  }
  os << '\n';
  for (int r = 0; r < p.rows(); ++r) os << (r ? " " : "") << format_double(p.b[r]);
  os << '\n';

  std::vector<std::tuple<int, int, int, int, double>> out;
  auto emit = [&](int mat, int blk, int i, int j, double v) {
    out.emplace_back(mat, blk + 1, i + 1, j + 1, v);
    if (cone[static_cast<std::size_t>(blk)].kind == BlockKind::Free) {
      const int q = cone[static_cast<std::size_t>(blk)].size;
      out.emplace_back(mat, blk + 1, i + 1 + q, j + 1 + q, -v);
    }
  };
  for (std::size_t j = 0; j < cone.size(); ++j) {
    const auto& c = p.c[j];
    const int n = cone[j].size;
    if (cone[j].is_matrix()) {
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
          if (c(a, b) != 0.0) emit(0, static_cast<int>(j), a, b, c(a, b));
    } else {
      for (int a = 0; a < n; ++a)
        if (c(a, 0) != 0.0) emit(0, static_cast<int>(j), a, a, c(a, 0));
    }
  }
  for (const auto& e : canonical_entries(p.op.entries())) emit(e.row + 1, e.block, e.i, e.j, e.value);
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::make_tuple(std::get<0>(x), std::get<1>(x), std::get<2>(x), std::get<3>(x)) <
           std::make_tuple(std::get<0>(y), std::get<1>(y), std::get<2>(y), std::get<3>(y));
  });
  for (const auto& [mat, blk, i, j, v] : out) os << mat << ' ' << blk << ' ' << i << ' ' << j << ' ' << format_double(v) << '\n';
  return os.str();
}

}  // namespace rdmsdp::io
