#pragma once

#include <string>
#include <vector>

namespace rdmsdp::io::detail {

/// Whitespace tokens; the SDPA separators , ( ) { } count as whitespace.
std::vector<std::string> split_tokens(const std::string& line);
long parse_int(const std::string& tok, int line);
double parse_double(const std::string& tok, int line);

}  // namespace rdmsdp::io::detail
