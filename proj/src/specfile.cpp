#include "fkmc/specfile.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace fkmc::specfile {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw SpecFileError("expected a number, got '" + s + "'", line);
  return v;
}

std::string unquote(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    throw SpecFileError("expected a double-quoted expression, got '" + s + "'", line);
  return s.substr(1, s.size() - 2);
}

std::vector<double> parse_bracket_list(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw SpecFileError("expected a bracketed list, got '" + s + "'", line);
  std::vector<double> out;
  std::string body = s.substr(1, s.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string v = trim(item);
    if (v.empty()) throw SpecFileError("empty element in list", line);
    out.push_back(parse_number(v, line));
  }
  return out;
}

struct RawEntry {
  std::string value;
  int line;
};

}  // namespace

Problem parse_spec(const std::string& text) {
  std::map<std::string, RawEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw SpecFileError("expected 'key = value'", line_no);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw SpecFileError("missing key", line_no);
    if (value.empty()) throw SpecFileError("missing value for '" + key + "'", line_no);
    if (!entries.emplace(key, RawEntry{value, line_no}).second)
      throw SpecFileError("duplicate key '" + key + "'", line_no);
  }

  auto take = [&](const std::string& key) -> std::optional<RawEntry> {
    auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    RawEntry e = it->second;
    entries.erase(it);
    return e;
  };
  auto require = [&](const std::string& key) -> RawEntry {
    auto e = take(key);
    if (!e) throw SpecFileError("missing required field '" + key + "'", line_no);
    return *e;
  };

  const RawEntry dim_entry = require("dimension");
  const double dim_value = parse_number(dim_entry.value, dim_entry.line);
  const int dim = static_cast<int>(dim_value);
  if (dim != dim_value || dim < 1 || dim > kMaxDim)
    throw SpecFileError("dimension must be an integer in 1..9", dim_entry.line);

  const RawEntry t_entry = require("T");
  const double horizon = parse_number(t_entry.value, t_entry.line);
  if (!(horizon > 0.0)) throw SpecFileError("T must be > 0", t_entry.line);

  auto parse_expr_entry = [&](const RawEntry& e) {
    try {
      return expr::Expression::parse(unquote(e.value, e.line), dim);
    } catch (const expr::ParseError& pe) {
      throw SpecFileError(std::string("expression error: ") + pe.what(), e.line);
    }
  };

  Problem::Spec spec;
  spec.dimension = dim;
  spec.horizon = horizon;
  spec.diffusion.resize(static_cast<std::size_t>(dim * (dim + 1) / 2));
  for (int k = 1; k <= dim; ++k) {
    for (int l = 1; l <= dim; ++l) {
      const std::string key = "D." + std::to_string(k) + "." + std::to_string(l);
      auto e = take(key);
      if (!e) continue;
      if (k > l)
        throw SpecFileError("only upper-triangle entries D.k.l with k <= l may be given ('" +
                                key + "' duplicates D." + std::to_string(l) + "." +
                                std::to_string(k) + ")",
                            e->line);
      const int k0 = k - 1, l0 = l - 1;
      spec.diffusion[static_cast<std::size_t>(k0 * (2 * dim - k0 - 1) / 2 + l0)] =
          parse_expr_entry(*e);
    }
  }

  if (auto e = take("lambda")) spec.reaction = parse_expr_entry(*e);
  if (auto e = take("source")) spec.source = parse_expr_entry(*e);

  const RawEntry phi_entry = require("phi");
  spec.initial = parse_expr_entry(phi_entry);

  for (int m = 1;; ++m) {
    auto e = take("phi_extra." + std::to_string(m));
    if (!e) break;
    spec.extra_initials.emplace_back("phi_extra." + std::to_string(m), parse_expr_entry(*e));
  }

  const RawEntry box_entry = require("sample_box");
  const auto box_values = parse_bracket_list(box_entry.value, box_entry.line);
  if (box_values.size() != static_cast<std::size_t>(2 * dim))
    throw SpecFileError("sample_box needs 2 numbers (lo, hi) per axis", box_entry.line);
  for (int k = 0; k < dim; ++k) {
    const double lo = box_values[static_cast<std::size_t>(2 * k)];
    const double hi = box_values[static_cast<std::size_t>(2 * k + 1)];
    if (!(lo < hi)) throw SpecFileError("sample_box axis " + std::to_string(k + 1) +
                                            " must satisfy lo < hi",
                                        box_entry.line);
    spec.sample_box.push_back({lo, hi});
  }

  if (!entries.empty()) {
    const auto& [key, e] = *entries.begin();
    throw SpecFileError("unknown key '" + key + "'", e.line);
  }

  return Problem(std::move(spec));
}

Problem load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecFileError("cannot open '" + path + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  Problem problem = parse_spec(buf.str());
  problem.validate();
  return problem;
}

}  // namespace fkmc::specfile
