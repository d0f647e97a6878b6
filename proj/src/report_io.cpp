#include "fkmc/report_io.hpp"

#include <fstream>

#include "fkmc/util.hpp"
#include "json.hpp"

namespace fkmc::io {

namespace {

using ordered_json = nlohmann::ordered_json;

void append_row(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

ordered_json estimate_json(const backward::PointEstimate& e) {
  ordered_json j;
  j["x"] = e.x;
  j["f_hat"] = e.value;
  j["se"] = e.se;
  j["n_eff"] = e.n_effective();
  j["faults"] = e.n_faulted;
  if (e.failed) j["failed"] = true;
  if (e.fault_warning) j["fault_warning"] = true;
  return j;
}

}  // namespace

std::string estimates_csv(const std::vector<backward::PointEstimate>& estimates, int dimension,
                          bool with_phi_column, const std::vector<std::string>& phi_names) {
  std::string out;
  std::vector<std::string> header;
  if (with_phi_column) header.push_back("phi");
  for (int k = 1; k <= dimension; ++k) header.push_back("x" + std::to_string(k));
  header.insert(header.end(), {"f_hat", "se", "n_eff", "faults"});
  append_row(out, header);

  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    std::vector<std::string> row;
    if (with_phi_column) row.push_back(i < phi_names.size() ? phi_names[i] : "phi");
    for (double v : e.x) row.push_back(format_double(v));
    row.push_back(format_double(e.value));
    row.push_back(format_double(e.se));
    row.push_back(std::to_string(e.n_effective()));
    row.push_back(std::to_string(e.n_faulted));
    append_row(out, row);
  }
  return out;
}

std::string estimates_json(const std::vector<backward::PointEstimate>& estimates, int dimension,
                           const std::vector<std::string>& phi_names) {
  ordered_json j;
  j["dimension"] = dimension;
  j["estimates"] = ordered_json::array();
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    ordered_json e = estimate_json(estimates[i]);
    if (i < phi_names.size()) e["phi"] = phi_names[i];
    j["estimates"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string binned_csv(const forward::BinnedSolution& s) {
  std::string out;
  append_row(out, {"bin_center", "estimate", "se"});
  for (int b = 0; b < s.bins; ++b) {
    append_row(out, {format_double(s.center(b)), format_double(s.estimate[static_cast<std::size_t>(b)]),
                     format_double(s.se[static_cast<std::size_t>(b)])});
  }
  return out;
}

std::string binned_json(const forward::BinnedSolution& s) {
  ordered_json j;
  j["interval"] = {s.lo, s.hi};
  j["launch"] = {s.launch_lo, s.launch_hi};
  j["bins"] = s.bins;
  j["bin_width"] = s.bin_width;
  j["n"] = s.n_particles;
  j["dt"] = s.dt;
  j["overflow"] = s.overflow;
  j["faulted"] = s.n_faulted;
  j["warnings"] = s.warnings;
  j["rows"] = ordered_json::array();
  for (int b = 0; b < s.bins; ++b) {
    const std::size_t bi = static_cast<std::size_t>(b);
    ordered_json row;
    row["bin_center"] = s.center(b);
    row["estimate"] = s.estimate[bi];
    row["se"] = s.se[bi];
    row["count"] = s.count[bi];
    if (s.empty_bin(b)) row["empty"] = true;
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

std::string grid_csv(const reference::GridSolution& s) {
  std::string out;
  if (s.dim == 1) {
    append_row(out, {"x1", "f"});
    for (std::size_t i = 0; i < s.axes[0].size(); ++i)
      append_row(out, {format_double(s.axes[0][i]), format_double(s.values[i])});
  } else {
    append_row(out, {"x1", "x2", "f"});
    for (std::size_t i = 0; i < s.axes[0].size(); ++i)
      for (std::size_t j = 0; j < s.axes[1].size(); ++j)
        append_row(out, {format_double(s.axes[0][i]), format_double(s.axes[1][j]),
                         format_double(s.at_node(static_cast<int>(i), static_cast<int>(j)))});
  }
  return out;
}

std::string grid_json(const reference::GridSolution& s) {
  ordered_json j;
  j["dimension"] = s.dim;
  j["final_time"] = s.final_time;
  j["axes"] = ordered_json::array();
  for (int k = 0; k < s.dim; ++k) j["axes"].push_back(s.axes[static_cast<std::size_t>(k)]);
  j["values"] = s.values;
  j["warnings"] = s.warnings;
  return j.dump(2) + "\n";
}

std::string report_csv(const diagnostics::ConvergenceReport& r) {
  std::string out;
  append_row(out, {"study", "parameter", "measured", "expected", "tolerance", "pass"});
  for (const auto& row : r.rows) {
    std::string param = row.parameter;
    for (char& c : param)
      if (c == ',') c = ';';
    append_row(out, {r.study, param, format_double(row.measured), format_double(row.expected),
                     format_double(row.tolerance), row.pass ? "1" : "0"});
  }
  append_row(out, {r.study, "verdict", r.verdict() ? "1" : "0", "", "", r.verdict() ? "1" : "0"});
  return out;
}

std::string report_json(const diagnostics::ConvergenceReport& r) {
  ordered_json j;
  j["study"] = r.study;
  j["verdict"] = r.verdict();
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) {
    ordered_json jr;
    jr["parameter"] = row.parameter;
    jr["measured"] = row.measured;
    jr["expected"] = row.expected;
    jr["tolerance"] = row.tolerance;
    jr["pass"] = row.pass;
    if (!row.note.empty()) jr["note"] = row.note;
    j["rows"].push_back(std::move(jr));
  }
  j["warnings"] = r.warnings;
  if (!r.table_columns.empty()) {
    j["table_columns"] = r.table_columns;
    j["table"] = r.table;
  }
  return j.dump(2) + "\n";
}

std::string report_text(const diagnostics::ConvergenceReport& r) {
  std::string out = "study: " + r.study + "\n";
  for (const auto& row : r.rows) {
    out += row.pass ? "  PASS  " : "  FAIL  ";
    out += row.parameter + ": measured " + format_double(row.measured) + ", expected " +
           format_double(row.expected) + " +- " + format_double(row.tolerance);
    if (!row.note.empty()) out += "  [" + row.note + "]";
    out += '\n';
  }
  for (const auto& w : r.warnings) out += "  WARN  " + w + "\n";
  out += std::string("verdict: ") + (r.verdict() ? "PASS" : "FAIL") + "\n";
  return out;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fkmc::io
