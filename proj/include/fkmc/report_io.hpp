#pragma once

#include <string>
#include <vector>

#include "fkmc/backward.hpp"
#include "fkmc/diagnostics.hpp"
#include "fkmc/forward.hpp"
#include "fkmc/reference.hpp"

namespace fkmc::io {

/// Plain CSV: comma separator, '\n' newlines, shortest-round-trip numbers.
/// Every writer is deterministic so output files can be compared by bytes.

std::string estimates_csv(const std::vector<backward::PointEstimate>& estimates, int dimension,
                          bool with_phi_column = false,
                          const std::vector<std::string>& phi_names = {});
std::string estimates_json(const std::vector<backward::PointEstimate>& estimates, int dimension,
                           const std::vector<std::string>& phi_names = {});

std::string binned_csv(const forward::BinnedSolution& solution);
std::string binned_json(const forward::BinnedSolution& solution);

std::string grid_csv(const reference::GridSolution& solution);
std::string grid_json(const reference::GridSolution& solution);

std::string report_csv(const diagnostics::ConvergenceReport& report);
std::string report_json(const diagnostics::ConvergenceReport& report);
std::string report_text(const diagnostics::ConvergenceReport& report);

void write_file(const std::string& path, const std::string& bytes);

}  // namespace fkmc::io
