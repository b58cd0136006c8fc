#pragma once

#include <vector>

#include "metaxlr/config.hpp"
#include "metaxlr/report.hpp"

namespace metaxlr::suite {

/// Runs every (setting, seed) with up to `jobs` concurrent runs. Failed runs
/// are recorded, not thrown. Rows come back ordered by setting, then seed.
std::vector<report::SummaryRow> run_suite(const config::ExperimentSuite& suite, int jobs = 1);

}  // namespace metaxlr::suite
