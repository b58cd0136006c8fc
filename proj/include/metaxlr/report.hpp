#pragma once

// On-disk formats of a run directory and of experiment summaries.
//
//   trace.csv     step,lang,p_0..p_{K-1},src_loss,meta_loss,r_t
//   result.txt    flat key=value lines (precision, recall, f1, counts)
//   config.echo   resolved configuration, re-parseable
//   theta.params  named flat arrays ("name rows cols" line, then values)
//   phi.params
//   run.log       wall-clock timing; the only file with non-deterministic content

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "metaxlr/tensor.hpp"
#include "metaxlr/trainer.hpp"

namespace metaxlr::report {

inline constexpr int kSchemaVersion = 1;

void write_trace_csv(std::ostream& out, const train::RunReport& report);
void write_result(std::ostream& out, const train::RunReport& report);
void write_params(std::ostream& out, const ParamVector& params);
ParamVector read_params(std::istream& in);

/// Writes every run-directory file; creates the directory. Throws IoError.
void write_run_directory(const std::string& dir, const train::RunReport& report);

struct SummaryRow {
  std::string setting;
  std::uint64_t seed = 0;
  bool ok = true;
  eval::F1Report f1;
  std::string error;
};

/// schema_version row, header, data rows in the given order, then mean/std rows
/// per setting in first-appearance order.
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

void write_ablation_csv(std::ostream& out, const std::vector<train::AblationRow>& rows);

/// Fixed six-decimal rendering used by every CSV.
std::string fixed(double v);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace metaxlr::report
