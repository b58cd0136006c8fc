#include "metaxlr/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "metaxlr/config.hpp"
#include "metaxlr/errors.hpp"

namespace metaxlr::report {

namespace {

// Shortest representation that reads back to the same double.
std::string exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const train::RunReport& report) {
  out << "step,lang";
  for (int i = 0; i < report.num_sources; ++i) out << ",p_" << i;
  out << ",src_loss,meta_loss,r_t\n";
  for (const auto& rec : report.trace) {
    out << rec.step << ',' << rec.language;
    for (double p : rec.probs) out << ',' << exact(p);
    out << ',' << exact(rec.source_loss) << ',' << exact(rec.meta_loss) << ','
        << exact(rec.reward) << '\n';
  }
}

void write_result(std::ostream& out, const train::RunReport& report) {
  const auto& r = report.result;
  out << "precision=" << exact(r.precision) << '\n'
      << "recall=" << exact(r.recall) << '\n'
      << "f1=" << exact(r.f1) << '\n'
      << "tp=" << r.tp << '\n'
      << "fp=" << r.fp << '\n'
      << "fn=" << r.fn << '\n'
      << "steps=" << report.trace.size() << '\n'
      << "strategy=" << train::to_string(report.config.strategy) << '\n'
      << "num_sources=" << report.num_sources << '\n';
  if (report.bandit) out << "leading_arm=" << bandit::leading_arm(*report.bandit) << '\n';
}

void write_params(std::ostream& out, const ParamVector& params) {
  for (const auto& s : params.segments()) {
    out << s.name << ' ' << s.value.rows() << ' ' << s.value.cols() << '\n';
    for (Eigen::Index i = 0; i < s.value.size(); ++i)
      out << (i ? " " : "") << exact(s.value.data()[i]);
    out << '\n';
  }
}

ParamVector read_params(std::istream& in) {
  ParamVector params;
  std::string header;
  while (std::getline(in, header)) {
    if (header.empty()) continue;
    std::istringstream h(header);
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(h >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw ConfigError("params: malformed segment header '" + header + "'");
    std::string values;
    std::getline(in, values);
    std::istringstream v(values);
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      std::string tok;
      if (!(v >> tok)) throw ConfigError("params: segment '" + name + "' is truncated");
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ConfigError("params: bad value '" + tok + "' in segment '" + name + "'");
      t.data()[i] = x;
    }
    params.add(name, std::move(t));
  }
  return params;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_run_directory(const std::string& dir, const train::RunReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path root(dir);

  std::ostringstream trace, result, theta, phi;
  write_trace_csv(trace, report);
  write_result(result, report);
  write_params(theta, report.theta);
  write_params(phi, report.phi);
  write_text_file((root / "trace.csv").string(), trace.str());
  write_text_file((root / "result.txt").string(), result.str());
  write_text_file((root / "config.echo").string(), config::echo(report.config));
  write_text_file((root / "theta.params").string(), theta.str());
  write_text_file((root / "phi.params").string(), phi.str());
  write_text_file((root / "run.log").string(),
                  "wall_seconds=" + exact(report.wall_seconds) + "\n");
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "schema_version," << kSchemaVersion << '\n';
  out << "setting,seed,precision,recall,f1,status\n";
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.setting) == order.end()) order.push_back(r.setting);
    out << r.setting << ',' << r.seed << ',';
    if (r.ok)
      out << fixed(r.f1.precision) << ',' << fixed(r.f1.recall) << ',' << fixed(r.f1.f1) << ",ok\n";
    else
      out << ",,,failed\n";
  }
  for (const auto& name : order) {
    std::vector<double> p, rc, f;
    for (const auto& r : rows)
      if (r.setting == name && r.ok) {
        p.push_back(r.f1.precision);
        rc.push_back(r.f1.recall);
        f.push_back(r.f1.f1);
      }
    out << name << ",mean," << fixed(train::mean(p)) << ',' << fixed(train::mean(rc)) << ','
        << fixed(train::mean(f)) << ",aggregate\n";
    out << name << ",std," << fixed(train::stddev(p)) << ',' << fixed(train::stddev(rc)) << ','
        << fixed(train::stddev(f)) << ",aggregate\n";
  }
}

void write_ablation_csv(std::ostream& out, const std::vector<train::AblationRow>& rows) {
  out << "schema_version," << kSchemaVersion << '\n';
  out << "mode,runs,mean_f1,std_f1\n";
  for (const auto& r : rows)
    out << r.mode << ',' << r.f1.size() << ',' << fixed(r.mean) << ',' << fixed(r.stddev) << '\n';
}

}  // namespace metaxlr::report
