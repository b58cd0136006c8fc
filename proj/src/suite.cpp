#include "metaxlr/suite.hpp"

#include <algorithm>

#include "metaxlr/errors.hpp"
#include "metaxlr/parallel.hpp"

namespace metaxlr::suite {

std::vector<report::SummaryRow> run_suite(const config::ExperimentSuite& suite, int jobs) {
  std::vector<report::SummaryRow> rows;
  std::vector<train::TrainConfig> configs;
  for (const auto& setting : suite.settings) {
    auto seeds = setting.seeds;
    std::sort(seeds.begin(), seeds.end());
    for (auto seed : seeds) {
      rows.push_back({setting.name, seed, true, {}, {}});
      configs.push_back(setting.config);
      configs.back().seed = seed;
    }
  }
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    try {
      rows[i].f1 = train::run(configs[i], train::resolve_cluster(configs[i])).result;
    } catch (const Error& e) {
      rows[i].ok = false;
      rows[i].error = e.what();
    }
  });
  return rows;
}

}  // namespace metaxlr::suite
