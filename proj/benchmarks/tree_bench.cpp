#include <benchmark/benchmark.h>

#include "abm/behavior.hpp"
#include "abm/features.hpp"
#include "abm/tree.hpp"

namespace {

// Per-step rows of random-policy episodes, labelled with strategies.
abm::Dataset strategy_rows(std::size_t episodes) {
  const abm::EnvConfig cfg;
  const abm::EpisodeSet set = abm::collect_random_policy(cfg, episodes, 5);
  abm::Dataset d(abm::kFeatureCount);
  for (std::size_t e = 0; e < set.episodes.size(); ++e) {
    const auto labels = abm::label_episode(set.episodes[e]);
    for (std::size_t t = 0; t < labels.size(); ++t)
      d.add_row(abm::extract(set.episodes[e].steps[t].state).values, static_cast<int>(labels[t]),
                static_cast<std::int64_t>(e));
  }
  return d;
}

void BM_FitTree(benchmark::State& state) {
  const abm::Dataset d = strategy_rows(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(abm::fit_tree(d, abm::TreeParams{}));
  state.counters["rows"] = static_cast<double>(d.rows());
}
BENCHMARK(BM_FitTree)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Extract(benchmark::State& state) {
  const abm::GridState s = abm::new_episode(abm::EnvConfig{}, 11);
  for (auto _ : state) benchmark::DoNotOptimize(abm::extract(s));
}
BENCHMARK(BM_Extract);

}  // namespace
