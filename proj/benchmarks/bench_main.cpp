#include <benchmark/benchmark.h>

#include <vector>

#include "llp/baggen.hpp"
#include "llp/io.hpp"
#include "llp/random.hpp"
#include "llp/solvers.hpp"
#include "llp/theory.hpp"

namespace {

const std::vector<llp::Instance>& census() {
  static const auto data = llp::load_sparse_dataset(std::string(LLP_BENCH_DATA_DIR) + "/adult.libsvm");
  return data;
}

void match_probability(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(llp::theory::binom_match_prob(r, 0.3, 0.1));
}
BENCHMARK(match_probability)->Arg(10)->Arg(100)->Arg(1000);

void label_step(benchmark::State& state) {
  const auto r = static_cast<std::size_t>(state.range(0));
  llp::Rng rng(1);
  std::vector<double> s(r);
  for (double& v : s) v = 4.0 * rng.uniform() - 2.0;
  std::vector<llp::Label> labels(r);
  for (auto _ : state) benchmark::DoNotOptimize(llp::label_step(s, 0.3, 1.0, 0.1, labels));
}
BENCHMARK(label_step)->Arg(10)->Arg(500)->Arg(5000);

void supervised_svm(benchmark::State& state) {
  const std::vector<llp::Instance> subset(census().begin(), census().begin() + state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(llp::train_supervised_svm(subset, 1.0));
}
BENCHMARK(supervised_svm)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void alter_psvm_iid(benchmark::State& state) {
  const auto r = static_cast<std::size_t>(state.range(0));
  const auto bags = llp::gen_iid_bags(census(), 5000 / r, r, 3);
  llp::TrainConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(llp::train(bags, config));
}
BENCHMARK(alter_psvm_iid)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
