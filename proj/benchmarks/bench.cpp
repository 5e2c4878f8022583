#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "cfgadapt/cfg.hpp"
#include "cfgadapt/da.hpp"
#include "cfgadapt/harness.hpp"
#include "cfgadapt/nn.hpp"
#include "cfgadapt/tensor.hpp"

namespace {

std::string make_listing(int blocks) {
  std::ostringstream out;
  long addr = 0x401000;
  for (int b = 0; b < blocks; ++b) {
    out << "L" << b << ":\n";
    out << std::hex << "0x" << addr << std::dec << " mov eax, " << b << "\n";
    addr += 4;
    out << std::hex << "0x" << addr << std::dec << " cmp eax, 10\n";
    addr += 4;
    out << std::hex << "0x" << addr << std::dec << " jne L"
        << ((b + 3) % blocks) << "\n";
    addr += 4;
  }
  out << std::hex << "0x" << addr << std::dec << " ret\n";
  return out.str();
}

void BM_ExtractCfg(benchmark::State& state) {
  const std::string listing = make_listing(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto cfg = cfgadapt::cfg::extract_cfg(listing, "bench");
    benchmark::DoNotOptimize(cfg.edges.size());
  }
}
BENCHMARK(BM_ExtractCfg)->Arg(16)->Arg(128)->Arg(512);

void BM_GinForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  cfgadapt::nn::GinMlp mlp(16, 64, rng);
  std::normal_distribution<double> dist(0.0, 1.0);
  cfgadapt::nn::Mat X(n, 16), A = cfgadapt::nn::Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 16; ++j) X(i, j) = dist(rng);
    A(i, (i + 1) % n) = 1.0;
  }
  cfgadapt::nn::Mat A_sym = cfgadapt::nn::symmetrize(A);
  for (auto _ : state) {
    auto h = cfgadapt::nn::gin_layer(cfgadapt::nn::constant(X), A_sym, mlp,
                                     true);
    benchmark::DoNotOptimize(h->val.sum());
  }
}
BENCHMARK(BM_GinForward)->Arg(32)->Arg(256);

void BM_Mmd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 1.0);
  cfgadapt::nn::Mat A(n, 32), B(n, 32);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 32; ++j) {
      A(i, j) = dist(rng);
      B(i, j) = dist(rng) + 0.5;
    }
  const std::vector<double> sigmas = {0.25, 0.5, 1.0, 2.0, 4.0};
  for (auto _ : state) {
    auto v = cfgadapt::nn::mmd_rbf(cfgadapt::nn::constant(A),
                                   cfgadapt::nn::constant(B), sigmas);
    benchmark::DoNotOptimize(v->val(0, 0));
  }
}
BENCHMARK(BM_Mmd)->Arg(16)->Arg(64);

void BM_SynthDrift(benchmark::State& state) {
  cfgadapt::harness::SynthConfig cfg;
  cfg.source_graphs = static_cast<int>(state.range(0));
  cfg.target_graphs = cfg.source_graphs;
  for (auto _ : state) {
    auto data = cfgadapt::harness::synth_drift(cfg);
    benchmark::DoNotOptimize(data.source.size());
  }
}
BENCHMARK(BM_SynthDrift)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
