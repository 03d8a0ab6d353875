#include <benchmark/benchmark.h>

#include <random>

#include "minlp/bench.hpp"
#include "minlp/io.hpp"
#include "minlp/lp.hpp"
#include "minlp/propagation.hpp"
#include "minlp/solver.hpp"

using namespace minlp;

namespace {

const char* kLogModel =
    "var x >= 0.5 <= 2;\nvar y >= -1 <= 1;\nmin x;\ncon c1: log(x)^2 + 2*log(x)*y + y^2 <= 4;\n";

const char* kCircle = "var x >= -1 <= 1;\nvar y >= -1 <= 1;\nmin -x - y;\ncon circle: x^2 + y^2 <= 1;\n";

const char* kBilinear =
    "var x >= 0 <= 4;\nvar y >= 0 <= 4;\nvar z >= -2 <= 2;\n"
    "min -x*y + z^2 - 2*z*x;\ncon a: x + y <= 5;\ncon b: x*y - z <= 3;\n";

std::string chain_model(int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s += "var x" + std::to_string(i) + " >= -10 <= 10;\n";
  s += "min x0;\n";
  for (int i = 0; i + 1 < n; ++i)
    s += "con c" + std::to_string(i) + ": x" + std::to_string(i) + "^2 + exp(x" + std::to_string(i + 1) + ") <= 4;\n";
  return s;
}

void BM_Parse(benchmark::State& st) {
  std::string text = chain_model(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(parse_model(text));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_Parse)->Range(8, 512)->Complexity();

void BM_IntervalEval(benchmark::State& st) {
  auto p = parse_model(kLogModel);
  Box b = p.box();
  NodeId root = p.nonlinear[0].root;
  for (auto _ : st) benchmark::DoNotOptimize(ieval(p.dag, root, b));
}
BENCHMARK(BM_IntervalEval);

void BM_FbbtSweep(benchmark::State& st) {
  auto p = parse_model(chain_model(static_cast<int>(st.range(0))));
  Box b = p.box();
  for (auto _ : st) benchmark::DoNotOptimize(fbbt_sweep(p, b, 5));
}
BENCHMARK(BM_FbbtSweep)->Range(8, 256);

void BM_LpDense(benchmark::State& st) {
  int n = static_cast<int>(st.range(0));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  LpModel m;
  for (int j = 0; j < n; ++j) m.add_column(0.0, kInf, -u(rng));
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> e;
    for (int j = 0; j < n; ++j) e.emplace_back(j, u(rng));
    m.add_row(std::move(e), -kInf, 1.0);
  }
  for (auto _ : st) benchmark::DoNotOptimize(lp_solve(m));
}
BENCHMARK(BM_LpDense)->RangeMultiplier(2)->Range(8, 64);

void BM_Solve(benchmark::State& st, const char* text) {
  auto p = parse_model(text);
  Settings s;
  for (auto _ : st) benchmark::DoNotOptimize(solve(p, s));
}
BENCHMARK_CAPTURE(BM_Solve, circle, kCircle)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Solve, bilinear, kBilinear)->Unit(benchmark::kMillisecond);

void BM_PerfProfile(benchmark::State& st) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> t(0.01, 100.0);
  std::vector<BenchRecord> recs;
  for (int i = 0; i < 200; ++i)
    for (const char* solver : {"a", "b", "c"}) {
      BenchRecord r;
      r.instance = "i" + std::to_string(i);
      r.solver = solver;
      r.time = t(rng);
      r.status = RunClass::Solved;
      recs.push_back(r);
    }
  for (auto _ : st) benchmark::DoNotOptimize(perf_profile(recs, {}));
}
BENCHMARK(BM_PerfProfile);

}  // namespace

BENCHMARK_MAIN();
