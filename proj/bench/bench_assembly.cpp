// Serial against OpenMP assembly of the boundary operators.

#include "sfb/bem.hpp"
#include "sfb/sparse_lu.hpp"

#include <benchmark/benchmark.h>

namespace {

const sfb::SurfaceMesh& outer(int level) {
  static std::map<int, sfb::SurfaceMesh> meshes;
  auto it = meshes.find(level);
  if (it == meshes.end())
    it = meshes.emplace(level, sfb::extract_surface(sfb::build_cube_annulus(0.5, 1.0, level), sfb::kGammaOuter)).first;
  return it->second;
}

void run(benchmark::State& state, unsigned which, bool parallel) {
  const sfb::SurfaceMesh& s = outer(static_cast<int>(state.range(0)));
  sfb::QuadOptions q;
  q.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(sfb::assemble_operators(s, q, which));
  state.counters["triangles"] = s.num_tris();
}

void BM_AllSerial(benchmark::State& st) { run(st, sfb::kOpAll, false); }
void BM_AllOpenMP(benchmark::State& st) { run(st, sfb::kOpAll, true); }
void BM_VSerial(benchmark::State& st) { run(st, sfb::kOpV, false); }
void BM_VOpenMP(benchmark::State& st) { run(st, sfb::kOpV, true); }

BENCHMARK(BM_AllSerial)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AllOpenMP)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VSerial)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VOpenMP)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  sfb::ensure_blas_runtime(argv);
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
