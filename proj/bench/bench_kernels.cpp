#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "inducer/catalog.hpp"
#include "inducer/dynamics.hpp"

using namespace inducer;

namespace {

// Union of random disks in a square box of `side` cells.
void random_mask(int side, Box& box, std::vector<uint8_t>& mask) {
  box.lo = {0, 0, 0};
  box.size = {side, side, 1};
  mask.assign(std::size_t(side) * side, 0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 24; ++k) {
    const double cx = U(rng) * side, cy = U(rng) * side, r = (0.05 + 0.15 * U(rng)) * side;
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r) mask[x + std::size_t(side) * y] = 1;
  }
}

void BM_edt_parallel(benchmark::State& st) {
  Box b;
  std::vector<uint8_t> m;
  random_mask(int(st.range(0)), b, m);
  std::vector<float> out;
  for (auto _ : st) {
    edt_squared(b, m, 2, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * b.volume());
}

void BM_edt_serial(benchmark::State& st) {
  Box b;
  std::vector<uint8_t> m;
  random_mask(int(st.range(0)), b, m);
  std::vector<float> out;
  for (auto _ : st) {
    edt_squared_serial(b, m, 2, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * b.volume());
}

void BM_transfer_parallel(benchmark::State& st) {
  auto map = make_catalog("m2", std::ldexp(1.0, -int(st.range(0))));
  auto f = RasterDensity::uniform(map->ambient.space, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(transfer_apply(*map, f, 2).values.data());
  st.SetItemsProcessed(st.iterations() * map->grid()->total());
}

void BM_transfer_serial(benchmark::State& st) {
  auto map = make_catalog("m2", std::ldexp(1.0, -int(st.range(0))));
  auto f = RasterDensity::uniform(map->ambient.space, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(transfer_apply_serial(*map, f, 2).values.data());
  st.SetItemsProcessed(st.iterations() * map->grid()->total());
}

}  // namespace

BENCHMARK(BM_edt_parallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_edt_serial)->Arg(256)->Arg(1024);
BENCHMARK(BM_transfer_parallel)->Arg(7)->Arg(9);
BENCHMARK(BM_transfer_serial)->Arg(7)->Arg(9);

BENCHMARK_MAIN();
