#include <benchmark/benchmark.h>

#include <random>

#include "hw/kernels.hpp"
#include "hw/local_tower.hpp"

using namespace hw;

namespace {

// Top-level multiplication in Z_2[g, pi]/(p^12, ...) with e = 2^k; larger e
// means a longer convolution per output coefficient.
struct Operands {
    TowerPtr T;
    int top;
    Coeffs a, b;
};

Operands make_operands(long e) {
    Operands o;
    o.T = LocalTower::build(TowerSpec::mixed(2, 12).unramified(2).radical(e));
    o.top = static_cast<int>(o.T->levels().size()) - 1;
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<unsigned long> d(0, 1000000007UL);
    for (Coeffs* c : {&o.a, &o.b}) {
        c->assign(o.T->dim(), Int(0));
        for (auto& x : *c) x = Int(d(rng));
        o.T->raw_reduce(*c);
    }
    return o;
}

void BM_mul_serial(benchmark::State& st) {
    auto o = make_operands(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(o.T->raw_mul_serial(o.top, o.a, o.b));
}

void BM_mul_parallel(benchmark::State& st) {
    auto o = make_operands(st.range(0));
    kernels::set_parallel(true);
    for (auto _ : st) benchmark::DoNotOptimize(o.T->raw_mul(o.top, o.a, o.b));
}

}  // namespace

BENCHMARK(BM_mul_serial)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_mul_parallel)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
