#include "capaf/functionals.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace capaf;

namespace {

std::shared_ptr<const NormModel> ellipsoid() {
    Mat M(3, 3);
    M << 1.2, 0.1, 0, 0.1, 0.9, 0.05, 0, 0.05, 1.1;
    return std::make_shared<NormModel>(NormModel::ellipsoid(M));
}

std::shared_ptr<const CapMesh> cap_mesh(int level) {
    CapConfig c;
    c.n = 2;
    c.omega0 = -0.3;
    c.norm = ellipsoid();
    c.mesh_level = level;
    return std::make_shared<const CapMesh>(build_cap_mesh(c));
}

void BM_md_raw(benchmark::State& st) {
    const int n = int(st.range(0));
    std::vector<Mat> mats;
    std::vector<const double*> ptr;
    for (int k = 0; k < n; ++k) {
        Mat A = Mat::Random(n, n);
        mats.push_back(A * A.transpose() + Mat::Identity(n, n));
    }
    for (const auto& m : mats) ptr.push_back(m.data());
    for (auto _ : st) benchmark::DoNotOptimize(md_raw(n, ptr.data()));
}
BENCHMARK(BM_md_raw)->Arg(2)->Arg(3);

void BM_mesh(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(cap_mesh(int(st.range(0))));
}
BENCHMARK(BM_mesh)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

void BM_body(benchmark::State& st) {
    auto m = cap_mesh(int(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(random_capillary_body(m, 1, 0.03));
}
BENCHMARK(BM_body)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

void BM_mixed_volume(benchmark::State& st) {
    auto m = cap_mesh(int(st.range(0)));
    auto a = random_capillary_body(m, 1, 0.03), b = random_capillary_body(m, 2, 0.03),
         c = random_capillary_body(m, 3, 0.03);
    for (auto _ : st) benchmark::DoNotOptimize(mixed_volume_value({&a, &b, &c}));
}
BENCHMARK(BM_mixed_volume)->DenseRange(2, 4)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
