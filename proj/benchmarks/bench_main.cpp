#include <benchmark/benchmark.h>

#include "uturn/detect.hpp"
#include "uturn/match.hpp"
#include "uturn/stats.hpp"
#include "uturn/synth.hpp"

using namespace uturn;

namespace {

SensorStream test_stream() {
  SessionSpec spec;
  spec.gyro_noise_sd = 0.03;
  spec.accel_noise_sd = 0.1;
  spec.tilt_deg = 10.0;
  spec.seed = 1;
  return generate_session(spec).stream;
}

std::vector<double> sample(std::size_t n) {
  Rng rng(2);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(1.3, 0.3);
  return v;
}

}  // namespace

static void BM_DetectSession(benchmark::State& state) {
  const auto stream = test_stream();
  for (auto _ : state) benchmark::DoNotOptimize(detect_turns(stream));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.samples.size()));
}
BENCHMARK(BM_DetectSession);

static void BM_StreamingSegmenter(benchmark::State& state) {
  const auto series = estimate_vertical_rate(test_stream());
  const DetectorConfig config;
  for (auto _ : state) {
    TurnSegmenter seg(config);
    std::vector<Turn> out;
    for (std::size_t i = 0; i < series.t.size(); ++i) seg.push(series.t[i], series.omega_v[i], out);
    seg.flush(out);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_StreamingSegmenter);

static void BM_Icc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = sample(n), b = sample(n);
  Matrix x(n, 2);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = a[i], x(i, 1) = 0.5 * (a[i] + b[i]);
  for (auto _ : state) benchmark::DoNotOptimize(icc_single(x, IccModel::two_way_random_21));
}
BENCHMARK(BM_Icc)->Arg(91)->Arg(1000);

static void BM_AgreementBootstrap(benchmark::State& state) {
  const auto a = sample(93), b = sample(93);
  std::vector<std::string> ids(93, "p");
  const auto pairs = PairedSeries::complete(ids, a, b);
  BootstrapOptions opt;
  opt.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(agreement(pairs, opt));
}
BENCHMARK(BM_AgreementBootstrap)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_ClassifyTurns(benchmark::State& state) {
  std::vector<TurnAnnotation> det, ref;
  for (int i = 0; i < 200; ++i) {
    ref.push_back({7.0 * i, 7.0 * i + 2.0, AnnotationSource::reference});
    det.push_back({7.0 * i + 0.1, 7.0 * i + 1.9, AnnotationSource::detector});
  }
  for (auto _ : state) benchmark::DoNotOptimize(classify_turns(det, ref));
}
BENCHMARK(BM_ClassifyTurns);
BENCHMARK_MAIN();
