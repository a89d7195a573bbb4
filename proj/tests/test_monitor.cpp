#include <doctest.h>

#include <random>

#include "socta/error.hpp"
#include "socta/monitor.hpp"
#include "socta/stats.hpp"

using namespace socta;

namespace {

struct Signals {
  std::vector<double> a, b;
};

// Two coupled AR(1) channels with unit innovations.
Signals ar_signals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Signals s;
  double x = 0.0, y = 0.0;
  for (std::size_t k = 0; k < n + 100; ++k) {
    const double e1 = g(rng), e2 = g(rng);
    x = 0.5 * x + e1;
    y = 0.3 * y + 0.4 * x + e2;
    if (k >= 100) {
      s.a.push_back(x);
      s.b.push_back(y);
    }
  }
  return s;
}

ChannelMatrix channels(const Signals& s) { return assemble_channels(passthrough(s.a), passthrough(s.b)); }

struct Fitted {
  CvaModel cva;
  MonitoringModel monitor;
};

Fitted fit(const Signals& train, int lag, int r) {
  const auto cm = channels(train);
  Fitted f;
  f.cva = fit_cva(arrange_past_future({cm}, {lag, lag}), r);
  f.monitor = build_monitor(f.cva, canonical_variates(f.cva, past_rows(cm, lag)));
  return f;
}

const WaveletConfig kRaw{0, "haar"};

}  // namespace

TEST_SUITE("monitor") {

TEST_CASE("score examples") {
  MonitoringModel m;
  m.retained = 2;
  m.past_dim = 3;
  m.t2_limit.value = 4.0;
  m.spe_limit.value = 1.0;
  const auto zero = score(m, Vector::Zero(2), Vector::Zero(3));
  CHECK(zero.t2 == 0.0);
  CHECK(zero.spe == 0.0);
  CHECK_FALSE(zero.t2_exceeds);
  CHECK_FALSE(zero.spe_exceeds);

  Vector zs(2);
  zs << 1, 2;
  const auto v = score(m, zs, Vector::Zero(3));
  CHECK(v.t2 == 5.0);
  CHECK(v.t2_exceeds);
  CHECK(score(m, 3.0 * zs, Vector::Zero(3)).t2 == doctest::Approx(9.0 * v.t2));
  CHECK_THROWS_AS(score(m, Vector::Zero(3), Vector::Zero(3)), ValidationError);
}

TEST_CASE("three consecutive exceedances are required") {
  CaseTracker tracker(3);
  auto step = [&](bool t2, bool spe) {
    MonitoringVerdict v;
    v.t2_exceeds = t2;
    v.spe_exceeds = spe;
    tracker.update(v);
    return v;
  };
  CHECK(step(true, false).decision == Case::I);
  CHECK(step(false, false).decision == Case::I);
  CHECK(step(true, false).decision == Case::I);
  CHECK(step(false, true).decision == Case::I);
  CHECK(step(true, true).decision == Case::I);
  CHECK_FALSE(tracker.latched());
  const auto third = step(false, true);
  CHECK(third.consecutive_exceed_count == 3);
  CHECK(third.decision == Case::II);
  CHECK(tracker.latched());
  CHECK(step(false, false).decision == Case::I);
  CHECK(tracker.latched());
}

TEST_CASE("Gaussian limits") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector t2(2000);
  for (auto& v : t2) v = g(rng) * g(rng);
  const auto cl = t2_limit(t2, 2, 1.0, MonitorOptions{});
  CHECK(cl.method == LimitMethod::ChiSquare);
  CHECK(std::abs(cl.value - 5.991) < 1e-3);
  const auto kde = t2_limit(t2, 2, 0.5, MonitorOptions{});
  CHECK(kde.method == LimitMethod::Kde);
  CHECK_THROWS_AS(spe_limit(Vector::Constant(50, 2.0), 1.0, MonitorOptions{}), NumericalError);
}

TEST_CASE("zero system variates never alarm") {
  const auto train = ar_signals(800, 2);
  auto f = fit(train, 2, 1);
  Matrix z = canonical_variates(f.cva, past_rows(channels(train), 2));
  z.col(0).setZero();
  const auto m = build_monitor(f.cva, z);
  CHECK(m.t2_limit.value > 0.0);
  const auto s = monitor_statistics(f.cva, z);
  CHECK(s.t2.maxCoeff() == 0.0);
}

TEST_CASE("training and held-out exceedance rates") {
  const auto f = fit(ar_signals(4000, 3), 2, 2);
  const auto held = channels(ar_signals(4000, 4));
  const auto s = monitor_statistics(f.cva, canonical_variates(f.cva, past_rows(held, 2)));
  const double t2_rate = (s.t2.array() > f.monitor.t2_limit.value).cast<double>().mean();
  const double spe_rate = (s.spe.array() > f.monitor.spe_limit.value).cast<double>().mean();
  CHECK(t2_rate >= 0.02);
  CHECK(t2_rate <= 0.10);
  CHECK(spe_rate >= 0.02);
  CHECK(spe_rate <= 0.10);
}

TEST_CASE("stream and batch verdicts agree") {
  const auto f = fit(ar_signals(2000, 5), 3, 2);
  const auto test = ar_signals(600, 6);
  const auto stream = evaluate_stream(f.monitor, f.cva, kRaw, test.a, test.b);
  const auto batch = evaluate_batch(f.monitor, f.cva, channels(test));
  CHECK(stream.warmup == 2);
  REQUIRE(stream.steps.size() == batch.steps.size());
  for (std::size_t i = 0; i < stream.steps.size(); ++i) {
    CHECK(stream.steps[i].k == batch.steps[i].k);
    CHECK(std::abs(stream.steps[i].verdict.t2 - batch.steps[i].verdict.t2) < 1e-9);
    CHECK(std::abs(stream.steps[i].verdict.spe - batch.steps[i].verdict.spe) < 1e-9);
    CHECK(stream.steps[i].verdict.decision == batch.steps[i].verdict.decision);
  }
  CHECK(stream.latch_index == batch.latch_index);

  // One held-out row scored alone equals its batch statistics.
  const Matrix rows = past_rows(channels(test), 3);
  const auto p = project(f.cva, f.cva.past_scaler.apply(Vector(rows.row(40).transpose())));
  const auto v = score(f.monitor, p.system, p.residual);
  const auto s = monitor_statistics(f.cva, canonical_variates(f.cva, rows));
  CHECK(std::abs(v.t2 - s.t2(40)) < 1e-9);
  CHECK(std::abs(v.spe - s.spe(40)) < 1e-9);

  CHECK_THROWS_AS(evaluate_stream(f.monitor, f.cva, kRaw, {1.0, 2.0}, {1.0, 2.0}), ValidationError);
}

TEST_CASE("a five-sigma shift latches Case II promptly") {
  const auto train = ar_signals(3000, 7);
  const auto f = fit(train, 2, 2);
  auto test = ar_signals(1000, 8);
  const double sa = std::sqrt(stats::variance(train.a)), sb = std::sqrt(stats::variance(train.b));
  for (std::size_t k = 500; k < test.a.size(); ++k) {
    test.a[k] += 5.0 * sa;
    test.b[k] += 5.0 * sb;
  }
  const auto report = evaluate_stream(f.monitor, f.cva, kRaw, test.a, test.b);
  REQUIRE(report.latch_index.has_value());
  std::optional<std::size_t> detected;
  for (const auto& step : report.steps) {
    if (step.k >= 500 && step.verdict.decision == Case::II) {
      detected = step.k;
      break;
    }
  }
  REQUIRE(detected.has_value());
  CHECK(*detected <= 510);
}

TEST_CASE("channel count must match the model") {
  const auto f = fit(ar_signals(500, 9), 2, 1);
  CHECK_THROWS_AS(StreamMonitor(f.monitor, f.cva, WaveletConfig{2, "haar"}), ValidationError);
}

}
