#include <doctest.h>

#include <random>

#include "socta/error.hpp"
#include "socta/wavelet.hpp"

using namespace socta;

namespace {

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("wavelet") {

TEST_CASE("constant signal has no detail energy") {
  const std::vector<double> x(16, 5.0);
  const auto d = decompose(x, 2, WaveletBasis::from_name("haar"));
  for (double v : d.approximation) CHECK(v == doctest::Approx(5.0).epsilon(1e-15));
  for (const auto& band : d.details)
    for (double v : band) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("single-level Haar matches a hand-computed oracle") {
  const std::vector<double> x{1, 2, 3, 4, 3, 2, 1, 2};
  const auto d = decompose(x, 1, WaveletBasis::from_name("haar"));
  // a1(k) = (x(k) + x(k-1)) / 2 with x(-1) held at x(0).
  std::vector<double> a1(x.size()), d1(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double prev = k == 0 ? x[0] : x[k - 1];
    a1[k] = 0.5 * (x[k] + prev);
    d1[k] = x[k] - a1[k];
  }
  CHECK(max_abs_diff(d.approximation, a1) < 1e-10);
  CHECK(max_abs_diff(d.details[0], d1) < 1e-10);
  CHECK(d.approximation == std::vector<double>{1, 1.5, 2.5, 3.5, 3.5, 2.5, 1.5, 1.5});
}

TEST_CASE("five levels give six bands of the input length") {
  const auto x = random_signal(64, 3);
  const auto d = decompose(x, 5, WaveletBasis::from_name("db2"));
  CHECK(d.details.size() == 5);
  CHECK(d.approximation.size() == 64);
  for (const auto& band : d.details) CHECK(band.size() == 64);
}

TEST_CASE("reconstruction is exact for every basis") {
  for (const char* name : {"haar", "db2", "db4"}) {
    const auto x = random_signal(1024, 11);
    const auto d = decompose(x, 5, WaveletBasis::from_name(name));
    const auto r = d.reconstruct();
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    CHECK(max_abs_diff(r, x) / scale <= 1e-9);
  }
}

TEST_CASE("transform is linear") {
  const auto basis = WaveletBasis::from_name("db4");
  const auto x = random_signal(200, 1), y = random_signal(200, 2);
  std::vector<double> z(200);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = 2.0 * x[i] - 0.5 * y[i];
  const auto dx = decompose(x, 3, basis), dy = decompose(y, 3, basis), dz = decompose(z, 3, basis);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(dz.approximation[i] == doctest::Approx(2.0 * dx.approximation[i] - 0.5 * dy.approximation[i]));
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(dz.details[j][i] - (2.0 * dx.details[j][i] - 0.5 * dy.details[j][i])) < 1e-9);
    }
  }
}

TEST_CASE("approximation carries the most variance of a ramp") {
  std::vector<double> ramp(300);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 4.2 - 0.003 * i + 0.001 * std::sin(0.7 * i);
  const auto d = decompose(ramp, 3, WaveletBasis::from_name("haar"));
  auto var = [](const std::vector<double>& v) {
    double m = 0.0, s = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  for (const auto& band : d.details) CHECK(var(d.approximation) > var(band));
}

TEST_CASE("invalid requests are rejected") {
  const std::vector<double> short_signal(3, 1.0);
  CHECK_THROWS_AS(decompose(short_signal, 2, WaveletBasis::from_name("haar")), ValidationError);
  std::vector<double> bad(8, 1.0);
  bad[4] = NAN;
  CHECK_THROWS_AS(decompose(bad, 1, WaveletBasis::from_name("haar")), ValidationError);
  CHECK_THROWS_AS(WaveletBasis::from_name("morlet"), ValidationError);
  const auto a = decompose(random_signal(8, 1), 1, WaveletBasis::from_name("haar"));
  const auto b = decompose(random_signal(9, 1), 1, WaveletBasis::from_name("haar"));
  CHECK_THROWS_AS(assemble_channels(a, b), ValidationError);
}

TEST_CASE("channel assembly order and widths") {
  const auto i = random_signal(128, 5), v = random_signal(128, 6);
  const auto basis = WaveletBasis::from_name("haar");
  const auto m = assemble_channels(decompose(i, 5, basis), decompose(v, 5, basis));
  CHECK(m.channels() == 12);
  CHECK(m.channel_names.front() == "current_a");
  CHECK(m.channel_names[6] == "voltage_a");
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    CHECK(std::abs(m.values.row(k).head(6).sum() - i[static_cast<std::size_t>(k)]) < 1e-9);
    CHECK(std::abs(m.values.row(k).tail(6).sum() - v[static_cast<std::size_t>(k)]) < 1e-9);
  }

  const auto raw = assemble_channels(passthrough(i), passthrough(v));
  CHECK(raw.channels() == 2);
  CHECK(raw.values(7, 0) == i[7]);
  CHECK(raw.values(7, 1) == v[7]);
}

TEST_CASE("streaming matches the batch transform") {
  const WaveletConfig cfg{4, "db2"};
  DischargeCycle cycle;
  const auto i = random_signal(300, 8), v = random_signal(300, 9);
  for (std::size_t k = 0; k < i.size(); ++k) {
    cycle.time_s.push_back(static_cast<double>(k));
    cycle.current_A.push_back(i[k]);
    cycle.voltage_V.push_back(3.5 + 0.1 * v[k]);
    cycle.soc_pct.push_back(100.0 - 0.1 * k);
  }
  const auto batch = extend_cycle(cycle, cfg);
  ChannelStream stream(cfg);
  double worst = 0.0;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const auto row = stream.push(cycle.current_A[k], cycle.voltage_V[k]);
    worst = std::max(worst, (row - batch.values.row(static_cast<Eigen::Index>(k))).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}

}
