#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "arlp/errors.hpp"
#include "arlp/grid.hpp"
#include "arlp/semantic.hpp"

using namespace arlp;

namespace {

// plain-loop autocorrelation oracle, written independently of the library
std::vector<double> acf_oracle(const std::vector<double>& x, int lags) {
  const int n = static_cast<int>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  std::vector<double> r(lags + 1, 0.0);
  r[0] = 1.0;
  if (denom == 0.0) return r;  // constant series convention
  for (int h = 1; h <= lags; ++h) {
    double num = 0.0;
    for (int t = 0; t + h < n; ++t) num += (x[t] - mean) * (x[t + h] - mean);
    r[h] = num / denom;
  }
  return r;
}

// builds a WindowSeries directly from per-cell rows (all five channels equal
// unless overridden), so semantic tests need no cube plumbing
WindowSeries make_window(const std::vector<std::vector<double>>& rows) {
  WindowSeries w;
  w.cells = static_cast<int>(rows.size());
  w.len = static_cast<int>(rows[0].size());
  for (auto* ch : {&w.demand, &w.supply, &w.journey_up, &w.journey_down, &w.gap}) {
    ch->resize(static_cast<std::size_t>(w.cells) * w.len);
    for (int c = 0; c < w.cells; ++c)
      for (int t = 0; t < w.len; ++t)
        (*ch)[static_cast<std::size_t>(c) * w.len + t] = rows[c][t];
  }
  return w;
}

std::vector<double> random_series(std::mt19937_64& rng, int len) {
  std::uniform_real_distribution<double> dist(-1.0, 3.0);
  std::vector<double> s(len);
  for (double& v : s) v = dist(rng);
  return s;
}

}  // namespace

TEST_CASE("acf of a constant window is the unit impulse") {
  const std::vector<double> c4(4, 3.7);
  CHECK(acf_vector(c4, 2) == std::vector<double>{1.0, 0.0, 0.0});
  const std::vector<double> z3(3, 0.0);
  CHECK(acf_vector(z3, 1) == std::vector<double>{1.0, 0.0});
}

TEST_CASE("acf matches hand-computed fixtures") {
  // x = (1,2,3,4): mean 2.5, denom 5, lag-1 numerator 1.25
  const std::vector<double> ramp{1.0, 2.0, 3.0, 4.0};
  const auto r = acf_vector(ramp, 1);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == doctest::Approx(0.25).epsilon(1e-15));

  // alternating (1,-1,1,-1): mean 0, denom 4, lag-1 numerator -3
  const std::vector<double> alt{1.0, -1.0, 1.0, -1.0};
  const auto ra = acf_vector(alt, 2);
  CHECK(ra[0] == 1.0);
  CHECK(ra[1] == doctest::Approx(-0.75).epsilon(1e-15));
  CHECK(ra[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("acf is invariant under affine rescaling") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_series(rng, 8);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.5 * x[i] - 7.0;
    const auto rx = acf_vector(x, 3), ry = acf_vector(y, 3);
    for (std::size_t h = 0; h < rx.size(); ++h)
      CHECK(rx[h] == doctest::Approx(ry[h]).epsilon(1e-12));
  }
}

TEST_CASE("acf agrees with an independent loop oracle on random series") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 4 + static_cast<int>(rng() % 12);
    const int lags = 1 + static_cast<int>(rng() % (len - 2));
    const auto x = random_series(rng, len);
    const auto lib = acf_vector(x, lags);
    const auto ora = acf_oracle(x, lags);
    REQUIRE(lib.size() == ora.size());
    for (std::size_t h = 0; h < lib.size(); ++h)
      CHECK(lib[h] == doctest::Approx(ora[h]).epsilon(1e-12));
  }
}

TEST_CASE("acf similarity is the plain dot product") {
  // acf((1,2,3,4), 1) = (1, 0.25); self-similarity 1 + 1/16
  const auto r = acf_vector(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 1);
  CHECK(acf_similarity(r, r) == doctest::Approx(1.0625).epsilon(1e-15));
  // against a constant cell: (1, 0.25) . (1, 0) = 1
  const auto rc = acf_vector(std::vector<double>(4, 2.0), 1);
  CHECK(acf_similarity(r, rc) == doctest::Approx(1.0).epsilon(1e-15));
  // alternating vs ramp at one lag: (1, 0.25) . (1, -0.75)
  const auto ra = acf_vector(std::vector<double>{1.0, -1.0, 1.0, -1.0}, 1);
  CHECK(acf_similarity(r, ra) == doctest::Approx(1.0 - 0.1875).epsilon(1e-15));
}

TEST_CASE("similarity maps score every cell against the target") {
  // cell 0: ramp demand; cell 1: constant — identical rows in all channels
  const auto win = make_window({{1.0, 2.0, 3.0, 4.0}, {2.0, 2.0, 2.0, 2.0}});
  const auto maps = similarity_maps(win, 0, 1);
  CHECK(maps.target == 0);
  REQUIRE(maps.demand.size() == 2);
  CHECK(maps.demand[0] == doctest::Approx(1.0625));  // self
  CHECK(maps.demand[1] == doctest::Approx(1.0));     // vs constant
  // all four descriptor channels carry the same series here
  CHECK(maps.supply == maps.demand);
  CHECK(maps.journey_up == maps.demand);
  CHECK(maps.journey_down == maps.demand);
}

TEST_CASE("similarity distance mixes the four maps linearly") {
  const auto win = make_window({{1.0, 2.0, 3.0, 4.0}, {2.0, 2.0, 2.0, 2.0}});
  const auto maps = similarity_maps(win, 0, 1);

  SUBCASE("uniform quarter weights average the maps") {
    const double w[4] = {0.25, 0.25, 0.25, 0.25};
    const auto sd = similarity_distance(maps, w, 0.0);
    REQUIRE(sd.size() == 2);
    CHECK(sd[0] == doctest::Approx(1.0625));
    CHECK(sd[1] == doctest::Approx(1.0));
  }
  SUBCASE("a selector weight reads one map plus the bias") {
    const double w[4] = {0.0, 0.0, 1.0, 0.0};
    const auto sd = similarity_distance(maps, w, -0.5);
    CHECK(sd[0] == doctest::Approx(1.0625 - 0.5));
    CHECK(sd[1] == doctest::Approx(0.5));
  }
}

TEST_CASE("similarity distance sensitivity to the mix parameters") {
  // finite-difference check of d(sd_i)/d(w_c) and d(sd_i)/d(b)
  std::mt19937_64 rng(33);
  const auto win =
      make_window({random_series(rng, 6), random_series(rng, 6), random_series(rng, 6)});
  const auto maps = similarity_maps(win, 1, 2);
  double w[4] = {0.3, -0.2, 0.5, 0.1};
  const double b = 0.05, eps = 1e-6;
  for (int c = 0; c < 4; ++c) {
    double wp[4], wm[4];
    std::copy(w, w + 4, wp);
    std::copy(w, w + 4, wm);
    wp[c] += eps;
    wm[c] -= eps;
    const auto up = similarity_distance(maps, wp, b);
    const auto down = similarity_distance(maps, wm, b);
    const auto base = similarity_distance(maps, w, b);
    const std::vector<const std::vector<double>*> chans{&maps.demand, &maps.supply,
                                                        &maps.journey_up,
                                                        &maps.journey_down};
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK((up[i] - down[i]) / (2 * eps) ==
            doctest::Approx((*chans[c])[i]).epsilon(1e-6));
  }
}

TEST_CASE("hard attention keeps cells strictly above the beta threshold") {
  const std::vector<double> sd{2.0, 1.9, 1.7};
  // target 0, beta 0.9: threshold 1.8; 1.9 passes, 1.7 does not, target stays
  const auto ha = hard_attention(sd, 0, 0.9);
  CHECK(ha == std::vector<std::uint8_t>{1, 1, 0});

  // beta = 1.0: the comparison is strict, so even the target itself fails
  // sd_k > sd_k and the mask empties out
  const auto ha1 = hard_attention(sd, 0, 1.0);
  CHECK(ha1 == std::vector<std::uint8_t>{0, 0, 0});

  // equal scores at the threshold are excluded (strict comparison)
  const std::vector<double> tie{2.0, 1.8};
  CHECK(hard_attention(tie, 0, 0.9)[1] == 0);
}

TEST_CASE("sample attention rescales by the target's own score") {
  const std::vector<double> sd{1.0, 0.95, 0.5};
  const auto sa = sample_attention(sd, 0);
  CHECK(sa[0] == doctest::Approx(1.0));
  CHECK(sa[1] == doctest::Approx(0.95));
  CHECK(sa[2] == doctest::Approx(0.5));

  const std::vector<double> sd2{0.5, 1.0};
  const auto sa2 = sample_attention(sd2, 1);
  CHECK(sa2[0] == doctest::Approx(0.5));
  CHECK(sa2[1] == doctest::Approx(1.0));

  // a vanishing target score has no meaningful scale
  const std::vector<double> bad{0.3, 0.0};
  CHECK_THROWS_AS(sample_attention(bad, 1), NumericError);
  const std::vector<double> tiny{0.3, 5e-9};
  CHECK_THROWS_AS(sample_attention(tiny, 1), NumericError);
}

TEST_CASE("semantic forward blends gap series by final weights") {
  // Two cells. Target 0 demand ramp (1,2,3,4) -> self-similarity 1.0625 per
  // channel; cell 1 constant -> similarity 1.0. With w = (1,0,0,0) and
  // b = -0.9375: sd = (0.125, 0.0625); beta 0.4 keeps both (0.0625 > 0.05);
  // sa = (1, 0.5); fa = (1, 0.5). Gap rows (1,2,3,4) and (2,2,2,2) blend to
  // s = 1*(1,2,3,4) + 0.5*(2,2,2,2) = (2,3,4,5).
  auto win = make_window({{1.0, 2.0, 3.0, 4.0}, {2.0, 2.0, 2.0, 2.0}});
  const double w[4] = {1.0, 0.0, 0.0, 0.0};
  const double b = -0.9375;
  const auto out = semantic_forward(win, 0, w, b, 0.4, false, 1);

  CHECK(out.distance[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(out.distance[1] == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(out.hard_mask == std::vector<std::uint8_t>{1, 1});
  CHECK(out.sample_weights[0] == doctest::Approx(1.0));
  CHECK(out.sample_weights[1] == doctest::Approx(0.5));
  CHECK(out.final_weights[0] == doctest::Approx(1.0));
  CHECK(out.final_weights[1] == doctest::Approx(0.5));
  CHECK(out.weight_sum == doctest::Approx(1.5));
  REQUIRE(out.synthesized.size() == 4);
  CHECK(out.synthesized[0] == doctest::Approx(2.0));
  CHECK(out.synthesized[1] == doctest::Approx(3.0));
  CHECK(out.synthesized[2] == doctest::Approx(4.0));
  CHECK(out.synthesized[3] == doctest::Approx(5.0));

  SUBCASE("masked-out cells contribute nothing") {
    // beta 0.6: threshold 0.075 > 0.0625, cell 1 drops out
    const auto only = semantic_forward(win, 0, w, b, 0.6, false, 1);
    CHECK(only.hard_mask == std::vector<std::uint8_t>{1, 0});
    CHECK(only.final_weights[1] == 0.0);
    for (int t = 0; t < 4; ++t)
      CHECK(only.synthesized[t] == doctest::Approx(1.0 + t));
  }

  SUBCASE("renormalization divides by the weight sum") {
    const auto norm = semantic_forward(win, 0, w, b, 0.4, true, 1);
    for (int t = 0; t < 4; ++t)
      CHECK(norm.synthesized[t] == doctest::Approx((2.0 + t) / 1.5).epsilon(1e-12));
    CHECK(norm.weight_sum == doctest::Approx(1.5));
  }
}

TEST_CASE("semantic forward matches a brute-force oracle on random windows") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> wdist(-0.5, 0.8);
  for (int trial = 0; trial < 300; ++trial) {
    const int cells = 2 + static_cast<int>(rng() % 5);
    const int len = 5 + static_cast<int>(rng() % 4);
    const int lags = 1 + static_cast<int>(rng() % 3);
    WindowSeries win;
    win.cells = cells;
    win.len = len;
    for (auto* ch : {&win.demand, &win.supply, &win.journey_up, &win.journey_down,
                     &win.gap}) {
      ch->resize(static_cast<std::size_t>(cells) * len);
      for (double& v : *ch) v = wdist(rng) * 4.0;
    }
    const int target = static_cast<int>(rng() % cells);
    double w[4];
    for (double& x : w) x = wdist(rng);
    const double b = wdist(rng);
    const double beta = 0.7;

    // independent recomputation with plain loops
    std::vector<double> sd(cells);
    for (int i = 0; i < cells; ++i) {
      const std::vector<const std::vector<double>*> chans{
          &win.demand, &win.supply, &win.journey_up, &win.journey_down};
      double acc = b;
      for (int c = 0; c < 4; ++c) {
        const double* row_i = win.row(*chans[c], i);
        const double* row_k = win.row(*chans[c], target);
        const auto ri = acf_oracle({row_i, row_i + len}, lags);
        const auto rk = acf_oracle({row_k, row_k + len}, lags);
        acc += w[c] * std::inner_product(ri.begin(), ri.end(), rk.begin(), 0.0);
      }
      sd[i] = acc;
    }
    if (std::abs(sd[target]) <= 1e-8) continue;  // library throws here; skip
    const double threshold = beta * sd[target];
    std::vector<double> expected(len, 0.0);
    for (int i = 0; i < cells; ++i) {
      if (!(sd[i] > threshold)) continue;
      const double fa = sd[i] / sd[target];
      const double* gap = win.row(win.gap, i);
      for (int t = 0; t < len; ++t) expected[t] += fa * gap[t];
    }

    const auto out = semantic_forward(win, target, w, b, beta, false, lags);
    for (int i = 0; i < cells; ++i)
      CHECK(out.distance[i] == doctest::Approx(sd[i]).epsilon(1e-10));
    for (int t = 0; t < len; ++t)
      CHECK(out.synthesized[t] == doctest::Approx(expected[t]).epsilon(1e-10));
  }
}

TEST_CASE("semantic backward agrees with finite differences") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  // positive weights and a healthy bias keep sd well away from both the hard
  // attention threshold and the sd_k ~ 0 singularity, so the loss is smooth
  const auto win = make_window({{1.0, 2.0, 3.0, 4.0, 2.0, 1.0},
                                {2.0, 1.0, 2.0, 3.0, 3.0, 2.0},
                                {0.5, 1.5, 2.5, 1.5, 0.5, 1.5}});
  std::vector<double> g_series(6);
  for (double& g : g_series) g = dist(rng);

  for (const bool renorm : {false, true}) {
    double w[4] = {0.4, 0.3, 0.2, 0.1};
    double b = 1.0;
    const int target = 0, lags = 2;
    const double beta = 0.5;

    auto loss = [&]() {
      const auto out = semantic_forward(win, target, w, b, beta, renorm, lags);
      double acc = 0.0;
      for (int t = 0; t < 6; ++t) acc += g_series[t] * out.synthesized[t];
      return acc;
    };

    const auto fwd = semantic_forward(win, target, w, b, beta, renorm, lags);
    double gw[4] = {0, 0, 0, 0};
    double gb = 0.0;
    semantic_backward(fwd, win, target, g_series, renorm, gw, gb);

    const double eps = 1e-6;
    for (int c = 0; c < 4; ++c) {
      const double saved = w[c];
      w[c] = saved + eps;
      const double up = loss();
      w[c] = saved - eps;
      const double down = loss();
      w[c] = saved;
      CHECK(gw[c] == doctest::Approx((up - down) / (2 * eps)).epsilon(1e-5));
    }
    {
      const double saved = b;
      b = saved + eps;
      const double up = loss();
      b = saved - eps;
      const double down = loss();
      b = saved;
      CHECK(gb == doctest::Approx((up - down) / (2 * eps)).epsilon(1e-5));
    }

    SUBCASE("gradients accumulate across calls") {
      double gw2[4] = {0, 0, 0, 0};
      double gb2 = 0.0;
      semantic_backward(fwd, win, target, g_series, renorm, gw2, gb2);
      semantic_backward(fwd, win, target, g_series, renorm, gw2, gb2);
      for (int c = 0; c < 4; ++c) CHECK(gw2[c] == doctest::Approx(2 * gw[c]));
      CHECK(gb2 == doctest::Approx(2 * gb));
    }
  }
}

TEST_CASE("extract_window copies the cube slice row by row") {
  GridSpec g;
  g.rows = 2;
  g.cols = 2;
  g.interval_minutes = 60;
  g.neighborhood = 1;
  g.window = 4;
  g.history = 1;
  g.acf_lags = 2;
  CityCube cube(g, 2);
  for (int r = 0; r < g.cells(); ++r)
    for (int t = 0; t < g.intervals_per_day(); ++t) {
      cube.at_cell(Channel::Demand, 1, t, r) = 100.0 * r + t;
      cube.at_cell(Channel::Gap, 1, t, r) = -(100.0 * r + t);
    }
  const auto win = extract_window(cube, 1, 3, 4);
  CHECK(win.cells == 4);
  CHECK(win.len == 4);
  CHECK(win.row(win.demand, 0)[0] == 3.0);
  CHECK(win.row(win.demand, 2)[3] == 206.0);
  CHECK(win.row(win.gap, 3)[1] == -304.0);
  CHECK(win.row(win.supply, 1)[2] == 0.0);
}
