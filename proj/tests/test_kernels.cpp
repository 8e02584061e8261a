#include <doctest.h>

#include <cmath>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "arlp/errors.hpp"
#include "arlp/kernels.hpp"

// The scalar backend defines the semantics; these tests pin that contract
// with independent oracles and require the AVX2 variants to agree with the
// scalar ones to near machine precision on random fixtures.

namespace {

using arlp::kernels::Backend;

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -2.0,
                               double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b,
                 double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    CHECK(std::abs(a[i] - b[i]) <= tol * scale);
  }
}

// independent convolution oracle: materialize the full linear map as a dense
// matrix, then multiply
std::vector<double> conv_oracle(const std::vector<double>& in,
                                const std::vector<double>& w,
                                const std::vector<double>& b, int side, int cin,
                                int cout) {
  const int cells = side * side;
  std::vector<double> matrix(static_cast<std::size_t>(cells) * cout * cells * cin, 0.0);
  const std::size_t in_dim = static_cast<std::size_t>(cells) * cin;
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      for (int co = 0; co < cout; ++co) {
        const std::size_t out_idx = (static_cast<std::size_t>(r) * side + c) * cout + co;
        for (int dr = 0; dr < 3; ++dr)
          for (int dc = 0; dc < 3; ++dc) {
            const int rr = r + dr - 1, cc = c + dc - 1;
            if (rr < 0 || rr >= side || cc < 0 || cc >= side) continue;
            for (int ci = 0; ci < cin; ++ci) {
              const std::size_t in_idx =
                  (static_cast<std::size_t>(rr) * side + cc) * cin + ci;
              matrix[out_idx * in_dim + in_idx] =
                  w[(static_cast<std::size_t>(co) * 9 + dr * 3 + dc) * cin + ci];
            }
          }
      }
  std::vector<double> out(static_cast<std::size_t>(cells) * cout, 0.0);
  for (std::size_t o = 0; o < out.size(); ++o) {
    double acc = b.empty() ? 0.0 : b[o % cout];
    for (std::size_t i = 0; i < in_dim; ++i) acc += matrix[o * in_dim + i] * in[i];
    out[o] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("scalar kernels match plain-loop oracles") {
  const Backend& k = arlp::kernels::scalar_backend();
  std::mt19937_64 rng(101);

  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 129u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);

    double dot_oracle = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot_oracle += a[i] * b[i];
    CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(dot_oracle).epsilon(1e-12));

    auto y = b;
    k.axpy(0.75, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y[i] == doctest::Approx(b[i] + 0.75 * a[i]));

    auto relu = a;
    k.relu(a.data(), relu.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(relu[i] == std::max(a[i], 0.0));

    std::vector<double> gate(n, 0.5);
    k.relu_mask_acc(b.data(), a.data(), gate.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(gate[i] == (a[i] > 0.0 ? 0.5 + b[i] : 0.5));

    auto scaled = a;
    k.scale(-1.5, scaled.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(scaled[i] == -1.5 * a[i]);

    std::vector<double> sum(n), diff(n), prod(n);
    k.vadd(a.data(), b.data(), sum.data(), n);
    k.vsub(a.data(), b.data(), diff.data(), n);
    k.vmul(a.data(), b.data(), prod.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(sum[i] == a[i] + b[i]);
      CHECK(diff[i] == a[i] - b[i]);
      CHECK(prod[i] == a[i] * b[i]);
    }

    std::vector<double> sig(n), th(n);
    k.sigmoid(a.data(), sig.data(), n);
    k.vtanh(a.data(), th.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(sig[i] == doctest::Approx(1.0 / (1.0 + std::exp(-a[i]))).epsilon(1e-15));
      CHECK(th[i] == doctest::Approx(std::tanh(a[i])).epsilon(1e-15));
    }
  }
}

TEST_CASE("matvec family matches matrix arithmetic") {
  const Backend& k = arlp::kernels::scalar_backend();
  std::mt19937_64 rng(202);
  const std::size_t rows = 7, cols = 11;
  auto a = random_vec(rng, rows * cols);
  auto x = random_vec(rng, cols);
  auto b = random_vec(rng, rows);

  std::vector<double> y(rows);
  k.matvec(a.data(), x.data(), b.data(), y.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += a[r * cols + c] * x[c];
    CHECK(y[r] == doctest::Approx(acc).epsilon(1e-13));
  }

  // transpose-accumulate: out += A^T g
  auto g = random_vec(rng, rows);
  std::vector<double> out(cols, 1.0), expected(cols, 1.0);
  k.matvec_t_acc(a.data(), g.data(), out.data(), rows, cols);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < rows; ++r) expected[c] += a[r * cols + c] * g[r];
  check_close(out, expected, 1e-13);

  // rank-one accumulate: A += g x^T
  auto acc = a;
  k.ger_acc(acc.data(), g.data(), x.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      CHECK(acc[r * cols + c] == doctest::Approx(a[r * cols + c] + g[r] * x[c]));
}

TEST_CASE("convolution matches a dense-matrix oracle") {
  const Backend& k = arlp::kernels::scalar_backend();
  std::mt19937_64 rng(303);
  for (const auto [side, cin, cout] :
       {std::tuple<int, int, int>{3, 1, 2}, std::tuple<int, int, int>{5, 4, 3}, std::tuple<int, int, int>{5, 2, 2}}) {
    auto in = random_vec(rng, static_cast<std::size_t>(side) * side * cin);
    auto w = random_vec(rng, static_cast<std::size_t>(cout) * 9 * cin);
    auto b = random_vec(rng, cout);

    std::vector<double> out(static_cast<std::size_t>(side) * side * cout);
    k.conv3x3(in.data(), w.data(), b.data(), out.data(), side, cin, cout);
    check_close(out, conv_oracle(in, w, b, side, cin, cout), 1e-12);

    // null bias pointer means zero bias
    std::vector<double> out_nb(out.size());
    k.conv3x3(in.data(), w.data(), nullptr, out_nb.data(), side, cin, cout);
    check_close(out_nb, conv_oracle(in, w, {}, side, cin, cout), 1e-12);
  }
}

TEST_CASE("convolution backward matches finite differences") {
  const Backend& k = arlp::kernels::scalar_backend();
  std::mt19937_64 rng(404);
  const int side = 4, cin = 2, cout = 3;
  const std::size_t in_n = static_cast<std::size_t>(side) * side * cin;
  const std::size_t out_n = static_cast<std::size_t>(side) * side * cout;
  const std::size_t w_n = static_cast<std::size_t>(cout) * 9 * cin;

  auto in = random_vec(rng, in_n);
  auto w = random_vec(rng, w_n);
  auto b = random_vec(rng, cout);
  auto g = random_vec(rng, out_n);  // upstream gradient

  // scalar objective L = g . conv(in, w, b); everything below is linear so
  // finite differences are exact to rounding
  auto objective = [&]() {
    std::vector<double> out(out_n);
    k.conv3x3(in.data(), w.data(), b.data(), out.data(), side, cin, cout);
    return k.dot(g.data(), out.data(), out_n);
  };

  std::vector<double> gin(in_n, 0.0), gw(w_n, 0.0), gb(cout, 0.0);
  k.conv3x3_grad_input(g.data(), w.data(), gin.data(), side, cin, cout);
  k.conv3x3_grad_params(in.data(), g.data(), gw.data(), gb.data(), side, cin, cout);

  const double eps = 1e-6;
  auto probe = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + eps;
    const double up = objective();
    slot = saved - eps;
    const double down = objective();
    slot = saved;
    CHECK(analytic == doctest::Approx((up - down) / (2 * eps)).epsilon(1e-7));
  };
  for (std::size_t i = 0; i < in_n; i += 5) probe(in[i], gin[i]);
  for (std::size_t i = 0; i < w_n; i += 7) probe(w[i], gw[i]);
  for (int i = 0; i < cout; ++i) probe(b[i], gb[i]);
}

TEST_CASE("gradient kernels accumulate instead of overwriting") {
  const Backend& k = arlp::kernels::scalar_backend();
  std::mt19937_64 rng(505);
  const int side = 3, cin = 2, cout = 2;
  auto in = random_vec(rng, 18), w = random_vec(rng, 36), g = random_vec(rng, 18);

  std::vector<double> once(18, 0.0), twice(18, 0.0);
  k.conv3x3_grad_input(g.data(), w.data(), once.data(), side, cin, cout);
  k.conv3x3_grad_input(g.data(), w.data(), twice.data(), side, cin, cout);
  k.conv3x3_grad_input(g.data(), w.data(), twice.data(), side, cin, cout);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]));
}

TEST_CASE("AVX2 backend agrees with the scalar reference") {
  if (!arlp::kernels::avx2_available()) return;  // nothing to compare on this host
  const Backend& s = arlp::kernels::scalar_backend();
  const Backend& v = arlp::kernels::avx2_backend();
  std::mt19937_64 rng(606);

  // FMA contracts multiply-add rounding, so allow a tiny relative slack
  const double tol = 1e-12;

  for (std::size_t n : {1u, 2u, 4u, 5u, 8u, 31u, 256u, 1000u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v.dot(a.data(), b.data(), n)) <=
          tol * n);

    auto ys = b, yv = b;
    s.axpy(1.25, a.data(), ys.data(), n);
    v.axpy(1.25, a.data(), yv.data(), n);
    check_close(ys, yv, tol);

    std::vector<double> rs(n), rv(n);
    s.relu(a.data(), rs.data(), n);
    v.relu(a.data(), rv.data(), n);
    check_close(rs, rv, 0.0);  // branchless max must agree exactly

    std::vector<double> ms(n, 0.25), mv(n, 0.25);
    s.relu_mask_acc(b.data(), a.data(), ms.data(), n);
    v.relu_mask_acc(b.data(), a.data(), mv.data(), n);
    check_close(ms, mv, 0.0);

    auto ss = a, sv = a;
    s.scale(0.3, ss.data(), n);
    v.scale(0.3, sv.data(), n);
    check_close(ss, sv, 0.0);

    std::vector<double> es(n), ev(n);
    s.vadd(a.data(), b.data(), es.data(), n);
    v.vadd(a.data(), b.data(), ev.data(), n);
    check_close(es, ev, 0.0);
    s.vsub(a.data(), b.data(), es.data(), n);
    v.vsub(a.data(), b.data(), ev.data(), n);
    check_close(es, ev, 0.0);
    s.vmul(a.data(), b.data(), es.data(), n);
    v.vmul(a.data(), b.data(), ev.data(), n);
    check_close(es, ev, 0.0);

    std::vector<double> ts(n), tv(n);
    s.vtanh(a.data(), ts.data(), n);
    v.vtanh(a.data(), tv.data(), n);
    check_close(ts, tv, 0.0);  // both sides call the scalar libm path
    s.sigmoid(a.data(), ts.data(), n);
    v.sigmoid(a.data(), tv.data(), n);
    check_close(ts, tv, 0.0);
  }

  for (const auto [rows, cols] : {std::pair<int, int>{5, 9}, std::pair<int, int>{16, 16}, std::pair<int, int>{3, 1}}) {
    const std::size_t r = rows, c = cols;
    auto a = random_vec(rng, r * c);
    auto x = random_vec(rng, c);
    auto bias = random_vec(rng, r);
    auto g = random_vec(rng, r);

    std::vector<double> ys(r), yv(r);
    s.matvec(a.data(), x.data(), bias.data(), ys.data(), r, c);
    v.matvec(a.data(), x.data(), bias.data(), yv.data(), r, c);
    check_close(ys, yv, tol);

    std::vector<double> os(c, 0.5), ov(c, 0.5);
    s.matvec_t_acc(a.data(), g.data(), os.data(), r, c);
    v.matvec_t_acc(a.data(), g.data(), ov.data(), r, c);
    check_close(os, ov, tol);

    auto as = a, av = a;
    s.ger_acc(as.data(), g.data(), x.data(), r, c);
    v.ger_acc(av.data(), g.data(), x.data(), r, c);
    check_close(as, av, tol);
  }

  for (const auto [side, cin, cout] : {std::tuple<int, int, int>{5, 4, 3}, std::tuple<int, int, int>{3, 1, 2}}) {
    auto in = random_vec(rng, static_cast<std::size_t>(side) * side * cin);
    auto w = random_vec(rng, static_cast<std::size_t>(cout) * 9 * cin);
    auto b = random_vec(rng, cout);
    auto g = random_vec(rng, static_cast<std::size_t>(side) * side * cout);

    std::vector<double> outs(static_cast<std::size_t>(side) * side * cout), outv(outs);
    s.conv3x3(in.data(), w.data(), b.data(), outs.data(), side, cin, cout);
    v.conv3x3(in.data(), w.data(), b.data(), outv.data(), side, cin, cout);
    check_close(outs, outv, tol);

    std::vector<double> gis(in.size(), 0.0), giv(in.size(), 0.0);
    s.conv3x3_grad_input(g.data(), w.data(), gis.data(), side, cin, cout);
    v.conv3x3_grad_input(g.data(), w.data(), giv.data(), side, cin, cout);
    check_close(gis, giv, tol);

    std::vector<double> gws(w.size(), 0.0), gwv(w.size(), 0.0), gbs(cout, 0.0),
        gbv(cout, 0.0);
    s.conv3x3_grad_params(in.data(), g.data(), gws.data(), gbs.data(), side, cin, cout);
    v.conv3x3_grad_params(in.data(), g.data(), gwv.data(), gbv.data(), side, cin, cout);
    check_close(gws, gwv, tol);
    check_close(gbs, gbv, tol);
  }
}

TEST_CASE("backend selection honors names and availability") {
  namespace k = arlp::kernels;
  k::select("scalar");
  CHECK(std::string(k::active().name) == "scalar");

  if (k::avx2_available()) {
    k::select("avx2");
    CHECK(std::string(k::active().name) == "avx2");
  } else {
    CHECK_THROWS_AS(k::select("avx2"), arlp::ConfigError);
  }

  CHECK_THROWS_AS(k::select("sse9"), arlp::ConfigError);

  k::select("auto");  // restore the default for any later test
  if (k::avx2_available())
    CHECK(std::string(k::active().name) == "avx2");
  else
    CHECK(std::string(k::active().name) == "scalar");
}
