#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sli/kernels.hpp"

using namespace sli::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return m;
}

}  // namespace

TEST_CASE("active table is one of the known tables") {
  const KernelTable& t = active();
  CHECK((t.name == scalar_table().name || (avx2_table() && t.name == avx2_table()->name)));
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  const KernelTable* fast = avx2_table();
  if (!fast) {
    MESSAGE("AVX2 not available; nothing to compare");
    return;
  }
  const KernelTable& ref = scalar_table();
  std::mt19937_64 rng(42);
  for (std::size_t rows : {1u, 2u, 3u, 4u, 5u, 7u, 9u, 33u, 98u, 128u}) {
    for (std::size_t cols : {1u, 3u, 4u, 5u, 7u, 8u, 14u, 33u, 98u, 129u}) {
      const auto w = random_vec(rows * cols, rng);
      const auto x = random_vec(cols, rng);
      const auto g = random_vec(rows, rng);
      const auto bias = random_vec(rows, rng);

      std::vector<double> y1(rows), y2(rows);
      ref.gemv(w.data(), rows, cols, x.data(), bias.data(), y1.data());
      fast->gemv(w.data(), rows, cols, x.data(), bias.data(), y2.data());
      CHECK(max_rel(y2, y1) < 1e-13);
      ref.gemv(w.data(), rows, cols, x.data(), nullptr, y1.data());
      fast->gemv(w.data(), rows, cols, x.data(), nullptr, y2.data());
      CHECK(max_rel(y2, y1) < 1e-13);

      std::vector<double> o1 = random_vec(cols, rng), o2 = o1;
      ref.gemv_t_acc(w.data(), rows, cols, g.data(), o1.data());
      fast->gemv_t_acc(w.data(), rows, cols, g.data(), o2.data());
      CHECK(max_rel(o2, o1) < 1e-13);

      std::vector<double> G1 = random_vec(rows * cols, rng), G2 = G1;
      ref.ger_acc(0.37, g.data(), rows, x.data(), cols, G1.data());
      fast->ger_acc(0.37, g.data(), rows, x.data(), cols, G2.data());
      CHECK(max_rel(G2, G1) < 1e-13);
    }
  }
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 15u, 16u, 17u, 98u, 1000u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    CHECK(std::abs(fast->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) < 1e-12);

    std::vector<double> y1 = b, y2 = b;
    ref.axpy(-0.7, a.data(), y1.data(), n);
    fast->axpy(-0.7, a.data(), y2.data(), n);
    CHECK(max_rel(y2, y1) < 1e-15);

    std::vector<double> t1 = b, t2 = b;
    ref.blend(0.999, t1.data(), a.data(), n);
    fast->blend(0.999, t2.data(), a.data(), n);
    CHECK(max_rel(t2, t1) < 1e-15);
  }
  std::normal_distribution<double> nd;
  for (std::size_t n : {1u, 2u, 3u, 5u, 33u, 65u}) {
    std::vector<cdouble> a(n * n), x(n), y1(n), y2(n);
    for (auto& v : a) v = {nd(rng), nd(rng)};
    for (auto& v : x) v = {nd(rng), nd(rng)};
    ref.cgemv(a.data(), n, x.data(), y1.data());
    fast->cgemv(a.data(), n, x.data(), y2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-12 * (1.0 + std::abs(y1[i])));
  }
}

TEST_CASE("scalar kernels match direct formulas") {
  const KernelTable& k = scalar_table();
  const double w[6] = {1, 2, 3, 4, 5, 6};  // 2 x 3
  const double x[3] = {1, -1, 2};
  const double b[2] = {0.5, -0.5};
  double y[2];
  k.gemv(w, 2, 3, x, b, y);
  CHECK(y[0] == doctest::Approx(1 - 2 + 6 + 0.5));
  CHECK(y[1] == doctest::Approx(4 - 5 + 12 - 0.5));
  double o[3] = {0, 0, 0};
  const double g[2] = {1, 2};
  k.gemv_t_acc(w, 2, 3, g, o);
  CHECK(o[0] == 9);
  CHECK(o[1] == 12);
  CHECK(o[2] == 15);
  double t[2] = {0, 0};
  const double on[2] = {1, 1};
  k.blend(0.999, t, on, 2);
  CHECK(t[0] == doctest::Approx(0.001).epsilon(1e-12));
  const cdouble a[4] = {{1, 0}, {0, 1}, {2, 0}, {0, -1}};  // columns (1, i), (2, -i)
  const cdouble v[2] = {{1, 0}, {0, 1}};
  cdouble r[2];
  k.cgemv(a, 2, v, r);
  CHECK(std::abs(r[0] - cdouble(1, 2)) < 1e-15);
  CHECK(std::abs(r[1] - cdouble(1, 1)) < 1e-15);
}
