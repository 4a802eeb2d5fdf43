#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.h"
#include "rwt/ad/grad_check.h"
#include "rwt/ad/ops.h"
#include "rwt/ad/tape.h"

using namespace rwt;
using ad::Tensor;
using testing::RandomTensor;

namespace {

std::vector<double> Values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Gradient of loss() w.r.t. x via the tape.
std::vector<double> TapeGrad(Tensor x, const std::function<Tensor()>& loss) {
  x.set_requires_grad(true);
  x.clear_grad();
  {
    ad::Tape tape;
    ad::Tape::Scope scope(tape);
    tape.Backward(loss());
  }
  std::vector<double> g(x.grad().begin(), x.grad().end());
  x.clear_grad();
  x.set_requires_grad(false);
  return g;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("shape and data length agree") {
    Tensor t({2, 3, 4}, 1.5);
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.dim(2) == 4);
    CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor(ad::Shape{}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
  }

  TEST_CASE("copies share storage, clone does not") {
    Tensor a({2}, 1.0);
    Tensor b = a;
    Tensor c = a.Clone();
    b.data()[0] = 7.0;
    CHECK(a.at(0) == 7.0);
    CHECK(c.at(0) == 1.0);
    CHECK(a.SameStorage(b));
    CHECK_FALSE(a.SameStorage(c));
  }

  TEST_CASE("gradient buffer matches the data shape") {
    Tensor a({3, 2});
    a.set_requires_grad(true);
    CHECK_FALSE(a.has_grad());
    CHECK(a.mutable_grad().size() == a.size());
    CHECK(a.has_grad());
  }
}

TEST_SUITE("matmul") {
  TEST_CASE("identity times matrix") {
    const Tensor eye = Tensor::FromRows({{1, 0}, {0, 1}});
    const Tensor m = Tensor::FromRows({{1, 2}, {3, 4}});
    CHECK(Values(ad::MatMul(eye, m)) == Values(m));
  }

  TEST_CASE("row by column") {
    const Tensor c = ad::MatMul(Tensor::FromRows({{1, 2}}), Tensor::FromRows({{3}, {4}}));
    CHECK(c.shape() == ad::Shape{1, 1});
    CHECK(c.item() == 11.0);
  }

  TEST_CASE("matches a loop product and rejects bad shapes") {
    std::mt19937_64 rng(1);
    const Tensor a = RandomTensor({3, 4}, rng), b = RandomTensor({4, 5}, rng);
    const auto want = testing::LoopMatMul(Values(a), Values(b), 3, 4, 5);
    const auto got = Values(ad::MatMul(a, b));
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
    CHECK_THROWS_AS(ad::MatMul(a, a), std::invalid_argument);
  }

  TEST_CASE("gradient matches finite differences") {
    std::mt19937_64 rng(2);
    std::vector<Tensor> ps{RandomTensor({3, 4}, rng), RandomTensor({4, 2}, rng)};
    const Tensor w = RandomTensor({3, 2}, rng);
    const auto r = ad::GradCheck([&] { return ad::Sum(ad::Mul(ad::MatMul(ps[0], ps[1]), w)); },
                                 ps, 1e-6);
    CHECK(r.Passed(1e-6));
  }
}

TEST_SUITE("conv2d") {
  TEST_CASE("unit kernel is the identity") {
    std::mt19937_64 rng(3);
    const Tensor x = RandomTensor({1, 3, 3}, rng);
    const Tensor k({1, 1, 1, 1}, 1.0);
    const Tensor y = ad::Conv2d(x, k, {1, 0});
    CHECK(y.shape() == ad::Shape{1, 3, 3});
    CHECK(Values(y) == Values(x));
  }

  TEST_CASE("ramp with 2x2 ones kernel, stride 2") {
    std::vector<double> ramp(16);
    for (int i = 0; i < 16; ++i) ramp[i] = i;
    const Tensor x({1, 4, 4}, ramp);
    const Tensor k({1, 1, 2, 2}, 1.0);
    const Tensor y = ad::Conv2d(x, k, {2, 0});
    CHECK(Values(y) == std::vector<double>{10, 18, 42, 50});
    CHECK(Values(y) == testing::LoopConv(ramp, 1, 4, 4, Values(k), 1, 2, 2, 2, 0));
  }

  TEST_CASE("matches direct loops for strides and padding") {
    std::mt19937_64 rng(4);
    for (std::size_t stride : {1, 2, 3}) {
      for (std::size_t pad : {0, 1, 2}) {
        const Tensor x = RandomTensor({2, 7, 6}, rng);
        const Tensor k = RandomTensor({3, 2, 3, 2}, rng);
        const auto want = testing::LoopConv(Values(x), 2, 7, 6, Values(k), 3, 3, 2, stride, pad);
        const auto got = Values(ad::Conv2d(x, k, {stride, pad}));
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("batched input equals per-sample convolution plus bias") {
    std::mt19937_64 rng(5);
    const Tensor x = RandomTensor({3, 2, 5, 5}, rng);
    const Tensor k = RandomTensor({4, 2, 3, 3}, rng);
    const Tensor b = RandomTensor({4}, rng);
    const auto got = Values(ad::Conv2d(x, k, b, {1, 1}));
    const std::size_t plane = 2 * 25, out_plane = 4 * 25;
    for (std::size_t n = 0; n < 3; ++n) {
      std::vector<double> xs(x.data().begin() + n * plane, x.data().begin() + (n + 1) * plane);
      const auto want = testing::LoopConv(xs, 2, 5, 5, Values(k), 4, 3, 3, 1, 1);
      for (std::size_t i = 0; i < out_plane; ++i) {
        CHECK(got[n * out_plane + i] == doctest::Approx(want[i] + b.at(i / 25)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("kernel larger than padded input is rejected") {
    CHECK_THROWS_AS(ad::Conv2d(Tensor({1, 2, 2}), Tensor({1, 1, 3, 3}), {1, 0}),
                    std::invalid_argument);
    CHECK_NOTHROW(ad::Conv2d(Tensor({1, 2, 2}), Tensor({1, 1, 3, 3}), {1, 1}));
    CHECK_THROWS_AS(ad::Conv2d(Tensor({2, 4, 4}), Tensor({1, 1, 3, 3}), {1, 0}),
                    std::invalid_argument);
  }

  TEST_CASE("gradients w.r.t. input, kernels and bias") {
    std::mt19937_64 rng(6);
    std::vector<Tensor> ps{RandomTensor({2, 6, 5}, rng), RandomTensor({3, 2, 3, 3}, rng),
                           RandomTensor({3}, rng)};
    const Tensor w = RandomTensor({3, 3, 3}, rng);
    const auto r = ad::GradCheck(
        [&] { return ad::Sum(ad::Mul(ad::Conv2d(ps[0], ps[1], ps[2], {2, 1}), w)); }, ps, 1e-6);
    CHECK(r.Passed(1e-5));
    std::vector<Tensor> plain{ps[0], ps[1]};
    CHECK(ad::GradCheck([&] { return ad::Sum(ad::Conv2d(plain[0], plain[1], {1, 0})); }, plain,
                        1e-6)
              .Passed(1e-5));
  }
}

TEST_SUITE("maxpool2") {
  TEST_CASE("single window") {
    CHECK(ad::MaxPool2(Tensor({1, 2, 2}, {1, 2, 3, 4})).item() == 4.0);
  }

  TEST_CASE("odd extents drop the trailing row and column") {
    CHECK(ad::MaxPool2(Tensor({2, 5, 7})).shape() == ad::Shape{2, 2, 3});
    CHECK(ad::MaxPool2(Tensor({1, 3, 3})).shape() == ad::Shape{1, 1, 1});
    CHECK_THROWS_AS(ad::MaxPool2(Tensor({1, 1, 4})), std::invalid_argument);
  }

  TEST_CASE("constant input routes gradient to the first element of each window") {
    const Tensor x({1, 4, 4}, 2.0);
    const auto g = TapeGrad(x, [&] { return ad::Sum(ad::MaxPool2(x)); });
    const std::vector<double> want{1, 0, 1, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0};
    CHECK(g == want);
    CHECK(Values(ad::MaxPool2(x)) == std::vector<double>(4, 2.0));
  }

  TEST_CASE("forward and backward match a window scan") {
    std::mt19937_64 rng(7);
    const Tensor x = RandomTensor({1, 6, 6}, rng);
    const Tensor w = RandomTensor({1, 3, 3}, rng);
    const auto y = Values(ad::MaxPool2(x));
    const auto g = TapeGrad(x, [&] { return ad::Sum(ad::Mul(ad::MaxPool2(x), w)); });
    std::vector<double> want_g(36, 0.0);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        int best = -1;
        double m = -1e300;
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v) {
            const int idx = (2 * i + u) * 6 + 2 * j + v;
            if (x.at(idx) > m) {
              m = x.at(idx);
              best = idx;
            }
          }
        CHECK(y[i * 3 + j] == m);
        want_g[best] += w.at(i * 3 + j);
      }
    }
    CHECK(g == want_g);
  }
}

TEST_SUITE("activations and elementwise") {
  TEST_CASE("fixed points") {
    const Tensor z({1}, 0.0);
    CHECK(ad::Sigmoid(z).item() == 0.5);
    CHECK(ad::Tanh(z).item() == 0.0);
    CHECK(ad::Relu(Tensor({1}, -3.0)).item() == 0.0);
  }

  TEST_CASE("ranges") {
    std::mt19937_64 rng(8);
    const Tensor x = RandomTensor({200}, rng, -30, 30);
    const Tensor s = ad::Sigmoid(x), t = ad::Tanh(ad::Scale(x, 0.1)), r = ad::Relu(x);
    for (double v : s.data()) CHECK((v > 0.0 && v < 1.0));
    for (double v : t.data()) CHECK((v > -1.0 && v < 1.0));
    for (double v : r.data()) CHECK(v >= 0.0);
  }

  TEST_CASE("activation gradients at random points") {
    std::mt19937_64 rng(9);
    for (auto kind : {ad::Activation::kSigmoid, ad::Activation::kTanh, ad::Activation::kRelu}) {
      for (int trial = 0; trial < 10; ++trial) {
        Tensor x = RandomTensor({5}, rng, -2, 2);
        // Keep relu away from its kink.
        for (double& v : x.data()) v = std::copysign(std::max(std::abs(v), 0.1), v);
        const auto r = ad::GradCheck([&](const Tensor& p) { return ad::Sum(ad::Activate(p, kind)); },
                                     x, 1e-6);
        CHECK(r.Passed(1e-7));
      }
    }
  }

  TEST_CASE("identities") {
    std::mt19937_64 rng(10);
    const Tensor a = RandomTensor({3, 4}, rng);
    CHECK(Values(ad::Mul(a, Tensor::Ones({3, 4}))) == Values(a));
    CHECK(Values(ad::Add(a, Tensor::Zeros({3, 4}))) == Values(a));
    CHECK_THROWS_AS(ad::Add(a, Tensor({4, 3})), std::invalid_argument);
    CHECK_THROWS_AS(ad::AddBias(a, Tensor({3})), std::invalid_argument);
  }

  TEST_CASE("elementwise and bias gradients") {
    std::mt19937_64 rng(11);
    std::vector<Tensor> ps{RandomTensor({3, 4}, rng), RandomTensor({3, 4}, rng),
                           RandomTensor({4}, rng)};
    const auto r = ad::GradCheck(
        [&] {
          return ad::Sum(ad::Mul(ad::AddBias(ad::Add(ps[0], ps[1]), ps[2]),
                                 ad::Sub(ad::Mul(ps[0], ps[1]), ad::Scale(ps[1], 0.3))));
        },
        ps, 1e-6);
    CHECK(r.Passed(1e-7));
  }
}

TEST_SUITE("restructure") {
  TEST_CASE("transpose is an involution") {
    std::mt19937_64 rng(12);
    const Tensor x = RandomTensor({6, 20}, rng);
    CHECK(ad::Transpose2d(x).shape() == ad::Shape{20, 6});
    CHECK(Values(ad::Transpose2d(ad::Transpose2d(x))) == Values(x));
  }

  TEST_CASE("reshape keeps row-major order") {
    const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor y = ad::Reshape(x, {3, 2});
    CHECK(y.shape() == ad::Shape{3, 2});
    CHECK(Values(y) == Values(x));
    CHECK_THROWS_AS(ad::Reshape(x, {4, 2}), std::invalid_argument);
  }

  TEST_CASE("concat then slice round-trips") {
    std::mt19937_64 rng(13);
    std::vector<Tensor> parts{RandomTensor({2, 5}, rng), RandomTensor({1, 5}, rng),
                              RandomTensor({3, 5}, rng)};
    const Tensor all = ad::ConcatRows(parts);
    CHECK(all.shape() == ad::Shape{6, 5});
    CHECK(Values(ad::SliceRows(all, 0, 2)) == Values(parts[0]));
    CHECK(Values(ad::SliceRow(all, 2)) == Values(parts[1]));
    CHECK(Values(ad::SliceRows(all, 3, 3)) == Values(parts[2]));
    CHECK_THROWS_AS(ad::SliceRows(all, 4, 3), std::invalid_argument);
    CHECK_THROWS_AS(ad::SliceRow(all, 6), std::invalid_argument);
  }

  TEST_CASE("data movement gradients") {
    std::mt19937_64 rng(14);
    std::vector<Tensor> ps{RandomTensor({2, 3}, rng), RandomTensor({4, 3}, rng)};
    const Tensor w = RandomTensor({3, 5}, rng);
    const auto r = ad::GradCheck(
        [&] {
          const Tensor cat = ad::ConcatRows(ps);
          const Tensor t = ad::Transpose2d(ad::SliceRows(cat, 1, 5));
          return ad::Sum(ad::Mul(ad::Reshape(t, {3, 5}), w));
        },
        ps, 1e-6);
    CHECK(r.Passed(1e-7));
  }
}

TEST_SUITE("backward") {
  TEST_CASE("sum gives ones, sum of squares gives 2a") {
    std::mt19937_64 rng(15);
    const Tensor a = RandomTensor({7}, rng);
    CHECK(TapeGrad(a, [&] { return ad::Sum(a); }) == std::vector<double>(7, 1.0));
    const auto g = TapeGrad(a, [&] { return ad::Sum(ad::Mul(a, a)); });
    for (std::size_t i = 0; i < 7; ++i) CHECK(g[i] == 2.0 * a.at(i));
  }

  TEST_CASE("using a tensor twice sums the single-use gradients") {
    std::mt19937_64 rng(16);
    const Tensor a = RandomTensor({4}, rng);
    const Tensor u = RandomTensor({4}, rng), v = RandomTensor({4}, rng);
    const auto g1 = TapeGrad(a, [&] { return ad::Sum(ad::Mul(a, u)); });
    const auto g2 = TapeGrad(a, [&] { return ad::Sum(ad::Mul(a, v)); });
    const auto both = TapeGrad(a, [&] { return ad::Add(ad::Sum(ad::Mul(a, u)), ad::Sum(ad::Mul(a, v))); });
    for (std::size_t i = 0; i < 4; ++i) CHECK(both[i] == g1[i] + g2[i]);
  }

  TEST_CASE("non-scalar loss is rejected") {
    Tensor a({3}, 1.0);
    a.set_requires_grad(true);
    ad::Tape tape;
    ad::Tape::Scope scope(tape);
    CHECK_THROWS_AS(tape.Backward(ad::Scale(a, 2.0)), std::invalid_argument);
  }

  TEST_CASE("no recording without an active tape or under NoGradScope") {
    Tensor a({2}, 1.0);
    a.set_requires_grad(true);
    CHECK_FALSE(ad::Scale(a, 2.0).requires_grad());
    ad::Tape tape;
    ad::Tape::Scope scope(tape);
    CHECK(ad::Scale(a, 2.0).requires_grad());
    {
      ad::NoGradScope off;
      CHECK_FALSE(ad::Scale(a, 2.0).requires_grad());
    }
    CHECK(tape.size() == 1);
  }

  TEST_CASE("forward is deterministic") {
    std::mt19937_64 rng(17);
    const Tensor x = RandomTensor({2, 9, 9}, rng), k = RandomTensor({3, 2, 3, 3}, rng);
    CHECK(Values(ad::MaxPool2(ad::Conv2d(x, k, {1, 1}))) ==
          Values(ad::MaxPool2(ad::Conv2d(x, k, {1, 1}))));
  }
}

TEST_SUITE("grad_check") {
  TEST_CASE("sum of squares") {
    std::mt19937_64 rng(18);
    const auto r = ad::GradCheck([](const Tensor& p) { return ad::Sum(ad::Mul(p, p)); },
                                 RandomTensor({6}, rng), 1e-5);
    CHECK(r.max_rel_error < 1e-9);
  }

  TEST_CASE("sigmoid chain") {
    std::mt19937_64 rng(19);
    const auto r = ad::GradCheck(
        [](const Tensor& p) { return ad::Sum(ad::Sigmoid(ad::Scale(ad::Sigmoid(ad::Mul(p, p)), 3.0))); },
        RandomTensor({6}, rng), 1e-6);
    CHECK(r.max_rel_error < 1e-6);
  }

  TEST_CASE("relu away from the kink") {
    std::mt19937_64 rng(20);
    Tensor x = RandomTensor({8}, rng, 0.1, 1.0);
    for (std::size_t i = 0; i < 8; i += 2) x.data()[i] = -x.data()[i];
    const auto r = ad::GradCheck([](const Tensor& p) { return ad::Sum(ad::Mul(ad::Relu(p), p)); },
                                 x, 1e-6);
    CHECK(r.max_rel_error < 1e-6);
  }

  TEST_CASE("a wrong backward rule is detected") {
    // Detaching one factor halves the analytic gradient of p^2.
    Tensor x({3}, {0.5, -0.2, 0.9});
    const auto r = ad::GradCheck(
        [](const Tensor& p) { return ad::Sum(ad::Mul(p, p.Detach())); }, x, 1e-6);
    CHECK_FALSE(r.Passed(1e-4));
  }

  TEST_CASE("non-finite differences are reported") {
    Tensor x({1}, 1.0);
    const auto r = ad::GradCheck(
        [](const Tensor& p) { return ad::Scale(ad::Sum(p), std::numeric_limits<double>::infinity()); },
        x, 1e-6);
    CHECK_FALSE(r.finite);
    CHECK_FALSE(r.Passed(1.0));
  }
}
