#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.h"
#include "rwt/ad/ops.h"
#include "rwt/model/grad_suite.h"
#include "rwt/model/resrnn.h"

using namespace rwt;
using ad::Tensor;
using model::ResRNNConfig;
using model::Variant;
using testing::RandomTensor;

namespace {

std::vector<double> Values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Random biases too, so no path is trivially zero.
model::ResRNNParams RandomParams(const ResRNNConfig& cfg, std::uint64_t seed) {
  auto p = model::InitParams(cfg, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& n : p.Named()) {
    if (!n.is_weight) {
      for (double& v : n.tensor.data()) v = u(rng);
    }
  }
  return p;
}

Tensor Frames(const ResRNNConfig& cfg, std::mt19937_64& rng) {
  return RandomTensor({cfg.frames, 1, cfg.input_size, cfg.input_size}, rng, 0, 1);
}

void ZeroCell(nn::LSTMCellParams& c) {
  for (Tensor t : {c.w_xi, c.w_xf, c.w_xo, c.w_xc, c.w_hi, c.w_hf, c.w_ho, c.w_hc, c.b_i, c.b_f,
                   c.b_o, c.b_c}) {
    for (double& v : t.data()) v = 0.0;
  }
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("default chain flattens to 1152") {
    const ResRNNConfig cfg;
    CHECK(cfg.FeatureShape() == std::array<std::size_t, 3>{32, 6, 6});
    CHECK(cfg.FlattenDim() == 1152);
    CHECK_NOTHROW(cfg.Validate());
  }

  TEST_CASE("hidden widths are forced") {
    ResRNNConfig cfg;
    cfg.temporal_hidden = 5;
    CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
    cfg = ResRNNConfig();
    cfg.spatial_hidden = 6;
    CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
  }

  TEST_CASE("inconsistent conv chain is rejected") {
    ResRNNConfig cfg;
    cfg.input_size = 20;
    CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
  }

  TEST_CASE("variant names round-trip") {
    for (Variant v : model::kAllVariants) CHECK(model::ParseVariant(model::VariantName(v)) == v);
    CHECK_THROWS_AS(model::ParseVariant("lstm"), std::invalid_argument);
  }

  TEST_CASE("params must match the config") {
    const auto cfg = ResRNNConfig::Toy();
    auto p = model::InitParams(cfg, 1);
    CHECK_NOTHROW(p.Validate(cfg));
    p.fc2 = nn::FCParams{Tensor({3, 5}), Tensor({3})};
    CHECK_THROWS_AS(p.Validate(cfg), std::invalid_argument);
  }
}

TEST_SUITE("cnn path") {
  TEST_CASE("zero frame with zero biases embeds to zero") {
    const auto cfg = ResRNNConfig::Toy();
    const auto p = model::InitParams(cfg, 3);
    const Tensor e = model::CnnEmbed(p, cfg, Tensor({1, cfg.input_size, cfg.input_size}));
    CHECK(e.shape() == ad::Shape{cfg.embed_dim});
    CHECK(Values(e) == std::vector<double>(cfg.embed_dim, 0.0));
  }

  TEST_CASE("identical frames embed identically; batch rows equal single frames") {
    const auto cfg = ResRNNConfig::Toy();
    const auto p = RandomParams(cfg, 4);
    std::mt19937_64 rng(5);
    const Tensor frames = Frames(cfg, rng);
    const Tensor batch = model::CnnEmbed(p, cfg, frames);
    for (std::size_t f = 0; f < cfg.frames; ++f) {
      const Tensor one = ad::Reshape(ad::SliceRows(frames, f, 1), {1, cfg.input_size, cfg.input_size});
      const auto e1 = Values(model::CnnEmbed(p, cfg, one));
      const auto e2 = Values(model::CnnEmbed(p, cfg, one));
      CHECK(e1 == e2);
      for (std::size_t k = 0; k < cfg.embed_dim; ++k) {
        CHECK(e1[k] == doctest::Approx(batch.at(f * cfg.embed_dim + k)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("embedding reacts to a conv1 perturbation") {
    const auto cfg = ResRNNConfig::Toy();
    auto p = RandomParams(cfg, 6);
    std::mt19937_64 rng(7);
    const Tensor frame = RandomTensor({1, cfg.input_size, cfg.input_size}, rng, 0, 1);
    for (std::size_t i = 0; i < p.conv[0].kernels.size(); ++i) {
      const auto before = Values(model::CnnEmbed(p, cfg, frame));
      p.conv[0].kernels.data()[i] += 1e-2;
      const auto after = Values(model::CnnEmbed(p, cfg, frame));
      p.conv[0].kernels.data()[i] -= 1e-2;
      CHECK(before != after);
    }
  }

  TEST_CASE("fc2 estimator") {
    const auto cfg = ResRNNConfig::Toy();
    auto p = RandomParams(cfg, 8);
    for (double& v : p.fc2.weight.data()) v = 0.0;
    std::mt19937_64 rng(9);
    CHECK(Values(model::CnnEstimate(p, RandomTensor({cfg.embed_dim}, rng))) == Values(p.fc2.bias));
    for (std::size_t r = 0; r < cfg.regions; ++r) p.fc2.weight.data()[r * cfg.embed_dim + r] = 1.0;
    for (double& v : p.fc2.bias.data()) v = 0.0;
    const Tensor e = RandomTensor({cfg.embed_dim}, rng);
    const auto y = Values(model::CnnEstimate(p, e));
    for (std::size_t r = 0; r < cfg.regions; ++r) CHECK(y[r] == e.at(r));
    CHECK_THROWS_AS(model::CnnEstimate(p, Tensor({cfg.embed_dim + 1})), std::invalid_argument);
  }

  TEST_CASE("wrong frame size is rejected") {
    const auto cfg = ResRNNConfig::Toy();
    const auto p = model::InitParams(cfg, 1);
    CHECK_THROWS_AS(model::CnnEmbed(p, cfg, Tensor({1, 9, 9})), std::invalid_argument);
  }
}

TEST_SUITE("rnn path") {
  TEST_CASE("zero cells give a zero residual") {
    auto cfg = ResRNNConfig::Toy();
    cfg.variant = Variant::kResRnnCircle;
    auto p = model::InitParams(cfg, 10, nn::InitScheme::kZero);
    std::mt19937_64 rng(11);
    const Tensor e = RandomTensor({cfg.frames, cfg.embed_dim}, rng);
    CHECK(Values(model::RnnResidual(p, cfg, e)) == std::vector<double>(cfg.frames * cfg.regions, 0.0));
  }

  TEST_CASE("a zero spatial cell annihilates the residual") {
    auto cfg = ResRNNConfig::Toy();
    auto p = RandomParams(cfg, 12);
    ZeroCell(p.spatial);
    std::mt19937_64 rng(13);
    const Tensor e = RandomTensor({cfg.frames, cfg.embed_dim}, rng);
    CHECK(Values(model::RnnResidual(p, cfg, e)) == std::vector<double>(cfg.frames * cfg.regions, 0.0));
  }

  TEST_CASE("composition of two scalar-oracle runners") {
    // F = 3, L = 2 with diagonal-free cells expressed as explicit loops.
    auto cfg = ResRNNConfig::Toy();
    cfg.variant = Variant::kRnnCircle;
    const auto p = RandomParams(cfg, 14);
    std::mt19937_64 rng(15);
    const Tensor e = RandomTensor({cfg.frames, cfg.embed_dim}, rng);

    // Loop implementation of one runner: inputs [T x in] -> [T x H].
    auto run = [](const nn::LSTMCellParams& c, const std::vector<std::vector<double>>& xs, int depth) {
      const std::size_t H = c.hidden_dim(), I = c.input_dim();
      std::vector<double> h(H, 0.0), cs(H, 0.0);
      std::vector<std::vector<double>> out(xs.size());
      auto mv = [&](const Tensor& w, const std::vector<double>& v, std::size_t r, std::size_t n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += w.at(r * n + k) * v[k];
        return acc;
      };
      for (int pass = 0; pass < depth; ++pass) {
        for (std::size_t t = 0; t < xs.size(); ++t) {
          std::vector<double> hn(H), cn(H);
          for (std::size_t r = 0; r < H; ++r) {
            const double i = testing::Sig(mv(c.w_xi, xs[t], r, I) + mv(c.w_hi, h, r, H) + c.b_i.at(r));
            const double f = testing::Sig(mv(c.w_xf, xs[t], r, I) + mv(c.w_hf, h, r, H) + c.b_f.at(r));
            const double o = testing::Sig(mv(c.w_xo, xs[t], r, I) + mv(c.w_ho, h, r, H) + c.b_o.at(r));
            const double g = std::tanh(mv(c.w_xc, xs[t], r, I) + mv(c.w_hc, h, r, H) + c.b_c.at(r));
            cn[r] = f * cs[r] + i * g;
            hn[r] = o * std::tanh(cn[r]);
          }
          h = hn;
          cs = cn;
          out[t] = h;
        }
      }
      return out;
    };
    std::vector<std::vector<double>> frames(cfg.frames);
    for (std::size_t f = 0; f < cfg.frames; ++f) {
      frames[f].assign(e.data().begin() + f * cfg.embed_dim, e.data().begin() + (f + 1) * cfg.embed_dim);
    }
    const auto temporal = run(p.temporal, frames, cfg.temporal_depth);  // F x L
    std::vector<std::vector<double>> regions(cfg.regions, std::vector<double>(cfg.frames));
    for (std::size_t f = 0; f < cfg.frames; ++f)
      for (std::size_t l = 0; l < cfg.regions; ++l) regions[l][f] = temporal[f][l];
    const auto spatial = run(p.spatial, regions, cfg.spatial_depth);  // L x F
    const auto got = Values(model::RnnResidual(p, cfg, e));
    for (std::size_t f = 0; f < cfg.frames; ++f)
      for (std::size_t l = 0; l < cfg.regions; ++l)
        CHECK(got[f * cfg.regions + l] == doctest::Approx(spatial[l][f]).epsilon(1e-13));
  }

  TEST_CASE("wrong embedding count is rejected") {
    const auto cfg = ResRNNConfig::Toy();
    const auto p = model::InitParams(cfg, 1);
    CHECK_THROWS_AS(model::RnnResidual(p, cfg, Tensor({cfg.frames + 1, cfg.embed_dim})), std::invalid_argument);
  }
}

TEST_SUITE("forward") {
  TEST_CASE("residual decomposition holds for both ResRNN variants") {
    std::mt19937_64 rng(16);
    for (Variant v : {Variant::kResRnnPlain, Variant::kResRnnCircle}) {
      auto cfg = ResRNNConfig::Toy();
      cfg.variant = v;
      const auto p = RandomParams(cfg, 17);
      const Tensor frames = Frames(cfg, rng);
      auto cnn_cfg = cfg;
      cnn_cfg.variant = Variant::kCnn;
      const auto full = Values(model::Forward(p, cfg, frames));
      const auto cnn = Values(model::Forward(p, cnn_cfg, frames));
      const auto rnn = Values(model::RnnResidual(p, cfg, model::CnnEmbed(p, cfg, frames)));
      for (std::size_t k = 0; k < full.size(); ++k) CHECK(std::abs(full[k] - (cnn[k] + rnn[k])) <= 1e-12);
      const auto parts = model::ForwardDetailed(p, cfg, frames);
      CHECK(Values(parts.output) == full);
    }
  }

  TEST_CASE("zero RNN cells make ResRNN equal to CNN") {
    auto cfg = ResRNNConfig::Toy();
    auto p = RandomParams(cfg, 18);
    ZeroCell(p.temporal);
    ZeroCell(p.spatial);
    std::mt19937_64 rng(19);
    const Tensor frames = Frames(cfg, rng);
    auto cnn_cfg = cfg;
    cnn_cfg.variant = Variant::kCnn;
    CHECK(Values(model::Forward(p, cfg, frames)) == Values(model::Forward(p, cnn_cfg, frames)));
  }

  TEST_CASE("RNN-only variants ignore fc2") {
    auto cfg = ResRNNConfig::Toy();
    cfg.variant = Variant::kRnnCircle;
    auto p = RandomParams(cfg, 20);
    std::mt19937_64 rng(21);
    const Tensor frames = Frames(cfg, rng);
    const auto before = Values(model::Forward(p, cfg, frames));
    for (double& v : p.fc2.weight.data()) v += 1.0;
    CHECK(Values(model::Forward(p, cfg, frames)) == before);
  }

  TEST_CASE("batched subjects are independent and permute with the input") {
    auto cfg = ResRNNConfig::Toy();
    const auto p = RandomParams(cfg, 22);
    std::mt19937_64 rng(23);
    const std::vector<Tensor> seqs{Frames(cfg, rng), Frames(cfg, rng), Frames(cfg, rng)};
    const auto out = model::ForwardBatch(p, cfg, seqs);
    const auto swapped = model::ForwardBatch(p, cfg, {seqs[2], seqs[0], seqs[1]});
    for (std::size_t s = 0; s < 3; ++s) {
      const auto single = Values(model::Forward(p, cfg, seqs[s]));
      const auto batched = Values(out[s]);
      for (std::size_t k = 0; k < single.size(); ++k) CHECK(batched[k] == doctest::Approx(single[k]).epsilon(1e-13));
    }
    CHECK(Values(swapped[0]) == Values(out[2]));
    CHECK(Values(swapped[1]) == Values(out[0]));
  }

  TEST_CASE("forward is pure") {
    const auto cfg = ResRNNConfig::Toy();
    const auto p = RandomParams(cfg, 24);
    std::mt19937_64 rng(25);
    const Tensor frames = Frames(cfg, rng);
    CHECK(Values(model::Forward(p, cfg, frames)) == Values(model::Forward(p, cfg, frames)));
  }

  TEST_CASE("temporal-only variant returns the temporal runner output") {
    auto cfg = ResRNNConfig::Toy();
    cfg.variant = Variant::kRnnCircle;
    cfg.spatial_rnn = false;
    const auto p = RandomParams(cfg, 26);
    std::mt19937_64 rng(27);
    const Tensor frames = Frames(cfg, rng);
    const Tensor e = model::CnnEmbed(p, cfg, frames);
    CHECK(Values(model::Forward(p, cfg, frames)) ==
          Values(nn::RnnRunCircle(p.temporal, e, {cfg.temporal_depth})));
  }

  TEST_CASE("wrong frame count is rejected") {
    const auto cfg = ResRNNConfig::Toy();
    const auto p = model::InitParams(cfg, 1);
    CHECK_THROWS_AS(model::Forward(p, cfg, Tensor({cfg.frames + 1, 1, cfg.input_size, cfg.input_size})),
                    std::invalid_argument);
  }

  TEST_CASE("full-model gradient check on the toy config") {
    for (const auto& r : model::ModelGradCheck(ResRNNConfig::Toy(), 31, 1e-5)) {
      INFO(r.variant << " worst " << r.worst_param << " err " << r.result.max_rel_error);
      CHECK(r.result.Passed(1e-4));
    }
  }

  TEST_CASE("clone is deep and slots follow Named order") {
    const auto cfg = ResRNNConfig::Toy();
    auto p = model::InitParams(cfg, 2);
    auto q = p.Clone();
    q.fc1.weight.data()[0] += 1.0;
    CHECK(p.fc1.weight.at(0) != q.fc1.weight.at(0));
    const auto named = p.Named();
    const auto slots = p.Slots();
    REQUIRE(named.size() == slots.size());
    for (std::size_t i = 0; i < named.size(); ++i) CHECK(named[i].tensor.SameStorage(*slots[i]));
  }
}
