#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bicameral/doppelganger.hpp"
#include "reference_model.hpp"

using namespace bicameral;

namespace {

LMConfig lm_config() {
  LMConfig c;
  c.vocab_size = 9;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 24;
  c.max_seq_len = 48;
  return c;
}

DoppelConfig doppel_config(std::size_t n = 2) {
  DoppelConfig c;
  c.d_shadow = 8;
  c.n_objectives = n;
  c.n_heads = 2;
  c.d_ff = 12;
  return c;
}

BicameralModel make_model(std::uint64_t seed, std::size_t n = 2) {
  LanguageModel lm(lm_config(), seed);
  lm.freeze();
  return BicameralModel(std::move(lm), Doppelganger(doppel_config(n), lm_config(), seed + 1));
}

TokenIds random_tokens(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(0, 8);
  TokenIds ids(n);
  for (auto& id : ids) id = d(rng);
  return ids;
}

void fill(Tensor& t, double v) {
  for (double& x : t.mutable_data()) x = v;
}

}  // namespace

TEST(DoppelConfigTest, Validation) {
  EXPECT_NO_THROW(doppel_config().validate());
  auto c = doppel_config();
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = doppel_config();
  c.n_objectives = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(DoppelForward, ZeroHeadGivesOneHalf) {
  auto bm = make_model(1, 3);
  fill(bm.doppel.head_weight(), 0.0);
  fill(bm.doppel.head_bias(), 0.0);
  const auto s = bm.score_prefixes({1, 2, 3, 4, 5});
  ASSERT_EQ(s.shape(), (Shape{5, 3}));
  for (double v : s.data()) EXPECT_EQ(v, 0.5);
}

TEST(DoppelForward, ScoresStrictlyInsideUnitInterval) {
  auto bm = make_model(2);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    const auto s = bm.score_prefixes(random_tokens(30, rng));
    for (double v : s.data()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(DoppelForward, MatchesLoopReference) {
  auto bm = make_model(4);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (auto& [name, t] : bm.doppel.parameters())
    for (double& v : t.mutable_data()) v += jitter(rng);

  const auto ids = random_tokens(17, rng);
  const auto out = bm.forward(ids);
  const auto ref_lm = reference::language(bm.language, ids);
  const auto ref = reference::doppel(bm.doppel, ref_lm.taps);
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(out.scores.at(t, i), ref[t][i], 1e-11);
}

// One shadow module of width 2 whose input is the constant row [1, 0]; every
// step of the shadow path then has a closed form.
TEST(DoppelForward, HandComputedConstantShadowPath) {
  LMConfig lc = lm_config();
  lc.n_layers = 1;
  LanguageModel lm(lc, 1);
  DoppelConfig dc;
  dc.d_shadow = 2;
  dc.n_objectives = 1;
  dc.n_heads = 1;
  dc.d_ff = 3;
  Doppelganger dm(dc, lc, 2);
  fill(dm.input_proj_weight(), 0.0);
  dm.input_proj_bias().mutable_data()[0] = 1.0;
  dm.input_proj_bias().mutable_data()[1] = 0.0;
  auto& fuse = dm.fusion()[0];
  fill(fuse.weight, 0.0);
  fuse.weight.mutable_data()[16 * 2 + 0] = 1.0;  // shadow row 0 -> column 0
  fuse.weight.mutable_data()[17 * 2 + 1] = 1.0;  // shadow row 1 -> column 1
  fill(fuse.bias, 0.0);
  auto& L = dm.layers()[0];
  fill(L.ff_w1, 0.0);
  fill(L.ff_b1, 0.0);
  fill(L.ff_w2, 0.0);
  fill(L.ff_b2, 0.0);
  fill(L.bo, 0.0);
  for (auto* w : {&L.wq[0], &L.wk[0], &L.wv[0], &L.wo[0]}) {
    fill(*w, 0.0);
    w->mutable_data()[0] = 1.0;
    w->mutable_data()[3] = 1.0;
  }
  dm.head_weight().mutable_data()[0] = 2.0;
  dm.head_weight().mutable_data()[1] = 0.0;
  dm.head_bias().mutable_data()[0] = 0.5;

  // LN1([1,0]) = u * [1,-1] with u = 0.5/sqrt(0.25+eps). Identical rows make
  // attention return that row, so h = [1+u, -u]; the FFN adds nothing.
  const double eps = 1e-5;
  const double u = 0.5 / std::sqrt(0.25 + eps);
  const double dev = 0.5 + u;
  const double normed = dev / std::sqrt(dev * dev + eps);
  const double expected = 1.0 / (1.0 + std::exp(-(2.0 * normed + 0.5)));

  BicameralModel bm(std::move(lm), std::move(dm));
  const auto s = bm.score_prefixes({3, 1, 4});
  for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(s.at(t, 0), expected, 1e-14);
}

TEST(DoppelForward, Causality) {
  auto bm = make_model(6);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto ids = random_tokens(25, rng);
    const auto base = bm.score_prefixes(ids);
    const std::size_t cut = 2 * trial;
    auto mutated = ids;
    for (std::size_t t = cut + 1; t < ids.size(); ++t) mutated[t] = (ids[t] + 1 + trial) % 9;
    const auto out = bm.score_prefixes(mutated);
    for (std::size_t t = 0; t <= cut; ++t)
      for (std::size_t i = 0; i < 2; ++i) ASSERT_EQ(out.at(t, i), base.at(t, i));
  }
}

TEST(DoppelForward, RejectsMismatchedTaps) {
  auto bm = make_model(1);
  auto taps = bm.language.forward({1, 2}).taps;
  auto short_taps = taps;
  short_taps.outputs.pop_back();
  EXPECT_THROW(bm.doppel.forward(short_taps), ShapeError);
  auto wide = taps;
  wide.outputs[1] = Tensor::zeros({2, 12});
  EXPECT_THROW(bm.doppel.forward(wide), ShapeError);

  LMConfig other = lm_config();
  other.n_layers = 3;
  EXPECT_THROW(BicameralModel(LanguageModel(other, 1), Doppelganger(doppel_config(), lm_config(), 2)),
               ShapeError);
}

TEST(ScorePrefixes, EqualsDoppelForwardOfTaps) {
  auto bm = make_model(8);
  const TokenIds ids{4, 4, 0, 8, 1};
  const auto direct = bm.doppel.forward(bm.language.forward(ids).taps);
  const auto s = bm.score_prefixes(ids);
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_EQ(s.data()[k], direct.data()[k]);
}

TEST(ScorePrefixes, SingleTokenAndDeterminism) {
  auto bm = make_model(9);
  const auto one = bm.score_prefixes({5});
  EXPECT_EQ(one.shape(), (Shape{1, 2}));
  const auto a = bm.score_prefixes({5, 6, 7});
  const auto b = bm.score_prefixes({5, 6, 7});
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.data()[k], b.data()[k]);
}

TEST(ScorePrefixes, OneLanguagePassServesLogitsAndScores) {
  auto bm = make_model(10);
  bm.language.reset_forward_passes();
  const auto out = bm.forward({1, 2, 3});
  EXPECT_EQ(bm.language.forward_passes(), 1u);
  EXPECT_EQ(out.logits.shape(), (Shape{3, 9}));
  EXPECT_EQ(out.scores.shape(), (Shape{3, 2}));
}

TEST(FrozenSeparation, ScoreLossLeavesNoLanguageGradients) {
  auto bm = make_model(11);
  const auto out = bm.forward({1, 2, 3, 4});
  auto loss = binary_cross_entropy(out.scores, Tensor::full({4, 2}, 1.0));
  loss.backward();
  for (const auto& t : bm.language.parameter_tensors()) {
    EXPECT_FALSE(t.requires_grad());
    EXPECT_FALSE(t.has_grad());
  }
  for (const auto& t : bm.doppel.parameter_tensors()) EXPECT_TRUE(t.has_grad());
}

TEST(DoppelSize, HalfWidthShadowIsSmallerThanLanguage) {
  LMConfig lc;  // default toy scale
  DoppelConfig dc;
  dc.d_shadow = lc.d_model / 2;
  LanguageModel lm(lc, 1);
  Doppelganger dm(dc, lc, 2);
  EXPECT_LT(dm.parameter_count(), lm.parameter_count());
}

TEST(DoppelInit, FusionShadowBlockIsNearIdentity) {
  Doppelganger dm(doppel_config(), lm_config(), 3);
  const auto& w = dm.fusion()[0].weight;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      EXPECT_NEAR(w.at(16 + i, j), i == j ? 1.0 : 0.0, 0.15);
}

TEST(DoppelClone, CopiesParametersBitwise) {
  Doppelganger dm(doppel_config(), lm_config(), 3);
  auto copy = dm.clone();
  EXPECT_EQ(copy.checksum(), dm.checksum());
  copy.head_bias().mutable_data()[0] = 3.0;
  EXPECT_NE(copy.checksum(), dm.checksum());
}

TEST(BicameralGradcheck, PassesOnTwoLayerModel) {
  for (const auto& r : gradcheck_bicameral(1)) {
    EXPECT_TRUE(r.passed) << r.name << " max rel " << r.max_rel_error;
    EXPECT_GT(r.checked, 0u);
  }
}
