#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "bicameral/errors.hpp"
#include "bicameral/language_model.hpp"
#include "reference_model.hpp"

using namespace bicameral;

namespace {

LMConfig small_config() {
  LMConfig c;
  c.vocab_size = 11;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 24;
  c.max_seq_len = 40;
  return c;
}

TokenIds random_tokens(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(0, static_cast<std::int64_t>(vocab) - 1);
  TokenIds ids(n);
  for (auto& id : ids) id = d(rng);
  return ids;
}

void set(Tensor& t, std::vector<double> values) {
  auto d = t.mutable_data();
  ASSERT_EQ(d.size(), values.size());
  std::copy(values.begin(), values.end(), d.begin());
}

void fill(Tensor& t, double v) {
  for (double& x : t.mutable_data()) x = v;
}

std::vector<double> identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return v;
}

}  // namespace

TEST(PositionalEncoding, PositionZeroAddsSinZeroCosOne) {
  auto pe = positional_encoding(1, 6);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(pe.at(0, j), j % 2 == 0 ? 0.0 : 1.0);
}

TEST(PositionalEncoding, TwoDimsPositionOne) {
  auto pe = positional_encoding(2, 2);
  // sin(1), cos(1) to 20 digits.
  EXPECT_NEAR(pe.at(1, 0), 0.84147098480789650665, 1e-16);
  EXPECT_NEAR(pe.at(1, 1), 0.54030230586813971740, 1e-16);
}

TEST(PositionalEncoding, IndependentOfTokens) {
  auto a = positional_encode(Tensor::zeros({3, 4}), 8);
  auto b = positional_encode(Tensor::full({3, 4}, 2.0), 8);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(b.at(i, j) - a.at(i, j), 2.0, 1e-15);
}

TEST(PositionalEncoding, TooLongThrows) {
  EXPECT_THROW(positional_encode(Tensor::zeros({9, 4}), 8), std::length_error);
}

TEST(LMConfigTest, Validation) {
  LMConfig c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.vocab_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(LanguageForward, ShapesForSingleToken) {
  LanguageModel lm(small_config(), 1);
  auto out = lm.forward({3});
  EXPECT_EQ(out.logits.shape(), (Shape{1, 11}));
  ASSERT_EQ(out.taps.size(), 3u);
  for (const auto& t : out.taps.outputs) EXPECT_EQ(t.shape(), (Shape{1, 16}));
}

TEST(LanguageForward, RejectsEmptyAndOutOfRange) {
  LanguageModel lm(small_config(), 1);
  EXPECT_THROW(lm.forward({}), std::invalid_argument);
  EXPECT_THROW(lm.forward({0, 11}), std::out_of_range);
  EXPECT_THROW(lm.forward(TokenIds(41, 0)), std::length_error);
}

TEST(LanguageForward, MatchesLoopReference) {
  LanguageModel lm(small_config(), 7);
  // Move every parameter off its init so biases and gains matter.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (auto& [name, t] : lm.parameters())
    for (double& v : t.mutable_data()) v += jitter(rng);

  const auto ids = random_tokens(13, 11, rng);
  const auto out = lm.forward(ids);
  const auto ref = reference::language(lm, ids);
  for (std::size_t k = 0; k < ref.taps.size(); ++k)
    for (std::size_t t = 0; t < ids.size(); ++t)
      for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(out.taps[k].at(t, j), ref.taps[k][t][j], 1e-11);
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t v = 0; v < 11; ++v) EXPECT_NEAR(out.logits.at(t, v), ref.logits[t][v], 1e-11);
}

// One layer, d_model 4, single head, weights chosen so each step has a
// closed form. Embeddings cancel the positional encoding so the block input
// rows are a = [1,-1,1,-1] and b = [2,0,-2,0].
TEST(LanguageForward, HandComputedOneLayer) {
  LMConfig c;
  c.vocab_size = 2;
  c.d_model = 4;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_ff = 4;
  c.max_seq_len = 4;
  LanguageModel lm(c, 0);
  const auto pe = positional_encoding(2, 4);
  const std::vector<double> a{1, -1, 1, -1}, b{2, 0, -2, 0};
  std::vector<double> emb(8);
  for (std::size_t j = 0; j < 4; ++j) {
    emb[j] = a[j] - pe.at(0, j);
    emb[4 + j] = b[j] - pe.at(1, j);
  }
  set(lm.token_embedding(), emb);
  auto& L = lm.layers()[0];
  set(L.wq[0], identity(4));
  set(L.wk[0], identity(4));
  set(L.wv[0], identity(4));
  set(L.wo[0], identity(4));
  fill(L.bo, 0.0);
  // FFN sees a zero input and contributes gelu(1) on coordinate 0.
  fill(L.ln2_gain, 0.0);
  fill(L.ln2_bias, 0.0);
  fill(L.ff_w1, 0.0);
  set(L.ff_b1, {1, 0, 0, 0});
  set(L.ff_w2, {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  fill(L.ff_b2, 0.0);
  set(lm.head_weight(), {1, 0, 0, 1, 0, 0, 0, 0});
  fill(lm.head_bias(), 0.0);

  const double eps = 1e-5;
  const double s = 1.0 / std::sqrt(1.0 + eps);  // a has mean 0, variance 1
  const double r = 1.0 / std::sqrt(2.0 + eps);  // b has mean 0, variance 2
  // Row 1 scores against keys a-hat and b-hat, scaled by 1/sqrt(4): a.b = 0, b.b = 8.
  const double z1 = 8.0 * r * r / 2.0;
  const double w0 = 1.0 / (1.0 + std::exp(z1)), w1 = 1.0 - w0;
  const double gelu1 = 0.84134474606854293;
  std::vector<std::vector<double>> y(2, std::vector<double>(4));
  for (std::size_t j = 0; j < 4; ++j) {
    y[0][j] = a[j] + s * a[j];
    y[1][j] = b[j] + w0 * s * a[j] + w1 * r * b[j];
  }
  y[0][0] += gelu1;
  y[1][0] += gelu1;

  const auto out = lm.forward({0, 1});
  for (std::size_t t = 0; t < 2; ++t) {
    double mean = 0, var = 0;
    for (double v : y[t]) mean += v / 4;
    for (double v : y[t]) var += (v - mean) * (v - mean) / 4;
    for (std::size_t v = 0; v < 2; ++v) {
      EXPECT_NEAR(out.logits.at(t, v), (y[t][v] - mean) / std::sqrt(var + eps), 1e-12);
      EXPECT_NEAR(out.taps[1].at(t, v), y[t][v], 1e-12);
    }
  }
}

TEST(LanguageForward, Causality) {
  LanguageModel lm(small_config(), 3);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto ids = random_tokens(20, 11, rng);
    const auto base = lm.forward(ids);
    const std::size_t cut = trial + 3;
    auto mutated = ids;
    for (std::size_t t = cut + 1; t < mutated.size(); ++t) mutated[t] = (mutated[t] + 1 + trial) % 11;
    const auto out = lm.forward(mutated);
    for (std::size_t t = 0; t <= cut; ++t) {
      for (std::size_t v = 0; v < 11; ++v) ASSERT_EQ(out.logits.at(t, v), base.logits.at(t, v));
      for (std::size_t k = 0; k < out.taps.size(); ++k)
        for (std::size_t j = 0; j < 16; ++j) ASSERT_EQ(out.taps[k].at(t, j), base.taps[k].at(t, j));
    }
  }
}

TEST(LanguageForward, CountsPasses) {
  LanguageModel lm(small_config(), 3);
  lm.forward({1, 2});
  lm.forward({1});
  EXPECT_EQ(lm.forward_passes(), 2u);
  lm.reset_forward_passes();
  EXPECT_EQ(lm.forward_passes(), 0u);
}

TEST(LanguageModelTest, CloneIsIndependent) {
  LanguageModel lm(small_config(), 3);
  auto copy = lm.clone();
  EXPECT_EQ(copy.checksum(), lm.checksum());
  copy.head_bias().mutable_data()[0] += 1.0;
  EXPECT_NE(copy.checksum(), lm.checksum());
}

TEST(LanguageModelTest, ParameterNamesAreUnique) {
  LanguageModel lm(small_config(), 3);
  std::set<std::string> names;
  std::size_t total = 0;
  for (const auto& [name, t] : lm.parameters()) {
    EXPECT_TRUE(names.insert(name).second) << name;
    EXPECT_EQ(name.rfind("lm.", 0), 0u);
    total += t.size();
  }
  EXPECT_EQ(total, lm.parameter_count());
}

TEST(Pretrain, InitialLossNearLogV) {
  LanguageModel lm(small_config(), 5);
  std::mt19937_64 rng(6);
  std::vector<TokenIds> seqs;
  for (int i = 0; i < 8; ++i) seqs.push_back(random_tokens(20, 11, rng));
  EXPECT_NEAR(next_token_loss(lm, seqs), std::log(11.0), 0.05);
}

TEST(Pretrain, SingleTokenVocabularyHasZeroLoss) {
  LMConfig c = small_config();
  c.vocab_size = 1;
  LanguageModel lm(c, 5);
  std::vector<TokenIds> seqs{TokenIds(10, 0), TokenIds(6, 0)};
  EXPECT_EQ(next_token_loss(lm, seqs), 0.0);
  PretrainConfig pc;
  pc.epochs = 1;
  const auto log = pretrain(lm, seqs, pc);
  EXPECT_EQ(log.initial_loss, 0.0);
  EXPECT_EQ(log.epoch_loss.at(0), 0.0);
}

TEST(Pretrain, DeterministicCorpusIsLearned) {
  LMConfig c = small_config();
  c.vocab_size = 3;
  LanguageModel lm(c, 9);
  TokenIds corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(i % 3);
  const auto windows = chunk_corpus(corpus, 16);
  PretrainConfig pc;
  pc.adam.lr = 3e-3;
  pc.batch_size = 4;
  pc.epochs = 40;
  pc.seed = 1;
  const auto log = pretrain(lm, windows, pc);
  EXPECT_LT(log.epoch_loss.back(), 0.1);
  EXPECT_LT(next_token_loss(lm, windows), 0.1);
}

TEST(Pretrain, ChunkCorpus) {
  TokenIds corpus(10);
  for (int i = 0; i < 10; ++i) corpus[i] = i;
  const auto w = chunk_corpus(corpus, 3);
  ASSERT_EQ(w.size(), 3u);
  // Consecutive windows share one token so every transition is predicted once.
  EXPECT_EQ(w[0], (TokenIds{0, 1, 2, 3}));
  EXPECT_EQ(w[1], (TokenIds{3, 4, 5, 6}));
  EXPECT_EQ(w[2], (TokenIds{6, 7, 8, 9}));
  EXPECT_EQ(chunk_corpus(TokenIds{1}, 3).size(), 0u);
}

TEST(Pretrain, Deterministic) {
  std::mt19937_64 rng(2);
  std::vector<TokenIds> seqs;
  for (int i = 0; i < 6; ++i) seqs.push_back(random_tokens(12, 11, rng));
  PretrainConfig pc;
  pc.epochs = 2;
  pc.batch_size = 4;
  pc.seed = 3;
  LanguageModel a(small_config(), 1), b(small_config(), 1);
  pretrain(a, seqs, pc);
  pretrain(b, seqs, pc);
  EXPECT_EQ(a.checksum(), b.checksum());
}

TEST(Freeze, RecordsChecksumAndRefusesTraining) {
  LanguageModel lm(small_config(), 1);
  const auto before = lm.checksum();
  lm.freeze();
  EXPECT_TRUE(lm.frozen());
  EXPECT_EQ(lm.frozen_checksum(), before);
  for (const auto& t : lm.parameter_tensors()) EXPECT_FALSE(t.requires_grad());
  PretrainConfig pc;
  EXPECT_THROW(pretrain(lm, {TokenIds{1, 2, 3}}, pc), ContractError);
  EXPECT_EQ(lm.checksum(), before);
}

TEST(Freeze, RestoreRejectsWrongChecksum) {
  LanguageModel lm(small_config(), 1);
  EXPECT_THROW(lm.restore_frozen(lm.checksum() ^ 1), ContractError);
  lm.restore_frozen(lm.checksum());
  EXPECT_TRUE(lm.frozen());
}
