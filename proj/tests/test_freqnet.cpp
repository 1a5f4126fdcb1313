#include <gtest/gtest.h>

#include <cmath>

#include "freqrec/errors.hpp"
#include "freqrec/freqnet.hpp"
#include "freqrec/gradcheck.hpp"
#include "helpers.hpp"

using namespace freqrec;
using testing_util::random_tensor;
using testing_util::values;

namespace {

FreqMLP random_filter(std::size_t d, Activation act, std::mt19937_64& g) {
  Rng init(g());
  auto f = FreqMLP::create(d, act, init);
  testing_util::randomize(f, g);
  return f;
}

FreqNetBlock random_block(std::size_t d, FusionMode mode, double gamma, std::mt19937_64& g) {
  Rng init(g());
  auto blk = FreqNetBlock::create(d, 2 * d, Activation::kLeakyRelu, init);
  testing_util::randomize(blk.gsa_filter, g);
  testing_util::randomize(blk.lsr_filter, g);
  testing_util::randomize(blk.fusion_ffn, g);
  blk.fusion = mode;
  blk.gamma = gamma;
  return blk;
}

}  // namespace

TEST(FreqMLP, IdentityFilterReturnsSpectrum) {
  std::mt19937_64 g(1);
  auto x = random_tensor({2, 6, 3}, g);
  auto s = rdft(x, 1);
  auto out = freq_mlp_apply(s, FreqMLP::identity(3));
  EXPECT_EQ(values(out.real), values(s.real));
  EXPECT_EQ(values(out.imag), values(s.imag));
  EXPECT_EQ(out.axis, s.axis);
  EXPECT_EQ(out.original_length, s.original_length);
}

TEST(FreqMLP, DoubledRealWeightDoublesSignal) {
  std::mt19937_64 g(2);
  auto x = random_tensor({2, 7, 3}, g);
  auto f = FreqMLP::identity(3);
  for (std::size_t i = 0; i < 3; ++i) f.w_real.mutable_data()[i * 3 + i] = 2.0;
  auto y = irdft(freq_mlp_apply(rdft(x, 1), f));
  EXPECT_LT(oracle::max_abs_diff(values(y), values(scale(x, 2.0))), 1e-12);
}

TEST(FreqMLP, MatchesComplexArithmeticOracle) {
  std::mt19937_64 g(3);
  for (auto act : {Activation::kLeakyRelu, Activation::kGelu, Activation::kIdentity}) {
    auto f = random_filter(4, act, g);
    auto x = random_tensor({3, 5, 4}, g);
    auto s = rdft(x, 1);
    auto out = freq_mlp_apply(s, f);
    const auto of = testing_util::to_oracle(f);
    const auto re = values(s.real), im = values(s.imag);
    for (std::size_t row = 0; row < re.size() / 4; ++row) {
      std::vector<oracle::cd> c(4);
      for (std::size_t d = 0; d < 4; ++d) c[d] = {re[row * 4 + d], im[row * 4 + d]};
      const auto expect = oracle::apply_filter(c, of);
      for (std::size_t d = 0; d < 4; ++d) {
        EXPECT_NEAR(out.real.data()[row * 4 + d], expect[d].real(), 1e-12);
        EXPECT_NEAR(out.imag.data()[row * 4 + d], expect[d].imag(), 1e-12);
      }
    }
  }
}

TEST(FreqMLP, FeatureMismatchIsDimensionError) {
  std::mt19937_64 g(4);
  auto s = rdft(random_tensor({2, 4, 3}, g), 1);
  EXPECT_THROW(freq_mlp_apply(s, FreqMLP::identity(4)), DimensionError);
}

TEST(FreqMLP, InitialisationIsNearIdentity) {
  Rng rng(5);
  auto f = FreqMLP::create(16, Activation::kLeakyRelu, rng);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      EXPECT_NEAR(f.w_real.at({i, j}), i == j ? 1.0 : 0.0, 0.15);
      EXPECT_NEAR(f.w_imag.at({i, j}), 0.0, 0.15);
    }
    EXPECT_EQ(f.b_real.data()[i], 0.0);
    EXPECT_EQ(f.b_imag.data()[i], 0.0);
  }
}

TEST(GlobalSpectralAggregator, IdentityFilterIsIdentity) {
  std::mt19937_64 g(6);
  auto e = random_tensor({3, 4, 2}, g);
  EXPECT_LT(oracle::max_abs_diff(values(global_spectral_aggregator(e, FreqMLP::identity(2))), values(e)), 1e-10);
}

TEST(GlobalSpectralAggregator, DuplicatedUsersStayIdentical) {
  std::mt19937_64 g(7);
  auto one = random_tensor({1, 4, 3}, g);
  std::vector<double> both(values(one));
  both.insert(both.end(), one.data().begin(), one.data().end());
  auto out = global_spectral_aggregator(Tensor({2, 4, 3}, both), FreqMLP::identity(3));
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(out.data()[i], out.data()[12 + i], 1e-14);
}

TEST(GlobalSpectralAggregator, MatchesLoopOracle) {
  std::mt19937_64 g(8);
  auto f = random_filter(2, Activation::kLeakyRelu, g);
  auto e = random_tensor({3, 2, 2}, g);
  auto expect = oracle::spectral_filter(values(e), 3, 2, 2, 0, testing_util::to_oracle(f));
  EXPECT_LT(oracle::max_abs_diff(values(global_spectral_aggregator(e, f)), expect), 1e-10);
}

TEST(LocalSpectralRefiner, IdentityFilterIsIdentity) {
  std::mt19937_64 g(9);
  auto e = random_tensor({2, 5, 3}, g);
  EXPECT_LT(oracle::max_abs_diff(values(local_spectral_refiner(e, FreqMLP::identity(3))), values(e)), 1e-10);
}

TEST(LocalSpectralRefiner, ConstantSequenceThroughDcPreservingFilter) {
  // A time-constant input has only a real DC bin. With W_r = I, zero bias and
  // identity activation the DC real part is kept, W_i only feeds the DC
  // imaginary part (dropped), and every other bin stays zero.
  std::mt19937_64 g(10);
  auto f = FreqMLP::identity(3);
  testing_util::randomize(f.w_imag, g);
  std::vector<double> x;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 6; ++t)
      for (double v : {0.3, -1.2, 0.7}) x.push_back(v + static_cast<double>(b));
  Tensor e({2, 6, 3}, x);
  EXPECT_LT(oracle::max_abs_diff(values(local_spectral_refiner(e, f)), x), 1e-12);
}

TEST(LocalSpectralRefiner, MatchesLoopOracle) {
  std::mt19937_64 g(11);
  auto f = random_filter(2, Activation::kLeakyRelu, g);
  auto e = random_tensor({1, 4, 2}, g);
  auto expect = oracle::spectral_filter(values(e), 1, 4, 2, 1, testing_util::to_oracle(f));
  EXPECT_LT(oracle::max_abs_diff(values(local_spectral_refiner(e, f)), expect), 1e-10);
}

TEST(FreqNetProperty, IdentityTransparencyForAllShapes) {
  std::mt19937_64 g(12);
  for (std::size_t b = 1; b <= 6; ++b) {
    for (std::size_t l = 1; l <= 9; ++l) {
      auto e = random_tensor({b, l, 3}, g);
      const auto id = FreqMLP::identity(3);
      EXPECT_LT(oracle::max_abs_diff(values(global_spectral_aggregator(e, id)), values(e)), 1e-10);
      EXPECT_LT(oracle::max_abs_diff(values(local_spectral_refiner(e, id)), values(e)), 1e-10);
    }
  }
}

TEST(FreqNetProperty, BatchPermutationOnlyCommutesWithIdentityFilter) {
  std::mt19937_64 g(13);
  auto e = random_tensor({4, 3, 2}, g);
  std::vector<std::size_t> order{2, 0, 3, 1};
  auto permuted_rows = [&](const Tensor& t) {
    std::vector<double> out;
    for (auto r : order) out.insert(out.end(), t.data().begin() + r * 6, t.data().begin() + (r + 1) * 6);
    return Tensor({4, 3, 2}, out);
  };
  const auto pe = permuted_rows(e);
  const auto id = FreqMLP::identity(2);
  EXPECT_LT(oracle::max_abs_diff(values(global_spectral_aggregator(pe, id)),
                                 values(permuted_rows(global_spectral_aggregator(e, id)))),
            1e-10);
  // A learned filter treats the batch axis as a sequence, so reordering the
  // users changes what each one receives.
  auto f = random_filter(2, Activation::kLeakyRelu, g);
  EXPECT_GT(oracle::max_abs_diff(values(global_spectral_aggregator(pe, f)),
                                 values(permuted_rows(global_spectral_aggregator(e, f)))),
            1e-6);
}

TEST(FreqNetForward, GammaOneIgnoresGsa) {
  std::mt19937_64 g(14);
  auto blk = random_block(3, FusionMode::kParallel, 1.0, g);
  auto e = random_tensor({3, 4, 3}, g);
  Rng rng(1);
  FreqNetTrace tr;
  freqnet_forward(e, blk, false, rng, &tr);
  EXPECT_EQ(values(tr.mixed), values(tr.intra));
}

TEST(FreqNetForward, GammaZeroIgnoresLsr) {
  std::mt19937_64 g(15);
  auto blk = random_block(3, FusionMode::kParallel, 0.0, g);
  auto e = random_tensor({3, 4, 3}, g);
  Rng rng(1);
  FreqNetTrace tr;
  freqnet_forward(e, blk, false, rng, &tr);
  EXPECT_EQ(values(tr.mixed), values(tr.inter));
}

TEST(FreqNetForward, SerialIdentityFiltersFeedTwiceE) {
  std::mt19937_64 g(16);
  auto blk = random_block(3, FusionMode::kSerial, 0.7, g);
  blk.gsa_filter = FreqMLP::identity(3);
  blk.lsr_filter = FreqMLP::identity(3);
  auto e = random_tensor({2, 5, 3}, g);
  Rng rng(1);
  FreqNetTrace tr;
  auto out = freqnet_forward(e, blk, false, rng, &tr);
  EXPECT_LT(oracle::max_abs_diff(values(tr.mixed), values(scale(e, 2.0))), 1e-10);
  // FFN(2E, E): residual stream 2E + E
  auto direct = oracle::ffn(values(scale(e, 2.0)), values(e), testing_util::to_oracle(blk.fusion_ffn));
  EXPECT_LT(oracle::max_abs_diff(values(out), direct), 1e-9);
}

TEST(FreqNetForward, MatchesLoopOracleBothModes) {
  std::mt19937_64 g(17);
  for (auto mode : {FusionMode::kParallel, FusionMode::kSerial}) {
    for (std::size_t b : {1u, 3u, 4u}) {
      for (std::size_t l : {2u, 3u, 4u}) {
        auto blk = random_block(4, mode, 0.35, g);
        auto e = random_tensor({b, l, 4}, g);
        Rng rng(1);
        auto out = freqnet_forward(e, blk, false, rng);
        auto expect = oracle::freqnet(values(e), b, l, 4, testing_util::to_oracle(blk.gsa_filter),
                                      testing_util::to_oracle(blk.lsr_filter), mode == FusionMode::kParallel,
                                      blk.gamma, testing_util::to_oracle(blk.fusion_ffn));
        EXPECT_LT(oracle::max_abs_diff(values(out), expect), 1e-9) << to_string(mode) << " " << b << "x" << l;
      }
    }
  }
}

TEST(FreqNetForward, DisabledPathsPassInputThrough) {
  std::mt19937_64 g(18);
  auto e = random_tensor({3, 4, 3}, g);
  Rng rng(1);
  FreqNetTrace tr;
  auto par = random_block(3, FusionMode::kParallel, 0.7, g);
  par.gsa_enabled = false;
  freqnet_forward(e, par, false, rng, &tr);
  EXPECT_EQ(values(tr.inter), values(e));
  par.lsr_enabled = false;
  freqnet_forward(e, par, false, rng, &tr);
  EXPECT_LT(oracle::max_abs_diff(values(tr.mixed), values(e)), 1e-15);
  auto ser = random_block(3, FusionMode::kSerial, 0.7, g);
  ser.gsa_enabled = false;
  freqnet_forward(e, ser, false, rng, &tr);
  EXPECT_EQ(values(tr.intra_input), values(e));
}

TEST(FreqNetForward, GammaOutOfRangeIsConfigError) {
  std::mt19937_64 g(19);
  auto blk = random_block(3, FusionMode::kParallel, 1.5, g);
  Rng rng(1);
  EXPECT_THROW(freqnet_forward(random_tensor({1, 2, 3}, g), blk, false, rng), ConfigError);
}

TEST(FreqNetProperty, EveryFilterParameterGetsMatchingNonzeroGradient) {
  std::mt19937_64 g(20);
  for (auto mode : {FusionMode::kParallel, FusionMode::kSerial}) {
    auto blk = random_block(3, mode, 0.6, g);
    auto e = random_tensor({3, 4, 3}, g, true);
    auto w = random_tensor({3, 4, 3}, g);
    auto loss = [&] {
      Rng r(2);
      return sum(mul(freqnet_forward(e, blk, true, r), w));
    };
    std::vector<Tensor> params{e};
    for (const auto& p : blk.parameters()) params.push_back(p.tensor);
    for (auto& p : params) p.zero_grad();
    backward(loss());
    for (const auto& p : blk.gsa_filter.parameters()) {
      double mag = 0.0;
      for (double v : p.tensor.grad()) mag += std::abs(v);
      EXPECT_GT(mag, 0.0) << "gsa." << p.name;
    }
    for (const auto& p : blk.lsr_filter.parameters()) {
      double mag = 0.0;
      for (double v : p.tensor.grad()) mag += std::abs(v);
      EXPECT_GT(mag, 0.0) << "lsr." << p.name;
    }
    EXPECT_LT(check_gradients(loss, params).max_relative_error, 1e-4) << to_string(mode);
  }
}

TEST(GatedMerge, AlphaZeroIgnoresFrequencyBranch) {
  std::mt19937_64 g(21);
  auto sa = random_tensor({2, 3, 4}, g);
  auto f1 = random_tensor({2, 3, 4}, g);
  auto f2 = random_tensor({2, 3, 4}, g);
  auto gain = Tensor::full({4}, 1.0), bias = Tensor::zeros({4});
  Rng r1(1), r2(1), r3(1);
  auto a = gated_residual_merge(sa, f1, 0.0, gain, bias, 0.0, false, r1);
  auto b = gated_residual_merge(sa, f2, 0.0, gain, bias, 0.0, false, r2);
  auto c = gated_residual_merge(sa, Tensor(), 0.0, gain, bias, 0.0, false, r3);
  EXPECT_EQ(values(a), values(b));
  EXPECT_EQ(values(a), values(c));
}

TEST(GatedMerge, AlphaOneIgnoresAttentionBranch) {
  std::mt19937_64 g(22);
  auto s1 = random_tensor({2, 3, 4}, g);
  auto s2 = random_tensor({2, 3, 4}, g);
  auto f = random_tensor({2, 3, 4}, g);
  auto gain = Tensor::full({4}, 1.0), bias = Tensor::zeros({4});
  Rng r1(1), r2(1);
  EXPECT_EQ(values(gated_residual_merge(s1, f, 1.0, gain, bias, 0.0, false, r1)),
            values(gated_residual_merge(s2, f, 1.0, gain, bias, 0.0, false, r2)));
}

TEST(GatedMerge, EqualBranchesMakeAlphaIrrelevant) {
  std::mt19937_64 g(23);
  auto x = random_tensor({2, 3, 4}, g);
  auto gain = Tensor::full({4}, 1.0), bias = Tensor::zeros({4});
  // layer_norm(gelu(X) + X)
  oracle::Vec pre(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) pre[i] = oracle::gelu(x.data()[i]) + x.data()[i];
  const auto expect = oracle::layer_norm(pre, 4, values(gain), values(bias));
  for (double alpha : {0.0, 0.3, 0.7, 1.0}) {
    Rng r(1);
    EXPECT_LT(oracle::max_abs_diff(values(gated_residual_merge(x, x, alpha, gain, bias, 0.0, false, r)), expect),
              1e-12);
  }
}

TEST(GatedMerge, AlphaOutsideUnitIntervalIsConfigError) {
  auto x = Tensor::zeros({1, 1, 2});
  Rng r(1);
  EXPECT_THROW(gated_residual_merge(x, x, -0.1, Tensor::full({2}, 1.0), Tensor::zeros({2}), 0.0, false, r),
               ConfigError);
  EXPECT_THROW(gated_residual_merge(x, x, 1.1, Tensor::full({2}, 1.0), Tensor::zeros({2}), 0.0, false, r),
               ConfigError);
}

TEST(Activation, NamesRoundTrip) {
  for (auto a : {Activation::kIdentity, Activation::kLeakyRelu, Activation::kGelu}) {
    EXPECT_EQ(parse_activation(to_string(a)), a);
  }
  for (auto m : {FusionMode::kParallel, FusionMode::kSerial}) EXPECT_EQ(parse_fusion(to_string(m)), m);
  EXPECT_THROW(parse_activation("tanh"), ConfigError);
  EXPECT_THROW(parse_fusion("mixed"), ConfigError);
}
