#include <gtest/gtest.h>

#include <cmath>

#include "pca/bench.hpp"
#include "pca/error.hpp"
#include "pca/instance_io.hpp"

using namespace pca;

namespace {

ErrorCode parse_code(const std::string& text, std::string* message = nullptr) {
  try {
    io::parse_instance(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return ErrorCode::InvalidMessage;  // no error: never expected by callers
}

}  // namespace

TEST(InstanceIo, ParsesFieldsAndDefaults) {
  const auto f = io::parse_instance(R"({
    "goods": 3,
    "bidders": [{"bundle": [0, 1], "bid": 10}, {"bundle": [2], "bid": "7/2", "valuation": "3.5"}],
    "config": {"exponent": 4, "reserve": "1/4", "candidate_mode": "lehmann-rerun",
               "guess_strategy": "binary-search", "norm_domain_max": 200, "seed": 9}
  })");
  EXPECT_EQ(f.instance.goods, 3U);
  ASSERT_EQ(f.instance.bidders.size(), 2U);
  EXPECT_EQ(f.instance.bidders[0].bundle, GoodSet::from_indices(3, {0, 1}));
  EXPECT_EQ(f.instance.bidders[1].bid, Rational(7, 2));
  EXPECT_EQ(*f.instance.bidders[1].valuation, Rational(7, 2));
  EXPECT_FALSE(f.instance.bidders[0].valuation.has_value());
  EXPECT_EQ(f.config.exponent, 4U);
  EXPECT_EQ(f.config.reserve, Rational(1, 4));
  EXPECT_EQ(f.config.candidate_mode, CandidateMode::LehmannRerun);
  EXPECT_EQ(f.config.guess_strategy, protocol::GuessStrategy::BinarySearchEquality);
  EXPECT_EQ(*f.config.norm_domain_max, 200);
  EXPECT_EQ(f.config.seed, 9U);
  const auto p = f.config.protocol();
  EXPECT_EQ(p.exponent, 4U);
  EXPECT_EQ(p.reserve().raw, 4);
}

TEST(InstanceIo, DiagnosticsNameTheField) {
  std::string msg;
  EXPECT_EQ(parse_code(R"({"goods": 2, "bidders": [{"bundle": [0], "bid": 1}, {"bundle": [2], "bid": 1}]})", &msg),
            ErrorCode::ParseError);
  EXPECT_NE(msg.find("bidders[1].bundle[0]"), std::string::npos) << msg;
  EXPECT_EQ(parse_code(R"({"goods": 2, "bidders": [{"bundle": [], "bid": 1}]})", &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("bidders[0].bundle"), std::string::npos);
  EXPECT_EQ(parse_code(R"({"goods": 2, "bidders": [{"bundle": [0], "bid": 1.5}]})", &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("bidders[0].bid"), std::string::npos);
  EXPECT_EQ(parse_code(R"({"goods": 2, "bidders": [{"bundle": [0], "bid": "-3"}]})", &msg), ErrorCode::ParseError);
  EXPECT_EQ(parse_code(R"({"goods": 2, "bidders": [{"bundle": [0], "bid": 1, "colour": 1}]})", &msg),
            ErrorCode::ParseError);
  EXPECT_NE(msg.find("bidders[0].colour"), std::string::npos);
  EXPECT_EQ(parse_code(R"({"goods": 2, "bidders": [], "config": {"candidate_mode": "vcg"}})", &msg),
            ErrorCode::ParseError);
  EXPECT_NE(msg.find("config"), std::string::npos);
  EXPECT_EQ(parse_code("{\"goods\": 2,\n\"bidders\": [\n{\"bundle\": [0] \"bid\": 1}]}", &msg), ErrorCode::ParseError);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  // domain smaller than the largest norm fails config validation
  EXPECT_EQ(parse_code(R"({"goods": 1, "bidders": [{"bundle": [0], "bid": 9}],
                           "config": {"exponent": 0, "norm_domain_max": 3}})"),
            ErrorCode::ParseError);
}

TEST(InstanceIo, GeneratedFilesRoundTripByteIdentically) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    io::GenOptions g{3 + seed % 5, 1 + seed % 6, 1, 10, 0.5, seed};
    const std::string text = io::serialize(io::generate(g));
    EXPECT_EQ(io::serialize(io::parse_instance(text)), text);
    EXPECT_EQ(io::serialize(io::generate(g)), text);
  }
  io::InstanceFile f = io::generate({4, 3, 1, 10, 0.5, 1});
  f.instance.bidders[0].bid = Rational(7, 3);
  f.config.norm_domain_max = BigUint("123456789012345678901234567890");
  const std::string text = io::serialize(f);
  EXPECT_EQ(io::serialize(io::parse_instance(text)), text);
}

TEST(InstanceIo, GeneratorRespectsOptions) {
  const auto full = io::generate({6, 4, 3, 5, 1.0, 2});
  for (const auto& b : full.instance.bidders) {
    EXPECT_EQ(b.bundle.size(), 4U);
    EXPECT_GE(b.bid, 3);
    EXPECT_LE(b.bid, 5);
  }
  EXPECT_LE(run_mechanism(full.instance, MechanismConfig::with_exponent(2)).winners.size(), 1U);
  const auto sparse = io::generate({50, 8, 1, 10, 0.05, 3});
  for (const auto& b : sparse.instance.bidders) EXPECT_FALSE(b.bundle.empty());
  EXPECT_THROW(io::generate({3, 3, 1, 10, 0.0, 1}), Error);
  EXPECT_THROW(io::generate({0, 3, 1, 10, 0.5, 1}), Error);
}

TEST(Bench, SlopeAndMedian) {
  EXPECT_NEAR(bench::loglog_slope({1, 2, 4, 8}, {3, 6, 12, 24}), 1.0, 1e-12);
  EXPECT_NEAR(bench::loglog_slope({1, 2, 4, 8}, {1, 4, 16, 64}), 2.0, 1e-12);
  EXPECT_NEAR(bench::loglog_slope({2, 4, 8}, {5, 5, 5}), 0.0, 1e-12);
  EXPECT_EQ(bench::median({3, 1, 2}), 2);
  EXPECT_EQ(bench::median({4, 1, 3, 2}), 2.5);
}

TEST(Bench, InstanceFamilies) {
  bench::SweepSpec spec;
  spec.family = bench::Family::DenseConflict;
  const auto dense = bench::make_instance(spec, 0, 0, 8);
  ASSERT_EQ(dense.bidders.size(), 8U);
  for (std::size_t v = 0; v < 8; ++v) EXPECT_EQ(dense.bidders[v].bid, Rational(long(v)));
  spec.family = bench::Family::Random;
  const auto a = bench::make_instance(spec, 10, 5, 16);
  const auto b = bench::make_instance(spec, 10, 5, 64);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.bidders[i].bundle, b.bidders[i].bundle);
    EXPECT_GE(a.bidders[i].bid, 1);
    EXPECT_LE(a.bidders[i].bid, 16);
    EXPECT_LE(b.bidders[i].bid, 64);
  }
}

TEST(Bench, TinySweepMatchesOracle) {
  bench::SweepSpec spec = bench::SweepSpec::defaults(bench::SweepVariable::MaxPsi);
  spec.values = {4, 8};
  spec.bidders = 4;
  spec.goods = 3;
  spec.reps = 1;
  spec.key_bits = 256;
  const auto r = bench::run_sweep(spec);
  ASSERT_EQ(r.points.size(), 2U);
  EXPECT_TRUE(r.all_matched_oracle);
  EXPECT_GT(r.points[1].probes, r.points[0].probes);
  EXPECT_NE(r.table().find("growth exponents"), std::string::npos);
}

TEST(Bench, BlocksFamilyKeepsNormsAndConflictsAcrossGoods) {
  bench::SweepSpec spec;
  spec.family = bench::Family::Blocks;
  const auto small = bench::make_instance(spec, 12, 4, 16);
  const auto large = bench::make_instance(spec, 12, 20, 16);
  EXPECT_EQ(norms(small, 0), norms(large, 0));
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(large.bidders[i].bundle.size(), 5 * small.bidders[i].bundle.size());
    for (std::size_t j = 0; j < 12; ++j) {
      EXPECT_EQ(small.bidders[i].bundle.intersects(small.bidders[j].bundle),
                large.bidders[i].bundle.intersects(large.bidders[j].bundle));
    }
  }
  const auto a = run_mechanism(small, MechanismConfig::with_exponent(0));
  const auto b = run_mechanism(large, MechanismConfig::with_exponent(0));
  EXPECT_EQ(a.winners, b.winners);
  EXPECT_EQ(a.candidates, b.candidates);
  EXPECT_THROW(bench::make_instance(spec, 3, 3, 8), Error);
}
