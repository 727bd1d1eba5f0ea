#include "pca/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "pca/error.hpp"

namespace pca::bench {

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::Bidders: return "bidders";
    case SweepVariable::Goods: return "goods";
    case SweepVariable::MaxPsi: return "max-psi";
  }
  return "?";
}

SweepVariable parse_sweep_variable(const std::string& text) {
  if (text == "bidders") return SweepVariable::Bidders;
  if (text == "goods") return SweepVariable::Goods;
  if (text == "max-psi" || text == "max_psi" || text == "maxpsi") return SweepVariable::MaxPsi;
  throw Error(ErrorCode::ParseError, "unknown sweep variable '" + text + "'");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::Random: return "random";
    case Family::DenseConflict: return "dense-conflict";
    case Family::Blocks: return "blocks";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  if (text == "random") return Family::Random;
  if (text == "dense-conflict" || text == "dense") return Family::DenseConflict;
  if (text == "blocks") return Family::Blocks;
  throw Error(ErrorCode::ParseError, "unknown instance family '" + text + "'");
}

SweepSpec SweepSpec::defaults(SweepVariable variable) {
  SweepSpec s;
  s.variable = variable;
  switch (variable) {
    case SweepVariable::Bidders: s.values = {5, 10, 25, 50}; break;
    case SweepVariable::Goods: s.values = {4, 8, 12, 20}; break;
    case SweepVariable::MaxPsi: s.values = {8, 16, 32, 64}; break;
  }
  return s;
}

AuctionInstance make_instance(const SweepSpec& spec, std::size_t bidders, std::size_t goods, unsigned long max_psi,
                              std::uint64_t draw) {
  AuctionInstance inst;
  if (spec.family == Family::DenseConflict) {
    inst.goods = 1;
    for (unsigned long v = 0; v < max_psi; ++v) {
      inst.bidders.push_back({GoodSet::from_indices(1, {0}), Rational(v), std::nullopt});
    }
    return inst;
  }
  if (spec.family == Family::Blocks) {
    constexpr std::size_t kBlocks = 4;
    if (goods < kBlocks) throw Error(ErrorCode::InvalidConfig, "blocks family needs at least 4 goods");
    RandomSource rng = RandomSource(spec.seed).fork("bench-blocks/" + std::to_string(draw));
    const auto threshold = static_cast<std::uint64_t>(spec.density * static_cast<double>(1ULL << 53));
    inst.goods = goods;
    for (std::size_t i = 0; i < bidders; ++i) {
      std::vector<std::size_t> blocks;
      while (blocks.empty()) {
        for (std::size_t b = 0; b < kBlocks; ++b) {
          if (rng.uniform_u64(1ULL << 53) < threshold) blocks.push_back(b);
        }
      }
      GoodSet bundle(goods);
      for (std::size_t k = 0; k < goods; ++k) {
        if (std::find(blocks.begin(), blocks.end(), k % kBlocks) != blocks.end()) bundle.insert(k);
      }
      const unsigned long psi = 1 + rng.uniform_u64(max_psi);
      const BigUint root = isqrt(BigUint(static_cast<unsigned long>(bundle.size())));
      inst.bidders.push_back({bundle, Rational(BigUint(psi * root)), std::nullopt});
    }
    return inst;
  }
  // Bundles and bid quantiles depend only on the seed, the goods count and
  // the draw, so a max_psi sweep rescales the same instance.
  RandomSource rng =
      RandomSource(spec.seed).fork("bench-instance/" + std::to_string(goods) + "/" + std::to_string(draw));
  const auto threshold = static_cast<std::uint64_t>(spec.density * static_cast<double>(1ULL << 53));
  inst.goods = goods;
  for (std::size_t i = 0; i < bidders; ++i) {
    GoodSet bundle(goods);
    while (bundle.empty()) {
      for (std::size_t k = 0; k < goods; ++k) {
        if (rng.uniform_u64(1ULL << 53) < threshold) bundle.insert(k);
      }
    }
    const std::uint64_t u = rng.uniform_u64(1ULL << 20);
    const unsigned long bid = 1 + static_cast<unsigned long>((u * max_psi) >> 20);
    inst.bidders.push_back({bundle, Rational(bid), std::nullopt});
  }
  return inst;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], 1e-12));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = double(n) * sxx - sx * sx;
  return denom == 0 ? 0 : (double(n) * sxy - sx * sy) / denom;
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw Error(ErrorCode::InvalidConfig, "empty sweep");
  SweepResult result;
  result.spec = spec;
  protocol::ProtocolConfig config;
  config.paillier_bits = spec.key_bits;
  config.exponent = 0;
  config.guess_strategy = spec.strategy;
  config.candidate_mode = spec.candidate_mode;
  if (spec.nr_group) {
    config.nr_group = spec.nr_group;
  } else {
    RandomSource rng = RandomSource(spec.seed).fork("bench-group");
    config.nr_group = nr::GroupParams::generate(256, 128, rng);
  }
  struct Point {
    std::size_t bidders = 0, goods = 0;
    unsigned long max_psi = 0;
    std::vector<double> awd, apd, bwd, bpd;
    PointResult result;
  };
  std::vector<Point> points;
  for (unsigned long x : spec.values) {
    std::size_t bidders = spec.bidders;
    std::size_t goods = spec.goods;
    unsigned long max_psi = spec.max_psi;
    switch (spec.variable) {
      case SweepVariable::Bidders: bidders = x; break;
      case SweepVariable::Goods: goods = x; break;
      case SweepVariable::MaxPsi: max_psi = x; break;
    }
    Point p;
    p.bidders = bidders;
    p.goods = goods;
    p.max_psi = max_psi;
    p.result.x = x;
    p.result.bidders = make_instance(spec, bidders, goods, max_psi).bidders.size();
    points.push_back(std::move(p));
  }
  // Repetitions are interleaved across points so that slow drift in machine
  // speed affects every point alike.
  for (std::size_t rep = 0; rep < spec.reps; ++rep) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      Point& p = points[k];
      config.norm_domain_max = BigUint(p.max_psi);
      const std::uint64_t seed = spec.seed * 1000003ULL + rep;
      const AuctionInstance inst = make_instance(spec, p.bidders, p.goods, p.max_psi, rep);
      const harness::Comparison cmp = harness::compare_with_oracle(inst, config, seed);
      if (!cmp.run.ok) throw Error(ErrorCode::ProtocolViolation, "benchmark run failed: " + cmp.run.error);
      result.all_matched_oracle = result.all_matched_oracle && cmp.equivalent;
      p.awd.push_back(cmp.run.times.auctioneer_winner_determination);
      p.apd.push_back(cmp.run.times.auctioneer_payment);
      p.bwd.push_back(cmp.run.times.bidder_winner_determination);
      p.bpd.push_back(cmp.run.times.bidder_payment);
      p.result.probes = cmp.run.probes;
      p.result.winners = cmp.run.outcome.winners.size();
    }
  }
  for (Point& p : points) {
    p.result.auctioneer_winner_determination = median(p.awd);
    p.result.auctioneer_payment = median(p.apd);
    p.result.bidder_winner_determination = median(p.bwd);
    p.result.bidder_payment = median(p.bpd);
    result.points.push_back(p.result);
  }
  std::vector<double> xs, a, ap, b, p, awd, apd;
  for (const auto& pt : result.points) {
    xs.push_back(double(pt.x));
    a.push_back(pt.auctioneer_total());
    awd.push_back(pt.auctioneer_winner_determination);
    apd.push_back(pt.auctioneer_payment);
    ap.push_back(pt.auctioneer_per_bidder());
    b.push_back(pt.bidder_total());
    p.push_back(double(std::max<std::size_t>(pt.probes, 1)));
  }
  result.exponent_auctioneer = loglog_slope(xs, a);
  result.exponent_auctioneer_per_bidder = loglog_slope(xs, ap);
  result.exponent_auctioneer_winner_determination = loglog_slope(xs, awd);
  result.exponent_auctioneer_payment = loglog_slope(xs, apd);
  result.exponent_bidder = loglog_slope(xs, b);
  result.exponent_probes = loglog_slope(xs, p);
  return result;
}

std::string SweepResult::table() const {
  std::ostringstream out;
  char line[256];
  out << "sweep " << to_string(spec.variable) << " (" << to_string(spec.family) << ", "
      << protocol::to_string(spec.strategy) << ", " << spec.key_bits << "-bit keys, " << spec.reps << " reps)\n";
  std::snprintf(line, sizeof line, "%8s %8s %8s %8s %12s %12s %12s %12s\n", to_string(spec.variable).c_str(),
                "bidders", "probes", "winners", "auct-wd[s]", "auct-pd[s]", "bidder-wd[s]", "bidder-pd[s]");
  out << line;
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%8lu %8zu %8zu %8zu %12.4f %12.4f %12.5f %12.5f\n", p.x, p.bidders, p.probes,
                  p.winners, p.auctioneer_winner_determination, p.auctioneer_payment, p.bidder_winner_determination,
                  p.bidder_payment);
    out << line;
  }
  std::snprintf(line, sizeof line,
                "growth exponents: auctioneer %.3f (wd %.3f, pd %.3f), auctioneer/bidder %.3f, bidder %.3f, "
                "probes %.3f\n",
                exponent_auctioneer, exponent_auctioneer_winner_determination, exponent_auctioneer_payment,
                exponent_auctioneer_per_bidder, exponent_bidder, exponent_probes);
  out << line;
  return out.str();
}

std::string SweepResult::to_json() const {
  nlohmann::ordered_json j;
  j["variable"] = to_string(spec.variable);
  j["family"] = to_string(spec.family);
  j["strategy"] = protocol::to_string(spec.strategy);
  j["key_bits"] = spec.key_bits;
  j["reps"] = spec.reps;
  j["fixed"] = {{"bidders", spec.bidders}, {"goods", spec.goods}, {"max_psi", spec.max_psi},
                {"density", spec.density}, {"seed", spec.seed}};
  auto& pts = j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    pts.push_back({{"x", p.x},
                   {"bidders", p.bidders},
                   {"probes", p.probes},
                   {"winners", p.winners},
                   {"auctioneer_winner_determination", p.auctioneer_winner_determination},
                   {"auctioneer_payment", p.auctioneer_payment},
                   {"bidder_winner_determination", p.bidder_winner_determination},
                   {"bidder_payment", p.bidder_payment}});
  }
  j["exponents"] = {{"auctioneer", exponent_auctioneer},
                    {"auctioneer_per_bidder", exponent_auctioneer_per_bidder},
                    {"auctioneer_winner_determination", exponent_auctioneer_winner_determination},
                    {"auctioneer_payment", exponent_auctioneer_payment},
                    {"bidder", exponent_bidder},
                    {"probes", exponent_probes}};
  j["all_matched_oracle"] = all_matched_oracle;
  return j.dump(2);
}

}  // namespace pca::bench
