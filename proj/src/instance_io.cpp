#include "pca/instance_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pca/error.hpp"

namespace pca::io {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, field + ": " + what);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

Rational read_rational(const Json& j, const std::string& field) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number_unsigned()) return Rational(static_cast<unsigned long>(j.get<std::uint64_t>()));
  if (j.is_string()) {
    try {
      Rational r = parse_rational(j.get<std::string>());
      if (r < 0) fail(field, "must be non-negative");
      return r;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError && std::string(e.what()).find(field) != std::string::npos) throw;
      fail(field, "not a rational: '" + j.get<std::string>() + "'");
    }
  }
  if (j.is_number_float()) fail(field, "write fractional values as strings, e.g. \"7/2\" or \"3.5\"");
  fail(field, "expected an integer or a rational string");
}

Json write_rational(const Rational& r) {
  if (r.get_den() == 1 && r.get_num().fits_slong_p()) return Json(r.get_num().get_si());
  return Json(format_rational(r));
}

std::uint64_t read_unsigned(const Json& j, const std::string& field) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long>() >= 0)) {
    fail(field, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string read_string(const Json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      fail(where.empty() ? key : where + "." + key, "unknown field");
    }
  }
}

InstanceConfig read_config(const Json& j) {
  InstanceConfig c;
  if (!j.is_object()) fail("config", "expected an object");
  reject_unknown(j, "config", {"exponent", "reserve", "candidate_mode", "guess_strategy", "key_bits", "nr_p_bits",
                               "nr_q_bits", "norm_domain_max", "seed"});
  if (j.contains("exponent")) c.exponent = static_cast<unsigned>(read_unsigned(j["exponent"], "config.exponent"));
  if (j.contains("reserve")) c.reserve = read_rational(j["reserve"], "config.reserve");
  try {
    if (j.contains("candidate_mode")) {
      c.candidate_mode = parse_candidate_mode(read_string(j["candidate_mode"], "config.candidate_mode"));
    }
    if (j.contains("guess_strategy")) {
      c.guess_strategy = protocol::parse_guess_strategy(read_string(j["guess_strategy"], "config.guess_strategy"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError && std::string(e.what()).find("config.") != std::string::npos) throw;
    fail("config", e.what());
  }
  if (j.contains("key_bits")) c.key_bits = static_cast<unsigned>(read_unsigned(j["key_bits"], "config.key_bits"));
  if (j.contains("nr_p_bits")) c.nr_p_bits = read_unsigned(j["nr_p_bits"], "config.nr_p_bits");
  if (j.contains("nr_q_bits")) c.nr_q_bits = read_unsigned(j["nr_q_bits"], "config.nr_q_bits");
  if (j.contains("norm_domain_max") && !j["norm_domain_max"].is_null()) {
    const Json& d = j["norm_domain_max"];
    if (d.is_string()) {
      BigUint v;
      if (v.set_str(d.get<std::string>(), 10) != 0 || v < 0) fail("config.norm_domain_max", "not an integer");
      c.norm_domain_max = v;
    } else {
      c.norm_domain_max = BigUint(static_cast<unsigned long>(read_unsigned(d, "config.norm_domain_max")));
    }
  }
  if (j.contains("seed")) c.seed = read_unsigned(j["seed"], "config.seed");
  if (c.key_bits < 64) fail("config.key_bits", "must be at least 64");
  if (c.nr_q_bits < 16 || c.nr_p_bits <= c.nr_q_bits) fail("config.nr_q_bits", "need 16 <= nr_q_bits < nr_p_bits");
  return c;
}

}  // namespace

protocol::ProtocolConfig InstanceConfig::protocol() const {
  protocol::ProtocolConfig p;
  p.paillier_bits = key_bits;
  p.nr_p_bits = nr_p_bits;
  p.nr_q_bits = nr_q_bits;
  p.exponent = exponent;
  p.reserve_price = reserve;
  p.candidate_mode = candidate_mode;
  p.guess_strategy = guess_strategy;
  p.norm_domain_max = norm_domain_max;
  return p;
}

InstanceFile parse_instance(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                                           ": " + e.what());
  }
  if (!root.is_object()) fail("<root>", "expected an object");
  reject_unknown(root, "", {"goods", "bidders", "config"});
  if (!root.contains("goods")) fail("goods", "missing");
  if (!root.contains("bidders")) fail("bidders", "missing");

  InstanceFile file;
  file.instance.goods = read_unsigned(root["goods"], "goods");
  if (file.instance.goods == 0) fail("goods", "must be at least 1");
  const Json& bidders = root["bidders"];
  if (!bidders.is_array()) fail("bidders", "expected an array");
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    const std::string where = "bidders[" + std::to_string(i) + "]";
    const Json& b = bidders[i];
    if (!b.is_object()) fail(where, "expected an object");
    reject_unknown(b, where, {"bundle", "bid", "valuation"});
    if (!b.contains("bundle")) fail(where + ".bundle", "missing");
    if (!b.contains("bid")) fail(where + ".bid", "missing");
    const Json& bundle = b["bundle"];
    if (!bundle.is_array() || bundle.empty()) fail(where + ".bundle", "expected a non-empty list of good indices");
    std::vector<std::size_t> goods;
    for (std::size_t k = 0; k < bundle.size(); ++k) {
      const std::string field = where + ".bundle[" + std::to_string(k) + "]";
      const std::uint64_t g = read_unsigned(bundle[k], field);
      if (g >= file.instance.goods) {
        fail(field, "good index " + std::to_string(g) + " out of range [0, " +
                        std::to_string(file.instance.goods) + ")");
      }
      if (std::find(goods.begin(), goods.end(), g) != goods.end()) fail(field, "duplicate good index");
      goods.push_back(g);
    }
    BidderInput input{GoodSet::from_indices(file.instance.goods, goods), read_rational(b["bid"], where + ".bid"),
                      std::nullopt};
    if (b.contains("valuation")) input.valuation = read_rational(b["valuation"], where + ".valuation");
    file.instance.bidders.push_back(std::move(input));
  }
  if (root.contains("config")) file.config = read_config(root["config"]);
  try {
    file.config.protocol().validate(file.instance);
  } catch (const Error& e) {
    fail("config", e.what());
  }
  return file;
}

InstanceFile load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_instance(buf.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + std::string(e.what()).substr(std::string("ParseError: ").size()));
  }
}

std::string serialize(const InstanceFile& file) {
  Json root;
  root["goods"] = file.instance.goods;
  Json bidders = Json::array();
  for (const auto& b : file.instance.bidders) {
    Json j;
    j["bundle"] = b.bundle.indices();
    j["bid"] = write_rational(b.bid);
    if (b.valuation) j["valuation"] = write_rational(*b.valuation);
    bidders.push_back(std::move(j));
  }
  root["bidders"] = std::move(bidders);
  const InstanceConfig& c = file.config;
  Json config;
  config["exponent"] = c.exponent;
  config["reserve"] = write_rational(c.reserve);
  config["candidate_mode"] = to_string(c.candidate_mode);
  config["guess_strategy"] = protocol::to_string(c.guess_strategy);
  config["key_bits"] = c.key_bits;
  config["nr_p_bits"] = c.nr_p_bits;
  config["nr_q_bits"] = c.nr_q_bits;
  if (c.norm_domain_max) {
    if (c.norm_domain_max->fits_ulong_p()) {
      config["norm_domain_max"] = c.norm_domain_max->get_ui();
    } else {
      config["norm_domain_max"] = c.norm_domain_max->get_str();
    }
  } else {
    config["norm_domain_max"] = nullptr;
  }
  config["seed"] = c.seed;
  root["config"] = std::move(config);
  return root.dump(2) + "\n";
}

void save_instance(const std::string& path, const InstanceFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, path + ": cannot write");
  out << serialize(file);
}

InstanceFile generate(const GenOptions& options) {
  if (options.bidders == 0 || options.goods == 0) throw Error(ErrorCode::InvalidInstance, "need n, m >= 1");
  if (!(options.density > 0 && options.density <= 1)) throw Error(ErrorCode::InvalidInstance, "density in (0, 1]");
  if (options.bid_min < 0 || options.bid_max < options.bid_min) throw Error(ErrorCode::InvalidInstance, "bid range");
  RandomSource rng = RandomSource(options.seed).fork("gen");
  const auto threshold = static_cast<std::uint64_t>(options.density * static_cast<double>(1ULL << 53));
  InstanceFile file;
  file.instance.goods = options.goods;
  file.config.seed = options.seed;
  for (std::size_t i = 0; i < options.bidders; ++i) {
    GoodSet bundle(options.goods);
    while (bundle.empty()) {
      for (std::size_t k = 0; k < options.goods; ++k) {
        if (rng.uniform_u64(1ULL << 53) < threshold) bundle.insert(k);
      }
    }
    const auto span = static_cast<std::uint64_t>(options.bid_max - options.bid_min) + 1;
    const Rational bid(options.bid_min + static_cast<long>(rng.uniform_u64(span)));
    file.instance.bidders.push_back({bundle, bid, bid});
  }
  return file;
}

}  // namespace pca::io
