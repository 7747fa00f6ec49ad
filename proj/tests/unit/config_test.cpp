#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bimp/config.hpp"
#include "bimp/errors.hpp"
#include "test_support.hpp"

namespace bimp {
namespace {

using json = nlohmann::json;

json minimal() {
  return json::parse(R"({
    "model": {
      "family": "censored_execution",
      "parameters": [0.5, 2.0],
      "impulse": {"cost": [0.125]},
      "actions": [{"duration": 0.5, "order": [0.5]}]
    },
    "prior": [0.5, 0.5],
    "initial_state": {"x": [0.0]}
  })");
}

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return {};
}

TEST(ParseConfig, MinimalDocumentUsesDefaults) {
  const RunConfig c = parse_config(minimal());
  EXPECT_EQ(c.schema_version, kSchemaVersion);
  EXPECT_EQ(c.model.horizon, 1.0);
  EXPECT_EQ(c.grid.level, 1);
  EXPECT_EQ(c.grid.space_nodes, std::vector<std::size_t>{17});
  EXPECT_EQ(c.quadrature.hermite_nodes, 5u);
  EXPECT_EQ(c.simulation.paths, 1000u);
  EXPECT_EQ(c.threads, 1u);
  EXPECT_FALSE(c.certificate.has_value());
}

TEST(ParseConfig, UnknownKeyIsNamed) {
  json doc = minimal();
  doc["model"]["sigma_typo"] = 0.3;
  const std::string msg = config_error(doc);
  EXPECT_NE(msg.find("sigma_typo"), std::string::npos) << msg;
  EXPECT_NE(msg.find("model"), std::string::npos) << msg;
}

TEST(ParseConfig, WrongTypeNamesThePath) {
  json doc = minimal();
  doc["model"]["gain"] = {{"x_coef", "one"}};
  const std::string msg = config_error(doc);
  EXPECT_NE(msg.find("model.gain.x_coef"), std::string::npos) << msg;
}

TEST(ParseConfig, RejectsBadValues) {
  json doc = minimal();
  doc["prior"] = {0.5, 0.25};
  EXPECT_NE(config_error(doc).find("prior"), std::string::npos);
  doc = minimal();
  doc["schema_version"] = 7;
  EXPECT_NE(config_error(doc).find("schema_version"), std::string::npos);
  doc = minimal();
  doc["model"]["family"] = "laplace";
  EXPECT_NE(config_error(doc).find("family"), std::string::npos);
  doc = minimal();
  doc["model"]["horizon"] = 0.0;
  config_error(doc);
  doc = minimal();
  doc["grid"] = {{"simplex_nodes", 1}, {"lower", {1.0}}, {"upper", {-1.0}}};
  EXPECT_NE(config_error(doc).find("grid"), std::string::npos);
}

TEST(ParseConfig, RoundTripIsIdentity) {
  for (const char* name : {"one_shot.cfg", "two_period_voi.cfg", "all_wait.cfg", "censored_demo.cfg",
                           "gaussian_demo.cfg"}) {
    const RunConfig a = load_config(testing::config_path(name));
    const json ja = config_to_json(a);
    const RunConfig b = parse_config(ja);
    EXPECT_EQ(config_to_json(b), ja) << name;
    EXPECT_EQ(model_hash(a.model), model_hash(b.model)) << name;
  }
}

TEST(LoadConfig, SyntaxErrorReportsLine) {
  const auto path = std::filesystem::temp_directory_path() / "bimp_bad.cfg";
  {
    std::ofstream out(path);
    out << "{\n  \"prior\": [0.5, 0.5],\n  \"model\": {,}\n}\n";
  }
  try {
    load_config(path.string());
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("bimp_bad.cfg:3:"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(ModelHash, SensitiveToModelOnly) {
  RunConfig a = parse_config(minimal());
  RunConfig b = a;
  b.simulation.seed = 99;
  b.grid.level = 3;
  EXPECT_EQ(model_hash(a.model), model_hash(b.model));
  b.model.gain.late_penalty = 0.5;
  EXPECT_NE(model_hash(a.model), model_hash(b.model));
  EXPECT_EQ(hash_hex(0x1234ULL), "0000000000001234");
}

TEST(Certificate, ParsesAndRejectsUnknownKeys) {
  const CertificateConfig c =
      parse_certificate(json{{"time_rate", 1.0}, {"constant", 10.0}, {"rho", 0.1}, {"delta", 0.1}}, "certificate");
  EXPECT_EQ(c.psi.time_rate, 1.0);
  EXPECT_EQ(c.psi.constant, 10.0);
  EXPECT_EQ(c.rho, 0.1);
  EXPECT_THROW(parse_certificate(json{{"gamma", 1.0}}, "certificate"), Error);
}

}  // namespace
}  // namespace bimp
