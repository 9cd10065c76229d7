#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "run_config.hpp"

#include "clabfm/errors.hpp"

#include <string>

using namespace clabfm;
using namespace clabfm::cli;
using nlohmann::json;

namespace {

std::string error_of(const json &doc, const FlagValues &flags = {}) {
  try {
    parse_config(&doc, flags);
  } catch (const ConfigError &e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("minimal rp config gets defaults") {
  const json doc = {{"command", "rp"}, {"scheme", "d"}};
  const RunConfig c = parse_config(&doc, {});
  CHECK(c.command == Command::rp);
  CHECK(c.schemes == std::vector<char>{'d'});
  CHECK(c.samples == 64);
  CHECK(c.s == 1.0 / 40.0);
  CHECK(c.seed == 1);
  CHECK(c.domain == "periodic");
  CHECK(c.overrides.empty());
}

TEST_CASE("unknown key is rejected by name") {
  const std::string msg = error_of({{"command", "rp"}, {"foo", 1}});
  CHECK(msg.find("foo") != std::string::npos);
}

TEST_CASE("flag wins over file and is recorded") {
  const json doc = {{"command", "rp"}, {"scheme", "a"}, {"s", 0.05}};
  FlagValues f;
  f.scheme = "d,h";
  f.s = 0.05;  // same as the file: not an override
  const RunConfig c = parse_config(&doc, f);
  CHECK(c.schemes == std::vector<char>{'d', 'h'});
  REQUIRE(c.overrides.size() == 1);
  CHECK(c.overrides[0].key == "scheme");
  CHECK(c.overrides[0].file_value == "a");
  CHECK(c.overrides[0].flag_value == "d,h");
}

TEST_CASE("flags alone are a complete config") {
  FlagValues f;
  f.command = "burgers";
  f.scheme = "a";
  f.paper_exact_dt = true;
  const RunConfig c = parse_config(nullptr, f);
  CHECK(c.command == Command::burgers);
  CHECK(c.paper_exact_dt);
  CHECK(c.Re == 100.0);
}

TEST_CASE("command defaults") {
  FlagValues f;
  f.command = "poisson";
  const RunConfig p = parse_config(nullptr, f);
  CHECK(p.domain == "punctured");
  CHECK(p.resolutions.size() == 3);
  CHECK(p.kinds == std::vector<OperatorKind>{OperatorKind::laplacian});
  f.command = "converge";
  CHECK(parse_config(nullptr, f).resolutions.size() == 4);
  f.command = "stability";
  CHECK(parse_config(nullptr, f).s == 1.0 / 20.0);
}

TEST_CASE("validation names the field") {
  CHECK(error_of({{"command", "rp"}, {"s", -1.0}}).find("`s`") != std::string::npos);
  CHECK(error_of({{"command", "rp"}, {"scheme", "z"}}).find("`scheme`") != std::string::npos);
  CHECK(error_of({{"command", "rp"}, {"kind", "curl"}}).find("`kind`") != std::string::npos);
  CHECK(error_of({{"command", "rp"}, {"samples", "many"}}).find("`samples`") != std::string::npos);
  CHECK(error_of({{"command", "fly"}}).find("`command`") != std::string::npos);
  CHECK(error_of({{"scheme", "a"}}).find("`command`") != std::string::npos);
  CHECK(error_of({{"command", "poisson"}, {"domain", "periodic"}}).find("`domain`") !=
        std::string::npos);
  CHECK(error_of({{"command", "converge"}, {"resolutions", {0.05, 0.025}}}).find("`resolutions`") !=
        std::string::npos);
  CHECK_THROWS_AS(parse_config(nullptr, {}), ConfigError);
}

TEST_CASE("hash ignores the output directory only") {
  const json doc = {{"command", "rp"}, {"scheme", "d"}};
  RunConfig a = parse_config(&doc, {});
  RunConfig b = a;
  b.out = "elsewhere";
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  CHECK(a.to_json()["scheme"] == json::array({"d"}));
}

TEST_CASE("command names") {
  for (auto c : {Command::nodes, Command::rp, Command::converge, Command::stability, Command::burgers,
                 Command::poisson})
    CHECK(parse_command(to_string(c)) == c);
}
