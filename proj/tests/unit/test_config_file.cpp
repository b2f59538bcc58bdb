#include <sstream>

#include <doctest.h>

#include "driftbench/config_file.hpp"
#include "driftbench/types.hpp"

using namespace driftbench;

TEST_CASE("key/value reader skips comments and blank lines") {
  std::istringstream in("# header\n\nrho = 100   # trailing\n  seed=7\nempty =\n");
  const auto kv = read_key_values(in, "cfg");
  REQUIRE(kv.size() == 3);
  CHECK(kv[0].key == "rho");
  CHECK(kv[0].value == "100");
  CHECK(kv[0].line == 3);
  CHECK(kv[1].key == "seed");
  CHECK(kv[1].value == "7");
  CHECK(kv[2].value.empty());
}

TEST_CASE("key/value reader reports the failing line") {
  std::istringstream in("a = 1\nnot a pair\n");
  try {
    read_key_values(in, "cfg");
    FAIL("expected a ParseError");
  } catch (const ParseError& err) {
    CHECK(err.line() == 2);
    CHECK(std::string(err.what()).find("cfg:2") != std::string::npos);
  }
  std::istringstream empty_key(" = 3\n");
  CHECK_THROWS_AS(read_key_values(empty_key, "cfg"), ParseError);
}

TEST_CASE("number parsing is strict") {
  double v = 0;
  CHECK(try_parse_real(" 1.5 ", v));
  CHECK(v == 1.5);
  CHECK(try_parse_real("+2e3", v));
  CHECK(v == 2000.0);
  CHECK_FALSE(try_parse_real("1.5x", v));
  CHECK_FALSE(try_parse_real("", v));
  CHECK_FALSE(try_parse_real("nan", v));
  CHECK_FALSE(try_parse_real("inf", v));
  CHECK(parse_unsigned("42", "n") == 42u);
  CHECK_THROWS_AS(parse_unsigned("-1", "n"), UsageError);
  CHECK_THROWS_AS(parse_unsigned("4.2", "n"), UsageError);
  CHECK_THROWS_AS(parse_real("abc", "x"), UsageError);
}

TEST_CASE("split trims every field") {
  CHECK(split(" A, B ,C", ',') == std::vector<std::string>{"A", "B", "C"});
  CHECK(split("", ',') == std::vector<std::string>{""});
}
