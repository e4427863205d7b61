#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "shieldroute/error.hpp"
#include "shieldroute/gds.hpp"
#include "shieldroute/guardplan.hpp"
#include "shieldroute/netlist.hpp"
#include "test_support.hpp"

using namespace testsupport;
namespace fs = std::filesystem;

namespace {

// Every file must raise a library error; anything else (or silence) fails.
void run_corpus(const std::string& dir, const std::function<void(const std::string&)>& parse) {
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(data_path("malformed/" + dir))) {
    ++files;
    const std::string body = slurp(entry.path().string());
    try {
      parse(body);
      ADD_FAILURE() << entry.path() << " parsed without error";
    } catch (const Error& e) {
      EXPECT_STRNE(e.what(), "") << entry.path();
    } catch (const std::exception& e) {
      ADD_FAILURE() << entry.path() << " raised a non-library exception: " << e.what();
    }
  }
  EXPECT_GE(files, 10u) << dir;
}

}  // namespace

TEST(Malformed, Tech) {
  run_corpus("tech", [](const std::string& s) { parse_tech(s); });
}

TEST(Malformed, NativeNetlist) {
  run_corpus("netlist", [](const std::string& s) { parse_netlist(s, NetlistFormat::Native); });
}

TEST(Malformed, Verilog) {
  run_corpus("verilog", [](const std::string& s) { parse_netlist(s, NetlistFormat::Verilog); });
}

TEST(Malformed, Layout) {
  run_corpus("layout", [](const std::string& s) { read_layout(s, bundled_tech()); });
}

TEST(Malformed, GuardPlan) {
  run_corpus("guardplan", [](const std::string& s) { read_guard_plan(s); });
}

TEST(Malformed, LayerMap) {
  run_corpus("layermap", [](const std::string& s) { parse_layer_map(s, *bundled_tech()); });
}

TEST(Malformed, Gds) {
  run_corpus("gds", [](const std::string& s) {
    read_gds({s.begin(), s.end()}, default_layer_map(*bundled_tech()), bundled_tech());
  });
}

TEST(Malformed, TextErrorsPointAtTheLine) {
  try {
    read_layout(slurp(data_path("malformed/layout/08_bad_number.layout")), bundled_tech());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  try {
    parse_tech(slurp(data_path("malformed/tech/03_bad_number.tech")));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 12u);
  }
}

TEST(Malformed, TruncatedGdsReportsOffset) {
  const std::string s = slurp(data_path("malformed/gds/03_truncated_payload.gds"));
  try {
    split_records({s.begin(), s.end()});
    FAIL();
  } catch (const StreamError& e) {
    EXPECT_LT(e.offset(), s.size());
  }
}
