#include "oracles.hpp"

#include "proxicause/error.hpp"
#include "proxicause/io.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <sstream>

using namespace proxicause;

namespace {

std::string parse_error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(DagIo, RoundTrip) {
  for (const char* f : {"fig1", "fig2a", "fig2b", "fig2c", "fig2d", "fig4a", "fig4b", "fig4c"}) {
    auto dag = read_dag(oracle::fixture(std::string(f) + ".json"));
    auto again = parse_dag(dag_to_json(dag));
    EXPECT_EQ(again.edges(), dag.edges()) << f;
    EXPECT_EQ(again.roles().x, dag.roles().x) << f;
    EXPECT_EQ(again.roles().z, dag.roles().z) << f;
    EXPECT_EQ(again.scopes().m, dag.scopes().m) << f;
    EXPECT_EQ(again.selection_node(), dag.selection_node()) << f;
  }
}

TEST(DagIo, MalformedJsonReportsLineAndColumn) {
  const auto msg = parse_error_message([] { parse_dag("{\n  \"nodes\": [\n  ,]\n}", "g.json"); });
  EXPECT_EQ(msg.rfind("g.json:3:", 0), 0u) << msg;
}

TEST(DagIo, BadEdgeReportsPointer) {
  const auto msg = parse_error_message(
      [] { parse_dag(R"({"nodes": [{"name": "A"}, {"name": "B"}], "edges": [["A", "B"], ["A"]]})", "g.json"); });
  EXPECT_NE(msg.find("/edges/1"), std::string::npos) << msg;
}

TEST(DagIo, GraphErrorsNameTheSource) {
  const auto msg = parse_error_message(
      [] { parse_dag(R"({"nodes": [{"name": "A"}, {"name": "B"}], "edges": [["A", "B"], ["B", "A"]]})", "g.json"); });
  EXPECT_EQ(msg.rfind("g.json:", 0), 0u) << msg;
  EXPECT_NE(msg.find("cycle"), std::string::npos) << msg;
}

TEST(ScmIo, RoundTripSamplesIdentically) {
  for (const auto& name : builtin_names()) {
    auto ex = builtin_example(name);
    auto file = parse_scm(scm_to_json(ex.scm, ex.selection));
    auto a = sample(ex.scm, 200, 5);
    auto b = sample(file.scm, 200, 5);
    EXPECT_TRUE((a.values().array() == b.values().array()).all()) << name;
    EXPECT_EQ(apply_selection(a, ex.selection, 6), apply_selection(b, file.selection, 6)) << name;
  }
}

TEST(ScmIo, UnknownKindIsLocated) {
  const auto msg = parse_error_message([] {
    parse_scm(R"({"variables": [{"name": "X", "role": "treatment", "kind": "magic"}],
                  "selection": {"kind": "threshold", "clauses": []}})",
              "m.json");
  });
  EXPECT_NE(msg.find("/variables/0"), std::string::npos) << msg;
}

TEST(Csv, ReadsHeaderAndValues) {
  std::istringstream in("X,Y\n1,2\n3.5,-4e-1\n");
  auto t = read_csv(in);
  EXPECT_EQ(t.names(), (std::vector<std::string>{"X", "Y"}));
  ASSERT_EQ(t.rows(), 2);
  EXPECT_DOUBLE_EQ(t.values()(1, 1), -0.4);
}

TEST(Csv, RejectsRaggedAndNonNumeric) {
  std::istringstream ragged("X,Y\n1\n");
  const auto msg = parse_error_message([&] { read_csv(ragged, "d.csv"); });
  EXPECT_EQ(msg.rfind("d.csv:2:", 0), 0u) << msg;
  std::istringstream text("X\nabc\n");
  EXPECT_THROW(read_csv(text), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), ParseError);
}

TEST(Format, SixSignificantDigits) {
  EXPECT_EQ(format_number(30.931234), "30.9312");
  EXPECT_EQ(format_number(0.0123456789), "0.0123457");
  EXPECT_EQ(format_number(2.0), "2");
}
