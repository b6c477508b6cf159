#include <gtest/gtest.h>

#include <limits>
#include <sstream>
#include <string>

#include "prospectus/config.hpp"
#include "prospectus/io.hpp"

namespace prospectus {
namespace {

using namespace io;

template <class F>
std::string parse_message(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "no error";
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.seed, 20240601u);
  EXPECT_DOUBLE_EQ(c.cpt.lambda, 20.0494);
  EXPECT_DOUBLE_EQ(c.utility.b, UtilityCoefficients::survey_means().b);
  EXPECT_EQ(c.logit.n_draws, 500u);
  EXPECT_TRUE(std::holds_alternative<StaticReference>(c.reference));
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"defaults.json", "fixture.json", "rational-population.json"}) {
    EXPECT_NO_THROW(load_config(std::string(PROSPECTUS_SOURCE_DIR) + "/configs/" + name)) << name;
  }
}

TEST(Config, UnknownNestedKeyRejected) {
  EXPECT_NE(parse_message([] { parse_config(R"({"cpt": {"lamda": 2}})"); }).find("unknown key 'config.cpt.lamda'"),
            std::string::npos);
}

TEST(Config, WrongTypeRejected) {
  EXPECT_NE(parse_message([] { parse_config(R"({"seed": "abc"})"); }).find("'config.seed' has the wrong type"),
            std::string::npos);
}

TEST(Config, SyntaxErrorCarriesLineAndColumn) {
  try {
    parse_config("{\n  \"seed\": 1,\n  \"cpt\": {,}\n}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 0u);
  }
}

TEST(Config, NestedInvariantsChecked) {
  EXPECT_NE(parse_message([] { parse_config(R"({"cpt": {"beta_gain": 1.5}})"); }).find("invalid configuration"),
            std::string::npos);
  EXPECT_NE(parse_message([] { parse_config(R"({"estimation": {"logit": {"n_draws": 10}}})"); })
                .find("n_draws"),
            std::string::npos);
  EXPECT_NE(parse_message([] { parse_config(R"({"reference": {"mode": "dynamic"}})"); }).find("mode"),
            std::string::npos);
}

TEST(Csv, MissingColumnNamed) {
  std::istringstream in("respondent_id,task_id,walk,wait,ride,tariff,chosen\nr1,t1,0,1,2,3,1\n");
  const auto t = read_csv(in);
  EXPECT_NE(parse_message([&] { read_choices(t); }).find("missing column 'mode'"), std::string::npos);
}

TEST(Csv, BadNumberLocated) {
  std::istringstream in(
      "# comment\nrespondent_id,item_id,u_lo,u_hi,p_lo,reference,ce\nr1,i1,0,10,0.5,0,4\nr1,i2,0,10,x,0,4\n");
  const auto t = read_csv(in);
  try {
    read_certainty_equivalents(t);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.column(), 5u);
  }
}

TEST(Csv, WrongFieldCountLocated) {
  std::istringstream in("a,b\n1,2\n1,2,3\n");
  try {
    read_csv(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, EmptyFileRejected) {
  std::istringstream in("");
  EXPECT_NE(parse_message([&] { read_csv(in); }).find("empty file"), std::string::npos);
}

TEST(Csv, QuotedFields) {
  std::istringstream in("x,y\n\"a,b\",\"say \"\"hi\"\"\"\n");
  const auto t = read_csv(in);
  EXPECT_EQ(t.rows[0].fields[0], "a,b");
  EXPECT_EQ(t.rows[0].fields[1], "say \"hi\"");
}

TEST(Csv, CertaintyEquivalentRoundTrip) {
  const std::vector<CertaintyEquivalentObservation> obs{{"r1", -10.0, 0.0, 0.25, 0.0, -3.125},
                                                        {"r,2", 0.0, 50.0, 0.9, 0.0, 1.0 / 3.0}};
  std::stringstream ss;
  io::write_certainty_equivalents(ss, obs);
  const auto back = read_certainty_equivalents(read_csv(ss));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].respondent_id, "r,2");
  EXPECT_DOUBLE_EQ(back[0].ce, -3.125);
  EXPECT_NEAR(back[1].ce, 1.0 / 3.0, 1e-12);
}

TEST(Csv, LotteryRoundTrip) {
  const std::vector<LotteryResponse> rows{{"a", "g1", Frame::Gain, 0.1, 20.0, 0.0, 4.5},
                                          {"a", "l1", Frame::Loss, 0.1, 0.0, 20.0, -1.5},
                                          {"a", "m1", Frame::Mixed, 0.5, 0.0, 10.0, 25.0}};
  std::stringstream ss;
  io::write_lotteries(ss, rows);
  const auto back = read_lotteries(read_csv(ss));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].frame, Frame::Mixed);
  EXPECT_DOUBLE_EQ(back[1].response, -1.5);
}

TEST(Csv, UnknownFrameLocated) {
  std::istringstream in("respondent_id,lottery_id,frame,p,gain,loss,response\na,g1,profit,0.1,20,0,4\n");
  const auto t = read_csv(in);
  try {
    read_lotteries(t);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 3u);
  }
}

TEST(Json, TwelveSignificantDigits) {
  io::Json j;
  j["a"] = 0.1 + 0.2;
  j["b"] = io::number(std::numeric_limits<double>::infinity());
  j["c"] = 3;
  const std::string s = io::dump(j);
  EXPECT_NE(s.find("\"a\": 0.3"), std::string::npos) << s;
  EXPECT_EQ(s.find("0.30000000000000004"), std::string::npos);
  EXPECT_NE(s.find("\"b\": \"inf\""), std::string::npos) << s;
  EXPECT_NE(s.find("\"c\": 3"), std::string::npos) << s;
}

}  // namespace
}  // namespace prospectus
