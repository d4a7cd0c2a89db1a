#include <gtest/gtest.h>

#include <sstream>

#include "ccr/io.hpp"
#include "ccr/simulation.hpp"

using namespace ccr;

namespace {

const char* kPolicies =
    "policy_id,year,n_claims,deductible,limit,x1\n"
    "A,2010,2,0,,0.5\n"
    "B,2010,0,0,,1.5\n";
const char* kClaims =
    "policy_id,year,amount,at_limit,size\n"
    "A,2010,120.5,0,3\n"
    "A,2010,80,0,1\n";

std::string error_of(const std::string& pol, const std::string& clm, Scheme s = Scheme::Complete) {
  try {
    build_dataset(parse_csv(pol), parse_csv(clm), s);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, QuotingAndLineEndings) {
  const auto t = parse_csv("\xEF\xBB\xBF" "a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n\n1,,3\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x,1");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[0][2], "two\nlines");
  EXPECT_EQ(t.rows[1][1], "");
  EXPECT_EQ(t.lines[1], 5);
}

TEST(Csv, WriterRoundTrip) {
  std::ostringstream os;
  CsvWriter w(os);
  w.row("id", "value", "note");
  w.row("a,b", 0.1, std::string("he said \"no\""));
  w.row("c", 1e300, "line\nbreak");
  const auto t = parse_csv(os.str());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "a,b");
  EXPECT_EQ(parse_number(t.rows[0][1], "x"), 0.1);
  EXPECT_EQ(t.rows[0][2], "he said \"no\"");
  EXPECT_EQ(parse_number(t.rows[1][1], "x"), 1e300);
  EXPECT_EQ(t.rows[1][2], "line\nbreak");
}

TEST(Csv, MalformedInputRejected) {
  EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), ValidationError);
  EXPECT_THROW(parse_csv("a,b\n\"1,2\n"), ValidationError);
  EXPECT_THROW(parse_csv("a,b\n1\"x\",2\n"), ValidationError);
  EXPECT_THROW(parse_csv(""), ValidationError);
  EXPECT_THROW(parse_number("1.5x", "f"), ValidationError);
  EXPECT_THROW(parse_integer("2.5", "f"), ValidationError);
  EXPECT_EQ(parse_number(" inf ", "f"), kInf);
  EXPECT_EQ(format_number(kInf), "inf");
}

TEST(Dataset, ToyFilesJoinOnPolicyAndYear) {
  const Dataset d = build_dataset(parse_csv(kPolicies), parse_csv(kClaims), Scheme::Complete);
  ASSERT_EQ(d.records.size(), 2u);
  EXPECT_EQ(d.policy_columns, std::vector<std::string>{"x1"});
  EXPECT_EQ(d.claim_columns, std::vector<std::string>{"size"});
  const auto& a = d.records[0];
  EXPECT_EQ(a.n, 2);
  EXPECT_EQ(a.limit, kInf);
  EXPECT_EQ(a.x, std::vector<double>{0.5});
  ASSERT_EQ(a.claims.size(), 2u);
  EXPECT_EQ(a.claims[0].amount, 120.5);
  EXPECT_EQ(a.claims[1].x, std::vector<double>{1.0});
  EXPECT_TRUE(d.records[1].claims.empty());
}

TEST(Dataset, OrphanClaimsListed) {
  const std::string msg = error_of(kPolicies, std::string(kClaims) + "Z,2010,5,0,1\nA,2011,5,0,1\n");
  EXPECT_NE(msg.find("not in the policy file"), std::string::npos);
  EXPECT_NE(msg.find("Z (year 2010)"), std::string::npos);
  EXPECT_NE(msg.find("A (year 2011)"), std::string::npos);
}

TEST(Dataset, CountMismatchNamesPolicy) {
  const std::string msg = error_of(kPolicies, "policy_id,year,amount,at_limit,size\nA,2010,120.5,0,3\n");
  EXPECT_NE(msg.find("policy A"), std::string::npos);
  EXPECT_NE(msg.find("n_claims=2"), std::string::npos);
}

TEST(Dataset, NegativeAmountNamesPolicy) {
  const std::string msg = error_of(kPolicies, "policy_id,year,amount,at_limit,size\nA,2010,-3,0,3\nA,2010,1,0,1\n");
  EXPECT_NE(msg.find("policy A"), std::string::npos);
  EXPECT_NE(msg.find("negative"), std::string::npos);
}

TEST(Dataset, OtherValidationErrors) {
  EXPECT_NE(error_of("policy_id,year,n_claims,deductible\nA,1,0,0\n", "policy_id,year,amount,at_limit\n")
                .find("missing column 'limit'"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kPolicies) + "A,2010,0,0,,1\n", kClaims).find("duplicate policy A"),
            std::string::npos);
  EXPECT_NE(error_of("policy_id,year,n_claims,deductible,limit\nA,1,1,10,100\n",
                     "policy_id,year,amount,at_limit\nA,1,90,1\n")
                .find("at-limit claim in complete data"),
            std::string::npos);
  EXPECT_NE(error_of("policy_id,year,n_claims,deductible,limit\nA,1,1,10,100\n",
                     "policy_id,year,amount,at_limit\nA,1,90,2\n", Scheme::PerLossCensored)
                .find("at_limit must be 0 or 1"),
            std::string::npos);
}

TEST(Dataset, CensoredZeroPaymentIsBelowDeductible) {
  const Dataset d = build_dataset(parse_csv("policy_id,year,n_claims,deductible,limit\nA,1,3,10,100\n"),
                                  parse_csv("policy_id,year,amount,at_limit\nA,1,0,0\nA,1,90,1\nA,1,40,0\n"),
                                  Scheme::PerLossCensored);
  const auto& c = d.records[0].claims;
  EXPECT_EQ(c[0].status, ClaimStatus::BelowDeductible);
  EXPECT_EQ(c[1].status, ClaimStatus::AtLimit);
  EXPECT_EQ(c[2].status, ClaimStatus::Interior);
}

TEST(Dataset, WriteThenReadIsIdentity) {
  for (Scheme s : {Scheme::Complete, Scheme::PerLossCensored, Scheme::PerPaymentTruncated}) {
    const auto g = s == Scheme::Complete ? design_regression(0.4, 200) : design_incomplete(0.4, s, 200);
    const Dataset d = generate_synthetic_dataset(g, 6);
    std::ostringstream p, c;
    write_dataset(d, p, c);
    const Dataset e = build_dataset(parse_csv(p.str()), parse_csv(c.str()), s);
    ASSERT_EQ(e.records.size(), d.records.size());
    EXPECT_EQ(e.policy_columns, d.policy_columns);
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const auto &a = d.records[i], &b = e.records[i];
      EXPECT_EQ(a.id, b.id);
      EXPECT_EQ(a.n, b.n);
      EXPECT_EQ(a.x, b.x);
      EXPECT_EQ(a.deductible, b.deductible);
      EXPECT_EQ(a.limit, b.limit);
      ASSERT_EQ(a.claims.size(), b.claims.size());
      for (std::size_t j = 0; j < a.claims.size(); ++j) {
        EXPECT_EQ(a.claims[j].amount, b.claims[j].amount);
        EXPECT_EQ(a.claims[j].status, b.claims[j].status);
      }
    }
  }
}
