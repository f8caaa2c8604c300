#include <gtest/gtest.h>

#include "cmvn/cmvn.hpp"

TEST(StudyTest, ParseNames) {
  EXPECT_EQ(cmvn::parse_study("single-outlier"), cmvn::Study::single_outlier);
  EXPECT_EQ(cmvn::parse_study("uniform-noise"), cmvn::Study::uniform_noise);
  EXPECT_THROW(cmvn::parse_study("other"), cmvn::DomainError);
  EXPECT_THROW(cmvn::run_uniform_noise_study(1, 0), cmvn::DomainError);
}

TEST(StudyTest, UniformNoiseReport) {
  const auto rep = cmvn::run_uniform_noise_study(2, 4, 1);
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto& row = rep.rows[0];
  EXPECT_EQ(row.cells.size(), 6u);
  EXPECT_EQ(row.noise_count, 15u);
  ASSERT_EQ(rep.checks.size(), 3u);
  for (const auto& c : rep.checks) {
    EXPECT_FALSE(c.observed.empty());
    EXPECT_FALSE(c.tolerance.empty());
  }
  EXPECT_TRUE(rep.checks[0].asserted);
  EXPECT_FALSE(rep.checks[2].asserted);
  ASSERT_TRUE(row.ari.has_value());
  EXPECT_GE(*row.ari, -1.0);
  EXPECT_LE(*row.ari, 1.0);
}

TEST(StudyTest, DeterministicReport) {
  const auto a = cmvn::replication_report_to_json(cmvn::run_uniform_noise_study(3, 3, 1)).dump();
  const auto b = cmvn::replication_report_to_json(cmvn::run_uniform_noise_study(3, 3, 2)).dump();
  EXPECT_EQ(a, b);
}

TEST(StudyTest, SingleOutlierShape) {
  const auto rep = cmvn::run_single_outlier_study(1, 3);
  ASSERT_EQ(rep.rows.size(), 10u);
  EXPECT_EQ(*rep.rows.front().c, 2.0);
  EXPECT_EQ(*rep.rows.back().c, 20.0);
  for (const auto& r : rep.rows) EXPECT_EQ(r.cells.size(), 6u);
  ASSERT_NE(rep.find("C1"), nullptr);
  ASSERT_NE(rep.find("C4"), nullptr);
  EXPECT_TRUE(rep.find("C2")->asserted);
  EXPECT_FALSE(rep.find("C4")->asserted);
  const auto j = cmvn::replication_report_to_json(rep);
  EXPECT_EQ(j["study"], "single-outlier");
  EXPECT_EQ(j["rows"].size(), 10u);
  EXPECT_FALSE(j.contains("seconds"));
}
