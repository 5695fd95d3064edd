#include <gtest/gtest.h>

#include "commands.hpp"
#include "strux/density.hpp"
#include "strux/trajectory.hpp"
#include "support.hpp"

using namespace strux;
using namespace strux::density;

namespace {

const FactSet kFacts{{"alpha beta gamma", "delta epsilon", "zeta eta theta iota"},
                     Matcher::NormalizedContainment};

// Text with every fact of kFacts once and filler up to `length` tokens.
std::string with_facts(std::size_t length) {
  std::string s = "alpha beta gamma delta epsilon zeta eta theta iota";
  for (std::size_t i = 9; i < length; ++i) s += " filler" + std::to_string(i);
  return s;
}

std::string filler(std::size_t length) {
  std::string s;
  for (std::size_t i = 0; i < length; ++i) s += (i ? " f" : "f") + std::to_string(i);
  return s;
}

}  // namespace

TEST(Info, Examples) {
  EXPECT_EQ(info_content(with_facts(30), kFacts), 3u);
  EXPECT_EQ(info_content("", kFacts), 0u);
  EXPECT_EQ(info_content("Alpha, Beta; GAMMA!", kFacts), 1u);
  // Containment respects token boundaries.
  EXPECT_EQ(info_content("alphabeta gamma", FactSet{{"beta gamma"}}), 0u);
}

TEST(Info, CaseStudyTableUnderTokenSubset) {
  const auto formats =
      extract_formats(parse_trajectory(read_file(fixture::data_path("case_study/trace.txt"))));
  const FactSet facts{{"monty banks 15 july 1897", "josé luis cuerda 18 february 1947"},
                      Matcher::TokenSubset};
  EXPECT_EQ(info_content(formats[0].content, facts), 2u);
  // Cell bars are punctuation, so the phrases survive containment too.
  EXPECT_EQ(info_content(formats[0].content, FactSet{facts.facts}), 2u);
  // Word order only matters for containment.
  const std::vector<std::string> shuffled{"1897 july 15 banks monty"};
  EXPECT_EQ(info_content(formats[0].content, FactSet{shuffled, Matcher::TokenSubset}), 1u);
  EXPECT_EQ(info_content(formats[0].content, FactSet{shuffled}), 0u);
}

TEST(Measure, Examples) {
  auto m = measure(with_facts(100), kFacts);
  EXPECT_EQ(m.info, 3u);
  EXPECT_EQ(m.length, 100u);
  EXPECT_DOUBLE_EQ(m.rho, 0.03);
  m = measure(with_facts(20), kFacts);
  EXPECT_DOUBLE_EQ(m.rho, 0.15);
  EXPECT_EQ(measure(filler(40), kFacts).rho, 0.0);
  EXPECT_THROW(measure("", kFacts), Error);
  EXPECT_THROW(measure(" the , ", kFacts), Error);
}

TEST(Measure, PluggableCounter) {
  const TokenCounter chars = [](std::string_view a) { return a.size(); };
  EXPECT_EQ(measure("alpha beta gamma", kFacts, chars).length, 16u);
}

TEST(Best, Examples) {
  const std::vector<StructureCandidate> c{{"raw_docs", with_facts(100)}, {"Table", with_facts(20)}};
  const auto b = best_structure(c, kFacts);
  EXPECT_EQ(b.label, "Table");
  EXPECT_DOUBLE_EQ(b.measurement.rho, 0.15);
  EXPECT_EQ(best_structure({{"only", "x"}}, kFacts).label, "only");
  EXPECT_EQ(best_structure({{"first", with_facts(20)}, {"second", with_facts(20)}}, kFacts).label, "first");
  try {
    best_structure({}, kFacts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCandidates);
  }
}

TEST(Ordering, ConstructedInstancePasses) {
  const auto rep = verify_ordering(with_facts(120), {{"Table", with_facts(24)}, {"timeline", with_facts(15)}},
                                   kFacts);
  EXPECT_DOUBLE_EQ(rep.raw.measurement.rho, 0.025);
  ASSERT_TRUE(rep.best_predefined);
  EXPECT_DOUBLE_EQ(rep.best_predefined->measurement.rho, 0.125);
  ASSERT_TRUE(rep.best_overall);
  EXPECT_EQ(rep.best_overall->label, "timeline");
  EXPECT_DOUBLE_EQ(rep.best_overall->measurement.rho, 0.2);
  EXPECT_TRUE(rep.has_self_defined);
  EXPECT_TRUE(rep.left_holds);
  EXPECT_TRUE(rep.right_holds);
  EXPECT_TRUE(rep.premise_met());
  EXPECT_EQ(rep.status(), "pass");
}

TEST(Ordering, DroppedFactFailsPremise) {
  // Loses a fact and barely shrinks.
  const auto rep = verify_ordering(with_facts(30), {{"Table", "alpha beta gamma delta epsilon " + filler(23)}},
                                   kFacts);
  EXPECT_FALSE(rep.premise_info);
  EXPECT_TRUE(rep.premise_length);
  EXPECT_EQ(rep.status(), "premise_unmet");
}

TEST(Ordering, IdenticalStructureFailsStrictInequality) {
  const std::string raw = with_facts(50);
  const auto rep = verify_ordering(raw, {{"Chunk", raw}}, kFacts);
  EXPECT_FALSE(rep.left_holds);
  EXPECT_FALSE(rep.premise_length);
  EXPECT_FALSE(rep.chain_holds());
}

TEST(Ordering, NoPredefinedCandidate) {
  const auto rep = verify_ordering(with_facts(50), {{"raw_docs", with_facts(50)}}, kFacts);
  EXPECT_FALSE(rep.best_predefined);
  EXPECT_EQ(rep.status(), "premise_unmet");
  EXPECT_EQ(verify_ordering(with_facts(50), {}, kFacts).status(), "premise_unmet");
}

TEST(Ordering, PredefinedDetectionIsCaseInsensitive) {
  const auto rep = verify_ordering(with_facts(100), {{"knowledge graph", with_facts(20)}}, kFacts);
  ASSERT_TRUE(rep.best_predefined);
  EXPECT_EQ(rep.best_predefined->label, "knowledge graph");
  EXPECT_FALSE(rep.has_self_defined);
}

TEST(DensityProperty, ScaleAndMonotonicity) {
  for (std::size_t len : {9u, 20u, 57u}) {
    const std::string a = with_facts(len);
    const auto once = measure(a, kFacts);
    const auto twice = measure(a + " " + a, kFacts);
    EXPECT_EQ(twice.length, 2 * once.length);
    EXPECT_EQ(twice.info, once.info);
    EXPECT_DOUBLE_EQ(twice.rho, once.rho / 2);
  }
  std::string a;
  std::size_t prev = 0;
  for (const char* piece : {"zeta", "eta theta", "iota alpha", "beta gamma", "x delta epsilon"}) {
    a += std::string(" ") + piece;
    const std::size_t now = info_content(a, kFacts);
    EXPECT_GE(now, prev);
    prev = now;
  }
  EXPECT_EQ(prev, 3u);
}

TEST(DensityProperty, BestIsOrderInvariantUpToTies) {
  std::vector<StructureCandidate> c{{"a", with_facts(40)}, {"b", with_facts(12)}, {"c", filler(5)},
                                    {"d", with_facts(30)}};
  const auto best = best_structure(c, kFacts);
  std::sort(c.begin(), c.end(), [](const auto& x, const auto& y) { return x.label > y.label; });
  EXPECT_EQ(best_structure(c, kFacts).label, best.label);
}

TEST(Synthetic, DeterministicAndPremiseSatisfying) {
  SyntheticSpec spec;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  ASSERT_EQ(a.size(), 100u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].raw_docs, b[i].raw_docs);
    EXPECT_EQ(a[i].candidates[1].body, b[i].candidates[1].body);
    const auto rep = verify_ordering(a[i].raw_docs, a[i].candidates, a[i].facts);
    EXPECT_TRUE(rep.premise_met()) << a[i].id;
    EXPECT_TRUE(rep.left_holds) << a[i].id;
    EXPECT_TRUE(rep.chain_holds()) << a[i].id;
    EXPECT_EQ(rep.raw.measurement.info, spec.facts_per_instance);
    EXPECT_TRUE(is_predefined_format(a[i].candidates[0].label));
    EXPECT_FALSE(is_predefined_format(a[i].candidates[1].label));
  }
  spec.seed = 8;
  EXPECT_NE(generate_synthetic(spec)[0].raw_docs, a[0].raw_docs);
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec s;
  s.predefined_ratio_max = 1.5;
  EXPECT_THROW(s.check(), Error);
  s = {};
  s.raw_tokens_min = 300;
  EXPECT_THROW(s.check(), Error);
  s = {};
  s.facts_per_instance = 25;
  EXPECT_THROW(s.check(), Error);
  const auto j = SyntheticSpec{}.to_json();
  EXPECT_EQ(SyntheticSpec::from_json(j).to_json(), j);
}

TEST(Report, MatchesShippedSchema) {
  const fixture::SchemaChecker schema(
      fixture::load_json(fixture::source_path("schemas/density_report.schema.json")));
  SyntheticSpec spec;
  spec.instances = 10;
  auto cases = cli::synthetic_cases(spec);
  cases.push_back({"raw-only", with_facts(30), kFacts, {}});
  const auto rep = cli::density_report(cases);
  EXPECT_TRUE(schema.check(rep).empty()) << schema.check(rep).front();
  EXPECT_EQ(rep["summary"]["n"], 11);
  EXPECT_EQ(rep["summary"]["premise_unmet"], 1);
  EXPECT_EQ(rep["instances"][10]["status"], "premise_unmet");

  auto broken = rep;
  broken["instances"][0]["status"] = "maybe";
  broken["summary"].erase("n");
  EXPECT_EQ(schema.check(broken).size(), 2u);
}
