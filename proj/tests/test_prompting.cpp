#include <thread>

#include <gtest/gtest.h>

#include "strux/prompting.hpp"
#include "strux/random.hpp"
#include "support.hpp"

using namespace strux;

TEST(Templates, EmbeddedCopiesMatchFiles) {
  EXPECT_EQ(std::string(templates::kMainPrompt), read_file(fixture::source_path("templates/main_prompt.txt")));
  EXPECT_EQ(std::string(templates::kReinferencePrompt),
            read_file(fixture::source_path("templates/reinference_prompt.txt")));
}

TEST(Templates, LoadFromFile) {
  const auto t = PromptTemplate::from_file(fixture::source_path("templates/main_prompt.txt"));
  EXPECT_EQ(t.text(), main_template().text());
  EXPECT_THROW(PromptTemplate::from_file("/nonexistent/template.txt"), Error);
}

TEST(Templates, PlaceholdersMustAppearOnce) {
  const auto code = [](const std::string& s) {
    try {
      PromptTemplate t(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  EXPECT_EQ(code("no placeholders"), ErrorCode::TemplateError);
  EXPECT_EQ(code("{context} only"), ErrorCode::TemplateError);
  EXPECT_EQ(code("{context} {question} {context}"), ErrorCode::TemplateError);
  EXPECT_NO_THROW(PromptTemplate("{question} then {context}"));
}

TEST(MainPrompt, HandSubstitutionMatches) {
  const std::vector<std::string> docs{"Perseverance landed on Mars in February 2021.",
                                      "Curiosity landed on Mars in August 2012."};
  const std::string q = "Which Mars rover landed most recently?";
  std::string want = read_file(fixture::source_path("templates/main_prompt.txt"));
  want.replace(want.find("{context}"), 9,
               "Doc 1: Perseverance landed on Mars in February 2021.\n"
               "Doc 2: Curiosity landed on Mars in August 2012.");
  want.replace(want.find("{question}"), 10, q);
  const std::string got = build_main_prompt(q, docs);
  EXPECT_EQ(got, want);
  EXPECT_NE(got.find("<context>\nDoc 1: Perseverance"), std::string::npos);
  EXPECT_TRUE(ends_with(got, "Question: " + q + "\n"));
}

TEST(MainPrompt, PlaceholderTextInsideValuesIsNotExpanded) {
  const std::string q = "What does {question} or {context} mean?";
  const std::string got = build_main_prompt(q, {"a {question} doc"});
  EXPECT_NE(got.find("Question: " + q), std::string::npos);
  EXPECT_NE(got.find("Doc 1: a {question} doc"), std::string::npos);
}

TEST(MainPrompt, EmptyDocs) {
  try {
    build_main_prompt("q", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDocs);
  }
}

TEST(MainPrompt, BundleFields) {
  const auto b = make_prompt_bundle("q?", {"x", "y"});
  EXPECT_EQ(b.context, "Doc 1: x\nDoc 2: y");
  EXPECT_EQ(b.question, "q?");
  EXPECT_EQ(b.main_prompt, build_main_prompt("q?", {"x", "y"}));
}

TEST(ReinferencePrompt, BodiesJoinedByBlankLine) {
  EXPECT_EQ(reinference_context({{"table", "| A | B |"}, {"date_comparison", "- x: 1"}}),
            "| A | B |\n\n- x: 1");
  EXPECT_EQ(reinference_context({{"chunk", "t"}}), "t");
  const std::string p = build_reinference_prompt("Q?", {{"table", "| A | B |"}, {"list", "- x: 1"}});
  EXPECT_NE(p.find("<context>\n| A | B |\n\n- x: 1\n</context>"), std::string::npos);
  EXPECT_EQ(p.find("table"), std::string::npos);
}

TEST(ReinferencePrompt, NoFormats) {
  try {
    build_reinference_prompt("q", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFormats);
  }
}

TEST(ReinferencePrompt, CaseStudyCarriesNoDocumentText) {
  const Trajectory t = parse_trajectory(read_file(fixture::data_path("case_study/trace.txt")));
  const auto docs =
      fixture::load_json(fixture::data_path("case_study/docs.json")).get<std::vector<std::string>>();
  const std::string p = build_reinference_prompt("Which film?", extract_formats(t));
  EXPECT_NE(p.find("| The Girl in Possession | Monty Banks | 15 July 1897 |"), std::string::npos);
  EXPECT_NE(p.find("- José Luis Cuerda: 1947-02-18"), std::string::npos);
  // The film title alone is 8 tokens and belongs in the table, so probe with 10.
  for (const auto& d : docs) {
    EXPECT_EQ(p.find(d), std::string::npos);
    EXPECT_FALSE(NgramIndex({d}, 10).contains_copy(p)) << d;
  }
}

TEST(Fidelity, RemovingSubstitutionsGivesSkeleton) {
  std::mt19937_64 gen(5);
  const std::string alphabet = "ab {}\n<>:|Doc";
  for (const PromptTemplate* tpl : {&main_template(), &reinference_template()}) {
    const std::string& raw = tpl->text();
    const std::size_t cpos = raw.find("{context}");
    const std::size_t qpos = raw.find("{question}");
    ASSERT_LT(cpos, qpos);
    for (int i = 0; i < 200; ++i) {
      std::string ctx, q;
      for (auto n = rng::uniform_below(gen, 40); n > 0; --n) ctx.push_back(alphabet[rng::uniform_below(gen, alphabet.size())]);
      for (auto n = rng::uniform_below(gen, 20); n > 0; --n) q.push_back(alphabet[rng::uniform_below(gen, alphabet.size())]);
      std::string out = tpl->render(ctx, q);
      // Cut the question first: it sits after the context.
      out.erase(qpos - 9 + ctx.size(), q.size());
      out.erase(cpos, ctx.size());
      ASSERT_EQ(out, tpl->skeleton());
    }
  }
  std::string expect = main_template().text();
  expect.erase(expect.find("{question}"), 10);
  expect.erase(expect.find("{context}"), 9);
  EXPECT_EQ(main_template().skeleton(), expect);
}

TEST(Formats, PredefinedSet) {
  const auto& p = predefined_formats();
  ASSERT_EQ(p.size(), 5u);
  const std::vector<std::string> names{"Chunk", "Knowledge Graph", "Table", "Catalogue", "Algorithm"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(p[i].name, names[i]);
    EXPECT_EQ(p[i].origin, FormatOrigin::Predefined);
    // Descriptions are the wording the model sees in the main prompt.
    EXPECT_NE(main_template().text().find(p[i].description), std::string::npos) << p[i].name;
  }
  EXPECT_TRUE(is_predefined_format("knowledge graph"));
  EXPECT_TRUE(is_predefined_format(" TABLE "));
  EXPECT_FALSE(is_predefined_format("date_comparison"));
}

TEST(Registry, DynamicRegistration) {
  FormatRegistry reg;
  const FormatSpec d = reg.register_dynamic_format("date_comparison");
  EXPECT_EQ(d.origin, FormatOrigin::Dynamic);
  EXPECT_EQ(d.name, "date_comparison");
  EXPECT_EQ(reg.register_dynamic_format("date_comparison"), d);
  EXPECT_EQ(reg.snapshot().size(), 6u);

  const FormatSpec t = reg.register_dynamic_format("table");
  EXPECT_EQ(t.origin, FormatOrigin::Predefined);
  EXPECT_EQ(t.name, "Table");
  EXPECT_EQ(reg.snapshot().size(), 6u);

  for (const char* bad : {"", "  ", "x/y"}) {
    try {
      reg.register_dynamic_format(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidName);
    }
  }

  const auto j = reg.to_json();
  EXPECT_EQ(j.back()["name"], "date_comparison");
  EXPECT_EQ(j.back()["origin"], "Dynamic");
  EXPECT_EQ(j.front()["origin"], "Predefined");
}

TEST(Registry, InsertionOrderAndConcurrentRegistration) {
  FormatRegistry reg;
  reg.register_dynamic_format("b_first");
  reg.register_dynamic_format("a_second");
  auto snap = reg.snapshot();
  EXPECT_EQ(snap[5].name, "b_first");
  EXPECT_EQ(snap[6].name, "a_second");

  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&reg] {
      for (int i = 0; i < 50; ++i) reg.register_dynamic_format("fmt_" + std::to_string(i));
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(reg.snapshot().size(), 7u + 50u);
}
