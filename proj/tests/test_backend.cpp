#include <thread>

#include <gtest/gtest.h>

#include "strux/backend.hpp"
#include "support.hpp"

using namespace strux;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::ConfigError;
}

// Local endpoint for HttpBackend tests.
class FakeServer {
 public:
  FakeServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string base(const std::string& prefix = "/v1") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(mock_digest("abc", 7), sha256_hex(std::string("abc\0" "7", 5)));
  EXPECT_NE(mock_digest("abc", 7), mock_digest("abc", 8));
}

TEST(Mock, DigestFilesBeforeRules) {
  fixture::TempDir dir;
  const std::string prompt = "Question: x\n";
  write_file(dir.file(mock_digest(prompt, 3) + ".txt"), "<answer>from txt</answer>");
  write_file(dir.file(mock_digest(prompt, 4) + ".json"),
             R"({"text":"<answer>from json</answer>","logprobs":{"policy":[-1],"reference":[-2],"behavior":[-1.5]}})");
  write_file(dir.file(mock_digest(prompt, 5) + ".txt"), "txt loses");
  write_file(dir.file(mock_digest(prompt, 5) + ".json"), R"({"text":"json wins"})");
  write_file(dir.file("rules.json"), R"([{"match":"Question","responses":["r0","r1"]}])");

  MockBackend b(dir.path());
  SamplingParams p;
  p.seed = 3;
  EXPECT_EQ(b.generate(prompt, p).text, "<answer>from txt</answer>");
  EXPECT_FALSE(b.generate(prompt, p).logprobs);
  p.seed = 4;
  const auto r = b.generate(prompt, p);
  EXPECT_EQ(r.text, "<answer>from json</answer>");
  ASSERT_TRUE(r.logprobs);
  EXPECT_EQ(r.logprobs->reference, std::vector<double>{-2});
  p.seed = 5;
  EXPECT_EQ(b.generate(prompt, p).text, "json wins");
  p.seed = 10;
  EXPECT_EQ(b.generate(prompt, p).text, "r0");
  p.seed = 11;
  EXPECT_EQ(b.generate(prompt, p).text, "r1");
}

TEST(Mock, RulesFirstMatchAndErrors) {
  fixture::TempDir dir;
  write_file(dir.file("body.txt"), "<answer>file</answer>");
  write_file(dir.file("rules.json"), R"([
    {"match": "broken", "error": "down"},
    {"match": "file", "response_file": "body.txt"},
    {"match": "one", "response": "single"},
    {"match": "o", "response": "later"}
  ])");
  MockBackend b(dir.path());
  EXPECT_EQ(b.generate("a file please", {}).text, "<answer>file</answer>");
  EXPECT_EQ(b.generate("one", {}).text, "single");
  EXPECT_EQ(b.generate("two", {}).text, "later");
  EXPECT_EQ(code_of([&] { b.generate("broken file", {}); }), ErrorCode::BackendError);
  EXPECT_EQ(code_of([&] { b.generate("zzz", {}); }), ErrorCode::BackendError);
}

TEST(Mock, ConfigErrors) {
  EXPECT_EQ(code_of([] { MockBackend b("/nonexistent/fixtures"); }), ErrorCode::ConfigError);
  fixture::TempDir dir;
  write_file(dir.file("rules.json"), R"([{"response":"x"}])");
  EXPECT_EQ(code_of([&] { MockBackend b(dir.path()); }), ErrorCode::MissingField);
  write_file(dir.file("rules.json"), "{");
  EXPECT_EQ(code_of([&] { MockBackend b(dir.path()); }), ErrorCode::ParseError);
}

TEST(Mock, ShippedFixturesLoad) {
  MockBackend b(fixture::data_path("mock"));
  EXPECT_EQ(code_of([&] {
              b.generate("Question: Which river flows through the capital of the country where the "
                         "Tatra National Park is?\n\nRespond",
                         {});
            }),
            ErrorCode::BackendError);
}

TEST(Http, RequestBody) {
  HttpBackend completions({"http://h/v1", "m"});
  SamplingParams p;
  p.seed = 9;
  p.temperature = 0.5;
  auto j = completions.request_body("hello", p);
  EXPECT_EQ(j["prompt"], "hello");
  EXPECT_EQ(j["model"], "m");
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["logprobs"], 1);
  EXPECT_FALSE(j.contains("messages"));

  HttpBackend::Options o{"http://h/v1", "m"};
  o.chat = true;
  j = HttpBackend(o).request_body("hello", p);
  EXPECT_EQ(j["messages"][0]["content"], "hello");
  EXPECT_EQ(j["logprobs"], true);
  EXPECT_FALSE(j.contains("prompt"));
}

TEST(Http, ParseResponse) {
  auto r = HttpBackend::parse_response(
      R"({"choices":[{"text":"<answer>x</answer>","logprobs":{"token_logprobs":[null,-0.5,-1.0]}}]})");
  EXPECT_EQ(r.text, "<answer>x</answer>");
  ASSERT_TRUE(r.logprobs);
  EXPECT_EQ(r.logprobs->policy, (std::vector<double>{-0.5, -1.0}));
  EXPECT_EQ(r.logprobs->reference, r.logprobs->policy);
  EXPECT_EQ(r.logprobs->behavior, r.logprobs->policy);

  r = HttpBackend::parse_response(
      R"({"choices":[{"message":{"content":"hi"},"logprobs":{"content":[{"token":"hi","logprob":-0.1}]}}]})");
  EXPECT_EQ(r.text, "hi");
  EXPECT_EQ(r.logprobs->policy, std::vector<double>{-0.1});

  EXPECT_FALSE(HttpBackend::parse_response(R"({"choices":[{"text":"t"}]})").logprobs);
  for (const char* bad : {"not json", R"({"choices":[]})", R"({"error":{"message":"x"}})",
                          R"({"choices":[{"index":0}]})"}) {
    EXPECT_EQ(code_of([&] { HttpBackend::parse_response(bad); }), ErrorCode::BackendError) << bad;
  }
}

TEST(Http, OptionsValidation) {
  EXPECT_EQ(code_of([] { HttpBackend b({"", "m"}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { HttpBackend b({"localhost:8000", "m"}); }), ErrorCode::ConfigError);
}

TEST(Http, CompletionsRoundTrip) {
  FakeServer s;
  std::string seen_auth, seen_body;
  s.server().Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    res.set_content(R"({"choices":[{"text":"<answer>ok</answer>","logprobs":{"token_logprobs":[-0.25]}}]})",
                    "application/json");
  });
  HttpBackend::Options o{s.base("/v1/"), "tiny"};
  o.api_key = "secret";
  HttpBackend b(o);
  SamplingParams p;
  p.seed = 42;
  const auto r = b.generate("prompt text", p);
  EXPECT_EQ(r.text, "<answer>ok</answer>");
  EXPECT_EQ(r.logprobs->policy, std::vector<double>{-0.25});
  EXPECT_EQ(seen_auth, "Bearer secret");
  const auto body = nlohmann::json::parse(seen_body);
  EXPECT_EQ(body["prompt"], "prompt text");
  EXPECT_EQ(body["seed"], 42);
  EXPECT_EQ(body["model"], "tiny");
}

TEST(Http, ChatRoundTripWithoutKey) {
  FakeServer s;
  bool had_auth = true;
  s.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    had_auth = req.has_header("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hey"}}]})", "application/json");
  });
  HttpBackend::Options o{s.base(), "tiny"};
  o.chat = true;
  EXPECT_EQ(HttpBackend(o).generate("x", {}).text, "hey");
  EXPECT_FALSE(had_auth);
}

TEST(Http, NonOkStatusIsBackendError) {
  FakeServer s;
  s.server().Post("/v1/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("overloaded", "text/plain");
  });
  HttpBackend b({s.base(), "m"});
  try {
    b.generate("x", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendError);
    EXPECT_NE(std::string(e.what()).find("503"), std::string::npos);
  }
}

TEST(Http, UnreachableIsBackendError) {
  HttpBackend::Options o{"http://127.0.0.1:1/v1", "m"};
  o.timeout_seconds = 2;
  EXPECT_EQ(code_of([&] { HttpBackend(o).generate("x", {}); }), ErrorCode::BackendError);
}
