#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fungi/captions.hpp"
#include "fungi/error.hpp"
#include "fungi/util.hpp"

using namespace fungi;

TEST_CASE("frame guarantees the class name and the characterized-by phrasing") {
  const auto tmpl = default_prompt_template();
  CaptionConstraints c;
  c.batch_size = 1;
  c.total = 1;
  const auto batch = generate_batch(StageClass::Spore, tmpl, c, 1, Rng(1));
  REQUIRE(batch.size() == 1);
  CHECK(batch[0].find("spore") != std::string::npos);
  CHECK(batch[0].find("characterized by") != std::string::npos);
}

TEST_CASE("every caption respects the token length bounds") {
  const auto tmpl = default_prompt_template();
  CaptionConstraints c;
  c.batch_size = 4;
  c.total = 4;
  const auto batch = generate_batch(StageClass::Hyphae, tmpl, c, 1, Rng(8));
  REQUIRE(batch.size() == 4);
  for (const auto& caption : batch) {
    const int tokens = token_count(caption);
    CHECK(tokens >= c.min_tokens);
    CHECK(tokens <= c.max_tokens);
  }
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto set = generate_set(StageClass::Mycelium, tmpl, c, seed);
    for (const auto& caption : set.captions) {
      const int tokens = token_count(caption);
      CHECK(tokens >= c.min_tokens);
      CHECK(tokens <= c.max_tokens);
    }
  }
}

TEST_CASE("batch count is the ceiling of total over batch size") {
  const auto tmpl = default_prompt_template();
  {
    CaptionConstraints c;
    c.total = 10;
    c.batch_size = 4;
    const auto set = generate_set(StageClass::Mycelium, tmpl, c, 5);
    CHECK(set.batch_count() == 3);  // ceil(10/4)
    CHECK(set.captions.size() >= 10);
  }
  {
    CaptionConstraints c;
    c.total = 8;
    c.batch_size = 8;
    CHECK(generate_set(StageClass::Spore, tmpl, c, 5).batch_count() == 1);
  }
  {
    CaptionConstraints c;
    c.total = 0;
    c.batch_size = 8;
    const auto set = generate_set(StageClass::Spore, tmpl, c, 5);
    CHECK(set.captions.empty());
    CHECK(set.batch_count() == 0);
  }
  {
    CaptionConstraints c;
    c.total = 25;
    c.batch_size = 8;
    CHECK(generate_set(StageClass::Hyphae, tmpl, c, 5).batch_count() == 4);  // ceil(25/8)
  }
}

TEST_CASE("generation is deterministic in (class, seed)") {
  const auto tmpl = default_prompt_template();
  CaptionConstraints c;
  const auto a = generate_set(StageClass::Hyphae, tmpl, c, 99);
  const auto b = generate_set(StageClass::Hyphae, tmpl, c, 99);
  CHECK(a.captions == b.captions);
  CHECK(a.batch_index == b.batch_index);
  const auto other = generate_set(StageClass::Hyphae, tmpl, c, 100);
  CHECK(a.captions != other.captions);
}

TEST_CASE("vocabulary of a template run is contained in the pools and frame") {
  const auto tmpl = default_prompt_template();
  CaptionConstraints c;
  c.total = 50;
  c.batch_size = 10;
  const auto set = generate_set(StageClass::Spore, tmpl, c, 7);

  std::set<std::string> allowed;
  for (const auto& token : tokenize(tmpl.frame)) allowed.insert(token);
  allowed.insert("spore");
  allowed.insert("and");
  for (const auto& phrase : tmpl.pools[0])
    for (const auto& token : tokenize(phrase)) allowed.insert(token);

  for (const auto& caption : set.captions) {
    for (const auto& token : tokenize(caption)) {
      CHECK_MESSAGE(allowed.count(token) == 1, "unexpected token: ", token);
    }
  }
}

TEST_CASE("caption stats count tokens with the shared tokenizer") {
  CaptionSet empty;
  const auto zero = caption_stats(empty);
  CHECK(zero.count == 0);
  CHECK(zero.mean_tokens == 0.0);
  CHECK(zero.vocabulary == 0);

  CaptionSet identical;
  identical.captions = {"one two three four five", "one two three four five",
                        "one two three four five"};
  const auto stats = caption_stats(identical);
  CHECK(stats.count == 3);
  CHECK(stats.mean_tokens == doctest::Approx(5.0));
  CHECK(stats.vocabulary == 5);
}

TEST_CASE("a pool smaller than the characteristic draw is a configuration error") {
  auto tmpl = default_prompt_template();
  tmpl.pools[1] = {"a", "b", "c"};  // < 4 phrases
  CaptionConstraints c;
  CHECK_THROWS_AS(generate_batch(StageClass::Hyphae, tmpl, c, 1, Rng(1)), ConfigError);
}

TEST_CASE("frame slot arities are validated") {
  auto tmpl = default_prompt_template();
  tmpl.frame = "no slots at all";
  CaptionConstraints c;
  CHECK_THROWS_AS(generate_batch(StageClass::Spore, tmpl, c, 1, Rng(1)), ConfigError);
  tmpl.frame = "{class} and {class} characterized by {characteristics}";
  CHECK_THROWS_AS(generate_batch(StageClass::Spore, tmpl, c, 1, Rng(1)), ConfigError);
}
