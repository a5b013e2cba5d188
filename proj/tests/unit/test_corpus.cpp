#include <doctest.h>

#include <fstream>

#include "its/corpus.hpp"
#include "its/error.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

using namespace its;
using its::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("load_corpus orders files lexicographically by default") {
  TempDir dir;
  for (int i = 10; i >= 1; --i) {
    char name[16];
    std::snprintf(name, sizeof name, "i%02d.txt", i);
    write(dir / name, "interview " + std::to_string(i));
  }
  write(dir / "notes.md", "not a transcript");

  const auto c = corpus::load_corpus(dir.path());
  REQUIRE(c.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(c.interviews[i].ordinal == i + 1);
    CHECK(c.interviews[i].text == "interview " + std::to_string(i + 1));
  }
  CHECK(c.interviews.front().id == "i01");
}

TEST_CASE("manifest order overrides filename order") {
  TempDir dir;
  write(dir / "a.txt", "alpha");
  write(dir / "b.txt", "beta");
  const auto manifest = dir / "order.lst";
  write(manifest, "b.txt\n\n# comment\na.txt\n");

  corpus::OrderSpec spec;
  spec.manifest = manifest;
  const auto c = corpus::load_corpus(dir.path(), spec);
  REQUIRE(c.size() == 2);
  CHECK(c.interviews[0].id == "b");
  CHECK(c.interviews[0].ordinal == 1);
  CHECK(c.interviews[1].id == "a");
  CHECK(c.interviews[1].ordinal == 2);
}

TEST_CASE("corpus loading errors") {
  TempDir dir;
  CHECK(its::testing::error_kind([&] { corpus::load_corpus(dir.path()); }) == ErrorKind::CorpusEmpty);

  write(dir / "a.txt", "  \n\t ");
  CHECK(its::testing::error_kind([&] { corpus::load_corpus(dir.path()); }) == ErrorKind::CorpusFileInvalid);

  write(dir / "a.txt", "fine");
  const auto manifest = dir / "order.lst";
  write(manifest, "a.txt\nmissing.txt\n");
  corpus::OrderSpec spec;
  spec.manifest = manifest;
  CHECK(its::testing::error_kind([&] { corpus::load_corpus(dir.path(), spec); }) == ErrorKind::ManifestMismatch);
}

TEST_CASE("load_corpus is deterministic and ordinal-sorted") {
  TempDir dir;
  for (const auto* n : {"z.txt", "m.txt", "a.txt", "k.txt"}) write(dir / n, std::string("text ") + n);
  const auto a = corpus::load_corpus(dir.path());
  const auto b = corpus::load_corpus(dir.path());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.interviews[i].id == b.interviews[i].id);
    CHECK(a.interviews[i].text == b.interviews[i].text);
    CHECK(a.interviews[i].ordinal == static_cast<int>(i) + 1);
  }
}

TEST_CASE("estimate_tokens and the budget warning") {
  corpus::Interview iv{"x", 1, std::string(4000, 'a'), ""};
  CHECK(corpus::estimate_tokens(iv, 4.0) == 1000);
  iv.text = std::string(4001, 'a');
  CHECK(corpus::estimate_tokens(iv, 4.0) == 1001);
  // multi-byte characters count once
  iv.text = "\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9";
  CHECK(corpus::estimate_tokens(iv, 4.0) == 1);

  corpus::Corpus c;
  c.interviews.push_back({"short", 1, std::string(4000, 'a'), ""});
  c.interviews.push_back({"long", 2, std::string(70000, 'a'), ""});
  const auto warnings = corpus::check_token_budget(c, 16000, 4.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].interview_id == "long");
  CHECK(warnings[0].estimated_tokens == 17500);
}
