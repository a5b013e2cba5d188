#include "its/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "its/error.hpp"

namespace its::corpus {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::CorpusFileInvalid, path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::CorpusFileInvalid, path.string() + ": read error");
  return ss.str();
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool has_extension(const fs::path& p, const std::vector<std::string>& exts) {
  const auto ext = p.extension().string();
  return std::find(exts.begin(), exts.end(), ext) != exts.end();
}

}  // namespace

Corpus load_corpus(const fs::path& root, const OrderSpec& order) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorKind::CorpusFileInvalid, root.string() + ": not a directory");
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && has_extension(entry.path(), order.extensions)) {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) fail(ErrorKind::CorpusEmpty, root.string() + ": no transcript files");

  std::vector<fs::path> ordered;
  if (order.manifest) {
    std::ifstream in(*order.manifest);
    if (!in) fail(ErrorKind::ManifestMismatch, order.manifest->string() + ": cannot open manifest");
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line.front() == '#') continue;
      if (!seen.insert(line).second) {
        fail(ErrorKind::ManifestMismatch, "manifest lists " + line + " twice");
      }
      const auto path = root / line;
      if (!fs::is_regular_file(path)) {
        fail(ErrorKind::ManifestMismatch, "manifest references missing file " + line);
      }
      ordered.push_back(path);
    }
    if (ordered.empty()) fail(ErrorKind::CorpusEmpty, "manifest lists no files");
  } else {
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    ordered = std::move(files);
  }

  Corpus corpus;
  corpus.name = fs::absolute(root).lexically_normal().filename().string();
  if (corpus.name.empty()) corpus.name = fs::absolute(root).parent_path().filename().string();

  std::set<std::string> ids;
  int ordinal = 0;
  for (const auto& path : ordered) {
    auto text = read_file(path);
    if (is_blank(text)) fail(ErrorKind::CorpusFileInvalid, path.string() + ": empty transcript");
    auto id = path.stem().string();
    if (!ids.insert(id).second) {
      fail(ErrorKind::CorpusFileInvalid, path.string() + ": duplicate interview id " + id);
    }
    corpus.interviews.push_back(
        Interview{std::move(id), ++ordinal, std::move(text), path.string()});
  }
  return corpus;
}

std::int64_t estimate_tokens(const Interview& interview, double chars_per_token) {
  if (!(chars_per_token > 0.0)) fail(ErrorKind::DomainError, "chars_per_token must be positive");
  std::int64_t chars = 0;
  for (unsigned char c : interview.text) {
    if ((c & 0xC0) != 0x80) ++chars;  // count UTF-8 lead bytes only
  }
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(chars) / chars_per_token));
}

std::vector<TokenWarning> check_token_budget(const Corpus& corpus, std::int64_t budget,
                                             double chars_per_token) {
  std::vector<TokenWarning> out;
  for (const auto& iv : corpus.interviews) {
    const auto tokens = estimate_tokens(iv, chars_per_token);
    if (tokens > budget) out.push_back({iv.id, tokens, budget});
  }
  return out;
}

}  // namespace its::corpus
