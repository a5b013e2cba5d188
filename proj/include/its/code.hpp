#pragma once

#include <string>

namespace its {

/// One initial code produced for one interview.
struct Code {
  std::string name;
  std::string description;
  std::string quote;
  std::string interview_id;
  int index_in_interview = 0;

  /// "name - description", the form the dedup judge and the embedder see.
  std::string codebook_text() const { return name + " - " + description; }

  /// Stable identifier within a run, e.g. "i07#3".
  std::string code_id() const { return interview_id + "#" + std::to_string(index_in_interview); }

  friend bool operator==(const Code&, const Code&) = default;
};

}  // namespace its
