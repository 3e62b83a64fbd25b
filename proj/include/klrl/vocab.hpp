#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "klrl/errors.hpp"

namespace klrl {

// Token alphabet with reserved end-of-sequence and padding entries.
// pad is never sampleable and never appears in sequences; eos terminates
// variable-length responses.
struct Vocab {
  std::vector<std::string> tokens;
  int eos_id = -1;
  int pad_id = -1;

  int size() const { return static_cast<int>(tokens.size()); }
  bool valid_id(int id) const { return id >= 0 && id < size(); }
  bool is_special(int id) const { return id == eos_id || id == pad_id; }
  // tokens allowed in the interior of a response (neither eos nor pad)
  int interior_count() const { return size() - 2; }

  int find(const std::string& name) const {
    for (int i = 0; i < size(); ++i) {
      if (tokens[i] == name) return i;
    }
    return -1;
  }

  const std::string& name(int id) const {
    if (!valid_id(id)) throw InputError("vocab: token id out of range");
    return tokens[id];
  }

  static Vocab make(std::vector<std::string> tokens, int eos_id, int pad_id) {
    Vocab v;
    v.tokens = std::move(tokens);
    v.eos_id = eos_id;
    v.pad_id = pad_id;
    if (v.size() < 3) throw ConfigError("vocab: need at least 3 tokens");
    if (!v.valid_id(eos_id) || !v.valid_id(pad_id)) throw ConfigError("vocab: eos/pad id out of range");
    if (eos_id == pad_id) throw ConfigError("vocab: eos and pad must be distinct");
    std::unordered_set<std::string> seen;
    for (const auto& t : v.tokens) {
      if (!seen.insert(t).second) throw ConfigError("vocab: duplicate token '" + t + "'");
    }
    return v;
  }
};

}  // namespace klrl
