#pragma once

#include <vector>

#include "klrl/errors.hpp"
#include "klrl/vocab.hpp"

namespace klrl {

enum class SeqKind { prompt, response };

struct TokenSeq {
  std::vector<int> ids;
  SeqKind kind = SeqKind::response;

  int length() const { return static_cast<int>(ids.size()); }
  bool operator==(const TokenSeq& o) const { return ids == o.ids && kind == o.kind; }
};

inline TokenSeq make_prompt(std::vector<int> ids) { return TokenSeq{std::move(ids), SeqKind::prompt}; }
inline TokenSeq make_response(std::vector<int> ids) { return TokenSeq{std::move(ids), SeqKind::response}; }

// Whether log-likelihood accumulation halts at the first eos (variable) or
// always covers exactly l_max tokens with eos treated as an ordinary token
// (fixed).
struct LengthMode {
  enum class Kind { variable, fixed };
  Kind mode = Kind::variable;
  int l_max = 1;

  bool is_fixed() const { return mode == Kind::fixed; }

  static LengthMode variable(int l_max) { return validated({Kind::variable, l_max}); }
  static LengthMode fixed(int l_max) { return validated({Kind::fixed, l_max}); }

 private:
  static LengthMode validated(LengthMode m) {
    if (m.l_max < 1) throw ConfigError("length mode: l_max must be >= 1");
    return m;
  }
};

// Prefix up to and including the first eos; identity when no eos present.
inline TokenSeq truncate_at_eos(const TokenSeq& response, const Vocab& vocab) {
  if (response.kind != SeqKind::response) throw InputError("truncate_at_eos: expects a response");
  TokenSeq out{{}, SeqKind::response};
  for (int id : response.ids) {
    out.ids.push_back(id);
    if (id == vocab.eos_id) break;
  }
  return out;
}

// Response legality under a length mode. Variable responses carry at most
// one eos and only as the final token; fixed responses have exactly l_max
// tokens with eos unrestricted. pad never appears.
inline void check_response(const TokenSeq& response, const Vocab& vocab, const LengthMode& length) {
  if (response.kind != SeqKind::response) throw InputError("response: wrong sequence kind");
  if (response.length() > length.l_max) throw InputError("response: longer than l_max");
  if (length.is_fixed() && response.length() != length.l_max)
    throw InputError("response: fixed mode requires exactly l_max tokens");
  for (int id : response.ids) {
    if (!vocab.valid_id(id)) throw InputError("response: token id out of range");
    if (id == vocab.pad_id) throw InputError("response: pad token not allowed");
  }
  if (!length.is_fixed()) {
    for (int t = 0; t < response.length(); ++t) {
      if (response.ids[t] == vocab.eos_id && t + 1 != response.length())
        throw InputError("response: eos must be final in variable mode");
    }
  }
}

inline void check_prompt(const TokenSeq& prompt, const Vocab& vocab) {
  if (prompt.kind != SeqKind::prompt) throw InputError("prompt: wrong sequence kind");
  for (int id : prompt.ids) {
    if (!vocab.valid_id(id)) throw InputError("prompt: token id out of range");
    if (id == vocab.pad_id) throw InputError("prompt: pad token not allowed");
  }
}

}  // namespace klrl
