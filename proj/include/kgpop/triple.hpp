#pragma once
// Knowledge triples and their token-level serialization.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kgpop/relations.hpp"

namespace kgpop {

using Tokens = std::vector<std::string>;

// Lowercase, split on whitespace, strip bracket characters so that free text
// can never produce a relation-marker token.
inline Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' ||
        ch == '\f') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      continue;
    }
    if (ch == '[' || ch == ']') continue;
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    cur.push_back(ch);
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Triple {
  std::string head;
  Relation relation = Relation::xEffect;
  std::string tail;

  bool operator==(const Triple& o) const {
    return relation == o.relation && head == o.head && tail == o.tail;
  }
};

struct LabeledExample {
  Triple triple;
  int label = 0;  // 0 or 1
};

inline void validate_triple(const Triple& t) {
  if (tokenize(t.head).empty())
    throw std::invalid_argument("triple head has no tokens: '" + t.head + "'");
  if (tokenize(t.tail).empty())
    throw std::invalid_argument("triple tail has no tokens: '" + t.tail + "'");
}

// head tokens, one relation marker, tail tokens.
inline Tokens serialize_triple(const Triple& t) {
  Tokens head = tokenize(t.head);
  Tokens tail = tokenize(t.tail);
  if (head.empty() || tail.empty())
    throw std::invalid_argument("serialize_triple: empty head or tail");
  Tokens out;
  out.reserve(head.size() + tail.size() + 1);
  out.insert(out.end(), head.begin(), head.end());
  out.push_back(relation_marker(t.relation));
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

inline std::string join_tokens(const Tokens& toks, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(sep);
    out += toks[i];
  }
  return out;
}

// Canonical identity of a triple up to tokenization; used for set membership.
inline std::string triple_key(const Triple& t) {
  return join_tokens(serialize_triple(t));
}

}  // namespace kgpop
