#pragma once

// Section/key-value reader for the FSM and policy files:
//   key = value            (before any section: global)
//   [kind name]            section header
//   key = value
// '#' or ';' at the start of a line marks a comment.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace beliefdm::ini {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string kind;  // first word of the header
  std::string name;  // rest of the header
  std::size_t line = 0;
  std::vector<Entry> entries;
};

struct Document {
  std::vector<Entry> globals;
  std::vector<Section> sections;
};

/// Throws ParseError on malformed headers or lines without '='.
Document parse(std::string_view text);

/// Strict number parse; throws ParseError naming the key.
double to_double(const Entry& e);
long to_long(const Entry& e);
bool to_bool(const Entry& e);

}  // namespace beliefdm::ini
