#include "ini.hpp"

#include <charconv>

#include "beliefdm/errors.hpp"
#include "beliefdm/io_util.hpp"

namespace beliefdm::ini {

Document parse(std::string_view text) {
  Document doc;
  std::size_t line_no = 0;
  for (auto raw : util::split_lines(text)) {
    ++line_no;
    const auto line = util::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      const auto words = util::split_whitespace(line.substr(1, line.size() - 2));
      if (words.size() != 2) throw ParseError("section header must be '[kind name]'", line_no);
      doc.sections.push_back({std::string(words[0]), std::string(words[1]), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    Entry e{std::string(util::trim(line.substr(0, eq))), std::string(util::trim(line.substr(eq + 1))),
            line_no};
    if (e.key.empty()) throw ParseError("empty key", line_no);
    (doc.sections.empty() ? doc.globals : doc.sections.back().entries).push_back(std::move(e));
  }
  return doc;
}

double to_double(const Entry& e) {
  double v = 0.0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("'" + e.key + "' expects a number, got '" + e.value + "'", e.line);
  return v;
}

long to_long(const Entry& e) {
  long v = 0;
  const auto* end = e.value.data() + e.value.size();
  const auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("'" + e.key + "' expects an integer, got '" + e.value + "'", e.line);
  return v;
}

bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ParseError("'" + e.key + "' expects true or false, got '" + e.value + "'", e.line);
}

}  // namespace beliefdm::ini
