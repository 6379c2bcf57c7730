#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace beliefdm::util {

/// Whole file as bytes. Throws beliefdm::Error naming the path when unreadable.
std::string read_file(const std::filesystem::path& path);

std::string_view trim(std::string_view s);

/// Text before the first occurrence of `marker`, or all of it.
std::string_view strip_comment(std::string_view line, char marker);

std::vector<std::string_view> split_lines(std::string_view text);

std::vector<std::string_view> split_whitespace(std::string_view s);

std::string to_lower(std::string_view s);

bool is_ascii_punct(unsigned char c);

}  // namespace beliefdm::util
