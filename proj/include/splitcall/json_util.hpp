#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace splitcall {

using json = nlohmann::json;

// Compact serialization with sorted object keys. Invalid UTF-8 is replaced
// with U+FFFD rather than throwing.
std::string canonical_dump(const json& value);

std::string trim(std::string_view text);

// Collapses every run of whitespace into a single space and trims the ends.
std::string collapse_whitespace(std::string_view text);

// Removes one surrounding ``` fence (with optional language tag), if present.
std::string strip_code_fences(std::string_view text);

std::string to_lower(std::string_view text);

// UTF-8 helpers. Offsets handed to the Python trainer are code-point offsets,
// so the dataset code converts through these.
std::size_t codepoint_count(std::string_view text);
std::size_t codepoint_offset(std::string_view text, std::size_t byte_offset);
std::size_t byte_offset(std::string_view text, std::size_t codepoint_offset);

std::string read_text_file(const std::filesystem::path& path);
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string format_iso8601_utc(std::int64_t epoch_seconds);

} // namespace splitcall
