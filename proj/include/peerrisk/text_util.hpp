#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace peerrisk::text {

bool is_valid_utf8(std::string_view bytes);

/// Decodes valid UTF-8 into code points. Behaviour on invalid input is unspecified;
/// validate first.
std::vector<char32_t> decode_utf8(std::string_view bytes);
void append_utf8(std::string& out, char32_t cp);

/// Unicode NFC normalization of valid UTF-8.
std::string nfc(std::string_view utf8);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);
std::string to_lower_ascii(std::string_view s);

std::string sha256_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace peerrisk::text
