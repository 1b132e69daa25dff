#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Offsets throughout the library count Unicode scalar values, so stories are
// decoded once into UTF-32 and all span arithmetic happens there.
namespace constory::utf8 {

// Malformed sequences decode to U+FFFD, one replacement per offending byte.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view text);

std::size_t length(std::string_view bytes);

// Code-point substring [start, end) of a UTF-8 string.
std::string substr(std::string_view bytes, std::size_t start, std::size_t end);

bool is_space(char32_t c) noexcept;

// ASCII-only case folding; other scripts are left untouched.
char32_t fold_ascii(char32_t c) noexcept;

}  // namespace constory::utf8
