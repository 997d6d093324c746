#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rgrow {

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

// Strict parse of a whole token; throws ParseError on trailing garbage.
double parse_double(std::string_view token);
long long parse_integer(std::string_view token);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace rgrow
