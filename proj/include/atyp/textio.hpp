#pragma once

// Small text helpers shared by the writers: locale-independent shortest
// round-trip number formatting and CSV field quoting.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace atyp {

std::string format_double(double v);
std::string csv_field(std::string_view s);
std::string csv_row(const std::vector<std::string>& fields);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace atyp
