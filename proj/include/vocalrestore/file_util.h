#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vr {

// Writes to "<path>.tmp.<pid>" and renames over `path`, so readers never see a
// partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<unsigned char>& contents);

// Throws IoError when the file cannot be opened.
std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

}  // namespace vr
