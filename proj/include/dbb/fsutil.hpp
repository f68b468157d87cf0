#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dbb::fsutil {

std::string read_file(const std::filesystem::path& path);

// Write-temp-then-rename; readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

bool exists(const std::filesystem::path& path);

// Sorted relative paths of all regular files under root.
std::vector<std::string> list_files_recursive(const std::filesystem::path& root);

}  // namespace dbb::fsutil
