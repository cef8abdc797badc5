#ifndef TRIPLESCORE_UTIL_H_
#define TRIPLESCORE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace triplescore {

// Splits on '\t' without collapsing empty fields.
std::vector<std::string_view> SplitTabs(std::string_view line);

// Shortest decimal representation that parses back to the same double.
std::string FormatDouble(double value);

// Strict parsers: the whole field must be consumed. Throw ArgumentError.
double ParseDouble(std::string_view text);
int64_t ParseInt(std::string_view text);
uint64_t ParseUint64(std::string_view text);

// 64-bit FNV-1a, used for config and feature-schema digests written into
// artifacts. Stable across platforms, unlike std::hash.
uint64_t Fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);
std::string HexDigest(uint64_t digest);

// Reads every line of a text file, stripping a trailing '\r'. Throws
// InputError when the file cannot be opened.
std::vector<std::string> ReadLines(const std::filesystem::path& path);

// Writes the whole file or throws InputError.
void WriteFile(const std::filesystem::path& path, std::string_view contents);

}  // namespace triplescore

#endif  // TRIPLESCORE_UTIL_H_
