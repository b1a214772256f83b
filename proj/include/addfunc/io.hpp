#pragma once

// File I/O: histogram CSV, raw sample lists, atomic writes.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "addfunc/sampling.hpp"

namespace addfunc {

// CSV rows "symbol_index,count" (1-based symbol index, header optional).
// Missing symbols default to count 0; k is max(seen index, expected_k).
// Throws DataError with a line number on malformed rows.
Histogram read_histogram_csv(std::istream& in, std::int64_t expected_k = 0);
Histogram read_histogram_csv(const std::filesystem::path& path, std::int64_t expected_k = 0);
void write_histogram_csv(std::ostream& out, const Histogram& h);

// Newline-delimited integer samples in [1, k]; k is max(seen, expected_k).
Histogram read_samples(std::istream& in, std::int64_t expected_k = 0);
Histogram read_samples(const std::filesystem::path& path, std::int64_t expected_k = 0);

// Write-to-temp-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace addfunc
