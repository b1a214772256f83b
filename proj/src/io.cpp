#include "addfunc/io.hpp"

#include <unistd.h>

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>

#include "addfunc/errors.hpp"

namespace addfunc {

namespace {

bool blank_or_comment(const std::string& s) {
  for (char ch : s) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

std::int64_t parse_int(const std::string& tok, long line_no, const char* what) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw DataError(std::string("expected integer ") + what + ", got '" + tok + "'", line_no);
  }
  while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
  if (pos != tok.size())
    throw DataError(std::string("trailing junk after ") + what + " in '" + tok + "'", line_no);
  return v;
}

}  // namespace

Histogram read_histogram_csv(std::istream& in, std::int64_t expected_k) {
  Histogram h;
  h.regime = Regime::multinomial;
  if (expected_k > 0) h.counts.assign(static_cast<std::size_t>(expected_k), 0);
  std::string line;
  long line_no = 0;
  bool saw_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("expected 'symbol_index,count' row", line_no);
    const std::string head = line.substr(0, comma);
    const std::string tail = line.substr(comma + 1);
    if (!saw_row && (head.find_first_not_of("0123456789 \t+-") != std::string::npos)) {
      saw_row = true;  // header row, e.g. "symbol_index,count"
      continue;
    }
    const std::int64_t sym = parse_int(head, line_no, "symbol index");
    const std::int64_t count = parse_int(tail, line_no, "count");
    if (sym < 1) throw DataError("symbol index must be >= 1", line_no);
    if (count < 0) throw DataError("count must be >= 0", line_no);
    if (sym > static_cast<std::int64_t>(h.counts.size())) h.counts.resize(static_cast<std::size_t>(sym), 0);
    h.counts[static_cast<std::size_t>(sym - 1)] += count;
    saw_row = true;
  }
  if (h.counts.empty()) throw DataError("no histogram rows found");
  h.n = h.total();
  return h;
}

Histogram read_histogram_csv(const std::filesystem::path& path, std::int64_t expected_k) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_histogram_csv(in, expected_k);
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "symbol_index,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) out << (i + 1) << ',' << h.counts[i] << '\n';
}

Histogram read_samples(std::istream& in, std::int64_t expected_k) {
  Histogram h;
  h.regime = Regime::multinomial;
  if (expected_k > 0) h.counts.assign(static_cast<std::size_t>(expected_k), 0);
  std::string line;
  long line_no = 0;
  std::int64_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank_or_comment(line)) continue;
    const std::int64_t sym = parse_int(line, line_no, "sample");
    if (sym < 1) throw DataError("samples must be integers >= 1", line_no);
    if (expected_k > 0 && sym > expected_k)
      throw DataError("sample " + std::to_string(sym) + " exceeds k=" + std::to_string(expected_k),
                      line_no);
    if (sym > static_cast<std::int64_t>(h.counts.size())) h.counts.resize(static_cast<std::size_t>(sym), 0);
    ++h.counts[static_cast<std::size_t>(sym - 1)];
    ++n;
  }
  if (n == 0) throw DataError("no samples found");
  h.n = n;
  return h;
}

Histogram read_samples(const std::filesystem::path& path, std::int64_t expected_k) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_samples(in, expected_k);
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  fs::create_directories(dir);
  fs::path tmp = dir / (path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open temp file '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace addfunc
