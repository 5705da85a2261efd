#pragma once

#include <string>
#include <vector>

namespace quboport {

/// Raw CSV contents: header cells plus data rows of string cells.
/// Cells are not trimmed beyond surrounding whitespace; quoting is not
/// supported (the price/rate files this project consumes never need it).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Read a CSV file. Throws IoError if the file cannot be opened and
/// MalformedData on an empty file or ragged rows.
CsvTable read_csv(const std::string& path);

/// Strict decimal parse of one cell. Throws MalformedData on anything
/// that is not a plain finite number (empty cell, text, inf, nan).
double parse_cell(const std::string& cell, const std::string& context);

/// Shortest-faithful decimal rendering (%.17g): reparsing yields the same
/// double, and output bytes are deterministic across runs.
std::string fmt_g17(double v);

/// Write a text file atomically (temp file + rename). Throws IoError.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace quboport
