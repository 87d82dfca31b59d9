#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace lpcorp::csv {

// RFC-4180 style reader: quoted fields may contain commas, doubled quotes
// and embedded newlines. Tracks the physical line each record starts on.
class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  // False at end of input. Throws DataError on a dangling quote.
  bool next_record(std::vector<std::string>* fields, std::size_t* line_no);

private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

// Shortest decimal form that parses back to exactly v.
std::string number(double v);

}  // namespace lpcorp::csv
