#include "lpcorp/csv.hpp"

#include <charconv>

#include "lpcorp/errors.hpp"

namespace lpcorp::csv {

bool Reader::next_record(std::vector<std::string>* fields,
                         std::size_t* line_no) {
  fields->clear();
  int c = in_.get();
  if (c == EOF) return false;
  ++line_;
  if (line_no) *line_no = line_;

  std::string field;
  bool in_quotes = false;
  bool seen_quote_field = false;
  for (;;) {
    if (c == EOF) {
      if (in_quotes) {
        throw DataError("csv: unterminated quoted field starting near line " +
                        std::to_string(line_));
      }
      fields->push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !seen_quote_field) {
      in_quotes = true;
      seen_quote_field = true;
    } else if (ch == ',') {
      fields->push_back(std::move(field));
      field.clear();
      seen_quote_field = false;
    } else if (ch == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields->push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    c = in_.get();
  }
}

std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace lpcorp::csv
