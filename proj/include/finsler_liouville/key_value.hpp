#pragma once

// "key=value; key=value" text used by gauge and domain descriptions on the
// command line. Entries are separated by ';' or newlines; '#' starts a
// comment entry.

#include <map>
#include <string>
#include <vector>

namespace fl {

std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Comma and/or whitespace separated numbers.
std::vector<double> parse_number_list(const std::string& text);

/// Returns the contents of `text_or_path` if it names a readable file and
/// contains no '='; otherwise `text_or_path` itself.
std::string read_spec_text(const std::string& text_or_path);

}  // namespace fl
