#include "finsler_liouville/key_value.hpp"

#include "finsler_liouville/types.hpp"

#include <fstream>
#include <sstream>

namespace fl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    std::istringstream ls(line);
    for (std::string raw; std::getline(ls, raw, ';');) {
      const std::string e = trim(raw);
      if (e.empty() || e[0] == '#') continue;
      const auto eq = e.find('=');
      if (eq == std::string::npos) throw InputError("entry without '=': " + e);
      out[trim(e.substr(0, eq))] = trim(e.substr(eq + 1));
    }
  }
  return out;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream is(text);
  while (std::getline(is, token, ',')) {
    std::istringstream ws(token);
    std::string word;
    while (ws >> word) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(word, &used));
        if (used != word.size()) throw InputError("bad number: " + word);
      } catch (const std::logic_error&) {
        throw InputError("bad number: " + word);
      }
    }
  }
  return out;
}

std::string read_spec_text(const std::string& text_or_path) {
  if (text_or_path.find('=') != std::string::npos) return text_or_path;
  std::ifstream in(text_or_path);
  if (!in) throw InputError("not key=value text and not a readable file: " + text_or_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace fl
