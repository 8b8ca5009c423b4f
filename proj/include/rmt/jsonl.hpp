#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace rmt {

using json = nlohmann::json;

// Error tied to a specific line of an input file.
class LineError : public std::runtime_error {
 public:
  LineError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Calls fn(line_number, parsed) for every non-blank line; line numbers are
// 1-based. Parse failures raise LineError.
void for_each_jsonl(const std::string& path,
                    const std::function<void(std::size_t, const json&)>& fn);

void for_each_jsonl_stream(std::istream& in, const std::string& name,
                           const std::function<void(std::size_t, const json&)>& fn);

// Opens for writing, throwing on failure instead of silently producing a
// bad stream.
std::ofstream open_for_write(const std::string& path);

std::string read_file(const std::string& path);

}  // namespace rmt
