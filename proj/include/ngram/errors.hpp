#pragma once

#include <stdexcept>
#include <string>

namespace ngram {

// Thrown when a file cannot be opened or read/written.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when an input file is readable but malformed. Carries the
// position that failed so CLI users can locate the defect.
struct parse_error : std::runtime_error {
    parse_error(const std::string& msg, std::size_t line, std::size_t offset)
        : std::runtime_error(msg + " (line " + std::to_string(line) +
                             ", offset " + std::to_string(offset) + ")"),
          line(line),
          offset(offset) {}
    std::size_t line = 0;
    std::size_t offset = 0;
};

// Thrown when two artifacts disagree (e.g. a bank whose embedded config
// does not match the config file passed alongside it).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a computation produces a non-finite value.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ngram
