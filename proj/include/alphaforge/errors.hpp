#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alphaforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed factor text. position is a 0-based byte offset into the input.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class ArityError : public ParseError {
public:
    ArityError(const std::string& op, int expected, int got, std::size_t position)
        : ParseError(op + " expects " + std::to_string(expected) + " argument(s), got " +
                         std::to_string(got),
                     position),
          op_(op) {}
    const std::string& op() const noexcept { return op_; }

private:
    std::string op_;
};

class DataError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

class GrammarError : public Error {
public:
    using Error::Error;
};

}  // namespace alphaforge
