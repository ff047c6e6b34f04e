#pragma once

#include <stdexcept>
#include <string>

namespace sketchflim {

enum class ErrorKind {
    invalid_input,
    config,
    numeric_degenerate,
    non_identifiable,
    singular_information,
    allocation_infeasible,
    degenerate_irf,
    outside_semicircle,
    overflow,
    insufficient_data,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

} // namespace sketchflim
