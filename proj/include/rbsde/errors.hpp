#pragma once

#include <stdexcept>
#include <string>

namespace rbsde {

// Error categories map onto CLI exit codes: input/contract problems exit
// with 2, failed theorem assertions with 1.
enum class ErrorKind {
    parameter,     // bad construction arguments (dt <= 0, ...)
    domain,        // operation called outside its domain (terminal node, ...)
    contract,      // caller violated a stated precondition
    data,          // scenario/data inconsistency (ordering violation, xi < L_T, ...)
    gate,          // smallness gate not satisfied ("split finer", "reduce dt")
    convergence,   // Picard iteration did not converge
    parse,         // expression or scenario syntax error
    io,            // file errors
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::domain: return "domain";
        case ErrorKind::contract: return "contract";
        case ErrorKind::data: return "data";
        case ErrorKind::gate: return "gate";
        case ErrorKind::convergence: return "convergence";
        case ErrorKind::parse: return "parse";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace rbsde
