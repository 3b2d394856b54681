#pragma once

#include <stdexcept>
#include <string>

namespace qcoder {

// Error categories map onto CLI exit codes: config -> 2, stage -> 3, gateway -> 4.
// Everything else surfaces as a stage failure when it escapes a pipeline stage.
enum class ErrorKind {
    config,
    template_error,
    parse,
    gateway,
    precondition,
    stage,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};

struct TemplateError : Error {
    explicit TemplateError(const std::string& m) : Error(ErrorKind::template_error, m) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorKind::parse, m) {}
};

struct GatewayError : Error {
    explicit GatewayError(const std::string& m) : Error(ErrorKind::gateway, m) {}
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& m) : Error(ErrorKind::precondition, m) {}
};

struct StageError : Error {
    explicit StageError(const std::string& m) : Error(ErrorKind::stage, m) {}
};

}  // namespace qcoder
