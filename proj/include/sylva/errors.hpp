#ifndef SYLVA_ERRORS_HPP
#define SYLVA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sylva {

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct PlanningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace sylva

#endif
