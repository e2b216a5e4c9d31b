#pragma once

#include <stdexcept>
#include <string>

namespace glsharp {

enum class ErrorKind {
    invalid_argument,
    out_of_range,
    not_converged,
    degree_undefined,
    under_resolved,
    pole_contact,
    too_energetic,
    growth_regime,
    no_qualifying_time,
    nonzero_winding,
    lifting_defect,
    bracket_failure,
    no_solution,
    io,
};

const char* to_string(ErrorKind kind);

/// Library error. `stage` names the pipeline step that raised it, when known.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string stage = {})
        : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

    Error with_stage(std::string stage) const { return Error(kind_, what(), std::move(stage)); }

private:
    ErrorKind kind_;
    std::string stage_;
};

}  // namespace glsharp
