#pragma once

#include <stdexcept>
#include <string>

namespace trajattr {

/// Bad input: malformed config, violated precondition, unparseable file.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A pipeline stage failed after validation passed (numerical blowup,
/// unsatisfiable generation quota, I/O failure mid-stage). Exit code 3.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage_(stage) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace trajattr
