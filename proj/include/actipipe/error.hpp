#pragma once

#include <stdexcept>
#include <string>

namespace actipipe {

/// Base for every error raised by the pipeline. Carries the originating
/// module and a short error name (e.g. "wire", "BadCrc") so the CLI can
/// report which stage failed.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string name, const std::string& detail)
        : std::runtime_error(module + "::" + name + ": " + detail),
          module_(std::move(module)),
          name_(std::move(name)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& name() const noexcept { return name_; }

private:
    std::string module_;
    std::string name_;
};

} // namespace actipipe
