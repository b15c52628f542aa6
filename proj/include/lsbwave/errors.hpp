#pragma once

#include <stdexcept>
#include <string>

namespace lsbwave {

/// Base class for every failure raised by the library. Carries the module,
/// the 1-based domain index (0 when not tied to a domain) and the quantity
/// that failed so the CLI can print a precise diagnostic.
class Error : public std::runtime_error {
public:
    Error(std::string module, int domain, std::string quantity, const std::string& what)
        : std::runtime_error(format(module, domain, quantity, what)),
          module_(std::move(module)),
          quantity_(std::move(quantity)),
          domain_(domain) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& quantity() const noexcept { return quantity_; }
    int domain() const noexcept { return domain_; }

private:
    static std::string format(const std::string& module, int domain, const std::string& quantity,
                              const std::string& what) {
        std::string out = "[" + module + "]";
        if (domain > 0) out += " domain " + std::to_string(domain);
        if (!quantity.empty()) out += " (" + quantity + ")";
        return out + ": " + what;
    }

    std::string module_;
    std::string quantity_;
    int domain_;
};

/// Bad user input: malformed configuration, precondition violations,
/// out-of-range queries. Maps to CLI exit code 1.
class InputError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: degenerate bases, overflow, singular systems.
/// Maps to CLI exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace lsbwave
