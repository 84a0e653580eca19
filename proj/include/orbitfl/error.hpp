#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace orbitfl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Out-of-domain argument to a physical formula (e.g. non-positive altitude).
class DomainError : public Error {
public:
    using Error::Error;
};

// The visibility windows do not extend far enough to answer a query.
class HorizonExhausted : public Error {
public:
    using Error::Error;
};

// Slant range beyond the line-of-sight limit, or a zero-rate link.
class NoLink : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class Divergence : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid scenario:";
        for (const auto& p : problems) {
            out += "\n  ";
            out += p;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

}  // namespace orbitfl
