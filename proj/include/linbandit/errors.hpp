#pragma once

#include <stdexcept>
#include <string>

namespace linbandit {

// Numerical failures (CLI exit code 2).
struct SingularMatrixError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonUniqueOptimumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleNumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HorizonExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadArmIndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Usage / configuration failures (CLI exit code 1). Carries file and field
// context where available.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace linbandit
