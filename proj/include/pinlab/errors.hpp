#pragma once

#include <stdexcept>
#include <string>

namespace pinlab {

// Error taxonomy. The C API maps these onto status codes and the CLI onto
// exit codes: ConfigError -> 2, CertificationError -> 3, NumericError -> 4.

// Malformed or inconsistent run configuration (bad keys, invalid grids, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A potential pair failed its standing-assumption checks, or an operation
// was handed a flagged (uncertified) pair.
struct CertificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: non-finite values, non-convergence, accuracy loss
// (e.g. probability mass leaking through a grid boundary).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pinlab
