#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wsc {

// Float matrices are row-major throughout so that on-disk layouts and
// flattened parameter order match the in-memory layout directly.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorF = Eigen::VectorXf;

// Error taxonomy mirrored by the CLI exit codes:
//   config_error -> 1, io_error -> 2, anything else -> 3.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invariant_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace wsc
