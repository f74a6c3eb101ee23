#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rail/policy/policy.hpp"

namespace rail::io {

// Parses "RxC"; throws ConfigError on malformed text.
std::pair<std::size_t, std::size_t> parse_shape(const std::string& text);

// Every R x C with R * C == count, R ascending.
std::vector<std::pair<std::size_t, std::size_t>> factorizations(std::size_t count);

// Layer `index` of the policy, optionally reshaped (row-major element order).
// Throws ConfigError for a bad index or a shape whose size does not match,
// listing the valid factorizations.
Eigen::MatrixXd export_layer(const policy::PolicyParams& params, std::size_t index,
                             std::optional<std::pair<std::size_t, std::size_t>> shape);

// One CSV row per matrix row, values at full precision.
std::string matrix_csv(const Eigen::MatrixXd& m);

// Equal-width histogram over [min, max] with header bin_lo,bin_hi,count.
std::string histogram_csv(const Eigen::MatrixXd& m, int bins = 20);

}  // namespace rail::io
