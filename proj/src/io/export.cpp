#include "rail/io/export.hpp"

#include <charconv>
#include <cstdio>

#include "rail/core/error.hpp"

namespace rail::io {

std::pair<std::size_t, std::size_t> parse_shape(const std::string& text) {
  const auto x = text.find_first_of("xX");
  auto parse = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || v == 0) {
      throw ConfigError("reshape", "expected RxC with positive integers, got '" + text + "'");
    }
    return v;
  };
  if (x == std::string::npos) {
    throw ConfigError("reshape", "expected RxC with positive integers, got '" + text + "'");
  }
  const std::string_view sv(text);
  return {parse(sv.substr(0, x)), parse(sv.substr(x + 1))};
}

std::vector<std::pair<std::size_t, std::size_t>> factorizations(std::size_t count) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 1; r <= count; ++r) {
    if (count % r == 0) out.emplace_back(r, count / r);
  }
  return out;
}

Eigen::MatrixXd export_layer(const policy::PolicyParams& params, std::size_t index,
                             std::optional<std::pair<std::size_t, std::size_t>> shape) {
  if (index >= params.layers.size()) {
    throw ConfigError("layer", "index " + std::to_string(index) + " out of range; the " +
                                   policy::to_string(params.kind) + " policy has " +
                                   std::to_string(params.layers.size()) + " layer(s)");
  }
  const Eigen::MatrixXd& layer = params.layers[index];
  if (!shape) return layer;
  const auto [rows, cols] = *shape;
  const auto count = static_cast<std::size_t>(layer.size());
  if (rows * cols != count) {
    std::string valid;
    for (auto [r, c] : factorizations(count)) {
      valid += (valid.empty() ? "" : ", ") + std::to_string(r) + "x" + std::to_string(c);
    }
    throw ConfigError("reshape", std::to_string(rows) + "x" + std::to_string(cols) +
                                     " does not hold " + std::to_string(count) +
                                     " weights; valid shapes: " + valid);
  }
  Eigen::MatrixXd out(rows, cols);
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = static_cast<Eigen::Index>(i / static_cast<std::size_t>(layer.cols()));
    const auto c = static_cast<Eigen::Index>(i % static_cast<std::size_t>(layer.cols()));
    out(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) = layer(r, c);
  }
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", m(r, c));
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const Eigen::MatrixXd& m, int bins) {
  if (bins < 1) throw DomainError("histogram needs at least one bin");
  std::string out = "bin_lo,bin_hi,count\n";
  if (m.size() == 0) return out;
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    int b = static_cast<int>((m.data()[i] - lo) / width);
    if (b >= bins) b = bins - 1;
    ++counts[static_cast<std::size_t>(b)];
  }
  char buf[96];
  for (int b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%ld\n", lo + b * width,
                  b + 1 == bins && hi > lo ? hi : lo + (b + 1) * width, counts[static_cast<std::size_t>(b)]);
    out += buf;
  }
  return out;
}

}  // namespace rail::io
