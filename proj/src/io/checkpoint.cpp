#include "rail/io/checkpoint.hpp"

#include <cmath>
#include <limits>

#include "binary.hpp"
#include "rail/core/error.hpp"
#include "rail/io/config.hpp"

namespace rail::io {

using nlohmann::json;

namespace {

void write_matrix(detail::Writer& w, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) w.f32(m(r, c));
  }
}

Eigen::MatrixXd read_matrix(detail::Reader& r, std::size_t rows, std::size_t cols, const char* field) {
  r.need(rows * cols * 4, field);
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = r.f32(field);
  }
  if (!m.allFinite()) throw FormatError(r.what() + ": non-finite value in " + field);
  return m;
}

Eigen::VectorXd read_vector(detail::Reader& r, std::size_t n, const char* field) {
  Eigen::MatrixXd m = read_matrix(r, n, 1, field);
  return m.col(0);
}

json parse_header(detail::Reader& r, const char* field) {
  const std::string_view text = r.block(field);
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw FormatError(r.what() + ": " + field + " is not a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw FormatError(r.what() + ": " + field + " is not valid JSON (" + e.what() + ")");
  }
}

template <typename T>
T header_field(const json& j, const char* key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(what + ": header lacks '" + key + "'");
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) throw FormatError(what + ": '" + key + "' must be a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw FormatError(what + ": '" + key + "' must be an integer");
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    throw FormatError(what + ": bad '" + key + "' (" + e.what() + ")");
  }
}

constexpr std::size_t kMaxDim = 1u << 20;

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  const auto& p = ck.policy;
  if (p.layers.empty()) throw DomainError("checkpoint policy has no layers");
  if (ck.normalizer.dim() != p.state_dim()) {
    throw DomainError("normalizer dimension " + std::to_string(ck.normalizer.dim()) +
                      " does not match policy state dimension " + std::to_string(p.state_dim()));
  }
  json header{{"kind", policy::to_string(p.kind)},
              {"n", p.state_dim()},
              {"h", p.hidden_dim()},
              {"p", p.action_dim()},
              {"normalizer_count", ck.normalizer.count()},
              {"algo", ck.meta.algo},
              {"config_digest", ck.meta.config_digest},
              {"iteration", ck.meta.iteration},
              {"nu", ck.meta.nu},
              {"best_metric", std::isfinite(ck.meta.best_metric) ? json(ck.meta.best_metric) : json(nullptr)},
              {"sections", ck.discriminator ? json::array({"policy", "discriminator"}) : json::array({"policy"})}};
  detail::Writer w;
  w.raw(kCheckpointMagic);
  w.block(header.dump());
  for (const auto& layer : p.layers) write_matrix(w, layer);
  write_matrix(w, ck.normalizer.mean());
  write_matrix(w, ck.normalizer.m2());
  if (ck.discriminator) {
    const auto& d = *ck.discriminator;
    json sub{{"section", "discriminator"}, {"input_dim", d.input_dim()}, {"hidden", d.hidden()}};
    w.block(sub.dump());
    write_matrix(w, d.w1);
    write_matrix(w, d.b1);
    write_matrix(w, d.w2);
    w.f32(d.b2);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  detail::Reader r(bytes, "checkpoint");
  r.expect_magic(kCheckpointMagic);
  const json h = parse_header(r, "header");
  const std::string& what = r.what();

  Checkpoint ck;
  policy::PolicyKind kind;
  try {
    kind = policy::parse_policy_kind(header_field<std::string>(h, "kind", what));
  } catch (const DomainError& e) {
    throw FormatError(what + ": " + e.what());
  }
  const auto n = header_field<std::size_t>(h, "n", what);
  const auto hid = header_field<std::size_t>(h, "h", what);
  const auto p = header_field<std::size_t>(h, "p", what);
  const auto count = header_field<std::uint64_t>(h, "normalizer_count", what);
  if (n == 0 || p == 0 || n > kMaxDim || p > kMaxDim || hid > kMaxDim) {
    throw FormatError(what + ": implausible dimensions n=" + std::to_string(n) + " h=" +
                      std::to_string(hid) + " p=" + std::to_string(p));
  }
  if (kind == policy::PolicyKind::kTwoLayer && hid == 0) {
    throw FormatError(what + ": two_layer policy with h=0");
  }
  if (kind == policy::PolicyKind::kLinear && hid != 0) {
    throw FormatError(what + ": linear policy with h=" + std::to_string(hid));
  }
  if (h.contains("algo")) ck.meta.algo = header_field<std::string>(h, "algo", what);
  if (h.contains("config_digest")) ck.meta.config_digest = header_field<std::string>(h, "config_digest", what);
  if (h.contains("iteration")) ck.meta.iteration = header_field<int>(h, "iteration", what);
  if (h.contains("nu")) ck.meta.nu = header_field<double>(h, "nu", what);
  ck.meta.best_metric = -std::numeric_limits<double>::infinity();
  if (h.contains("best_metric") && !h["best_metric"].is_null()) {
    ck.meta.best_metric = header_field<double>(h, "best_metric", what);
  }

  ck.policy.kind = kind;
  if (kind == policy::PolicyKind::kLinear) {
    ck.policy.layers.push_back(read_matrix(r, p, n, "policy weights"));
  } else {
    ck.policy.layers.push_back(read_matrix(r, hid, n, "policy input weights"));
    ck.policy.layers.push_back(read_matrix(r, p, hid, "policy output weights"));
  }
  Eigen::VectorXd mean = read_vector(r, n, "normalizer mean");
  Eigen::VectorXd m2 = read_vector(r, n, "normalizer m2");
  if ((m2.array() < 0.0).any()) throw FormatError(what + ": negative normalizer m2");
  ck.normalizer = policy::RunningNormalizer(count, std::move(mean), std::move(m2));

  if (r.remaining() > 0) {
    const json sub = parse_header(r, "discriminator header");
    if (sub.value("section", std::string()) != "discriminator") {
      throw FormatError(what + ": unknown section after the policy blobs");
    }
    const auto in = header_field<std::size_t>(sub, "input_dim", what);
    const auto m = header_field<std::size_t>(sub, "hidden", what);
    if (in != n + p) {
      throw FormatError(what + ": discriminator input_dim " + std::to_string(in) + " != n + p = " +
                        std::to_string(n + p));
    }
    if (m == 0 || m > kMaxDim) throw FormatError(what + ": implausible discriminator hidden size");
    disc::DiscriminatorParams d;
    d.w1 = read_matrix(r, m, in, "discriminator w1");
    d.b1 = read_vector(r, m, "discriminator b1");
    d.w2 = read_vector(r, m, "discriminator w2");
    d.b2 = read_vector(r, 1, "discriminator b2")(0);
    ck.discriminator = std::move(d);
  }
  r.finish();
  return ck;
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint read_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace rail::io
