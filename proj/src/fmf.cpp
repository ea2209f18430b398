#include "fedrec/fmf.hpp"

#include <fmt/format.h>

#include "fedrec/error.hpp"

namespace fedrec {

namespace {

void check_user(const ParamsView& params, std::span<const double> user) {
  if (user.size() != params.dim()) {
    throw DimensionError(fmt::format("user vector has {} entries, expected {}", user.size(), params.dim()));
  }
}

void check_item(const ParamsView& params, int item) {
  if (item < 0 || static_cast<std::size_t>(item) >= params.num_items()) {
    throw IndexError(fmt::format("item id {} outside [0, {})", item, params.num_items()));
  }
}

}  // namespace

double fmf_predict(const ParamsView& params, std::span<const double> user, int item) {
  check_user(params, user);
  check_item(params, item);
  return dot(params.p_row(static_cast<std::size_t>(item)), user);
}

std::vector<double> fmf_predict_all(const ParamsView& params, std::span<const double> user) {
  check_user(params, user);
  std::vector<double> scores(params.num_items());
  for (std::size_t j = 0; j < params.num_items(); ++j) scores[j] = dot(params.p_row(j), user);
  return scores;
}

double fmf_client_loss(const ParamsView& params, std::span<const double> user, const ClientDataset& data,
                       const NegativeMap& negatives, const LossConfig& cfg) {
  if (data.positives.empty()) throw EmptyDataError("client has no positives");
  if (negatives.size() != data.positives.size()) throw DimensionError("negative map size mismatch");
  double loss = 0.0;
  for (std::size_t a = 0; a < data.positives.size(); ++a) {
    const double y_pos = fmf_predict(params, user, data.positives[a]);
    for (int k : negatives[a]) loss += log_sigmoid_loss(y_pos - fmf_predict(params, user, k));
  }
  return loss + cfg.lambda * norm(params.flat());
}

FmfGradient fmf_client_gradient(const ParamsView& params, std::span<const double> user,
                                const ClientDataset& data, const NegativeMap& negatives,
                                const LossConfig& cfg) {
  if (data.positives.empty()) throw EmptyDataError("client has no positives");
  if (negatives.size() != data.positives.size()) throw DimensionError("negative map size mismatch");
  const std::size_t d = params.dim();
  FmfGradient out{FlatVec(params.shape().size(), 0.0), std::vector<double>(d, 0.0)};
  auto grad_p = [&](int item) {
    return std::span<double>(out.items.data() + static_cast<std::size_t>(item) * d, d);
  };
  for (std::size_t a = 0; a < data.positives.size(); ++a) {
    const int j = data.positives[a];
    const double y_pos = fmf_predict(params, user, j);
    for (int k : negatives[a]) {
      const double w = sigmoid(-(y_pos - fmf_predict(params, user, k)));
      const auto pj = params.p_row(static_cast<std::size_t>(j));
      const auto pk = params.p_row(static_cast<std::size_t>(k));
      axpy(-w, user, grad_p(j));
      axpy(w, user, grad_p(k));
      for (std::size_t c = 0; c < d; ++c) out.user[c] -= w * (pj[c] - pk[c]);
    }
  }
  if (cfg.lambda > 0.0) {
    const double theta_norm = norm(params.flat());
    if (theta_norm > 0.0) axpy(cfg.lambda / theta_norm, params.flat(), out.items);
  }
  return out;
}

}  // namespace fedrec
