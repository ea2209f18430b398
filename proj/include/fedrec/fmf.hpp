#pragma once

// Federated matrix factorization comparison model. Each client keeps a private user vector;
// the shared parameters are the item vectors, stored in the P table of the flat layout (the Q
// table is unused and only sees the norm regularizer).

#include <span>
#include <vector>

#include "fedrec/fism.hpp"
#include "fedrec/params.hpp"

namespace fedrec {

enum class ModelKind { Fism, Fmf };

double fmf_predict(const ParamsView& params, std::span<const double> user, int item);
std::vector<double> fmf_predict_all(const ParamsView& params, std::span<const double> user);

double fmf_client_loss(const ParamsView& params, std::span<const double> user, const ClientDataset& data,
                       const NegativeMap& negatives, const LossConfig& cfg);

struct FmfGradient {
  FlatVec items;              // gradient w.r.t. the shared flat vector
  std::vector<double> user;   // gradient w.r.t. the private user vector
};

FmfGradient fmf_client_gradient(const ParamsView& params, std::span<const double> user,
                                const ClientDataset& data, const NegativeMap& negatives,
                                const LossConfig& cfg);

}  // namespace fedrec
