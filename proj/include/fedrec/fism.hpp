#pragma once

#include <cstdint>
#include <vector>

#include "fedrec/params.hpp"

namespace fedrec {

/// One client's local data. Both item lists are sorted and disjoint.
struct ClientDataset {
  int client_id = 0;
  std::vector<int> positives;            // training positives
  std::vector<int> candidate_negatives;  // items the client never interacted with
  int train_count = 0;                   // n^i, equals positives.size()

  bool contains_positive(int item) const;
};

ClientDataset make_client_dataset(int client_id, std::vector<int> positives, std::size_t num_items,
                                  const std::vector<int>& excluded = {});

struct LossConfig {
  double gamma = 1.0;   // normalization exponent on the history size
  double lambda = 1e-4; // coefficient of the (unsquared) L2 norm of theta
  int negatives_per_positive = 4;

  void validate() const;
};

/// negatives[j] holds the sampled negatives paired with positives[j].
using NegativeMap = std::vector<std::vector<int>>;

/// Samples `per_positive` negatives for each positive, uniformly without replacement from
/// the candidate set (all candidates when fewer are available).
NegativeMap sample_negatives(const ClientDataset& data, int per_positive, std::uint64_t seed);

/// Score of `item` for this client: p_item . (|H|^-gamma * sum_{k in H} q_k) where H is the
/// client's positives without `item`. Empty history scores 0.
double predict(const ParamsView& params, const ClientDataset& data, int item, const LossConfig& cfg);

/// Scores of all items (same arithmetic as predict for each).
std::vector<double> predict_all(const ParamsView& params, const ClientDataset& data, const LossConfig& cfg);

/// -sum_{j, k in neg(j)} log sigmoid(y_j - y_k) + lambda * ||theta||
double client_loss(const ParamsView& params, const ClientDataset& data, const NegativeMap& negatives,
                   const LossConfig& cfg);

/// Analytic gradient of client_loss with respect to the flattened parameters.
FlatVec client_gradient(const ParamsView& params, const ClientDataset& data, const NegativeMap& negatives,
                        const LossConfig& cfg);

/// log(1 + exp(-x)) without overflow.
double log_sigmoid_loss(double x);
double sigmoid(double x);

}  // namespace fedrec
