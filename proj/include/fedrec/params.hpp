#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedrec {

/// Canonical flat form of parameters, gradients and moments: all of P row-major, then all of Q.
using FlatVec = std::vector<double>;

struct Shape {
  std::size_t num_items = 0;
  std::size_t dim = 0;

  std::size_t table_size() const noexcept { return num_items * dim; }
  std::size_t size() const noexcept { return 2 * table_size(); }
  bool operator==(const Shape&) const = default;
};

/// Item embedding tables. `p` holds the prediction embeddings, `q` the history embeddings;
/// both are num_items x dim, row-major.
struct ModelParams {
  std::size_t num_items = 0;
  std::size_t dim = 0;
  std::vector<double> p;
  std::vector<double> q;

  static ModelParams zeros(std::size_t num_items, std::size_t dim);

  Shape shape() const noexcept { return {num_items, dim}; }
  std::span<double> p_row(std::size_t item) { return {p.data() + item * dim, dim}; }
  std::span<double> q_row(std::size_t item) { return {q.data() + item * dim, dim}; }
  std::span<const double> p_row(std::size_t item) const { return {p.data() + item * dim, dim}; }
  std::span<const double> q_row(std::size_t item) const { return {q.data() + item * dim, dim}; }

  bool operator==(const ModelParams&) const = default;
};

/// Read-only view of a flattened parameter vector.
class ParamsView {
 public:
  ParamsView(std::span<const double> flat, Shape shape);

  Shape shape() const noexcept { return shape_; }
  std::size_t num_items() const noexcept { return shape_.num_items; }
  std::size_t dim() const noexcept { return shape_.dim; }
  std::span<const double> flat() const noexcept { return flat_; }
  std::span<const double> p_row(std::size_t item) const {
    return flat_.subspan(item * shape_.dim, shape_.dim);
  }
  std::span<const double> q_row(std::size_t item) const {
    return flat_.subspan(shape_.table_size() + item * shape_.dim, shape_.dim);
  }

 private:
  std::span<const double> flat_;
  Shape shape_;
};

FlatVec flatten(const ModelParams& params);
ModelParams unflatten(std::span<const double> flat, Shape shape);

// Elementwise algebra. Binary operations throw DimensionError on length mismatch.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);
FlatVec hadamard(std::span<const double> a, std::span<const double> b);
FlatVec subtract(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
FlatVec scaled(std::span<const double> a, double alpha);
bool all_finite(std::span<const double> a);
double min_component(std::span<const double> a);
/// Unweighted mean of a non-empty set of equal-length vectors.
FlatVec centroid(const std::vector<std::span<const double>>& vectors);

/// One comma-separated row of shortest round-trip decimal floats.
std::string to_csv_row(std::span<const double> values);

}  // namespace fedrec
