#include "fedrec/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fedrec/error.hpp"

namespace fedrec {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError(fmt::format("length mismatch: {} vs {}", a.size(), b.size()));
  }
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t num_items, std::size_t dim) {
  ModelParams params;
  params.num_items = num_items;
  params.dim = dim;
  params.p.assign(num_items * dim, 0.0);
  params.q.assign(num_items * dim, 0.0);
  return params;
}

ParamsView::ParamsView(std::span<const double> flat, Shape shape) : flat_(flat), shape_(shape) {
  if (flat.size() != shape.size()) {
    throw DimensionError(fmt::format("flat vector has {} entries, shape needs {}", flat.size(), shape.size()));
  }
}

FlatVec flatten(const ModelParams& params) {
  if (params.p.size() != params.num_items * params.dim || params.q.size() != params.p.size()) {
    throw DimensionError("embedding tables do not match num_items x dim");
  }
  FlatVec out;
  out.reserve(params.p.size() * 2);
  out.insert(out.end(), params.p.begin(), params.p.end());
  out.insert(out.end(), params.q.begin(), params.q.end());
  return out;
}

ModelParams unflatten(std::span<const double> flat, Shape shape) {
  if (flat.size() != shape.size()) {
    throw DimensionError(fmt::format("flat vector has {} entries, shape needs {}", flat.size(), shape.size()));
  }
  ModelParams params;
  params.num_items = shape.num_items;
  params.dim = shape.dim;
  const auto half = static_cast<std::ptrdiff_t>(shape.table_size());
  params.p.assign(flat.begin(), flat.begin() + half);
  params.q.assign(flat.begin() + half, flat.end());
  return params;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

FlatVec hadamard(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  FlatVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

FlatVec subtract(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  FlatVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw DimensionError(fmt::format("length mismatch: {} vs {}", x.size(), y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

FlatVec scaled(std::span<const double> a, double alpha) {
  FlatVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i];
  return out;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

double min_component(std::span<const double> a) {
  if (a.empty()) return std::numeric_limits<double>::infinity();
  return *std::min_element(a.begin(), a.end());
}

FlatVec centroid(const std::vector<std::span<const double>>& vectors) {
  if (vectors.empty()) throw EmptyDataError("centroid of an empty set");
  FlatVec out(vectors.front().size(), 0.0);
  for (const auto& v : vectors) axpy(1.0, v, out);
  for (double& x : out) x /= static_cast<double>(vectors.size());
  return out;
}

std::string to_csv_row(std::span<const double> values) {
  std::string row;
  row.reserve(values.size() * 20);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) row.push_back(',');
    fmt::format_to(std::back_inserter(row), "{}", values[i]);
  }
  return row;
}

}  // namespace fedrec
