#include "bimp/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "bimp/errors.hpp"

namespace bimp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateMass: return "DegenerateMass";
    case ErrorKind::DegeneratePosterior: return "DegeneratePosterior";
    case ErrorKind::UnsupportedStateDomain: return "UnsupportedStateDomain";
    case ErrorKind::UnsupportedAction: return "UnsupportedAction";
    case ErrorKind::InvalidModelParams: return "InvalidModelParams";
    case ErrorKind::UnsupportedSimplexDimension: return "UnsupportedSimplexDimension";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::InadmissibleEvent: return "InadmissibleEvent";
    case ErrorKind::StateEscape: return "StateEscape";
    case ErrorKind::InvalidCertificate: return "InvalidCertificate";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

ParameterSet::ParameterSet(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorKind::InvalidModelParams, "parameter set must contain at least one point");
  }
  std::set<double> seen;
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidModelParams, "parameter point is not finite");
    if (!seen.insert(v).second) {
      throw Error(ErrorKind::InvalidModelParams, "parameter points must be distinct");
    }
  }
}

Prior::Prior(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorKind::DegenerateMass, "empty prior");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::DegenerateMass, "prior weight is negative or not finite");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorKind::DegenerateMass, "prior weights sum to " + std::to_string(sum));
  }
}

Prior Prior::dirac(std::size_t size, std::size_t index) {
  std::vector<double> w(size, 0.0);
  w.at(index) = 1.0;
  return Prior(std::move(w));
}

Prior Prior::uniform(std::size_t size) {
  std::vector<double> ones(size, 1.0);
  return normalize(ones);
}

Prior normalize(std::span<const double> raw_weights) {
  if (raw_weights.empty()) throw Error(ErrorKind::DegenerateMass, "empty weight vector");
  double sum = 0.0;
  for (double w : raw_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::DegenerateMass, "weights must be finite and nonnegative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw Error(ErrorKind::DegenerateMass, "weights have zero total mass");
  std::vector<double> w(raw_weights.begin(), raw_weights.end());
  for (double& x : w) x /= sum;
  return Prior(std::move(w), Prior::Unchecked{});
}

double predictive_density(const Prior& prior, std::span<const double> likelihood) {
  double s = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) s += prior[k] * likelihood[k];
  return s;
}

Prior bayes_update(const Prior& prior, std::span<const double> likelihood, double truncate_below) {
  if (likelihood.size() != prior.size()) {
    throw Error(ErrorKind::DegeneratePosterior, "likelihood length does not match the prior");
  }
  const double density = predictive_density(prior, likelihood);
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw Error(ErrorKind::DegeneratePosterior,
                "observation has zero predictive density under every supported parameter");
  }
  std::vector<double> w(prior.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = prior[k] * likelihood[k] / density;
  if (truncate_below > 0.0) {
    for (double& x : w) {
      if (x < truncate_below) x = 0.0;
    }
    return normalize(w);
  }
  return Prior(std::move(w), Prior::Unchecked{});
}

double total_variation(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return 0.5 * s;
}

}  // namespace bimp
