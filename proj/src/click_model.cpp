#include "genrec/click_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "genrec/errors.hpp"

namespace genrec::click_model {

void ClickModelParams::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::invalid_input,
                "click_model: temperature must be a positive finite real, got " +
                    std::to_string(temperature));
  }
  if (!std::isfinite(rejection_score)) {
    throw Error(ErrorKind::invalid_input, "click_model: rejection_score must be finite");
  }
}

double ActionDistribution::total_click_probability() const {
  return std::accumulate(click_probabilities.begin(), click_probabilities.end(), 0.0);
}

ActionDistribution action_distribution(std::span<const double> scores,
                                       const ClickModelParams& params) {
  params.validate();
  if (scores.empty()) {
    throw Error(ErrorKind::invalid_input, "click_model: score list must be non-empty");
  }
  for (double r : scores) {
    if (!std::isfinite(r)) {
      throw Error(ErrorKind::invalid_input, "click_model: scores must be finite");
    }
  }

  const double rejection_logit = params.rejection_score / params.temperature;
  double max_logit = rejection_logit;
  for (double r : scores) max_logit = std::max(max_logit, r / params.temperature);

  ActionDistribution dist;
  dist.click_probabilities.reserve(scores.size());
  double denom = std::exp(rejection_logit - max_logit);
  for (double r : scores) denom += std::exp(r / params.temperature - max_logit);
  for (double r : scores) {
    dist.click_probabilities.push_back(std::exp(r / params.temperature - max_logit) / denom);
  }
  dist.no_click_probability = std::exp(rejection_logit - max_logit) / denom;
  return dist;
}

std::optional<std::size_t> sample_action(std::span<const double> scores,
                                         const ClickModelParams& params, Rng& rng) {
  ActionDistribution dist = action_distribution(scores, params);
  double u = rng.next_double();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < dist.click_probabilities.size(); ++i) {
    cumulative += dist.click_probabilities[i];
    if (u < cumulative) return i;
  }
  return std::nullopt;
}

double theoretical_ctr(double score, int shown_count, const ClickModelParams& params) {
  params.validate();
  if (shown_count < 1) {
    throw Error(ErrorKind::invalid_input, "click_model: shown_count must be >= 1");
  }
  if (!std::isfinite(score)) {
    throw Error(ErrorKind::invalid_input, "click_model: score must be finite");
  }
  const double score_logit = score / params.temperature;
  const double rejection_logit = params.rejection_score / params.temperature;
  const double max_logit = std::max(score_logit, rejection_logit);
  const double k = static_cast<double>(shown_count);
  const double clicks = k * std::exp(score_logit - max_logit);
  return clicks / (std::exp(rejection_logit - max_logit) + clicks);
}

}  // namespace genrec::click_model
