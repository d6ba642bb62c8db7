#pragma once

#include <optional>
#include <span>
#include <vector>

#include "genrec/rng.hpp"

namespace genrec::click_model {

struct ClickModelParams {
  double temperature = 1.5;
  double rejection_score = 11.0;

  /// Throws invalid_input unless temperature > 0 and rejection_score is finite.
  void validate() const;
};

/// Distribution over the K+1 actions of one interaction: click one of the K
/// shown questions (probabilities aligned with the score order passed in) or
/// click nothing.
struct ActionDistribution {
  std::vector<double> click_probabilities;
  double no_click_probability = 0.0;

  double total_click_probability() const;
};

/// Softmax click model: P(click_i) = exp(r_i/T) / (exp(RS/T) + sum_k exp(r_k/T)).
/// Evaluated in log space with max-logit subtraction so adversarial score/T
/// combinations do not overflow. Scores outside [1,10] are accepted; range
/// policing belongs to the scorers.
ActionDistribution action_distribution(std::span<const double> scores,
                                       const ClickModelParams& params);

/// Draws one action. Returns the clicked index, or nullopt for no click.
std::optional<std::size_t> sample_action(std::span<const double> scores,
                                         const ClickModelParams& params, Rng& rng);

/// Overall click probability when all shown_count questions share one score:
/// K*exp(r/T) / (exp(RS/T) + K*exp(r/T)).
double theoretical_ctr(double score, int shown_count, const ClickModelParams& params);

}  // namespace genrec::click_model
