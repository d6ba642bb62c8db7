#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genrec/relevance.hpp"

namespace genrec::assets {

/// Prompt template by id: initial_ecommerce, initial_general_knowledge,
/// refine_full_ctr, refine_explore_exploit, refine_explore,
/// scoring_ecommerce, scoring_general_knowledge.
std::string_view prompt_template(std::string_view id);

std::string_view personas_json();

/// Bundled topic list for a domain, one topic per line in the source asset.
std::vector<std::string> topics(relevance::Domain domain);

/// Replaces each "{key}" placeholder with its value.
std::string substitute(std::string_view tmpl,
                       const std::vector<std::pair<std::string_view, std::string_view>>& values);

}  // namespace genrec::assets
