#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stereoscope/corpus.hpp"

namespace stereoscope {

struct FilterConfig {
  // Majority-group swap terms marking counterfactual sentences.
  std::vector<std::string> counterfactual_terms = {"straight", "heterosexual", "cisgender", "cis"};
  std::vector<std::string> name_lexicon = default_name_lexicon();
  std::vector<std::string> overt_negativity_phrases = {"I hate", "everyone hates"};
  double min_offensive_score = 0.0;  // exclusive lower bound
  bool require_dual_region_majority = true;

  bool drop_counterfactual = true;
  bool drop_duplicates = true;
  bool drop_overt_negative = true;

  static std::vector<std::string> default_name_lexicon();

  // Throws UsageError if an enabled filter has an empty list.
  void validate() const;
};

enum class RemovalReason { counterfactual, duplicate, overt_negative, non_offensive, non_stereotypical };

std::string_view to_string(RemovalReason r);

struct Removal {
  std::string text;
  RemovalReason reason;
};

struct WinoQueerResult {
  LabeledDataset kept;
  std::vector<TextInstance> removed;
  std::vector<RemovalReason> reasons;  // parallel to removed

  std::vector<Removal> removals() const;
};

// Duplicate key: lowercased text with whole-word lexicon names replaced by "<name>".
std::string template_key(std::string_view text, const std::vector<std::string>& name_lexicon);

// Whole-word, case-insensitive match of a (possibly multi-word) phrase.
bool contains_phrase(std::string_view text, std::string_view phrase);

// Checks run in order counterfactual, duplicate, overt negativity; the
// first hit is the removal reason. Duplicates keep the first occurrence
// among sentences that survived the counterfactual check.
WinoQueerResult filter_winoqueer(const LabeledDataset& ds, const FilterConfig& cfg);

struct SeegullRow {
  std::string phrase;
  double mean_offensive_score = 0.0;
  bool home_majority_stereotype = false;
  bool na_majority_stereotype = false;
};

struct SeegullResult {
  std::vector<std::string> kept;
  std::vector<Removal> removals;
};

// True when yes votes are a strict majority of total votes.
bool strict_majority(int yes_votes, int total_votes);

// Throws DataError naming the row for a non-finite score.
SeegullResult filter_seegull(const std::vector<SeegullRow>& rows, const FilterConfig& cfg);

// Reads phrase,mean_offensive_score,home_majority,na_majority. The majority
// columns take true/false/1/0, or "yes/total" vote counts (strict majority).
std::vector<SeegullRow> load_seegull_csv(const std::string& path);

// CSV with columns text,reason.
std::string format_removals_csv(const std::vector<Removal>& removals);

}  // namespace stereoscope
