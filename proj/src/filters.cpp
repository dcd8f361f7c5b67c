#include "stereoscope/filters.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

#include "stereoscope/csv.hpp"
#include "stereoscope/error.hpp"
#include "stereoscope/text.hpp"

namespace stereoscope {

namespace {

bool parse_vote(const std::string& field, std::size_t row) {
  const std::string v = to_lower(trim(field));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  const auto slash = v.find('/');
  if (slash != std::string::npos) {
    int yes = 0, total = 0;
    const auto* b = v.data();
    const auto r1 = std::from_chars(b, b + slash, yes);
    const auto r2 = std::from_chars(b + slash + 1, b + v.size(), total);
    if (r1.ec == std::errc() && r2.ec == std::errc() && total > 0) return strict_majority(yes, total);
  }
  throw DataError("cannot read majority value '" + field + "'", row);
}

}  // namespace

std::vector<std::string> FilterConfig::default_name_lexicon() {
  return {"james",   "john",    "robert",  "michael", "william", "david",   "richard", "joseph",  "thomas",
          "charles", "daniel",  "matthew", "anthony", "mark",    "paul",    "steven",  "andrew",  "kenneth",
          "joshua",  "kevin",   "brian",   "george",  "edward",  "ronald",  "timothy", "jason",   "jeffrey",
          "ryan",    "jacob",   "gary",    "nicholas", "eric",   "jonathan", "stephen", "larry",  "justin",
          "scott",   "brandon", "benjamin", "samuel", "frank",   "gregory", "raymond", "patrick", "alexander",
          "jack",    "dennis",  "jerry",   "tyler",   "aaron",   "adam",    "henry",   "nathan",  "peter",
          "mary",    "patricia", "jennifer", "linda", "elizabeth", "barbara", "susan", "jessica", "sarah",
          "karen",   "nancy",   "lisa",    "betty",   "margaret", "sandra", "ashley",  "kimberly", "emily",
          "donna",   "michelle", "dorothy", "carol",  "amanda",  "melissa", "deborah", "stephanie", "rebecca",
          "sharon",  "laura",   "cynthia", "kathleen", "amy",    "angela",  "shirley", "anna",    "brenda",
          "pamela",  "emma",    "nicole",  "helen",   "samantha", "katherine", "christine", "debra", "rachel",
          "alex",    "sam",     "jordan",  "taylor",  "casey",   "jamie",   "riley",   "morgan",  "avery"};
}

void FilterConfig::validate() const {
  if (drop_counterfactual && counterfactual_terms.empty()) throw UsageError("counterfactual_terms is empty");
  if (drop_duplicates && name_lexicon.empty()) throw UsageError("name_lexicon is empty");
  if (drop_overt_negative && overt_negativity_phrases.empty()) throw UsageError("overt_negativity_phrases is empty");
}

std::string_view to_string(RemovalReason r) {
  switch (r) {
    case RemovalReason::counterfactual: return "counterfactual";
    case RemovalReason::duplicate: return "duplicate";
    case RemovalReason::overt_negative: return "overt_negative";
    case RemovalReason::non_offensive: return "non_offensive";
    case RemovalReason::non_stereotypical: return "non_stereotypical";
  }
  return "duplicate";
}

std::vector<Removal> WinoQueerResult::removals() const {
  std::vector<Removal> out;
  for (std::size_t i = 0; i < removed.size(); ++i) out.push_back({removed[i].text, reasons[i]});
  return out;
}

std::string template_key(std::string_view text, const std::vector<std::string>& name_lexicon) {
  std::unordered_set<std::string> names;
  for (const auto& n : name_lexicon) names.insert(to_lower(n));
  const std::u32string scalars = decode_utf8(text);
  std::string key;
  std::u32string word;
  auto flush = [&] {
    if (word.empty()) return;
    const std::string lw = to_lower(encode_utf8(word));
    key += names.count(lw) ? std::string("<name>") : lw;
    word.clear();
  };
  for (char32_t c : scalars) {
    if (is_word_char(c)) {
      word.push_back(c);
    } else {
      flush();
      key += to_lower(encode_utf8(std::u32string(1, c)));
    }
  }
  flush();
  return key;
}

bool contains_phrase(std::string_view text, std::string_view phrase) {
  const auto hay = lowercase_tokens(text);
  const auto needle = lowercase_tokens(phrase);
  if (needle.empty() || needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) match = hay[i + k] == needle[k];
    if (match) return true;
  }
  return false;
}

WinoQueerResult filter_winoqueer(const LabeledDataset& ds, const FilterConfig& cfg) {
  cfg.validate();
  WinoQueerResult out;
  out.kept.name = ds.name + ":filtered";
  std::unordered_set<std::string> seen;
  for (const auto& inst : ds.instances) {
    auto remove = [&](RemovalReason r) {
      out.removed.push_back(inst);
      out.reasons.push_back(r);
    };
    if (cfg.drop_counterfactual) {
      bool hit = false;
      for (const auto& term : cfg.counterfactual_terms) {
        if (contains_phrase(inst.text, term)) {
          hit = true;
          break;
        }
      }
      if (hit) {
        remove(RemovalReason::counterfactual);
        continue;
      }
    }
    if (cfg.drop_duplicates) {
      if (!seen.insert(template_key(inst.text, cfg.name_lexicon)).second) {
        remove(RemovalReason::duplicate);
        continue;
      }
    }
    if (cfg.drop_overt_negative) {
      bool hit = false;
      for (const auto& phrase : cfg.overt_negativity_phrases) {
        if (contains_phrase(inst.text, phrase)) {
          hit = true;
          break;
        }
      }
      if (hit) {
        remove(RemovalReason::overt_negative);
        continue;
      }
    }
    out.kept.instances.push_back(inst);
  }
  return out;
}

bool strict_majority(int yes_votes, int total_votes) { return 2 * yes_votes > total_votes; }

SeegullResult filter_seegull(const std::vector<SeegullRow>& rows, const FilterConfig& cfg) {
  SeegullResult out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!std::isfinite(r.mean_offensive_score)) {
      throw DataError("non-finite mean offensive score for '" + r.phrase + "'", i + 1);
    }
    if (!(r.mean_offensive_score > cfg.min_offensive_score)) {
      out.removals.push_back({r.phrase, RemovalReason::non_offensive});
    } else if (cfg.require_dual_region_majority && !(r.home_majority_stereotype && r.na_majority_stereotype)) {
      out.removals.push_back({r.phrase, RemovalReason::non_stereotypical});
    } else {
      out.kept.push_back(r.phrase);
    }
  }
  return out;
}

std::vector<SeegullRow> load_seegull_csv(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  const std::size_t cp = t.column("phrase"), cs = t.column("mean_offensive_score"), ch = t.column("home_majority"),
                    cn = t.column("na_majority");
  if (cp == std::string::npos || cs == std::string::npos || ch == std::string::npos || cn == std::string::npos) {
    throw DataError("expected columns phrase,mean_offensive_score,home_majority,na_majority in " + path);
  }
  std::vector<SeegullRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    if (f.size() != t.header.size()) throw DataError("wrong field count", r + 1);
    SeegullRow row;
    row.phrase = f[cp];
    const std::string score = trim(f[cs]);
    try {
      std::size_t used = 0;
      row.mean_offensive_score = std::stod(score, &used);
      if (used != score.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DataError("cannot read score '" + score + "'", r + 1);
    }
    row.home_majority_stereotype = parse_vote(f[ch], r + 1);
    row.na_majority_stereotype = parse_vote(f[cn], r + 1);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_removals_csv(const std::vector<Removal>& removals) {
  std::string out = csv::format_row({"text", "reason"});
  for (const auto& r : removals) out += csv::format_row({r.text, std::string(to_string(r.reason))});
  return out;
}

}  // namespace stereoscope
