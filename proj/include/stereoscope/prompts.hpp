#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stereoscope {

// LLM prompts used to build the augmented dataset.
enum class AugmentationTemplate {
  winoqueer,                  // stereotype -> neutral + unrelated, religion few-shot table
  seegull_sentences,          // phrase -> short sentence, ten few-shot examples
  seegull_neutral_unrelated,  // stereotype -> neutral + unrelated, nationality few-shot table
};

AugmentationTemplate parse_augmentation_template(std::string_view id);  // throws UsageError
std::string_view to_string(AugmentationTemplate t);

// Template text followed by one batch item per line. Throws UsageError on an empty batch.
std::string render_augmentation_prompt(AugmentationTemplate t, const std::vector<std::string>& batch);

}  // namespace stereoscope
