#pragma once

#include <memory>
#include <string>

#include "stereoscope/corpus.hpp"
#include "stereoscope/logistic.hpp"
#include "stereoscope/probe.hpp"
#include "stereoscope/tfidf.hpp"

namespace stereoscope {

// TF-IDF features + logistic regression, immutable after construction.
class LogisticTfidfProbe final : public Probe {
 public:
  LogisticTfidfProbe(TfidfVectorizer vectorizer, LogisticModel model, std::string id = "lr-tfidf");

  std::vector<double> predict_proba(std::span<const std::string> texts) const override;
  using Probe::predict_proba;
  std::string id() const override { return id_; }
  ProbeKind kind() const override { return ProbeKind::local_lr; }

  const TfidfVectorizer& vectorizer() const { return vectorizer_; }
  const LogisticModel& model() const { return model_; }

  void set_exec(Exec exec) { exec_ = exec; }

 private:
  TfidfVectorizer vectorizer_;
  LogisticModel model_;
  std::string id_;
  Exec exec_ = Exec::parallel;
};

struct ClassifierTraining {
  std::shared_ptr<LogisticTfidfProbe> probe;
  TrainingTrace trace;
};

ClassifierTraining train_classifier(const LabeledDataset& train, const LogisticOptions& opts);

// Model file: one JSON document with "format_version": 1.
std::string serialize_model(const LogisticTfidfProbe& probe, const LogisticOptions& opts, const TrainingTrace& trace);
void save_model(const std::string& path, const LogisticTfidfProbe& probe, const LogisticOptions& opts,
                const TrainingTrace& trace);
std::shared_ptr<LogisticTfidfProbe> load_model(const std::string& path);
std::shared_ptr<LogisticTfidfProbe> parse_model(const std::string& json_text, std::string id = "lr-tfidf");

// Exact decimal product of the two quantities, in grams. Throws UsageError
// for negative or non-finite input.
double estimate_emissions(double co2_grams_per_second, double runtime_seconds);

}  // namespace stereoscope
