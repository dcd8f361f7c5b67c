#include "stereoscope/probe.hpp"

#include <cmath>

#include "stereoscope/error.hpp"

namespace stereoscope {

double Probe::predict_proba(const std::string& text) const {
  const std::string one[1] = {text};
  return predict_proba(std::span<const std::string>(one)).front();
}

std::vector<double> FunctionProbe::predict_proba(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const double p = fn_(t);
    if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("probe '" + id_ + "' returned a value outside [0, 1]");
    out.push_back(p);
  }
  return out;
}

std::vector<double> CountingProbe::predict_proba(std::span<const std::string> texts) const {
  ++calls_;
  texts_ += texts.size();
  return inner_->predict_proba(texts);
}

}  // namespace stereoscope
