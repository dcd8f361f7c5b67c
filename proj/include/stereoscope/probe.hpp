#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stereoscope {

enum class ProbeKind { local_lr, remote, function };

// Black-box stereotype classifier: text in, stereotype-class probability out.
//
// Implementations must be deterministic for fixed state and safe to call
// from several threads. The batch call must equal element-wise single calls.
class Probe {
 public:
  virtual ~Probe() = default;

  virtual std::vector<double> predict_proba(std::span<const std::string> texts) const = 0;
  virtual std::string id() const = 0;
  virtual ProbeKind kind() const = 0;

  double predict_proba(const std::string& text) const;
};

using ProbePtr = std::shared_ptr<const Probe>;

// Wraps a callable; used for stubs and for probes defined in code.
class FunctionProbe final : public Probe {
 public:
  using Fn = std::function<double(const std::string&)>;

  FunctionProbe(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

  std::vector<double> predict_proba(std::span<const std::string> texts) const override;
  std::string id() const override { return id_; }
  ProbeKind kind() const override { return ProbeKind::function; }

 private:
  std::string id_;
  Fn fn_;
};

// Counts every text passed to the wrapped probe.
class CountingProbe final : public Probe {
 public:
  explicit CountingProbe(ProbePtr inner) : inner_(std::move(inner)) {}

  std::vector<double> predict_proba(std::span<const std::string> texts) const override;
  std::string id() const override { return inner_->id(); }
  ProbeKind kind() const override { return inner_->kind(); }

  std::size_t calls() const { return calls_; }
  std::size_t texts() const { return texts_; }

 private:
  ProbePtr inner_;
  mutable std::atomic<std::size_t> calls_{0};
  mutable std::atomic<std::size_t> texts_{0};
};

}  // namespace stereoscope
