#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "rwt/ad/tensor.h"

namespace rwt::ad {

// Ordered record of executed operations for reverse-mode differentiation.
//
// Operations record into the tape that is active on the calling thread (see
// Tape::Scope). With no active tape, ops run forward-only and their outputs
// do not require gradients. Each worker thread should own its own tape.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void Record(BackwardFn fn) { ops_.push_back(std::move(fn)); }

  // Seeds d(loss)/d(loss) = 1 and replays backward rules in reverse order.
  // Gradients accumulate additively into every reachable requires_grad
  // tensor. Throws std::invalid_argument if loss is not a scalar.
  void Backward(Tensor loss);

  void Clear() { ops_.clear(); }
  std::size_t size() const { return ops_.size(); }

  static Tape* Active();

  // Makes a tape active on this thread for the lifetime of the scope.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

 private:
  std::vector<BackwardFn> ops_;
};

// Suspends recording on this thread (e.g. for evaluation inside training).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace rwt::ad
