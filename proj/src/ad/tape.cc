#include "rwt/ad/tape.h"

#include <stdexcept>

namespace rwt::ad {
namespace {

thread_local Tape* active_tape = nullptr;

}  // namespace

Tape* Tape::Active() { return active_tape; }

Tape::Scope::Scope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }
Tape::Scope::~Scope() { active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(active_tape) { active_tape = nullptr; }
NoGradScope::~NoGradScope() { active_tape = previous_; }

void Tape::Backward(Tensor loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument(
        "backward requires a scalar loss, got " +
        (loss.defined() ? ShapeString(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument("backward: loss does not depend on any tracked tensor");
  }
  loss.mutable_grad()[0] += 1.0;
  // Rules may not record further ops while replaying.
  NoGradScope no_grad;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

}  // namespace rwt::ad
