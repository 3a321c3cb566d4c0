#pragma once

#include <stdexcept>

namespace smom {

struct NotSPD : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidShape : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateBasis : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RetractionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingJacobian : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingFisherScore : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateData : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BoundViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace smom
