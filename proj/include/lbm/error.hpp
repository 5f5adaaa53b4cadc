#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lbm {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error { using Error::Error; };
struct MalformedFile : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };
struct UnsupportedOperation : Error { using Error::Error; };
struct UndefinedMetric : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Raised when an optimization run hits a non-finite loss. Carries the
// 1-based epoch and fold where the divergence was observed; fold 0 marks
// the full-data retrain stage.
struct TrainingFailure : Error {
  TrainingFailure(const std::string& msg, std::size_t epoch_, std::size_t fold_)
      : Error(msg), epoch(epoch_), fold(fold_) {}
  std::size_t epoch;
  std::size_t fold;
};

}  // namespace lbm
