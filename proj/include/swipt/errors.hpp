#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swipt {

// Invalid argument for an operation's domain (non-finite input, rho out of
// range, p_on = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Harvester regression diverged.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Codebook construction cannot produce the requested message count.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// On-Off block code asked for more messages than C(n, N_on).
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& what, unsigned long long bound)
      : std::runtime_error(what), bound_(bound) {}
  unsigned long long bound() const noexcept { return bound_; }

 private:
  unsigned long long bound_;
};

// Encoder produced all-zero raw outputs, so power normalization is undefined.
class NormalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loss became non-finite during training.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Malformed file or unsupported parameter combination at an I/O boundary.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace swipt
