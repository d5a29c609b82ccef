#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hippd {

// Malformed input file. Carries the 1-based line number when one applies.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Dataset contents that are well-formed but unusable (unknown labels, unknown users, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingEmbeddingError : public DataError {
 public:
  explicit MissingEmbeddingError(const std::string& user_id)
      : DataError("no precomputed embeddings for user '" + user_id + "'"), user_id_(user_id) {}

  const std::string& user_id() const noexcept { return user_id_; }

 private:
  std::string user_id_;
};

// Non-finite loss or parameters during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch, double loss)
      : std::runtime_error("numeric divergence at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + " (batch loss " + std::to_string(loss) + ")"),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace hippd
