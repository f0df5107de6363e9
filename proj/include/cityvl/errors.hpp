#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cityvl {

// All recoverable failures surface as typed exceptions rooted here, so the
// CLI can map them onto stable exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class FileMissing : public Error {
 public:
  explicit FileMissing(const std::string& path)
      : Error("file missing: " + path) {}
};

// Schema problem in a scene file; carries the 1-based line number.
class SchemaViolation : public Error {
 public:
  SchemaViolation(const std::string& msg, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownObject : public Error {
 public:
  explicit UnknownObject(std::uint64_t id)
      : Error("unknown object id " + std::to_string(id)) {}
};

class CoLocated : public Error {
 public:
  CoLocated() : Error("points are horizontally co-located") {}
};

class EmptyScene : public Error {
 public:
  EmptyScene() : Error("scene has no objects") {}
};

class EmptyQuery : public Error {
 public:
  EmptyQuery() : Error("query is empty") {}
};

class EmptyText : public Error {
 public:
  explicit EmptyText(const std::string& which)
      : Error(which + " is empty after tokenization") {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& msg)
      : Error("shape mismatch: " + msg) {}
};

class IndexOutOfVocab : public Error {
 public:
  IndexOutOfVocab(std::size_t id, std::size_t vocab)
      : Error("target token " + std::to_string(id) + " outside vocab of " +
              std::to_string(vocab)) {}
};

class SelectionRequired : public Error {
 public:
  explicit SelectionRequired(const std::string& task)
      : Error("task " + task + " requires a non-empty target selection") {}
};

class UnexpectedSelection : public Error {
 public:
  explicit UnexpectedSelection(const std::string& task)
      : Error("task " + task + " takes no target selection") {}
};

// Generator output that does not follow the tag-delimited QA format; carries
// the byte offset of the offending position.
class MalformedOutput : public Error {
 public:
  MalformedOutput(const std::string& msg, std::size_t position)
      : Error("malformed output at byte " + std::to_string(position) + ": " +
              msg),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& msg, bool transient)
      : Error(msg), transient_(transient) {}
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

class TransportExhausted : public Error {
 public:
  explicit TransportExhausted(const std::string& last)
      : Error("retries exhausted; last error: " + last) {}
};

class FixtureMiss : public Error {
 public:
  explicit FixtureMiss(const std::string& key)
      : Error("replay fixture has no entry for request_key " + key) {}
};

class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what)
      : Error("budget exceeded: " + what) {}
};

class MissingField : public Error {
 public:
  explicit MissingField(const std::string& field)
      : Error("missing field: " + field) {}
};

class OutOfRange : public Error {
 public:
  OutOfRange(const std::string& field, double value)
      : Error(field + " value " + std::to_string(value) +
              " outside [0,10]") {}
};

class MissingJustification : public Error {
 public:
  MissingJustification() : Error("judge output has no justification") {}
};

class DegenerateVector : public Error {
 public:
  explicit DegenerateVector(std::size_t index)
      : Error("score vector " + std::to_string(index) +
              " has zero variance") {}
};

class ConfigInvalid : public Error {
 public:
  explicit ConfigInvalid(const std::string& msg)
      : Error("invalid config: " + msg) {}
};

class StageFailed : public Error {
 public:
  StageFailed(const std::string& stage, const std::string& cause)
      : Error("stage " + stage + " failed: " + cause) {}
};

class StageMissing : public Error {
 public:
  explicit StageMissing(const std::string& stage)
      : Error("stage " + stage + " has not completed") {}
};

}  // namespace cityvl
