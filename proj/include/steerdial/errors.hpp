#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace steerdial {

// Coarse classes used by the CLI to pick an exit code.
enum class ErrorCategory { Usage, Data, Model, Service };

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, std::string msg) : std::runtime_error(std::move(msg)), category_(cat) {}
    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

class IoError : public Error {
  public:
    explicit IoError(const std::string& msg) : Error(ErrorCategory::Data, "io: " + msg) {}
};

class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& msg)
        : Error(ErrorCategory::Data, "parse: line " + std::to_string(line) + ": " + msg), line_(line) {}
    ParseError(const std::string& file, std::size_t line, const std::string& msg)
        : Error(ErrorCategory::Data, "parse: " + file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class ValidationError : public Error {
  public:
    ValidationError(std::string dialogue_id, std::size_t utterance_index, const std::string& msg)
        : Error(ErrorCategory::Data,
                "validation: dialogue " + dialogue_id + ", utterance " + std::to_string(utterance_index) + ": " + msg),
          dialogue_id_(std::move(dialogue_id)), utterance_index_(utterance_index) {}
    const std::string& dialogue_id() const { return dialogue_id_; }
    std::size_t utterance_index() const { return utterance_index_; }

  private:
    std::string dialogue_id_;
    std::size_t utterance_index_;
};

class EmptyCorpusError : public Error {
  public:
    EmptyCorpusError() : Error(ErrorCategory::Data, "empty corpus") {}
};

class MissingEntailmentError : public Error {
  public:
    explicit MissingEntailmentError(std::string text)
        : Error(ErrorCategory::Data, "missing entailment for text: \"" + text + "\""), text_(std::move(text)) {}
    const std::string& text() const { return text_; }

  private:
    std::string text_;
};

class ServiceError : public Error {
  public:
    explicit ServiceError(const std::string& msg) : Error(ErrorCategory::Service, "service: " + msg) {}
};

class InvalidTokenError : public Error {
  public:
    InvalidTokenError(std::int32_t id, std::size_t vocab_size)
        : Error(ErrorCategory::Model, "invalid token id " + std::to_string(id) + " for vocabulary of size " +
                                          std::to_string(vocab_size)) {}
};

class DivergedError : public Error {
  public:
    explicit DivergedError(std::size_t epoch)
        : Error(ErrorCategory::Model, "training diverged (non-finite loss) at epoch " + std::to_string(epoch)) {}
};

class FormatError : public Error {
  public:
    explicit FormatError(const std::string& msg) : Error(ErrorCategory::Model, "format: " + msg) {}
};

class ConfigMismatchError : public Error {
  public:
    explicit ConfigMismatchError(const std::string& msg) : Error(ErrorCategory::Model, "config mismatch: " + msg) {}
};

class LengthMismatchError : public Error {
  public:
    LengthMismatchError(std::size_t a, std::size_t b)
        : Error(ErrorCategory::Data,
                "length mismatch: " + std::to_string(a) + " candidates vs " + std::to_string(b) + " references") {}
};

class EmptyInputError : public Error {
  public:
    explicit EmptyInputError(const std::string& what_is_empty)
        : Error(ErrorCategory::Data, "empty input: " + what_is_empty) {}
};

class MissingGoldError : public Error {
  public:
    MissingGoldError() : Error(ErrorCategory::Data, "oracle strategy source requires a gold label") {}
};

class UsageError : public Error {
  public:
    explicit UsageError(const std::string& msg) : Error(ErrorCategory::Usage, msg) {}
};

}  // namespace steerdial
