#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace vcm {

enum class Errc {
  invalid_input,
  malformed,
  wrong_recipient,
  not_found,
  unknown_reason,
  unknown_category,
  config_error,
  incomparable_runs,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_input: return "InvalidInput";
    case Errc::malformed: return "Malformed";
    case Errc::wrong_recipient: return "WrongRecipient";
    case Errc::not_found: return "NotFound";
    case Errc::unknown_reason: return "UnknownReason";
    case Errc::unknown_category: return "UnknownCategory";
    case Errc::config_error: return "ConfigError";
    case Errc::incomparable_runs: return "IncomparableRuns";
  }
  return "?";
}

struct Error {
  Errc code;
  std::string detail;

  std::string to_string() const {
    std::string s = errc_name(code);
    if (!detail.empty()) {
      s += ": ";
      s += detail;
    }
    return s;
  }
};

// Minimal expected-style result. Success carries a T, failure an Error.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}
  Result(Error err) : v_(std::in_place_index<1>, std::move(err)) {}

  bool ok() const { return v_.index() == 0; }
  explicit operator bool() const { return ok(); }

  T& value() & {
    assert(ok());
    return std::get<0>(v_);
  }
  const T& value() const& {
    assert(ok());
    return std::get<0>(v_);
  }
  T&& value() && {
    assert(ok());
    return std::get<0>(std::move(v_));
  }

  const Error& error() const {
    assert(!ok());
    return std::get<1>(v_);
  }

 private:
  std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error err) : err_(std::move(err)) {}

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }

  const Error& error() const {
    assert(!ok());
    return *err_;
  }

 private:
  std::optional<Error> err_;
};

inline Error err(Errc code, std::string detail = {}) {
  return Error{code, std::move(detail)};
}

}  // namespace vcm
