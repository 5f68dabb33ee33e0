#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace decprov {

// Failure modes surfaced at module boundaries. The CLI maps these onto
// its exit-status table.
enum class Errc {
  invalid_identifier,
  kind_constraint_violation,
  unknown_node,
  unknown_root,
  unknown_domain,
  unknown_component,
  temporal_violation,
  policy_blocked,
  validation_failed,
  dangling_reference,
  malformed_record,
  chain_mismatch,
  parse_error,
  non_monotone_timestamps,
  tick_out_of_range,
  unresolvable_context,
  io_error,
};

const char* errc_name(Errc code);

struct Error {
  Errc code;
  std::string message;
};

inline Error make_error(Errc code, std::string message) {
  return Error{code, std::move(message)};
}

// Accessors mirror std::expected so the type can be swapped for the real
// thing once the toolchain provides it.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : data_(std::move(value)) {}
  Result(Error error) : data_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<T>(data_); }
  bool has_value() const { return ok(); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(data_); }
  T& value() & { return std::get<T>(data_); }
  T take() { return std::get<T>(std::move(data_)); }

  const T& operator*() const& { return value(); }
  T& operator*() & { return value(); }
  const T* operator->() const { return &value(); }
  T* operator->() { return &value(); }

  const Error& error() const { return std::get<Error>(data_); }

 private:
  std::variant<T, Error> data_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() = default;
  Result(Error error) : error_(std::move(error)) {}

  bool ok() const { return !error_.has_value(); }
  bool has_value() const { return ok(); }
  explicit operator bool() const { return ok(); }

  const Error& error() const { return *error_; }

 private:
  std::optional<Error> error_;
};

}  // namespace decprov
