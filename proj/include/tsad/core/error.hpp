#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsad {

enum class Errc {
  series_too_short,
  no_period,
  parse_error,
  grid_error,
  empty_input,
  invalid_argument,
  invalid_config,
  io_error,
  insufficient_data,
  single_class,
  schema_mismatch,
  version_mismatch,
  corrupt_file,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::series_too_short: return "SeriesTooShort";
    case Errc::no_period: return "NoPeriod";
    case Errc::parse_error: return "ParseError";
    case Errc::grid_error: return "GridError";
    case Errc::empty_input: return "EmptyInput";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::io_error: return "IoError";
    case Errc::insufficient_data: return "InsufficientData";
    case Errc::single_class: return "SingleClass";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::corrupt_file: return "CorruptFile";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the `Errc` codes so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace tsad
