#pragma once

#include <stdexcept>
#include <string>

namespace stratkit {

// Failure categories surfaced by the library. Tests match on the code, not
// the message text.
enum class Errc {
  parse_error,
  missing_key,
  unknown_key,
  duplicate_key,
  bad_value,
  bad_enum,
  empty_value_list,
  no_strategies,
  unknown_parameter,
  illegal_value,
  no_mutable_parameter,
  spawn_failure,
  malformed_output,
  extractor_failure,
  dimension_mismatch,
  empty_training_set,
  too_few_samples,
  numerical_failure,
  empty_model,
  no_candidate,
  io_failure,
  duplicate_record,
  fingerprint_mismatch,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace stratkit
