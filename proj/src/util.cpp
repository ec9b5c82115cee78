#include "stratkit/util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stratkit/error.hpp"

namespace stratkit {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::parse_error: return "ParseError";
    case Errc::missing_key: return "MissingKey";
    case Errc::unknown_key: return "UnknownKey";
    case Errc::duplicate_key: return "DuplicateKey";
    case Errc::bad_value: return "BadValue";
    case Errc::bad_enum: return "BadEnum";
    case Errc::empty_value_list: return "EmptyValueList";
    case Errc::no_strategies: return "NoStrategies";
    case Errc::unknown_parameter: return "UnknownParameter";
    case Errc::illegal_value: return "IllegalValue";
    case Errc::no_mutable_parameter: return "NoMutableParameter";
    case Errc::spawn_failure: return "SpawnFailure";
    case Errc::malformed_output: return "MalformedOutput";
    case Errc::extractor_failure: return "ExtractorFailure";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_training_set: return "EmptyTrainingSet";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::numerical_failure: return "NumericalFailure";
    case Errc::empty_model: return "EmptyModel";
    case Errc::no_candidate: return "NoCandidate";
    case Errc::io_failure: return "IoFailure";
    case Errc::duplicate_record: return "DuplicateRecord";
    case Errc::fingerprint_mismatch: return "FingerprintMismatch";
  }
  return "Error";
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw Error(Errc::bad_value, "uniform_index over empty range");
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return static_cast<std::size_t>(draw % n);
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(Errc::bad_value, "unformattable double");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  const std::string t = trim(text);
  double value = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size()) {
    throw Error(Errc::bad_value, "not a number: '" + t + "'");
  }
  return value;
}

long parse_long(std::string_view text) {
  const std::string t = trim(text);
  long value = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size()) {
    throw Error(Errc::bad_value, "not an integer: '" + t + "'");
  }
  return value;
}

std::string trim(std::string_view text) {
  const char* ws = " \t\r\n";
  const auto begin = text.find_first_not_of(ws);
  if (begin == std::string_view::npos) return "";
  const auto end = text.find_last_not_of(ws);
  return std::string(text.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      break;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(Errc::io_failure, "write failed: " + path);
}

}  // namespace stratkit
