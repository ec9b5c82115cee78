#include "stratkit/store.hpp"

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "stratkit/config.hpp"
#include "stratkit/error.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

namespace {

constexpr const char* kRunHeader = "problem,strategy_id,solved,wall_seconds,time_limit";

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
}

std::string run_line(const RunRecord& rec) {
  return rec.problem + "," + rec.strategy_id + "," + (rec.solved ? "1" : "0") + "," +
         format_double(rec.wall_seconds) + "," + format_double(rec.time_limit);
}

void check_csv_safe(const std::string& field, const char* what) {
  if (field.empty() || field.find(',') != std::string::npos ||
      field.find('\n') != std::string::npos) {
    throw Error(Errc::bad_value, std::string(what) + " '" + field +
                                     "' cannot be stored (empty, or contains ',' or newline)");
  }
}

}  // namespace

RunStore::RunStore(std::string path) : path_(std::move(path)) {
  ensure_parent_dir(path_);
  if (std::filesystem::exists(path_)) {
    std::string text = read_file(path_);
    if (!text.empty() && text.back() != '\n') {
      const std::size_t cut = text.find_last_of('\n');
      std::fprintf(stderr, "warning: %s: dropping truncated final line\n", path_.c_str());
      text = cut == std::string::npos ? std::string() : text.substr(0, cut + 1);
    }
    std::istringstream in(text);
    std::string line;
    bool first = true;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      if (first) {
        first = false;
        if (trim(line) != kRunHeader) {
          throw Error(Errc::parse_error, path_ + ": unexpected header '" + line + "'");
        }
        continue;
      }
      const std::vector<std::string> fields = split(line, ',');
      if (fields.size() != 5) {
        throw Error(Errc::parse_error,
                    path_ + " line " + std::to_string(line_no) + ": expected 5 fields");
      }
      RunRecord rec;
      rec.problem = fields[0];
      rec.strategy_id = fields[1];
      if (fields[2] == "1") {
        rec.solved = true;
      } else if (fields[2] == "0") {
        rec.solved = false;
      } else {
        throw Error(Errc::parse_error,
                    path_ + " line " + std::to_string(line_no) + ": solved must be 0 or 1");
      }
      rec.wall_seconds = parse_double(fields[3]);
      rec.time_limit = parse_double(fields[4]);
      index_record(rec, records_.size());
      records_.push_back(std::move(rec));
    }
  }

  file_ = std::fopen(path_.c_str(), "a");
  if (file_ == nullptr) {
    throw Error(Errc::io_failure, path_ + ": " + std::strerror(errno));
  }
  if (records_.empty() && std::ftell(file_) == 0) {
    std::fprintf(file_, "%s\n", kRunHeader);
    std::fflush(file_);
  }
}

RunStore::~RunStore() {
  if (file_ != nullptr) std::fclose(file_);
}

void RunStore::index_record(const RunRecord& rec, std::size_t position) {
  if (!seen_.insert({rec.problem, rec.strategy_id, rec.time_limit}).second) {
    throw Error(Errc::duplicate_record, rec.problem + " / " + rec.strategy_id + " at limit " +
                                            format_double(rec.time_limit));
  }
  by_pair_[{rec.problem, rec.strategy_id}].push_back(position);
}

void RunStore::append(const RunRecord& rec) {
  if (rec.failed()) {
    throw Error(Errc::bad_value, "failed runs are not persisted: " + rec.error);
  }
  check_csv_safe(rec.problem, "problem id");
  check_csv_safe(rec.strategy_id, "strategy id");

  const std::lock_guard<std::mutex> lock(mutex_);
  index_record(rec, records_.size());
  records_.push_back(rec);
  if (std::fprintf(file_, "%s\n", run_line(rec).c_str()) < 0 || std::fflush(file_) != 0) {
    throw Error(Errc::io_failure, path_ + ": append failed: " + std::strerror(errno));
  }
}

void RunStore::clear() {
  const std::lock_guard<std::mutex> lock(mutex_);
  records_.clear();
  by_pair_.clear();
  seen_.clear();
  if (file_ != nullptr) std::fclose(file_);
  file_ = std::fopen(path_.c_str(), "w");
  if (file_ == nullptr) {
    throw Error(Errc::io_failure, path_ + ": " + std::strerror(errno));
  }
  std::fprintf(file_, "%s\n", kRunHeader);
  std::fflush(file_);
}

std::optional<RunRecord> RunStore::lookup(const std::string& problem,
                                          const std::string& strategy_id) const {
  const std::lock_guard<std::mutex> lock(mutex_);
  const auto it = by_pair_.find({problem, strategy_id});
  if (it == by_pair_.end()) return std::nullopt;
  const RunRecord* best = nullptr;
  for (const std::size_t i : it->second) {
    const RunRecord& rec = records_[i];
    if (best == nullptr || rec.time_limit >= best->time_limit) best = &rec;
  }
  return *best;
}

std::optional<RunRecord> RunStore::cached_result(const std::string& problem,
                                                 const std::string& strategy_id,
                                                 double limit) const {
  const std::lock_guard<std::mutex> lock(mutex_);
  const auto it = by_pair_.find({problem, strategy_id});
  if (it == by_pair_.end()) return std::nullopt;

  double best_solve = -1.0;
  double max_failed_limit = -1.0;
  for (const std::size_t i : it->second) {
    const RunRecord& rec = records_[i];
    if (rec.solved) {
      if (best_solve < 0.0 || rec.wall_seconds < best_solve) best_solve = rec.wall_seconds;
    } else {
      max_failed_limit = std::max(max_failed_limit, rec.time_limit);
    }
  }

  RunRecord out;
  out.problem = problem;
  out.strategy_id = strategy_id;
  out.time_limit = limit;
  if (best_solve >= 0.0) {
    if (best_solve <= limit) {
      out.solved = true;
      out.wall_seconds = best_solve;
    } else {
      out.solved = false;
      out.wall_seconds = limit;
    }
    return out;
  }
  if (max_failed_limit >= limit) {
    out.solved = false;
    out.wall_seconds = limit;
    return out;
  }
  return std::nullopt;
}

StrategyStore::StrategyStore(std::string path, ParameterSpace space)
    : path_(std::move(path)), space_(std::move(space)) {
  ensure_parent_dir(path_);
  if (std::filesystem::exists(path_)) {
    const std::string text = read_file(path_);
    if (!trim(text).empty()) {
      for (auto& s : parse_strategies(text, space_)) {
        if (by_id_.emplace(s.id, strategies_.size()).second) {
          strategies_.push_back(std::move(s));
        }
      }
    }
  }
}

bool StrategyStore::add(const Strategy& s) {
  if (by_id_.count(s.id)) return false;
  validate_strategy(s, space_);
  by_id_.emplace(s.id, strategies_.size());
  strategies_.push_back(s);

  FILE* f = std::fopen(path_.c_str(), "a");
  if (f == nullptr) {
    throw Error(Errc::io_failure, path_ + ": " + std::strerror(errno));
  }
  const std::string text = serialize_strategies({s}, space_);
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  std::fclose(f);
  if (!ok) throw Error(Errc::io_failure, path_ + ": append failed");
  return true;
}

void StrategyStore::clear() {
  strategies_.clear();
  by_id_.clear();
  write_file(path_, "");
}

const Strategy& StrategyStore::get(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(Errc::missing_key, "strategy " + id + " not in " + path_);
  }
  return strategies_[it->second];
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& x : arr) v[i++] = x.get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(vector_to_json(m.row(i).transpose()));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(Errc::dimension_mismatch, "model matrix row of width " +
                                                std::to_string(row.size()) + ", expected " +
                                                std::to_string(cols));
    }
    m.row(i++) = vector_from_json(row).transpose();
  }
  return m;
}

nlohmann::json strategy_to_json(const Strategy& s) {
  nlohmann::json doc;
  doc["booleans"] = s.boolean_flags;
  doc["lists"] = s.list_values;
  return doc;
}

Strategy strategy_from_json(const nlohmann::json& doc) {
  std::set<std::string> booleans;
  for (const auto& b : doc.at("booleans")) booleans.insert(b.get<std::string>());
  std::map<std::string, std::string> lists;
  for (const auto& [k, v] : doc.at("lists").items()) lists[k] = v.get<std::string>();
  return make_strategy(std::move(booleans), std::move(lists));
}

}  // namespace

void save_models(const ModelStore& store, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir + "/models", ec);

  nlohmann::json manifest;
  manifest["dimension"] = store.dimension;
  manifest["normalization"]["min"] = vector_to_json(store.stats.min);
  manifest["normalization"]["max"] = vector_to_json(store.stats.max);
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& entry : store.start_schedule) {
    schedule.push_back({{"strategy", entry.strategy_id}, {"time", entry.run_time}});
  }
  manifest["start_schedule"] = schedule;
  manifest["settings_fingerprint"] = store.settings_fingerprint;
  manifest["global_best"] = store.global_best_strategy;
  manifest["full_time_limit"] = store.full_time_limit;
  nlohmann::json strategies;
  for (const auto& [id, s] : store.strategies) strategies[id] = strategy_to_json(s);
  manifest["strategies"] = strategies;
  manifest["solved_times"] = store.solved_times;
  nlohmann::json model_ids = nlohmann::json::array();
  for (const auto& [id, model] : store.models) model_ids.push_back(id);
  manifest["models"] = model_ids;
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");

  for (const auto& [id, model] : store.models) {
    nlohmann::json doc;
    doc["strategy_id"] = model.strategy_id;
    doc["train_ids"] = model.train_ids;
    doc["X"] = matrix_to_json(model.X);
    doc["Y"] = vector_to_json(model.Y);
    doc["A"] = vector_to_json(model.A);
    doc["sigma"] = model.sigma;
    doc["lambda"] = model.lambda;
    doc["min_time"] = model.min_time;
    doc["max_time"] = model.max_time;
    doc["min_training_size"] = model.min_training_size;
    write_file(dir + "/models/" + id + ".json", doc.dump(2) + "\n");
  }
}

ModelStore load_models(const std::string& dir, const std::string& expected_fingerprint,
                       bool allow_mismatch) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, dir + "/manifest.json: " + e.what());
  }

  ModelStore store;
  try {
    store.dimension = manifest.at("dimension").get<int>();
    store.stats.min = vector_from_json(manifest.at("normalization").at("min"));
    store.stats.max = vector_from_json(manifest.at("normalization").at("max"));
    for (const auto& entry : manifest.at("start_schedule")) {
      store.start_schedule.push_back(
          {entry.at("strategy").get<std::string>(), entry.at("time").get<double>()});
    }
    store.settings_fingerprint = manifest.at("settings_fingerprint").get<std::string>();
    store.global_best_strategy = manifest.at("global_best").get<std::string>();
    store.full_time_limit = manifest.at("full_time_limit").get<double>();
    for (const auto& [id, doc] : manifest.at("strategies").items()) {
      store.strategies[id] = strategy_from_json(doc);
    }
    for (const auto& [problem, per_strategy] : manifest.at("solved_times").items()) {
      for (const auto& [sid, t] : per_strategy.items()) {
        store.solved_times[problem][sid] = t.get<double>();
      }
    }

    for (const auto& id_json : manifest.at("models")) {
      const std::string id = id_json.get<std::string>();
      const std::string path = dir + "/models/" + id + ".json";
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_file(path));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, path + ": " + e.what());
      }
      PredictionModel model;
      model.strategy_id = doc.at("strategy_id").get<std::string>();
      for (const auto& p : doc.at("train_ids")) model.train_ids.push_back(p.get<std::string>());
      model.X = matrix_from_json(doc.at("X"), store.dimension);
      model.Y = vector_from_json(doc.at("Y"));
      model.A = vector_from_json(doc.at("A"));
      model.sigma = doc.at("sigma").get<double>();
      model.lambda = doc.at("lambda").get<double>();
      model.min_time = doc.at("min_time").get<double>();
      model.max_time = doc.at("max_time").get<double>();
      model.min_training_size = doc.at("min_training_size").get<int>();
      if (model.X.rows() != model.Y.size() || model.Y.size() != model.A.size() ||
          static_cast<std::size_t>(model.Y.size()) != model.train_ids.size()) {
        throw Error(Errc::dimension_mismatch, path + ": inconsistent model arrays");
      }
      store.models.emplace(id, std::move(model));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, dir + ": model store: " + e.what());
  }

  if (!expected_fingerprint.empty() && expected_fingerprint != store.settings_fingerprint) {
    const std::string message = "model store " + dir + " was trained under fingerprint " +
                                store.settings_fingerprint + ", current settings give " +
                                expected_fingerprint;
    if (!allow_mismatch) throw Error(Errc::fingerprint_mismatch, message);
    std::fprintf(stderr, "warning: %s (proceeding on override)\n", message.c_str());
  }
  return store;
}

}  // namespace stratkit
