#include "stratkit/runner.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "stratkit/error.hpp"
#include "stratkit/util.hpp"

namespace stratkit {

namespace {

constexpr double kKillGraceSeconds = 0.5;

struct SpawnResult {
  int exit_status = -1;  // raw waitpid status; only meaningful if !timed_out
  bool timed_out = false;
  double elapsed = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Forks and execs argv in its own process group with stdin from /dev/null
// and stdout/stderr redirected to the given fds (-1 inherits). The whole
// group is SIGKILLed once deadline_seconds elapse. Throws spawn_failure when
// the binary cannot be executed.
SpawnResult spawn_with_deadline(const std::vector<std::string>& argv, int stdout_fd,
                                int stderr_fd, double deadline_seconds) {
  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& arg : argv) cargv.push_back(const_cast<char*>(arg.c_str()));
  cargv.push_back(nullptr);

  int err_pipe[2];
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    throw Error(Errc::spawn_failure, std::string("pipe2: ") + std::strerror(errno));
  }

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    close(err_pipe[0]);
    close(err_pipe[1]);
    throw Error(Errc::spawn_failure, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    if (stdout_fd >= 0) dup2(stdout_fd, STDOUT_FILENO);
    if (stderr_fd >= 0) dup2(stderr_fd, STDERR_FILENO);
    execvp(cargv[0], cargv.data());
    const int code = errno;
    [[maybe_unused]] const ssize_t n = write(err_pipe[1], &code, sizeof(code));
    _exit(127);
  }
  close(err_pipe[1]);
  setpgid(pid, pid);  // also from the parent side, to close the startup race

  SpawnResult result;
  int status = 0;
  const auto deadline = start + std::chrono::duration<double>(deadline_seconds);
  auto nap = std::chrono::milliseconds(1);
  for (;;) {
    const pid_t reaped = waitpid(pid, &status, WNOHANG);
    if (reaped == pid) break;
    if (reaped < 0 && errno != EINTR) {
      status = -1;
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      break;
    }
    std::this_thread::sleep_for(nap);
    if (nap < std::chrono::milliseconds(16)) nap *= 2;
  }
  result.exit_status = status;
  result.elapsed = seconds_since(start);

  int child_errno = 0;
  const ssize_t n = read(err_pipe[0], &child_errno, sizeof(child_errno));
  close(err_pipe[0]);
  if (n == static_cast<ssize_t>(sizeof(child_errno))) {
    throw Error(Errc::spawn_failure, argv[0] + ": " + std::strerror(child_errno));
  }
  return result;
}

void ensure_dir(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
}

}  // namespace

ProcessSolver::ProcessSolver(SolverSpec spec, std::string tmp_dir, std::string log_dir)
    : spec_(std::move(spec)), tmp_dir_(std::move(tmp_dir)), log_dir_(std::move(log_dir)) {
  if (tmp_dir_.empty()) tmp_dir_ = ".";
  if (log_dir_.empty()) log_dir_ = tmp_dir_;
}

RunRecord ProcessSolver::run(const Strategy& s, const std::string& problem, double limit) {
  if (!(limit > 0.0)) throw Error(Errc::bad_value, "run limit must be > 0");

  RunRecord rec;
  rec.problem = problem;
  rec.strategy_id = s.id;
  rec.time_limit = limit;

  ensure_dir(tmp_dir_);
  ensure_dir(log_dir_);
  const Invocation inv = format_invocation(s, spec_, problem, limit, tmp_dir_);
  if (inv.aux_file) write_file(inv.aux_file->first, inv.aux_file->second);

  const std::string log_path = log_dir_ + "/run_" + s.id + "_" + hex64(fnv1a(problem)) + "_" +
                               std::to_string(run_counter_.fetch_add(1)) + ".log";
  const int out_fd = open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (out_fd < 0) {
    throw Error(Errc::io_failure, log_path + ": " + std::strerror(errno));
  }

  SpawnResult spawned;
  try {
    spawned = spawn_with_deadline(inv.argv, out_fd, out_fd, limit + kKillGraceSeconds);
  } catch (...) {
    close(out_fd);
    if (inv.aux_file) std::remove(inv.aux_file->first.c_str());
    throw;
  }
  close(out_fd);
  if (inv.aux_file) std::remove(inv.aux_file->first.c_str());

  rec.wall_seconds = std::min(spawned.elapsed, limit);
  const bool clean_exit = !spawned.timed_out && WIFEXITED(spawned.exit_status) &&
                          WEXITSTATUS(spawned.exit_status) == 0;
  if (clean_exit && spawned.elapsed <= limit) {
    if (spec_.success_marker.empty()) {
      rec.solved = true;
    } else if (read_file(log_path).find(spec_.success_marker) != std::string::npos) {
      rec.solved = true;
    } else {
      std::fprintf(stderr,
                   "warning: %s on %s exited 0 without the success marker; recording unsolved\n",
                   spec_.binary_path.c_str(), problem.c_str());
    }
  }
  return rec;
}

std::unique_ptr<MockSolver> MockSolver::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("mock solver spec: ") + e.what());
  }

  auto mock = std::make_unique<MockSolver>();
  try {
    for (const auto& row : doc.value("table", nlohmann::json::array())) {
      const std::string problem = row.at("problem").get<std::string>();
      const std::string strategy = row.at("strategy").get<std::string>();
      const double time = row.at("time").get<double>();
      if (!(time > 0.0) || !std::isfinite(time)) {
        throw Error(Errc::bad_value, "mock solver time for (" + problem + ", " + strategy +
                                         ") must be a positive finite number");
      }
      mock->table_[{problem, strategy}] = time;
    }
    for (const auto& row : doc.value("unsolvable", nlohmann::json::array())) {
      mock->unsolvable_.insert(
          {row.at("problem").get<std::string>(), row.at("strategy").get<std::string>()});
    }
    mock->realtime_ = doc.value("realtime", false);
    mock->invocation_log_ = doc.value("invocation_log", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("mock solver spec: ") + e.what());
  }
  return mock;
}

std::unique_ptr<MockSolver> MockSolver::from_file(const std::string& path) {
  return from_json(read_file(path));
}

void MockSolver::set_runtime_function(
    std::function<double(const Strategy&, const std::string&)> fn) {
  runtime_function_ = std::move(fn);
}

RunRecord MockSolver::run(const Strategy& s, const std::string& problem, double limit) {
  if (!(limit > 0.0)) throw Error(Errc::bad_value, "run limit must be > 0");
  invocations_.fetch_add(1);
  if (!invocation_log_.empty()) {
    const std::lock_guard<std::mutex> lock(log_mutex_);
    FILE* f = std::fopen(invocation_log_.c_str(), "a");
    if (f != nullptr) {
      std::fprintf(f, "%s\t%s\t%s\n", problem.c_str(), s.id.c_str(),
                   format_double(limit).c_str());
      std::fclose(f);
    }
  }

  RunRecord rec;
  rec.problem = problem;
  rec.strategy_id = s.id;
  rec.time_limit = limit;

  double solve_time = -1.0;
  const auto it = table_.find({problem, s.id});
  if (it != table_.end()) {
    solve_time = it->second;
  } else if (!unsolvable_.count({problem, s.id}) && runtime_function_) {
    solve_time = runtime_function_(s, problem);
  }

  const bool solvable = std::isfinite(solve_time) && solve_time > 0.0;
  if (solvable && solve_time <= limit) {
    rec.solved = true;
    rec.wall_seconds = solve_time;
  } else {
    rec.solved = false;
    rec.wall_seconds = limit;
  }
  if (realtime_) {
    std::this_thread::sleep_for(std::chrono::duration<double>(rec.wall_seconds));
  }
  return rec;
}

std::vector<RunRecord> run_batch(Solver& solver, const std::vector<RunJob>& jobs, int cores) {
  if (cores < 1) throw Error(Errc::bad_value, "cores must be >= 1");
  std::vector<RunRecord> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const RunJob& job = jobs[i];
      try {
        results[i] = solver.run(job.strategy, job.problem, job.limit);
      } catch (const std::exception& e) {
        RunRecord rec;
        rec.problem = job.problem;
        rec.strategy_id = job.strategy.id;
        rec.time_limit = job.limit;
        rec.error = e.what();
        results[i] = std::move(rec);
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cores), std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

CommandResult run_command(const std::vector<std::string>& argv, double timeout_seconds) {
  if (argv.empty()) throw Error(Errc::spawn_failure, "empty command line");
  FILE* capture = std::tmpfile();
  if (capture == nullptr) {
    throw Error(Errc::io_failure, std::string("tmpfile: ") + std::strerror(errno));
  }

  SpawnResult spawned;
  try {
    spawned = spawn_with_deadline(argv, fileno(capture), -1, timeout_seconds);
  } catch (...) {
    std::fclose(capture);
    throw;
  }

  CommandResult result;
  std::fflush(capture);
  std::rewind(capture);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), capture)) > 0) {
    result.output.append(buf, n);
  }
  std::fclose(capture);

  if (spawned.timed_out) {
    result.exit_code = -1;
  } else if (WIFEXITED(spawned.exit_status)) {
    result.exit_code = WEXITSTATUS(spawned.exit_status);
  } else if (WIFSIGNALED(spawned.exit_status)) {
    result.exit_code = 128 + WTERMSIG(spawned.exit_status);
  }
  return result;
}

}  // namespace stratkit
