#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>
#include <unordered_map>

#include "paretotune/error.hpp"
#include "paretotune/evaluator.hpp"

extern char** environ;

namespace paretotune {

std::string encode_request_line(const ParameterSpace& space, const EvaluationRequest& request) {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    const auto& p = space.param(i);
    const auto index = request.config[i];
    switch (p.kind()) {
      case ParamKind::ordinal:
        config[p.name()] = p.numeric_values()[index];
        break;
      case ParamKind::int_range:
        config[p.name()] = static_cast<std::int64_t>(p.numeric_values()[index]);
        break;
      case ParamKind::boolean:
        config[p.name()] = index != 0;
        break;
      case ParamKind::categorical:
        config[p.name()] = p.labels()[index];
        break;
    }
  }
  nlohmann::ordered_json line;
  line["id"] = request.id;
  line["config"] = std::move(config);
  return line.dump();
}

std::optional<EvaluationResult> decode_response_line(std::string_view line) {
  const Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto id_it = j.find("id");
  if (id_it == j.end() || !id_it->is_number_integer() || id_it->get<std::int64_t>() < 0) return std::nullopt;
  const auto id = id_it->get<std::uint64_t>();

  if (const auto err = j.find("error"); err != j.end()) {
    return EvaluationResult::failure(id, err->is_string() ? err->get<std::string>() : err->dump());
  }
  const auto metrics = j.find("metrics");
  if (metrics == j.end() || !metrics->is_object())
    return EvaluationResult::failure(id, "malformed response: no metrics");
  EvaluationResult out{id, {}, std::nullopt};
  for (const auto& [name, value] : metrics->items()) {
    if (!value.is_number() || !std::isfinite(value.get<double>()))
      return EvaluationResult::failure(id, "malformed response: metric '" + name + "' is not a finite number");
    out.metrics[name] = value.get<double>();
  }
  return out;
}

namespace {

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

class Pipe {
 public:
  Pipe() {
    if (::pipe2(fds_, O_CLOEXEC) != 0) throw EvaluatorError(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;

  int read_end() const { return fds_[0]; }
  int write_end() const { return fds_[1]; }
  void close_read() { close_fd(fds_[0]); }
  void close_write() { close_fd(fds_[1]); }

 private:
  static void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
  int fds_[2] = {-1, -1};
};

}  // namespace

std::vector<EvaluationResult> evaluate_subprocess(const std::string& command, const ParameterSpace& space,
                                                  std::span<const EvaluationRequest> requests,
                                                  std::chrono::milliseconds timeout) {
  if (requests.empty()) return {};
  ignore_sigpipe();

  std::string input;
  for (const auto& r : requests) {
    input += encode_request_line(space, r);
    input += '\n';
  }

  Pipe to_child;
  Pipe from_child;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child.read_end(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child.write_end(), STDOUT_FILENO);
  const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw EvaluatorError("cannot spawn evaluator '" + command + "': " + std::strerror(rc));
  to_child.close_read();
  from_child.close_write();
  ::fcntl(to_child.write_end(), F_SETFL, O_NONBLOCK);
  ::fcntl(from_child.read_end(), F_SETFL, O_NONBLOCK);

  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (std::size_t i = 0; i < requests.size(); ++i) slot.emplace(requests[i].id, i);
  std::vector<std::optional<EvaluationResult>> answers(requests.size());
  std::size_t lines_seen = 0;

  auto handle_line = [&](std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) return;
    ++lines_seen;
    auto result = decode_response_line(line);
    if (!result) return;
    const auto it = slot.find(result->id);
    if (it == slot.end() || answers[it->second]) return;
    answers[it->second] = std::move(*result);
  };

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t written = 0;
  std::string pending;
  bool timed_out = false;
  bool eof = false;
  char buf[1 << 16];

  if (input.empty()) to_child.close_write();
  while (!eof) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = pollfd{from_child.read_end(), POLLIN, 0};
    const bool writing = to_child.write_end() >= 0;
    if (writing) fds[nfds++] = pollfd{to_child.write_end(), POLLOUT, 0};
    const auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    const int ready = ::poll(fds, nfds, static_cast<int>(std::min<long long>(wait_ms + 1, 1000)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (writing && fds[1].revents) {
      if (fds[1].revents & (POLLERR | POLLHUP)) {
        to_child.close_write();
      } else {
        const ssize_t n = ::write(to_child.write_end(), input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN && errno != EINTR) to_child.close_write();
        if (written == input.size()) to_child.close_write();
      }
    }
    if (fds[0].revents) {
      const ssize_t n = ::read(from_child.read_end(), buf, sizeof buf);
      if (n > 0) {
        pending.append(buf, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (std::size_t nl; (nl = pending.find('\n', start)) != std::string::npos; start = nl + 1)
          handle_line(std::string_view(pending).substr(start, nl - start));
        pending.erase(0, start);
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        eof = true;
      }
    }
  }
  // An unterminated final line is still a response.
  if (!timed_out) handle_line(pending);
  to_child.close_write();
  from_child.close_read();

  if (timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  if (!timed_out && lines_seen == 0 && WIFEXITED(status) &&
      (WEXITSTATUS(status) == 126 || WEXITSTATUS(status) == 127))
    throw EvaluatorError("cannot run evaluator command '" + command + "' (exit status " +
                         std::to_string(WEXITSTATUS(status)) + ")");

  std::vector<EvaluationResult> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (answers[i])
      out.push_back(std::move(*answers[i]));
    else
      out.push_back(EvaluationResult::failure(requests[i].id, timed_out ? "timeout" : "no response"));
  }
  return out;
}

SubprocessEvaluator::SubprocessEvaluator(std::string command, std::chrono::milliseconds timeout,
                                         std::size_t parallelism, std::vector<std::string> objectives)
    : command_(std::move(command)),
      timeout_(timeout),
      parallelism_(std::max<std::size_t>(1, parallelism)),
      objectives_(std::move(objectives)) {}

std::vector<EvaluationResult> SubprocessEvaluator::evaluate(const ParameterSpace& space,
                                                            std::span<const EvaluationRequest> requests) {
  const std::size_t chunks = std::min(parallelism_, std::max<std::size_t>(1, requests.size()));
  if (chunks <= 1) return evaluate_subprocess(command_, space, requests, timeout_);

  std::vector<std::vector<EvaluationResult>> parts(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> workers;
    const std::size_t per = (requests.size() + chunks - 1) / chunks;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = std::min(requests.size(), c * per);
      const std::size_t end = std::min(requests.size(), begin + per);
      workers.emplace_back([&, c, begin, end] {
        try {
          parts[c] = evaluate_subprocess(command_, space, requests.subspan(begin, end - begin), timeout_);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<EvaluationResult> out;
  out.reserve(requests.size());
  for (auto& part : parts)
    for (auto& r : part) out.push_back(std::move(r));
  return out;
}

}  // namespace paretotune
