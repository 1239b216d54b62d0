// src/external_scorer.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "alignkit/scorer.hpp"
#include "alignkit/wire.hpp"

namespace alignkit {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

// Removes and returns one complete line from `buffer`, if any.
bool take_line(std::string& buffer, std::string& line) {
  const auto nl = buffer.find('\n');
  if (nl == std::string::npos) return false;
  line.assign(buffer, 0, nl);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  buffer.erase(0, nl + 1);
  return true;
}

}  // namespace

ExternalScorer::ExternalScorer(const std::string& command,
                               ExternalScorerOptions options)
    : options_(options), command_(command) {
  if (options_.max_in_flight == 0)
    throw ConfigError("scorer in-flight window must be positive");
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0)
    throw BackendError(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw BackendError(std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ > 0) ::setpgid(pid_, pid_);
  if (pid_ < 0) throw BackendError(std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    // Own process group, so a kill reaches whatever the shell started.
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);

  try {
    const auto line = read_line(Clock::now() + options_.timeout);
    supports_ = wire::decode_handshake(line);
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalScorer::~ExternalScorer() { shutdown(); }

void ExternalScorer::shutdown() {
  dead_ = true;
  if (to_child_ >= 0) ::close(to_child_);
  to_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    bool exited = false;
    for (int k = 0; k < 100 && !exited; ++k) {
      exited = ::waitpid(pid_, &status, WNOHANG) == pid_;
      if (!exited) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!exited) {
      ::kill(-pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) ::close(from_child_);
  from_child_ = -1;
}

std::string ExternalScorer::last_line() const {
  std::lock_guard lock(mutex_);
  return last_line_;
}

std::string ExternalScorer::read_line(Clock::time_point deadline) {
  std::string line;
  while (!take_line(inbound_, line)) {
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready == 0)
      throw TimeoutError("scorer '" + command_ + "' timed out");
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw BackendError(std::string("poll: ") + std::strerror(errno));
    }
    char buf[65536];
    const auto n = ::read(from_child_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0)
      throw BackendError("scorer '" + command_ +
                         "' exited; last protocol line: " + last_line_);
    inbound_.append(buf, static_cast<std::size_t>(n));
  }
  last_line_ = line;
  return line;
}

std::vector<ScoreResponse> ExternalScorer::score_batch(
    std::span<const ScoreRequest> requests) {
  std::lock_guard lock(mutex_);
  check_requests(requests);
  if (dead_)
    throw BackendError("scorer '" + command_ +
                       "' is no longer running; last protocol line: " +
                       last_line_);

  std::unordered_map<std::uint64_t, std::size_t> index_of;
  for (std::size_t k = 0; k < requests.size(); ++k)
    index_of.emplace(requests[k].id, k);
  std::vector<std::optional<ScoreResponse>> received(requests.size());
  std::size_t n_received = 0;
  std::size_t next = 0;
  std::size_t in_flight = 0;
  std::string outbound;

  const auto pending_ids = [&] {
    std::string ids;
    for (std::size_t k = 0; k < next; ++k)
      if (!received[k]) ids += (ids.empty() ? "" : ",") + std::to_string(requests[k].id);
    return ids;
  };

  try {
    auto deadline = Clock::now() + options_.timeout;
    while (n_received < requests.size()) {
      while (in_flight < options_.max_in_flight && next < requests.size()) {
        outbound += wire::encode_request(requests[next++]);
        outbound += '\n';
        ++in_flight;
      }
      pollfd fds[2] = {{from_child_, POLLIN, 0},
                       {to_child_, static_cast<short>(outbound.empty() ? 0 : POLLOUT), 0}};
      const int ready = ::poll(fds, outbound.empty() ? 1 : 2, remaining_ms(deadline));
      if (ready == 0)
        throw TimeoutError("scorer '" + command_ +
                           "' timed out waiting for id(s) " + pending_ids());
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("poll: ") + std::strerror(errno));
      }
      if (!outbound.empty() && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const auto n = ::write(to_child_, outbound.data(), outbound.size());
        if (n < 0 && errno != EAGAIN && errno != EINTR)
          throw BackendError("scorer '" + command_ +
                             "' closed its input; last protocol line: " +
                             last_line_);
        if (n > 0) outbound.erase(0, static_cast<std::size_t>(n));
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const auto n = ::read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0)
          throw BackendError("scorer '" + command_ +
                             "' exited before answering id(s) " +
                             pending_ids() + "; last protocol line: " +
                             last_line_);
        inbound_.append(buf, static_cast<std::size_t>(n));
        std::string line;
        while (take_line(inbound_, line)) {
          last_line_ = line;
          deadline = Clock::now() + options_.timeout;
          auto decoded = wire::decode_response(line);
          if (auto* err = std::get_if<wire::ErrorRecord>(&decoded))
            throw BackendError("scorer error" +
                               (err->id ? " for id " + std::to_string(*err->id) : "") +
                               ": " + err->message);
          auto& resp = std::get<ScoreResponse>(decoded);
          const auto it = index_of.find(resp.id);
          if (it == index_of.end() || it->second >= next)
            throw BackendError("reply with unknown id " + std::to_string(resp.id) +
                               ": " + line);
          if (received[it->second])
            throw BackendError("duplicate reply for id " + std::to_string(resp.id) +
                               ": " + line);
          check_response(requests[it->second], resp);
          received[it->second] = std::move(resp);
          ++n_received;
          --in_flight;
        }
      }
    }
  } catch (...) {
    // The stream position is unknown after a protocol failure.
    shutdown();
    throw;
  }

  std::vector<ScoreResponse> out;
  out.reserve(requests.size());
  for (auto& r : received) out.push_back(std::move(*r));
  return out;
}

}  // namespace alignkit
