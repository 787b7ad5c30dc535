#include "didact/verify.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace didact {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

class TempProgramFile {
public:
    explicit TempProgramFile(const std::string& contents) {
        char name[] = "/tmp/didact-program-XXXXXX";
        fd_ = ::mkstemp(name);
        if (fd_ < 0) {
            throw std::runtime_error("mkstemp failed: " + std::string(std::strerror(errno)));
        }
        path_ = name;
        size_t written = 0;
        while (written < contents.size()) {
            ssize_t n = ::write(fd_, contents.data() + written, contents.size() - written);
            if (n < 0) {
                throw std::runtime_error("temp file write failed");
            }
            written += static_cast<size_t>(n);
        }
    }

    ~TempProgramFile() {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        if (!path_.empty()) {
            ::unlink(path_.c_str());
        }
    }

    const std::string& path() const { return path_; }

private:
    int fd_ = -1;
    std::string path_;
};

void set_nonblocking(int fd) {
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
}

} // namespace

SubprocessRunner::SubprocessRunner(SubprocessRunnerConfig config) : config_(std::move(config)) {
    if (config_.command.empty()) {
        throw std::invalid_argument("subprocess runner: command must be non-empty");
    }
    if (config_.timeout_ms <= 0) {
        throw std::invalid_argument("subprocess runner: timeout must be positive");
    }
}

RunOutcome SubprocessRunner::run(const std::string& program, const std::string& input) {
    ignore_sigpipe_once();

    std::string command = config_.command;
    std::unique_ptr<TempProgramFile> file;
    if (command.find("{program}") != std::string::npos) {
        try {
            file = std::make_unique<TempProgramFile>(program);
        } catch (const std::exception& e) {
            return RunOutcome{RunOutcome::Status::LaunchFailed, -1, "", e.what()};
        }
        command = replace_all(command, "{program}", file->path());
    }

    int stdin_pipe[2];
    int stdout_pipe[2];
    if (::pipe(stdin_pipe) != 0 || ::pipe(stdout_pipe) != 0) {
        return RunOutcome{RunOutcome::Status::LaunchFailed, -1, "", "pipe() failed"};
    }

    const pid_t pid = ::fork();
    if (pid < 0) {
        return RunOutcome{RunOutcome::Status::LaunchFailed, -1, "", "fork() failed"};
    }
    if (pid == 0) {
        ::dup2(stdin_pipe[0], STDIN_FILENO);
        ::dup2(stdout_pipe[1], STDOUT_FILENO);
        ::close(stdin_pipe[0]);
        ::close(stdin_pipe[1]);
        ::close(stdout_pipe[0]);
        ::close(stdout_pipe[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    ::close(stdin_pipe[0]);
    ::close(stdout_pipe[1]);
    int write_fd = stdin_pipe[1];
    const int read_fd = stdout_pipe[0];
    set_nonblocking(write_fd);
    set_nonblocking(read_fd);

    const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
    std::string output;
    size_t input_offset = 0;
    bool timed_out = false;
    bool read_open = true;

    while (read_open) {
        if (Clock::now() >= deadline) {
            timed_out = true;
            break;
        }
        struct pollfd fds[2];
        int nfds = 0;
        fds[nfds++] = pollfd{read_fd, POLLIN, 0};
        if (write_fd >= 0) {
            fds[nfds++] = pollfd{write_fd, POLLOUT, 0};
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - Clock::now());
        const int wait_ms = static_cast<int>(std::max<long long>(1, std::min<long long>(remaining.count(), 50)));
        const int ready = ::poll(fds, static_cast<nfds_t>(nfds), wait_ms);
        if (ready < 0 && errno != EINTR) {
            break;
        }

        if (fds[0].revents & (POLLIN | POLLHUP)) {
            char buffer[4096];
            while (true) {
                const ssize_t n = ::read(read_fd, buffer, sizeof(buffer));
                if (n > 0) {
                    output.append(buffer, static_cast<size_t>(n));
                } else if (n == 0) {
                    read_open = false;
                    break;
                } else {
                    break; // EAGAIN or transient error; poll again
                }
            }
        }
        if (write_fd >= 0 && nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            if (fds[1].revents & (POLLERR | POLLHUP)) {
                ::close(write_fd);
                write_fd = -1;
            } else {
                const ssize_t n = ::write(write_fd, input.data() + input_offset,
                                          input.size() - input_offset);
                if (n > 0) {
                    input_offset += static_cast<size_t>(n);
                }
                if (n < 0 && errno != EAGAIN && errno != EINTR) {
                    ::close(write_fd);
                    write_fd = -1;
                } else if (input_offset >= input.size()) {
                    ::close(write_fd);
                    write_fd = -1;
                }
            }
        }
    }

    if (write_fd >= 0) {
        ::close(write_fd);
    }
    ::close(read_fd);

    int status = 0;
    if (timed_out) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        return RunOutcome{RunOutcome::Status::Timeout, -1, output,
                          "timed out after " + std::to_string(config_.timeout_ms) + " ms"};
    }

    // Child closed stdout; give it until the deadline to exit.
    while (true) {
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) {
            break;
        }
        if (Clock::now() >= deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            return RunOutcome{RunOutcome::Status::Timeout, -1, output,
                              "timed out after " + std::to_string(config_.timeout_ms) + " ms"};
        }
        ::usleep(1000);
    }

    if (WIFSIGNALED(status)) {
        return RunOutcome{RunOutcome::Status::Crashed, -1, output,
                          "terminated by signal " + std::to_string(WTERMSIG(status))};
    }
    const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    RunOutcome outcome;
    outcome.status = RunOutcome::Status::Completed;
    outcome.exit_code = exit_code;
    outcome.stdout_text = output;
    if (exit_code != 0) {
        outcome.error = "exit code " + std::to_string(exit_code);
    }
    return outcome;
}

} // namespace didact
