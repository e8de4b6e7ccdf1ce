#include "tracescope/subprocess.hpp"

#include "tracescope/error.hpp"

extern "C" {
#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>
}

#include <cerrno>
#include <cstring>

extern char** environ;

namespace tracescope {

    namespace {

        struct fd_guard {
            int fd{-1};
            ~fd_guard() {
                if (fd >= 0) ::close(fd);
            }
            void reset() {
                if (fd >= 0) ::close(fd);
                fd = -1;
            }
        };

        std::vector<std::string> build_environment(const std::map<std::string, std::string>& extra) {
            std::map<std::string, std::string> merged;
            for (char** e = environ; e && *e; ++e) {
                std::string entry(*e);
                auto eq = entry.find('=');
                if (eq == std::string::npos) continue;
                merged[entry.substr(0, eq)] = entry.substr(eq + 1);
            }
            for (const auto& [k, v] : extra) merged[k] = v;
            std::vector<std::string> out;
            for (const auto& [k, v] : merged) out.push_back(k + "=" + v);
            return out;
        }

    }  // namespace

    process_result run_process(const process_options& options) {
        if (options.argv.empty()) throw error(error_code::invalid_argument, "empty command line");

        int out_pipe[2];
        int err_pipe[2];
        if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw error(error_code::io_error, "pipe failed");
        if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
            ::close(out_pipe[0]);
            ::close(out_pipe[1]);
            throw error(error_code::io_error, "pipe failed");
        }
        fd_guard out_read{out_pipe[0]}, out_write{out_pipe[1]}, err_read{err_pipe[0]}, err_write{err_pipe[1]};

        auto env_strings = build_environment(options.env);
        std::vector<char*> envp;
        for (auto& s : env_strings) envp.push_back(s.data());
        envp.push_back(nullptr);
        std::vector<std::string> argv_copy = options.argv;
        std::vector<char*> argv;
        for (auto& s : argv_copy) argv.push_back(s.data());
        argv.push_back(nullptr);
        std::string cwd = options.working_dir.string();

        auto started = std::chrono::steady_clock::now();
        pid_t pid = ::fork();
        if (pid < 0) throw error(error_code::io_error, std::string("fork failed: ") + std::strerror(errno));
        if (pid == 0) {
            ::setpgid(0, 0);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::dup2(err_pipe[1], STDERR_FILENO);
            int devnull = ::open("/dev/null", O_RDONLY);
            if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
            if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) _exit(126);
            ::execve(argv[0], argv.data(), envp.data());
            ::execvpe(argv[0], argv.data(), envp.data());
            _exit(127);
        }
        ::setpgid(pid, pid);
        out_write.reset();
        err_write.reset();

        process_result result;
        auto deadline = options.timeout ? std::optional(started + *options.timeout) : std::nullopt;
        char buffer[65536];
        bool killed = false;
        while (out_read.fd >= 0 || err_read.fd >= 0) {
            pollfd fds[2];
            nfds_t n = 0;
            if (out_read.fd >= 0) fds[n++] = {out_read.fd, POLLIN, 0};
            if (err_read.fd >= 0) fds[n++] = {err_read.fd, POLLIN, 0};
            int wait_ms = -1;
            if (deadline && !killed) {
                auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline -
                                                                                   std::chrono::steady_clock::now());
                wait_ms = static_cast<int>(std::max<long long>(0, left.count()));
            }
            int rc = ::poll(fds, n, wait_ms);
            if (rc < 0 && errno == EINTR) continue;
            if (rc == 0 && deadline && !killed) {
                ::kill(-pid, SIGKILL);
                killed = true;
                result.timed_out = true;
                continue;
            }
            for (nfds_t k = 0; k < n; ++k) {
                if (!(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
                auto got = ::read(fds[k].fd, buffer, sizeof buffer);
                auto& sink = fds[k].fd == out_read.fd ? result.out : result.err;
                if (got <= 0) {
                    if (fds[k].fd == out_read.fd) out_read.reset();
                    else err_read.reset();
                    continue;
                }
                if (sink.size() < options.output_cap)
                    sink.append(buffer, static_cast<std::size_t>(
                                                std::min<std::size_t>(static_cast<std::size_t>(got),
                                                                      options.output_cap - sink.size())));
            }
        }

        int status = 0;
        while (true) {
            if (deadline && !killed) {
                pid_t done = ::waitpid(pid, &status, WNOHANG);
                if (done == pid) break;
                if (std::chrono::steady_clock::now() >= *deadline) {
                    ::kill(-pid, SIGKILL);
                    killed = true;
                    result.timed_out = true;
                } else {
                    ::usleep(2000);
                }
                continue;
            }
            if (::waitpid(pid, &status, 0) == pid) break;
            if (errno != EINTR) break;
        }
        // Stragglers in the group (e.g. grandchildren) do not outlive the run.
        ::kill(-pid, SIGKILL);
        result.elapsed =
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
        if (WIFEXITED(status)) {
            result.exit_code = WEXITSTATUS(status);
        } else if (WIFSIGNALED(status)) {
            result.term_signal = WTERMSIG(status);
            result.exit_code = 128 + WTERMSIG(status);
        }
        return result;
    }

}  // namespace tracescope
