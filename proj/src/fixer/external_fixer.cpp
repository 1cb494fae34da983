#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "splatfix/error.hpp"
#include "splatfix/fixer.hpp"
#include "splatfix/io.hpp"

extern char** environ;

namespace splatfix::fixer {
namespace {

namespace fs = std::filesystem;

std::string numbered(std::size_t i, const char* suffix) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04zu_", i);
    return buf + std::string(suffix) + ".png";
}

// Runs `command dir` and waits for it. Returns an error message, empty on
// success.
std::string run_process(const std::string& command, const fs::path& dir, double timeout_seconds) {
    const std::string dir_arg = dir.string();
    char* argv[] = {const_cast<char*>(command.c_str()), const_cast<char*>(dir_arg.c_str()), nullptr};
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, command.c_str(), nullptr, nullptr, argv, environ);
    if (rc != 0) {
        return "cannot start '" + command + "'";
    }
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_seconds));
    int status = 0;
    for (;;) {
        const pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            break;
        }
        if (r < 0) {
            return "lost track of the fixer process";
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            return "timed out after " + std::to_string(timeout_seconds) + " s";
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
        return "cannot execute '" + command + "'";
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return "'" + command + "' exited abnormally (status " + std::to_string(status) + ")";
    }
    return {};
}

}  // namespace

ExternalFixer::ExternalFixer(ExternalFixerOptions options) : options_(std::move(options)) {
    if (options_.command.empty()) {
        throw std::invalid_argument("ExternalFixer: empty command");
    }
    if (!(options_.timeout_seconds > 0.0)) {
        throw std::invalid_argument("ExternalFixer: timeout must be positive");
    }
    if (options_.coefficients) {
        options_.coefficients->validate();
    }
}

ColorImage ExternalFixer::fix(const FixRequest& request) {
    return std::move(fix_batch(std::span<const FixRequest>(&request, 1)).front());
}

std::vector<ColorImage> ExternalFixer::fix_batch(std::span<const FixRequest> requests) {
    if (requests.empty()) {
        return {};
    }
    for (const FixRequest& r : requests) {
        r.validate();
    }
    const std::string& first = requests.front().view_id;
    char name[32];
    std::snprintf(name, sizeof name, "batch_%06llu", static_cast<unsigned long long>(batches_++));
    const fs::path dir = options_.exchange_root / name;

    using nlohmann::json;
    json entries = json::array();
    try {
        fs::remove_all(dir);
        fs::create_directories(dir);
        for (std::size_t i = 0; i < requests.size(); ++i) {
            const FixRequest& r = requests[i];
            json e = {{"view_id", r.view_id},
                      {"artifact", numbered(i, "artifact")},
                      {"guidance", numbered(i, "guidance")},
                      {"reference", numbered(i, "reference")},
                      {"output", numbered(i, "output")}};
            io::write_png(dir / e["artifact"].get<std::string>(), r.artifact_image);
            io::write_png(dir / e["guidance"].get<std::string>(), r.guidance_image);
            io::write_png(dir / e["reference"].get<std::string>(), r.reference_image);
            entries.push_back(std::move(e));
        }
        json manifest = {{"version", 1}, {"coefficients", nullptr}, {"entries", entries}};
        if (options_.coefficients) {
            const DenoiseCoeffs& c = *options_.coefficients;
            manifest["coefficients"] = {{"xi_t", c.xi_t},       {"xi_prev", c.xi_prev},
                                        {"eta_t", c.eta_t},     {"eta_prev", c.eta_prev},
                                        {"sigma_t", c.sigma_t}, {"t_fixed", c.t_fixed}};
        }
        std::ofstream(dir / kManifestName) << manifest.dump(2) << '\n';
    } catch (const std::exception& e) {
        throw FixError(first, std::string("cannot prepare exchange directory: ") + e.what());
    }

    const std::string err = run_process(options_.command, dir, options_.timeout_seconds);
    if (!err.empty()) {
        throw FixError(first, err);
    }
    if (!fs::exists(dir / kDoneMarker)) {
        throw FixError(first, "fixer process finished without writing the done marker");
    }
    std::vector<ColorImage> out;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const FixRequest& r = requests[i];
        ColorImage img;
        try {
            img = io::read_png(dir / entries[i]["output"].get<std::string>());
        } catch (const DataError& e) {
            throw FixError(r.view_id, e.what());
        }
        if (!img.same_size(r.artifact_image)) {
            throw FixError(r.view_id, "fixer output has the wrong size");
        }
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace splatfix::fixer
