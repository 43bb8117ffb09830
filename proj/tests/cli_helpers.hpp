#pragma once

// Helpers for driving the built CLI binary from tests.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

namespace cli_test {

inline std::string cli_path() { return PPCA_CLI_PATH; }

/// Fresh working directory under the system temp root.
inline std::filesystem::path make_work_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("ppca_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Runs `ppca <args>` inside dir, capturing stdout/stderr.
inline RunResult run_cli(const std::filesystem::path& dir, const std::string& args) {
    const auto out_file = dir / "_stdout.txt";
    const auto err_file = dir / "_stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && '" + cli_path() + "' " + args + " > '" +
                            out_file.string() + "' 2> '" + err_file.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = slurp(out_file);
    res.err = slurp(err_file);
    return res;
}

}  // namespace cli_test
