#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qsynth/frontend.hpp"

namespace testing {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
    auto d = std::filesystem::temp_directory_path() /
             ("qsynth-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(d);
    return d;
}

/// Path of the command-line tool, provided by ctest via QSYNTH_BIN.
inline std::string tool_path() {
    const char* p = std::getenv("QSYNTH_BIN");
    return p ? p : "qsynth";
}

/// Runs the tool with the given arguments; returns the exit code and fills
/// `out` with captured stdout.
inline int run_tool(const std::string& args, std::string* out = nullptr) {
    auto tmp = std::filesystem::temp_directory_path() /
               ("qsynth-out-" + std::to_string(::getpid()) + ".txt");
    std::string cmd = tool_path() + " " + args + " > " + tmp.string() + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    if (out) *out = slurp(tmp);
    std::filesystem::remove(tmp);
    if (rc < 0) return -1;
    return WEXITSTATUS(rc);
}

}  // namespace testing
