#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "relvar/rng.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("relvar_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

inline std::string cli_binary() { return env_or("RELVAR_BIN", "relvar"); }
inline std::string golden_dir() { return env_or("RELVAR_GOLDEN_DIR", "golden"); }

// Correlated standard-normal pair sampler for the Gaussian oracle tests.
inline void sample_bivariate_gaussian(std::uint64_t seed, double rho, std::size_t n,
                                      std::vector<double>& x, std::vector<double>& y) {
    relvar::rng::Xoshiro256 gen(relvar::rng::derive_stream(seed, 0xb1c0));
    x.resize(n);
    y.resize(n);
    const double mix = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = gen.normal();
        const double z2 = gen.normal();
        x[i] = z1;
        y[i] = rho * z1 + mix * z2;
    }
}

// Run the CLI with stdout/stderr captured to files; returns the exit code.
inline int run_cli(const std::string& args, const std::string& stdout_path,
                   const std::string& stderr_path) {
    const std::string cmd =
        cli_binary() + " " + args + " >" + stdout_path + " 2>" + stderr_path;
    const int rc = std::system(cmd.c_str());
    return rc < 0 ? rc : WEXITSTATUS(rc);
}

}  // namespace testutil
