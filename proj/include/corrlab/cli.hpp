#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "corrlab/error.hpp"

namespace corrlab::cli {

enum Exit : int {
    kOk = 0,
    kFailure = 1,          // a verification suite failed, or an I/O problem
    kInvalidConfig = 2,
    kResourceExceeded = 3,
    kNonConvergence = 4,
};

// Sizes past which a run needs --force.
inline constexpr double kMaxUnforcedX = 1e9;

// Typed, validated parameters of one run. Fields a command does not use keep
// their defaults.
struct RunConfig {
    std::string command;   // sieve | correlate | predict | arcs | verify | experiment
    std::string kind;
    std::string predict = "none";
    std::string suite = "identities";
    std::string name;      // experiment name
    std::string target = "dk";

    std::int64_t X = 1000000;
    std::int64_t H = 64;
    std::int64_t h0 = 0;
    std::int64_t h = 0;    // predict: the shift
    std::int64_t lo = 1;
    std::int64_t hi = 0;
    int k = 2;
    int l = 2;
    int K = 3;
    int m = 3;
    double A = 1.0;
    double B = 1.0;
    double Bp = 2.5;
    std::int64_t p_max = 100000;
    std::int64_t Qmax = 100000;
    std::int64_t q = 1;
    std::int64_t M = 20;
    double T = 50.0;
    double T0 = 20.0;
    double t = 2e4;
    double Q = 1.0;
    double theta = -1.0;
    double eps = 0.1;
    double H0 = 0.0;       // 0: X^(1/m + eps)
    std::vector<double> t_list;
    std::vector<double> xs;
    bool even_only = false;
    bool list = false;
    bool force = false;

    int threads = 0;       // 0: CORRLAB_THREADS or the hardware default
    std::filesystem::path cache_dir;   // empty: CORRLAB_CACHE, or no cache
    std::filesystem::path output;      // empty: standard output
    std::string format;                // csv | json; empty picks the command default

    std::map<std::string, std::string> given;   // raw key=value pairs after merging
};

// Reads `key = value` lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

// Command-line arguments (without the program name) to a validated config.
// Throws corrlab::Error(InvalidArgument) naming the violated constraint.
RunConfig parse_args(const std::vector<std::string>& args);

// Executes one run; diagnostics go to err, artifacts to out or config.output.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Exit status for a library error of the given kind.
int exit_code(ErrorKind kind);

// parse_args + run with exit-code mapping; what the binary's main calls.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace corrlab::cli
