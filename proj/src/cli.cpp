#include "corrlab/cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "corrlab/arcs.hpp"
#include "corrlab/corr.hpp"
#include "corrlab/dirichlet.hpp"
#include "corrlab/error.hpp"
#include "corrlab/expsum.hpp"
#include "corrlab/fn_table.hpp"
#include "corrlab/identities.hpp"
#include "corrlab/local.hpp"
#include "corrlab/parallel.hpp"
#include "corrlab/sieve.hpp"

namespace corrlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct OptSpec {
    const char* key;
    const char* help;
    bool flag = false;
};

const std::vector<OptSpec> kCommon = {
    {"config", "flat key=value file; flags override it"},
    {"threads", "worker threads (default CORRLAB_THREADS or all cores)"},
    {"cache-dir", "table cache directory (default CORRLAB_CACHE)"},
    {"output", "write the artifact here instead of standard output"},
    {"format", "csv or json"},
    {"force", "run even when the resource estimate is exceeded", true},
};

const std::map<std::string, std::vector<OptSpec>> kCommands = {
    {"sieve",
     {{"kind", "lambda | mu | dk | log"},
      {"k", "divisor order for dk"},
      {"lo", "first n (default 1)"},
      {"hi", "last n"}}},
    {"correlate",
     {{"kind", "lambda-lambda | dk-dl | lambda-dk | goldbach"},
      {"x", "X; n runs over (X, 2X]"},
      {"h0", "centre of the shift window"},
      {"h", "half-width H of the shift window"},
      {"k", "first divisor order"},
      {"l", "second divisor order"},
      {"predict", "none | singular-series | leading | major-arc"},
      {"A", "log power in the exceptional-shift threshold"},
      {"B", "major-arc level"},
      {"Bp", "major-arc width exponent"},
      {"p-max", "Euler product truncation"},
      {"even-only", "profile and print even shifts only", true}}},
    {"predict",
     {{"kind",
       "singular-series | twin-prime-constant | d2d2-leading | dkdl-leading | "
       "dk-lambda-leading | ramanujan"},
      {"h", "the shift"},
      {"k", "first divisor order"},
      {"l", "second divisor order"},
      {"p-max", "Euler product truncation"},
      {"qmax", "Ramanujan expansion truncation"}}},
    {"arcs",
     {{"x", "X"},
      {"B", "level: Q = log^B X"},
      {"Bp", "width: delta = log^Bp X / X"},
      {"h", "also evaluate the Lambda-Lambda major-arc main term at this shift"},
      {"list", "print every arc", true}}},
    {"verify", {{"suite", "identities"}}},
    {"experiment",
     {{"name",
       "fourth-moment | fourth-moment-log | jutila | robert-sargos | y-tilde | "
       "decompose | heath-brown | good-cancellation"},
      {"x", "length X"},
      {"q", "modulus (q1, or q0 for decompose)"},
      {"T", "height or interval length"},
      {"T0", "Jutila interval length"},
      {"t-list", "comma-separated Jutila points"},
      {"t", "height t for y-tilde"},
      {"M", "length M (M1 for y-tilde)"},
      {"theta", "monomial exponent"},
      {"h", "H for y-tilde"},
      {"Q", "Q for y-tilde"},
      {"target", "lambda | dk (decompose)"},
      {"k", "divisor order (decompose)"},
      {"m", "comb parameter (decompose)"},
      {"eps", "epsilon (decompose)"},
      {"H0", "Type d_j threshold (decompose; default X^(1/m + eps))"},
      {"K", "Heath-Brown order"},
      {"kind", "one | moebius | log (good-cancellation)"},
      {"xs", "comma-separated x values (good-cancellation)"},
      {"B", "modulus level (good-cancellation)"},
      {"Bp", "height level (good-cancellation)"}}},
};

struct HelpRequested {
    std::string text;
};

[[noreturn]] void invalid(const std::string& what)
{
    fail(ErrorKind::InvalidArgument, what);
}

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    double x = 0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        invalid(key + ": '" + v + "' is not a number");
    }
    if (used != v.size() || !std::isfinite(x))
        invalid(key + ": '" + v + "' is not a finite number");
    return x;
}

// Accepts 1000000 as well as 1e6; rejects fractions.
std::int64_t parse_int(const std::string& key, const std::string& v)
{
    if (!v.empty() && v.find_first_not_of("+-0123456789") == std::string::npos) {
        try {
            std::size_t used = 0;
            long long x = std::stoll(v, &used);
            if (used == v.size())
                return x;
        } catch (const std::exception&) {
        }
        invalid(key + ": '" + v + "' is out of range");
    }
    double x = parse_real(key, v);
    if (x != std::floor(x) || std::abs(x) > 9.0e15)
        invalid(key + ": '" + v + "' is not an integer");
    return static_cast<std::int64_t>(x);
}

bool parse_bool(const std::string& key, const std::string& v)
{
    std::string s = v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "1" || s == "true" || s == "yes" || s == "on")
        return true;
    if (s == "0" || s == "false" || s == "no" || s == "off")
        return false;
    invalid(key + ": '" + v + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_real(key, trim(item)));
    if (out.empty())
        invalid(key + ": empty list");
    return out;
}

void one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed)
{
    std::string names;
    for (const char* a : allowed) {
        if (v == a)
            return;
        names += names.empty() ? a : std::string(", ") + a;
    }
    invalid(key + ": '" + v + "' is not one of " + names);
}

void check(bool ok, const std::string& constraint)
{
    if (!ok)
        invalid("constraint violated: " + constraint);
}

const std::vector<OptSpec>& command_specs(const std::string& cmd)
{
    auto it = kCommands.find(cmd);
    if (it == kCommands.end())
        invalid("command: '" + cmd + "' is not one of sieve, correlate, predict, arcs, verify, experiment");
    return it->second;
}

// Typed assignment; "h" is the half-width H except for predict and arcs.
void assign(RunConfig& c, const std::string& key, const std::string& v)
{
    if (key == "threads") c.threads = static_cast<int>(parse_int(key, v));
    else if (key == "cache-dir") c.cache_dir = v;
    else if (key == "output") c.output = v;
    else if (key == "format") c.format = v;
    else if (key == "force") c.force = parse_bool(key, v);
    else if (key == "kind") c.kind = v;
    else if (key == "predict") c.predict = v;
    else if (key == "suite") c.suite = v;
    else if (key == "name") c.name = v;
    else if (key == "target") c.target = v;
    else if (key == "x") c.X = parse_int(key, v);
    else if (key == "h") {
        if (c.command == "predict" || c.command == "arcs")
            c.h = parse_int(key, v);
        else
            c.H = parse_int(key, v);
    }
    else if (key == "h0") c.h0 = parse_int(key, v);
    else if (key == "lo") c.lo = parse_int(key, v);
    else if (key == "hi") c.hi = parse_int(key, v);
    else if (key == "k") c.k = static_cast<int>(parse_int(key, v));
    else if (key == "l") c.l = static_cast<int>(parse_int(key, v));
    else if (key == "K") c.K = static_cast<int>(parse_int(key, v));
    else if (key == "m") c.m = static_cast<int>(parse_int(key, v));
    else if (key == "A") c.A = parse_real(key, v);
    else if (key == "B") c.B = parse_real(key, v);
    else if (key == "Bp") c.Bp = parse_real(key, v);
    else if (key == "p-max") c.p_max = parse_int(key, v);
    else if (key == "qmax") c.Qmax = parse_int(key, v);
    else if (key == "q") c.q = parse_int(key, v);
    else if (key == "M") c.M = parse_int(key, v);
    else if (key == "T") c.T = parse_real(key, v);
    else if (key == "T0") c.T0 = parse_real(key, v);
    else if (key == "t") c.t = parse_real(key, v);
    else if (key == "Q") c.Q = parse_real(key, v);
    else if (key == "theta") c.theta = parse_real(key, v);
    else if (key == "eps") c.eps = parse_real(key, v);
    else if (key == "H0") c.H0 = parse_real(key, v);
    else if (key == "t-list") c.t_list = parse_list(key, v);
    else if (key == "xs") c.xs = parse_list(key, v);
    else if (key == "even-only") c.even_only = parse_bool(key, v);
    else if (key == "list") c.list = parse_bool(key, v);
    else invalid("unknown key '" + key + "'");
}

// Documented small-scale defaults for keys the user did not give.
void experiment_defaults(RunConfig& c)
{
    auto dflt = [&](const char* key, auto& field, auto value) {
        if (!c.given.count(key))
            field = value;
    };
    const std::string& n = c.name;
    if (n == "fourth-moment") {
        dflt("x", c.X, std::int64_t{100});
        dflt("q", c.q, std::int64_t{1});
        dflt("T", c.T, 50.0);
    } else if (n == "fourth-moment-log") {
        dflt("x", c.X, std::int64_t{100});
        dflt("q", c.q, std::int64_t{3});
        dflt("T", c.T, 20.0);
    } else if (n == "jutila") {
        dflt("x", c.X, std::int64_t{100});
        dflt("q", c.q, std::int64_t{2});
        dflt("T", c.T, 100.0);
        dflt("T0", c.T0, 20.0);
        dflt("t-list", c.t_list, std::vector<double>{130.0});
    } else if (n == "robert-sargos") {
        dflt("x", c.X, std::int64_t{100});
        dflt("M", c.M, std::int64_t{20});
        dflt("theta", c.theta, -1.0);
    } else if (n == "y-tilde") {
        dflt("t", c.t, 2e4);
        dflt("M", c.M, std::int64_t{100});
        dflt("h", c.H, std::int64_t{50});
        dflt("Q", c.Q, 1.0);
    } else if (n == "decompose") {
        dflt("x", c.X, std::int64_t{10000});
        dflt("q", c.q, std::int64_t{1});
    } else if (n == "heath-brown") {
        dflt("x", c.X, std::int64_t{10000});
    } else if (n == "good-cancellation") {
        dflt("kind", c.kind, std::string("moebius"));
        dflt("xs", c.xs, std::vector<double>{1024, 4096, 16384});
        dflt("B", c.B, 1.0);
        dflt("Bp", c.Bp, 1.5);
    }
}

void validate(RunConfig& c)
{
    check(c.threads >= 0 && c.threads <= 4096, "0 <= threads <= 4096");
    const std::string& cmd = c.command;
    if (c.format.empty())
        c.format = cmd == "correlate" || cmd == "sieve" ? "csv" : "json";
    one_of("format", c.format, {"csv", "json"});
    if (cmd != "correlate" && cmd != "sieve")
        check(c.format == "json", "format = csv is only available for sieve and correlate");

    if (cmd == "sieve") {
        check(c.given.count("kind") > 0, "sieve needs kind");
        one_of("kind", c.kind, {"lambda", "mu", "dk", "log"});
        check(c.given.count("hi") > 0, "sieve needs hi");
        check(c.lo >= 1, "lo >= 1");
        check(c.hi >= c.lo, "hi >= lo");
        if (c.kind == "dk")
            check(c.k >= 1 && c.k <= 32, "1 <= k <= 32");
    } else if (cmd == "correlate") {
        check(c.given.count("kind") > 0, "correlate needs kind");
        one_of("kind", c.kind, {"lambda-lambda", "dk-dl", "lambda-dk", "goldbach"});
        one_of("predict", c.predict, {"none", "singular-series", "leading", "major-arc"});
        check(c.X >= 3, "X >= 3");
        check(c.H >= 0, "H >= 0");
        check(c.H <= c.X, "H <= X");
        check(c.k >= 1 && c.k <= 32 && c.l >= 1 && c.l <= 32, "1 <= k, l <= 32");
        check(c.A > 0, "A > 0");
        check(c.p_max >= 2, "p_max >= 2");
        const bool lam_pair = c.kind == "lambda-lambda" || c.kind == "goldbach";
        if (c.predict == "singular-series")
            check(lam_pair, "predict = singular-series needs kind lambda-lambda or goldbach");
        if (c.predict == "leading")
            check(!lam_pair, "predict = leading needs kind dk-dl or lambda-dk");
        if (c.predict == "major-arc") {
            check(c.kind != "goldbach", "predict = major-arc is not defined for goldbach");
            check(c.B > 0 && c.Bp > 0, "B > 0 and Bp > 0");
        }
        if (c.kind == "goldbach")
            check(c.h0 - c.H >= 4, "goldbach needs h0 - H >= 4 (N >= 4 throughout)");
        else
            check(c.X + 1 + c.h0 - c.H >= 1, "X + 1 + h0 - H >= 1 (shifted window stays in n >= 1)");
    } else if (cmd == "predict") {
        if (!c.given.count("p-max"))
            c.p_max = 1000000;
        check(c.given.count("kind") > 0, "predict needs kind");
        one_of("kind", c.kind,
               {"singular-series", "twin-prime-constant", "d2d2-leading", "dkdl-leading",
                "dk-lambda-leading", "ramanujan"});
        if (c.kind != "twin-prime-constant")
            check(c.given.count("h") > 0, "predict --kind " + c.kind + " needs h");
        if (c.kind == "singular-series" || c.kind == "ramanujan")
            check(c.h != 0, "h != 0");
        check(c.p_max >= 2 && c.p_max <= 2000000000, "2 <= p_max <= 2e9");
        check(c.Qmax >= 1 && c.Qmax <= 100000000, "1 <= Qmax <= 1e8");
        check(c.k >= 1 && c.k <= 32 && c.l >= 1 && c.l <= 32, "1 <= k, l <= 32");
    } else if (cmd == "arcs") {
        check(c.X >= 3, "X >= 3");
        check(c.B > 0 && c.Bp > 0, "B > 0 and Bp > 0");
        if (c.given.count("h"))
            check(std::abs(c.h) < c.X, "|h| < X");
    } else if (cmd == "verify") {
        one_of("suite", c.suite, {"identities"});
    } else if (cmd == "experiment") {
        check(c.given.count("name") > 0, "experiment needs name");
        one_of("name", c.name,
               {"fourth-moment", "fourth-moment-log", "jutila", "robert-sargos", "y-tilde",
                "decompose", "heath-brown", "good-cancellation"});
        experiment_defaults(c);
        if (c.name == "decompose") {
            one_of("target", c.target, {"lambda", "dk"});
            check(c.m >= 2, "m >= 2");
            check(c.eps > 0 && c.eps < 0.5, "0 < eps < 1/2");
            check(c.q >= 1, "q0 >= 1");
        }
        if (c.name == "heath-brown")
            check(c.K >= 1 && c.K <= 6, "1 <= K <= 6");
        if (c.name == "good-cancellation")
            one_of("kind", c.kind, {"one", "moebius", "log"});
        check(c.X >= 1, "X >= 1");
        check(c.q >= 1, "q >= 1");
    }
}

std::ostream& pick_stream(const RunConfig& c, std::ofstream& file, std::ostream& out)
{
    if (c.output.empty())
        return out;
    if (c.output.has_parent_path())
        fs::create_directories(c.output.parent_path());
    file.open(c.output, std::ios::binary);
    if (!file)
        fail(ErrorKind::Io, "cannot open output file " + c.output.string());
    return file;
}

fs::path effective_cache(const RunConfig& c)
{
    return c.cache_dir.empty() ? cache_dir_from_env() : c.cache_dir;
}

std::function<FnTable(FnKind, int, std::int64_t, std::int64_t)> table_source(const RunConfig& c)
{
    fs::path dir = effective_cache(c);
    return [dir](FnKind kind, int k, std::int64_t lo, std::int64_t hi) {
        return cached_table(dir, kind, k, lo, hi, [&] { return tabulate(kind, k, lo, hi); });
    };
}

double physical_memory()
{
    long pages = sysconf(_SC_PHYS_PAGES), size = sysconf(_SC_PAGE_SIZE);
    return pages > 0 && size > 0 ? static_cast<double>(pages) * static_cast<double>(size) : 0.0;
}

// Prints the estimate for large runs and refuses oversize ones without --force.
void gate(const RunConfig& c, double size, const ResourceEstimate& e, std::ostream& err)
{
    if (e.bytes > 64e6 || e.seconds > 1.0)
        err << "resource estimate: memory " << e.bytes / 1e6 << " MB, time " << e.seconds
            << " s\n";
    if (c.force)
        return;
    if (size > kMaxUnforcedX)
        fail(ErrorKind::Resource, "size " + format_double(size) +
                                      " exceeds 1e9; pass --force to run anyway");
    const double mem = physical_memory();
    if (mem > 0 && e.bytes > mem)
        fail(ErrorKind::Resource, "estimated memory exceeds physical memory; pass --force");
}

FnKind sieve_kind(const std::string& s)
{
    if (s == "lambda") return FnKind::VonMangoldt;
    if (s == "mu") return FnKind::Moebius;
    if (s == "dk") return FnKind::Divisor;
    return FnKind::Log;
}

int run_sieve(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    const double n = static_cast<double>(c.hi - c.lo + 1);
    ResourceEstimate e{8.0 * n + 32.0 * static_cast<double>(kDefaultSegment),
                       (c.kind == "dk" ? 3e-8 * c.k / 3.0 : 1e-8) * n};
    gate(c, static_cast<double>(c.hi), e, err);
    const FnKind kind = sieve_kind(c.kind);
    const int k = kind == FnKind::Divisor ? c.k : 0;
    bool hit = false;
    FnTable t = cached_table(effective_cache(c), kind, k, c.lo, c.hi,
                             [&] { return tabulate(kind, k, c.lo, c.hi); }, &hit);
    std::ofstream file;
    std::ostream& o = pick_stream(c, file, out);
    if (c.format == "csv") {
        o << "n,value\n";
        for (std::size_t i = 0; i < t.size(); ++i)
            o << t.lo + static_cast<std::int64_t>(i) << ',' << format_double(t.values[i]) << '\n';
    } else {
        double sum = 0;
        for (double v : t.values)
            sum += v;
        json j;
        j["kind"] = kind_name(kind, k);
        j["lo"] = t.lo;
        j["hi"] = t.hi;
        j["count"] = t.size();
        j["sum"] = sum;
        j["l2_norm"] = t.l2_norm();
        j["cache_hit"] = hit;
        o << j.dump() << '\n';
    }
    return kOk;
}

ExperimentKind experiment_kind(const std::string& s)
{
    if (s == "lambda-lambda") return ExperimentKind::LambdaLambda;
    if (s == "dk-dl") return ExperimentKind::DkDl;
    if (s == "lambda-dk") return ExperimentKind::LambdaDk;
    return ExperimentKind::Goldbach;
}

json profile_json(const ErrorProfile& p)
{
    json j;
    j["A"] = p.A;
    j["threshold"] = p.threshold;
    j["count"] = p.count;
    j["exceptional_count"] = p.exceptional_count;
    j["exceptional_fraction"] = p.exceptional_fraction;
    j["mean_abs_norm_error"] = p.mean_abs_norm_error;
    json q = json::array();
    for (auto [level, v] : p.quantiles)
        q.push_back({{"p", level}, {"value", v}});
    j["quantiles"] = q;
    return j;
}

int run_correlate(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    ExperimentParams p;
    p.kind = experiment_kind(c.kind);
    p.k = c.k;
    p.l = c.l;
    p.X = c.X;
    p.h0 = c.h0;
    p.H = c.H;
    p.A = c.A;
    p.B = c.B;
    p.Bp = c.Bp;
    p.p_max = c.p_max;
    p.even_only = c.even_only;
    p.major_arc_prediction = c.predict == "major-arc";
    p.tables = table_source(c);
    gate(c, static_cast<double>(c.X), estimate_experiment(p), err);

    ExperimentResult r = averaged_theorem_experiment(p);
    CorrelationSeries& s = r.series;
    if (c.predict == "none") {
        s.main_terms.reset();
    } else if (c.predict == "major-arc") {
        s.main_terms = *r.major_arc_terms;
        r.prediction = "major-arc main term";
    }
    auto keep = [&](std::int64_t h) { return !c.even_only || h % 2 == 0; };
    if (s.main_terms)
        r.profile = error_profile(s, c.A, [&](std::int64_t h) {
            return keep(h) && h != 0 && (p.kind != ExperimentKind::Goldbach || h >= 4);
        });

    std::ofstream file;
    std::ostream& o = pick_stream(c, file, out);
    if (c.format == "csv") {
        write_csv(s, o, keep);
        return kOk;
    }
    json j;
    j["command"] = "correlate";
    j["kind"] = c.kind;
    j["X"] = c.X;
    j["h0"] = c.h0;
    j["H"] = c.H;
    if (p.kind == ExperimentKind::DkDl || p.kind == ExperimentKind::LambdaDk)
        j["k"] = c.k;
    if (p.kind == ExperimentKind::DkDl)
        j["l"] = c.l;
    j["predict"] = c.predict;
    j["prediction"] = c.predict == "none" ? "" : r.prediction;
    j["norm"] = s.norm;
    j["used_fft"] = s.used_fft;
    j["self_check_error"] = s.self_check_error;
    if (s.main_terms)
        j["profile"] = profile_json(r.profile);
    json rows = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::int64_t h = s.shift(i);
        if (!keep(h))
            continue;
        json row;
        row["h"] = h;
        row["value"] = s.values[i];
        if (s.main_terms) {
            const double mt = (*s.main_terms)[i];
            row["main_term"] = mt;
            row["error"] = s.values[i] - mt;
            row["norm_error"] = (s.values[i] - mt) / s.norm;
        }
        rows.push_back(row);
    }
    j["series"] = rows;
    o << j.dump() << '\n';
    return kOk;
}

int run_predict(const RunConfig& c, std::ostream& out)
{
    std::ofstream file;
    std::ostream& o = pick_stream(c, file, out);
    if (c.kind == "ramanujan") {
        json j;
        j["h"] = c.h;
        j["kind"] = c.kind;
        j["value"] = singular_series_via_ramanujan(c.h, c.Qmax);
        j["qmax"] = c.Qmax;
        j["tail_bound"] = nullptr;   // no explicit bound for the truncated expansion
        o << j.dump() << '\n';
        return kOk;
    }
    double value = 0, tail = 0;
    std::int64_t h = c.h;
    if (c.kind == "singular-series") {
        auto s = singular_series(c.h, c.p_max);
        value = s.value;
        tail = s.tail_bound;
    } else if (c.kind == "twin-prime-constant") {
        auto r = twin_prime_constant(c.p_max);
        value = r.value;
        tail = r.tail_bound;
        h = 0;
    } else if (c.kind == "d2d2-leading" || c.kind == "dkdl-leading") {
        const bool d2 = c.kind == "d2d2-leading";
        auto r = leading_coeff_P(d2 ? 2 : c.k, d2 ? 2 : c.l, c.h, c.p_max);
        value = r.value;
        tail = r.tail_bound;
    } else {
        auto r = leading_coeff_Q(c.k, c.h, c.p_max);
        value = r.value;
        tail = r.tail_bound;
    }
    o << prediction_json(h, c.kind, value, c.p_max, tail) << '\n';
    return kOk;
}

int run_arcs(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    ArcSystem a = build_arcs(c.X, c.B, c.Bp);
    json j;
    j["X"] = a.X;
    j["B"] = a.B;
    j["Bp"] = a.Bp;
    j["Q"] = a.Q;
    j["delta"] = a.delta;
    j["qmax"] = a.qmax;
    j["arc_count"] = a.arcs.size();
    j["measure"] = a.measure();
    if (c.given.count("h")) {
        ResourceEstimate e{16.0 * static_cast<double>(c.X),
                           2e-9 * static_cast<double>(c.X) * static_cast<double>(a.arcs.size())};
        gate(c, static_cast<double>(c.X), e, err);
        FnTable lam = table_source(c)(FnKind::VonMangoldt, 0, c.X + 1, 2 * c.X);
        j["h"] = c.h;
        j["major_arc_main_term"] = major_arc_mt_kernel(lam, lam, a, c.h, c.h).at(0);
    }
    if (c.list) {
        json arcs = json::array();
        for (const Arc& arc : a.arcs)
            arcs.push_back(
                {{"q", arc.q}, {"a", arc.a}, {"center", arc.center}, {"halfwidth", arc.halfwidth}});
        j["arcs"] = arcs;
    }
    std::ofstream file;
    pick_stream(c, file, out) << j.dump() << '\n';
    return kOk;
}

int run_verify(const RunConfig& c, std::ostream& out)
{
    std::ofstream file;
    std::ostream& o = pick_stream(c, file, out);
    auto results = run_identity_suite();
    int failed = 0;
    for (const auto& r : results) {
        failed += r.passed ? 0 : 1;
        o << (r.passed ? "PASS " : "FAIL ") << r.module << ": " << r.name << " (measured "
          << format_double(r.measured) << ", tolerance " << format_double(r.tolerance) << ")\n";
    }
    o << results.size() - static_cast<std::size_t>(failed) << " of " << results.size()
      << " identities hold\n";
    return failed == 0 ? kOk : kFailure;
}

CancelKind cancel_kind(const std::string& s)
{
    if (s == "one") return CancelKind::One;
    if (s == "log") return CancelKind::Log;
    return CancelKind::Moebius;
}

int run_experiment(const RunConfig& c, std::ostream& out)
{
    std::string text;
    const std::string& n = c.name;
    if (n == "fourth-moment" || n == "fourth-moment-log") {
        text = fourth_moment_experiment(c.X, c.q, c.T, n == "fourth-moment-log").to_json();
    } else if (n == "jutila") {
        text = jutila_experiment(c.q, c.T, c.T0, c.t_list, c.X).to_json();
    } else if (n == "robert-sargos") {
        text = rs_fourth_moment_experiment(c.M, static_cast<double>(c.X), c.theta).to_json();
    } else if (n == "y-tilde") {
        text = y_tilde_vs_exponent_pair(c.t, c.M, static_cast<double>(c.H), c.Q).to_json();
    } else if (n == "decompose") {
        CombParams p;
        p.target = c.target == "lambda" ? DecompTarget::Lambda : DecompTarget::Dk;
        p.k = c.k;
        p.m = c.m;
        p.eps = c.eps;
        p.X = c.X;
        p.q0 = c.q;
        p.H0 = c.H0 > 0 ? c.H0 : std::pow(static_cast<double>(c.X), 1.0 / c.m + c.eps);
        text = pieces_json(comb_decompose(p));
    } else if (n == "heath-brown") {
        auto pieces = heath_brown_decompose(c.K, c.X);
        auto chk = verify_pieces(pieces, sieve_lambda(c.X + 1, 2 * c.X), c.X + 1, 2 * c.X);
        json j;
        j["experiment"] = "heath-brown";
        j["K"] = c.K;
        j["X"] = c.X;
        j["pieces"] = pieces.size();
        j["max_abs_error"] = chk.max_abs_error;
        j["worst_n"] = chk.worst_n;
        text = j.dump();
    } else {
        auto rep = good_cancellation_report(cancel_kind(c.kind), c.xs, c.B, c.Bp);
        json j;
        j["experiment"] = "good-cancellation";
        j["kind"] = c.kind;
        json rows = json::array();
        for (auto& r : rep.rows)
            rows.push_back({{"x", r.x}, {"worst_ratio", r.worst_ratio}, {"q", r.q}, {"a", r.a},
                            {"t", r.t}});
        j["rows"] = rows;
        j["decay_exponent"] = rep.decay_exponent;
        text = j.dump();
    }
    std::ofstream file;
    pick_stream(c, file, out) << text << '\n';
    return kOk;
}

} // namespace

std::map<std::string, std::string> read_config_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        invalid("config: cannot read " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            invalid("config: line " + std::to_string(lineno) + " is not key=value");
        std::string key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0)
            key.erase(0, 2);
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

RunConfig parse_args(const std::vector<std::string>& args)
{
    CLI::App app{"corrlab: correlations of arithmetic functions"};
    app.require_subcommand(0, 1);
    app.set_help_flag("--help", "print help");   // -h would clash with --h
    std::string top_config;
    app.add_option("--config", top_config, "flat key=value file (may set command=...)");

    // string storage per command and key; std::map keeps references stable
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> flags;
    std::map<std::string, std::map<std::string, CLI::Option*>> opts;
    for (const auto& [cmd, specs] : kCommands) {
        CLI::App* sub = app.add_subcommand(cmd);
        std::vector<OptSpec> all = kCommon;
        all.insert(all.end(), specs.begin(), specs.end());
        for (const OptSpec& s : all) {
            const std::string name = "--" + std::string(s.key);
            if (s.flag)
                opts[cmd][s.key] = sub->add_flag(name, flags[cmd][s.key], s.help);
            else
                opts[cmd][s.key] = sub->add_option(name, values[cmd][s.key], s.help);
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::string sub_help;
        for (CLI::App* s : app.get_subcommands())
            sub_help = s->help();
        throw HelpRequested{sub_help.empty() ? app.help() : sub_help};
    } catch (const CLI::ParseError& e) {
        invalid(e.what());
    }

    std::string command;
    for (CLI::App* s : app.get_subcommands())
        command = s->get_name();

    std::map<std::string, std::string> merged;
    std::string config_path = top_config;
    if (!command.empty() && !values[command]["config"].empty())
        config_path = values[command]["config"];
    if (!config_path.empty()) {
        merged = read_config_file(config_path);
        if (auto it = merged.find("command"); it != merged.end()) {
            if (command.empty())
                command = it->second;
            else if (it->second != command)
                invalid("config: command '" + it->second + "' conflicts with '" + command + "'");
            merged.erase(it);
        }
    }
    if (command.empty())
        invalid("command: none given (use a subcommand or command= in the config file)");
    const auto& specs = command_specs(command);

    std::set<std::string> allowed;
    for (const auto& s : kCommon)
        allowed.insert(s.key);
    for (const auto& s : specs)
        allowed.insert(s.key);
    for (const auto& [key, v] : merged)
        if (!allowed.count(key))
            invalid("config: key '" + key + "' does not apply to " + command);
    merged.erase("config");

    // flags override the file
    for (auto& [key, opt] : opts[command]) {
        if (key == "config" || opt->count() == 0)
            continue;
        auto fit = flags[command].find(key);
        merged[key] = fit != flags[command].end() ? (fit->second ? "true" : "false")
                                                  : values[command][key];
    }

    RunConfig c;
    c.command = command;
    c.given = merged;
    for (const auto& [key, v] : merged)
        assign(c, key, v);
    validate(c);
    return c;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    if (c.threads > 0)
        set_thread_count(c.threads);
    if (c.command == "sieve")
        return run_sieve(c, out, err);
    if (c.command == "correlate")
        return run_correlate(c, out, err);
    if (c.command == "predict")
        return run_predict(c, out);
    if (c.command == "arcs")
        return run_arcs(c, out, err);
    if (c.command == "verify")
        return run_verify(c, out);
    return run_experiment(c, out);
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Coverage:
    case ErrorKind::Range:
        return kInvalidConfig;
    case ErrorKind::Resource:
        return kResourceExceeded;
    case ErrorKind::NonConvergence:
        return kNonConvergence;
    case ErrorKind::Io:
        break;
    }
    return kFailure;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    try {
        return run(parse_args(args), out, err);
    } catch (const HelpRequested& h) {
        out << h.text;
        return kOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return kResourceExceeded;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kFailure;
}

} // namespace corrlab::cli
