#include "corrlab/fn_table.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "corrlab/error.hpp"
#include "corrlab/numeric.hpp"

namespace corrlab {

namespace fs = std::filesystem;

std::string kind_name(FnKind kind, int k)
{
    switch (kind) {
    case FnKind::VonMangoldt: return "lambda";
    case FnKind::Moebius: return "mu";
    case FnKind::Divisor: return "d" + std::to_string(k);
    case FnKind::Log: return "log";
    case FnKind::IndicatorDyadic: return "dyadic";
    case FnKind::Custom: return "custom";
    }
    return "unknown";
}

FnTable FnTable::slice(std::int64_t a, std::int64_t b) const
{
    if (!covers(a, b) || a > b)
        fail(ErrorKind::Coverage, "slice [" + std::to_string(a) + ", " + std::to_string(b) +
                                      "] outside table [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
    FnTable out;
    out.kind = kind;
    out.k = k;
    out.label = label;
    out.lo = a;
    out.hi = b;
    out.values.assign(values.begin() + (a - lo), values.begin() + (b - lo + 1));
    return out;
}

double FnTable::l2_norm() const
{
    CompensatedSum s;
    for (double v : values)
        s.add(v * v);
    return std::sqrt(s.value());
}

double FnTable::l1_norm() const
{
    CompensatedSum s;
    for (double v : values)
        s.add(std::abs(v));
    return s.value();
}

FnTable make_table(FnKind kind, std::int64_t lo, std::int64_t hi, int k, std::string label)
{
    require(lo <= hi + 1, "table bounds inverted");
    FnTable t;
    t.kind = kind;
    t.k = k;
    t.label = std::move(label);
    t.lo = lo;
    t.hi = hi;
    try {
        t.values.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    } catch (const std::bad_alloc&) {
        fail(ErrorKind::Resource, "cannot allocate table of " + std::to_string(hi - lo + 1) +
                                      " entries");
    } catch (const std::length_error&) {
        fail(ErrorKind::Resource, "table length " + std::to_string(hi - lo + 1) + " too large");
    }
    return t;
}

FnTable custom_table(std::string label, std::int64_t lo, std::vector<double> values)
{
    FnTable t;
    t.kind = FnKind::Custom;
    t.label = std::move(label);
    t.lo = lo;
    t.hi = lo + static_cast<std::int64_t>(values.size()) - 1;
    t.values = std::move(values);
    return t;
}

FnTable constant_table(std::int64_t lo, std::int64_t hi, double c)
{
    FnTable t = make_table(FnKind::Custom, lo, hi, 0, "constant");
    std::fill(t.values.begin(), t.values.end(), c);
    return t;
}

FnTable dyadic_indicator(std::int64_t N, std::int64_t lo, std::int64_t hi)
{
    FnTable t = make_table(FnKind::IndicatorDyadic, lo, hi);
    for (std::int64_t n = std::max(lo, N + 1); n <= std::min(hi, 2 * N); ++n)
        t.values[static_cast<std::size_t>(n - lo)] = 1.0;
    return t;
}

namespace {

constexpr char kMagic[8] = {'C', 'O', 'R', 'R', 'L', 'A', 'B', '1'};

void put_u64(std::string& buf, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::uint64_t fnv1a(const std::string& data)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string serialize(const FnTable& t)
{
    std::string buf(kMagic, 8);
    buf.push_back(static_cast<char>(t.kind));
    buf.push_back(static_cast<char>(t.k));
    put_u64(buf, static_cast<std::uint64_t>(t.lo));
    put_u64(buf, static_cast<std::uint64_t>(t.hi));
    buf.reserve(buf.size() + 8 * t.values.size());
    for (double v : t.values)
        put_u64(buf, std::bit_cast<std::uint64_t>(v));
    return buf;
}

FnTable deserialize(const std::string& buf, const fs::path& path)
{
    auto bad = [&](const std::string& why) {
        fail(ErrorKind::Io, "cache file " + path.string() + ": " + why);
    };
    if (buf.size() < 26 || std::memcmp(buf.data(), kMagic, 8) != 0)
        bad("bad magic");
    auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    FnTable t;
    if (p[8] > static_cast<unsigned char>(FnKind::Custom))
        bad("unknown kind tag");
    t.kind = static_cast<FnKind>(p[8]);
    t.k = p[9];
    t.lo = static_cast<std::int64_t>(get_u64(p + 10));
    t.hi = static_cast<std::int64_t>(get_u64(p + 18));
    if (t.hi < t.lo - 1)
        bad("inverted bounds");
    auto n = static_cast<std::uint64_t>(t.hi - t.lo + 1);
    if (buf.size() != 26 + 8 * n)
        bad("length mismatch");
    t.values.resize(n);
    for (std::uint64_t i = 0; i < n; ++i)
        t.values[i] = std::bit_cast<double>(get_u64(p + 26 + 8 * i));
    return t;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const fs::path& path, const std::string& data)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out)
            fail(ErrorKind::Io, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

fs::path checksum_path(const fs::path& p)
{
    fs::path c = p;
    c += ".fnv";
    return c;
}

} // namespace

void write_table(const FnTable& t, const fs::path& path)
{
    std::string data = serialize(t);
    dump(path, data);
    dump(checksum_path(path), std::to_string(fnv1a(data)) + "\n");
}

FnTable read_table(const fs::path& path) { return deserialize(slurp(path), path); }

fs::path cache_dir_from_env()
{
    const char* env = std::getenv("CORRLAB_CACHE");
    return env ? fs::path(env) : fs::path();
}

fs::path cache_file_name(FnKind kind, int k, std::int64_t lo, std::int64_t hi)
{
    return kind_name(kind, k) + "_" + std::to_string(k) + "_" + std::to_string(lo) + "_" +
           std::to_string(hi) + ".bin";
}

namespace {

class LockFile {
public:
    explicit LockFile(fs::path p) : path_(std::move(p))
    {
        for (int attempt = 0; attempt < 600; ++attempt) {
            int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd >= 0) {
                ::close(fd);
                held_ = true;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    }
    ~LockFile()
    {
        if (held_)
            ::unlink(path_.c_str());
    }
    bool held() const { return held_; }

private:
    fs::path path_;
    bool held_ = false;
};

std::optional<FnTable> try_load(const fs::path& file)
{
    std::error_code ec;
    if (!fs::exists(file, ec) || !fs::exists(checksum_path(file), ec))
        return std::nullopt;
    std::string data = slurp(file);
    std::uint64_t want = 0;
    std::istringstream(slurp(checksum_path(file))) >> want;
    if (fnv1a(data) != want)
        return std::nullopt;
    return deserialize(data, file);
}

} // namespace

FnTable cached_table(const fs::path& dir, FnKind kind, int k, std::int64_t lo, std::int64_t hi,
                     const std::function<FnTable()>& compute, bool* hit)
{
    if (hit)
        *hit = false;
    if (dir.empty())
        return compute();
    fs::create_directories(dir);
    fs::path file = dir / cache_file_name(kind, k, lo, hi);
    if (auto t = try_load(file)) {
        if (hit)
            *hit = true;
        return std::move(*t);
    }
    fs::path lock_path = file;
    lock_path += ".lock";
    LockFile lock(lock_path);
    // Another writer may have finished while we waited.
    if (auto t = try_load(file)) {
        if (hit)
            *hit = true;
        return std::move(*t);
    }
    FnTable t = compute();
    if (lock.held())
        write_table(t, file);
    return t;
}

} // namespace corrlab
