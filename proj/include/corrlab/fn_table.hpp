#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace corrlab {

// Tags double as the on-disk kind byte of the cache format.
enum class FnKind : std::uint8_t {
    VonMangoldt = 0,
    Moebius = 1,
    Divisor = 2,
    Log = 3,
    IndicatorDyadic = 4,
    Custom = 5,
};

std::string kind_name(FnKind kind, int k = 0);

// Values of an arithmetic function on the integer interval [lo, hi].
struct FnTable {
    FnKind kind = FnKind::Custom;
    int k = 0;                    // Divisor(k); 0 otherwise
    std::string label;            // Custom(label)
    std::int64_t lo = 1;
    std::int64_t hi = 0;
    std::vector<double> values;   // values[i] = f(lo + i)

    std::size_t size() const { return values.size(); }
    bool covers(std::int64_t n) const { return n >= lo && n <= hi; }
    bool covers(std::int64_t a, std::int64_t b) const { return a >= lo && b <= hi; }
    double at(std::int64_t n) const { return values[static_cast<std::size_t>(n - lo)]; }
    // f(n), or 0 outside the table.
    double value_or_zero(std::int64_t n) const { return covers(n) ? at(n) : 0.0; }

    // Restriction to [a, b] (must be inside the table).
    FnTable slice(std::int64_t a, std::int64_t b) const;
    double l2_norm() const;
    double l1_norm() const;
};

FnTable make_table(FnKind kind, std::int64_t lo, std::int64_t hi, int k = 0, std::string label = {});
FnTable custom_table(std::string label, std::int64_t lo, std::vector<double> values);
// Constant c on [lo, hi].
FnTable constant_table(std::int64_t lo, std::int64_t hi, double c = 1.0);
// 1 on (N, 2N] viewed inside [lo, hi].
FnTable dyadic_indicator(std::int64_t N, std::int64_t lo, std::int64_t hi);

// Binary cache: "CORRLAB1", u8 kind, u8 k, u64 lo, u64 hi, then LE doubles.
void write_table(const FnTable& t, const std::filesystem::path& path);
FnTable read_table(const std::filesystem::path& path);

// Cache directory from CORRLAB_CACHE (empty path if unset).
std::filesystem::path cache_dir_from_env();
std::filesystem::path cache_file_name(FnKind kind, int k, std::int64_t lo, std::int64_t hi);

// Loads from dir when a checksum-valid file is present, else computes and
// stores it (guarded by a lock file so two writers never race).
FnTable cached_table(const std::filesystem::path& dir, FnKind kind, int k, std::int64_t lo,
                     std::int64_t hi, const std::function<FnTable()>& compute,
                     bool* hit = nullptr);

} // namespace corrlab
