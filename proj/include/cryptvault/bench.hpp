#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryptvault/bytes.hpp"
#include "cryptvault/errors.hpp"
#include "cryptvault/fs.hpp"
#include "cryptvault/keystore.hpp"
#include "cryptvault/vault.hpp"

namespace cryptvault {

inline constexpr std::uint64_t kDefaultBenchSeed = 42;
inline constexpr int kDefaultBenchRepetitions = 5;

struct CorpusEntry {
    std::string label;
    std::uint64_t size = 0;
};

struct CorpusSpec {
    std::vector<CorpusEntry> entries;
    std::uint64_t seed = kDefaultBenchSeed;

    // The reference corpus: ten file-type labels with fixed sizes spanning
    // 75 B to ~26 MB.
    static CorpusSpec reference(std::uint64_t seed = kDefaultBenchSeed) {
        return CorpusSpec{{
                              {"Text", 75},
                              {"Image", 5024},
                              {"Excel", 8746},
                              {"Bitmap", 20032},
                              {"Document", 22016},
                              {"PowerPoint", 27553},
                              {"Executable", 43040},
                              {"PDF", 905446},
                              {"Audio", 9180972},
                              {"Video", 26246026},
                          },
                          seed};
    }
};

struct CorpusFile {
    std::string label;
    std::filesystem::path path;
    std::uint64_t size = 0;
};

struct BenchSample {
    std::string label;
    std::uint64_t original_size = 0;
    std::uint64_t encrypted_size = 0;
    std::uint64_t overhead = 0;
    double exec_time_seconds = 0.0;
    std::uint64_t key_size = 0;

    friend bool operator==(const BenchSample&, const BenchSample&) = default;
};

enum class TableFormat { csv, json };

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Incompressible pseudorandom content, reproducible from (seed, index).
inline Bytes corpus_bytes(std::uint64_t seed, std::uint64_t index, std::uint64_t size) {
    std::uint64_t mix = seed ^ (index + 1) * 0x9e3779b97f4a7c15ULL;
    std::mt19937_64 eng(splitmix64(mix));
    Bytes out(size);
    std::size_t i = 0;
    while (i + 8 <= size) {
        const std::uint64_t v = eng();
        for (int b = 0; b < 8; ++b)
            out[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
        i += 8;
    }
    if (i < size) {
        std::uint64_t v = eng();
        for (; i < size; ++i, v >>= 8)
            out[i] = static_cast<std::uint8_t>(v);
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidArgument("bad numeric field: '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidArgument("bad integer field: '" + std::string(s) + "'");
    return v;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

inline std::vector<CorpusFile> make_corpus(const CorpusSpec& spec, FsAdapter& fs,
                                           const std::filesystem::path& workdir) {
    fs.make_dirs(workdir);
    std::vector<CorpusFile> out;
    out.reserve(spec.entries.size());
    for (std::size_t i = 0; i < spec.entries.size(); ++i) {
        const auto& entry = spec.entries[i];
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "%02llu_",
                      static_cast<unsigned long long>(i + 1));
        const std::filesystem::path p = workdir / (prefix + entry.label + ".bin");
        fs.write_file_atomic(p, ByteView(detail::corpus_bytes(spec.seed, i, entry.size)));
        out.push_back({entry.label, p, entry.size});
    }
    return out;
}

// One sample per corpus file. exec_time is the median wall time of the full
// put (encrypt + ciphertext write + key store) over `repetitions` runs; the
// size columns are read back from storage, not recomputed.
inline std::vector<BenchSample> run_bench(const std::vector<CorpusFile>& corpus, Vault& vault,
                                          FsAdapter& fs, int repetitions = kDefaultBenchRepetitions) {
    if (repetitions < 1)
        throw InvalidArgument("repetitions must be >= 1");
    std::vector<BenchSample> samples;
    samples.reserve(corpus.size());
    for (const auto& file : corpus) {
        const auto content = fs.read_file(file.path);
        if (!content)
            throw StorageError("corpus file missing: '" + file.path.string() + "'");

        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(repetitions));
        for (int rep = 0; rep < repetitions; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            vault.put(file.label, ByteView(*content), /*overwrite=*/true);
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
        }

        const VaultEntry entry = vault.stat(file.label);
        const auto key_stat = fs.stat(vault.keys().key_path(file.label));
        if (!key_stat)
            throw KeyNotFound("key missing after put: '" + file.label + "'");

        BenchSample s;
        s.label = file.label;
        s.original_size = entry.original_size;
        s.encrypted_size = entry.encrypted_size;
        s.overhead = entry.encrypted_size - entry.original_size;
        s.exec_time_seconds = detail::median(std::move(times));
        s.key_size = key_stat->size;
        samples.push_back(std::move(s));
    }
    return samples;
}

inline constexpr std::string_view kTableCsvHeader =
    "sr_no,file_type,original_size_bytes,encrypted_size_bytes,overhead_bytes,"
    "exec_time_seconds,key_size_bytes";

inline std::string emit_table(const std::vector<BenchSample>& samples, TableFormat format) {
    if (format == TableFormat::json) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            rows.push_back({{"sr_no", i + 1},
                            {"file_type", s.label},
                            {"original_size_bytes", s.original_size},
                            {"encrypted_size_bytes", s.encrypted_size},
                            {"overhead_bytes", s.overhead},
                            {"exec_time_seconds", s.exec_time_seconds},
                            {"key_size_bytes", s.key_size}});
        }
        return rows.dump(2) + "\n";
    }
    std::string out(kTableCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (s.label.find_first_of(",\t\r\n") != std::string::npos)
            throw InvalidArgument("file type label contains a csv delimiter: '" + s.label + "'");
        out += std::to_string(i + 1);
        out += ',';
        out += s.label;
        out += ',';
        out += std::to_string(s.original_size);
        out += ',';
        out += std::to_string(s.encrypted_size);
        out += ',';
        out += std::to_string(s.overhead);
        out += ',';
        out += detail::format_double(s.exec_time_seconds);
        out += ',';
        out += std::to_string(s.key_size);
        out += '\n';
    }
    return out;
}

inline std::vector<BenchSample> parse_table(std::string_view text, TableFormat format) {
    std::vector<BenchSample> samples;
    if (format == TableFormat::json) {
        const auto rows = nlohmann::json::parse(text);
        if (!rows.is_array())
            throw InvalidArgument("json table must be an array of row objects");
        for (const auto& row : rows) {
            BenchSample s;
            s.label = row.at("file_type").get<std::string>();
            s.original_size = row.at("original_size_bytes").get<std::uint64_t>();
            s.encrypted_size = row.at("encrypted_size_bytes").get<std::uint64_t>();
            s.overhead = row.at("overhead_bytes").get<std::uint64_t>();
            s.exec_time_seconds = row.at("exec_time_seconds").get<double>();
            s.key_size = row.at("key_size_bytes").get<std::uint64_t>();
            samples.push_back(std::move(s));
        }
        return samples;
    }

    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        if (!saw_header) {
            if (line != kTableCsvHeader)
                throw InvalidArgument("unexpected csv header: '" + std::string(line) + "'");
            saw_header = true;
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 7)
            throw InvalidArgument("csv row must have 7 fields, got " +
                                  std::to_string(fields.size()));
        BenchSample s;
        s.label = std::string(fields[1]);
        s.original_size = detail::parse_u64(fields[2]);
        s.encrypted_size = detail::parse_u64(fields[3]);
        s.overhead = detail::parse_u64(fields[4]);
        s.exec_time_seconds = detail::parse_double(fields[5]);
        s.key_size = detail::parse_u64(fields[6]);
        samples.push_back(std::move(s));
    }
    if (!saw_header)
        throw InvalidArgument("csv table is missing its header row");
    return samples;
}

} // namespace cryptvault
