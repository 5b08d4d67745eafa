// Acceptance suite: exercises the shipped library and CLI end to end and
// prints one PASS/FAIL line per criterion. Exits nonzero if any criterion
// fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "cryptvault/cryptvault.hpp"

#include "test_util.hpp"

#ifndef CRYPTVAULT_CLI_PATH
#error "CRYPTVAULT_CLI_PATH must point at the built cli binary"
#endif

namespace fs = std::filesystem;
using namespace cryptvault;
using testutil::kReferenceRows;
using testutil::kReferenceTimes;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    const fs::path err_file = scratch / "stderr.txt";
    const std::string cmd =
        std::string(CRYPTVAULT_CLI_PATH) + " " + args + " 2>" + err_file.string();
    CliResult result;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe)
        throw std::runtime_error("popen failed for: " + cmd);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
        result.out.append(buf, n);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    LocalFs lfs;
    if (auto blob = lfs.read_file(err_file))
        result.err.assign(blob->begin(), blob->end());
    return result;
}

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double extract_r_squared(const std::string& report, const std::string& series) {
    const std::string tag = "fit " + series + ":";
    const std::size_t line = report.find(tag);
    if (line == std::string::npos)
        throw std::runtime_error("report lacks series '" + series + "'");
    const std::string key = "r_squared=";
    const std::size_t pos = report.find(key, line);
    if (pos == std::string::npos)
        throw std::runtime_error("series '" + series + "' lacks r_squared");
    return std::stod(report.substr(pos + key.size()));
}

std::vector<BenchSample> reference_samples() {
    std::vector<BenchSample> samples;
    for (std::size_t i = 0; i < std::size(kReferenceRows); ++i) {
        const auto& row = kReferenceRows[i];
        samples.push_back({row.label, row.original, row.encrypted, row.overhead,
                           kReferenceTimes[i], 141});
    }
    return samples;
}

// Independent baseline for criterion 3: plain normal-equation sums.
double naive_r_squared(const std::vector<double>& ys) {
    const auto n = static_cast<double>(ys.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double x = static_cast<double>(i + 1);
        sx += x;
        sy += ys[i];
        sxx += x * x;
        syy += ys[i] * ys[i];
        sxy += x * ys[i];
    }
    const double num = n * sxy - sx * sy;
    return (num * num) / ((n * sxx - sx * sx) * (n * syy - sy * sy));
}

// --- criteria -------------------------------------------------------------

Check criterion_size_law(const std::vector<BenchSample>& samples, double bench_seconds) {
    Check c;
    c.expect(samples.size() == 10, "expected 10 bench rows");
    if (!c.ok)
        return c;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto& row = kReferenceRows[i];
        c.expect(s.original_size == row.original,
                 s.label + ": original " + std::to_string(s.original_size));
        c.expect(s.encrypted_size == row.encrypted,
                 s.label + ": encrypted " + std::to_string(s.encrypted_size) + " != " +
                     std::to_string(row.encrypted));
        c.expect(s.overhead == row.overhead,
                 s.label + ": overhead " + std::to_string(s.overhead) + " != " +
                     std::to_string(row.overhead));
    }
    c.expect(bench_seconds < 30.0,
             "bench took " + std::to_string(bench_seconds) + " s, limit 30");
    return c;
}

Check criterion_key_size() {
    Check c;
    InMemoryFs mem;
    Vault vault(mem, "data", "keys", OpenMode::create);
    const auto corpus = make_corpus(CorpusSpec::reference(), mem, "corpus");
    run_bench(corpus, vault, mem, 1);

    std::size_t count = 0;
    for (const auto& e : mem.list_dir("keys")) {
        const auto st = mem.stat(fs::path("keys") / e.name);
        c.expect(st && !st->is_dir && st->size == 141,
                 "key file '" + e.name + "' is not 141 bytes");
        ++count;
    }
    c.expect(count == 10, "expected 10 key files, found " + std::to_string(count));
    return c;
}

Check criterion_regression(const fs::path& scratch) {
    Check c;

    // confirm the targets with the independent oracle before trusting them
    std::vector<double> times(kReferenceTimes, kReferenceTimes + 10);
    std::vector<double> overheads;
    for (const auto& row : kReferenceRows)
        overheads.push_back(static_cast<double>(row.overhead));
    c.expect(std::abs(naive_r_squared(times) - 0.438) <= 0.005,
             "oracle disagrees with the 0.438 target");
    c.expect(std::abs(naive_r_squared(overheads) - 0.037) <= 0.005,
             "oracle disagrees with the 0.037 target");

    const fs::path csv = scratch / "table.csv";
    LocalFs lfs;
    lfs.write_file_atomic(csv, as_bytes_view(emit_table(reference_samples(), TableFormat::csv)));

    const auto res = run_cli("report " + csv.string(), scratch);
    c.expect(res.exit_code == 0, "report exited " + std::to_string(res.exit_code));
    if (!c.ok)
        return c;

    const double time_r2 = extract_r_squared(res.out, "exec_time_vs_index");
    const double overhead_r2 = extract_r_squared(res.out, "overhead_vs_index");
    c.expect(std::abs(time_r2 - 0.438) <= 0.005,
             "time r_squared " + std::to_string(time_r2));
    c.expect(std::abs(overhead_r2 - 0.037) <= 0.005,
             "overhead r_squared " + std::to_string(overhead_r2));
    return c;
}

Check criterion_worst_overhead(const fs::path& scratch) {
    Check c;
    const auto report = analyze(reference_samples());
    c.expect(report.total_worst_overhead == 157,
             "library reports " + std::to_string(report.total_worst_overhead));

    const fs::path csv = scratch / "table2.csv";
    LocalFs lfs;
    lfs.write_file_atomic(csv, as_bytes_view(emit_table(reference_samples(), TableFormat::csv)));
    const auto res = run_cli("report " + csv.string(), scratch);
    c.expect(res.exit_code == 0, "report exited " + std::to_string(res.exit_code));
    c.expect(res.out.find("total_worst_overhead_bytes: 157") != std::string::npos,
             "report does not state 157 bytes");
    return c;
}

Check criterion_time_ordering(const std::vector<BenchSample>& samples) {
    Check c;
    c.expect(samples.size() == 10, "expected 10 bench rows");
    if (!c.ok)
        return c;
    const double pdf_t = samples[7].exec_time_seconds;
    const double audio_t = samples[8].exec_time_seconds;
    const double video_t = samples[9].exec_time_seconds;
    c.expect(pdf_t < audio_t && audio_t < video_t,
             "times not strictly increasing across the large files: " +
                 std::to_string(pdf_t) + ", " + std::to_string(audio_t) + ", " +
                 std::to_string(video_t));
    for (const auto& s : samples)
        c.expect(s.exec_time_seconds < 5.0,
                 s.label + " took " + std::to_string(s.exec_time_seconds) + " s, limit 5");
    return c;
}

Check criterion_property_suites() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(424242);

    // padding bounds and roundtrip over the stated sweep
    auto sweep_one = [&](std::uint64_t n) {
        const std::uint64_t p = padded_size(n);
        c.expect(p % 16 == 0 && p - n >= 1 && p - n <= 16,
                 "padded_size bounds broken at n=" + std::to_string(n));
    };
    for (std::uint64_t n = 0; n <= 1024; ++n) {
        sweep_one(n);
        const Bytes in = testutil::random_bytes(rng, n);
        const Bytes padded = pad(ByteView(in));
        if (padded.size() != padded_size(n) || unpad(ByteView(padded)) != in) {
            c.expect(false, "pad/unpad roundtrip broken at n=" + std::to_string(n));
            break;
        }
    }
    for (const auto& row : kReferenceRows)
        sweep_one(row.original);

    // encrypt/decrypt identity over random binaries
    for (int i = 0; i < 50; ++i) {
        const RawKey key = testutil::random_raw_key(rng);
        const Bytes in = testutil::random_bytes(rng, rng() % 4096);
        if (decrypt(ByteView(encrypt(ByteView(in), key)), key) != in) {
            c.expect(false, "encrypt/decrypt identity broken");
            break;
        }
    }

    // envelope serialize/parse/store/load roundtrips
    InMemoryFs mem;
    mem.make_dirs("keys");
    KeyStore store(mem, "keys", "data");
    for (int i = 0; i < 20; ++i) {
        const std::string name = "f" + std::to_string(i);
        const auto env = generate_key(name, sha256(name), CipherConfig{});
        c.expect(parse_envelope(ByteView(serialize_envelope(env))) == env,
                 "envelope serialize/parse roundtrip broken");
        store.store(env);
        c.expect(store.load(name) == env, "envelope store/load roundtrip broken");
    }

    // key-separation scan of the data root, on both adapters
    auto scan_adapter = [&](FsAdapter& fsa, const fs::path& data_root,
                            const fs::path& key_root) {
        Vault vault(fsa, data_root, key_root, OpenMode::create);
        std::vector<std::string> names;
        for (int i = 0; i < 5; ++i) {
            names.push_back("s" + std::to_string(i));
            vault.put(names.back(), ByteView(testutil::random_bytes(rng, 2048)));
        }
        std::vector<Bytes> data_files;
        const std::function<void(const fs::path&)> walk = [&](const fs::path& dir) {
            for (const auto& e : fsa.list_dir(dir)) {
                if (e.is_dir)
                    walk(dir / e.name);
                else
                    data_files.push_back(*fsa.read_file(dir / e.name));
            }
        };
        walk(data_root);
        for (const auto& name : names) {
            const auto env = vault.keys().load(name);
            for (const auto& blob : data_files) {
                const bool found = std::search(blob.begin(), blob.end(), env.key_bytes.begin(),
                                               env.key_bytes.end()) != blob.end();
                c.expect(!found, "key bytes found inside the data root");
            }
        }
        // adapter equivalence: identical behaviour on basic operations
        const Bytes content = testutil::random_bytes(rng, 777);
        vault.put("equiv", ByteView(content));
        c.expect(vault.get("equiv") == content, "vault roundtrip broken");
        c.expect(vault.stat("equiv").encrypted_size == padded_size(777),
                 "vault stat size broken");
        vault.remove("equiv");
        bool threw = false;
        try {
            vault.get("equiv");
        } catch (const EntryNotFound&) {
            threw = true;
        }
        c.expect(threw, "vault remove broken");
    };
    InMemoryFs mem2;
    scan_adapter(mem2, "data", "keys");
    testutil::TempDir tmp("cryptvault-acceptance");
    LocalFs local;
    scan_adapter(local, tmp.path() / "data", tmp.path() / "keys");

    // least squares vs independent formulation, and scale covariance
    std::uniform_real_distribution<double> coord(-100.0, 100.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point> pts(2 + trial % 17);
        for (auto& p : pts)
            p = {coord(rng), coord(rng)};
        const auto fit = linear_fit(pts);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& p : pts) {
            sx += p.x;
            sy += p.y;
            sxx += p.x * p.x;
            sxy += p.x * p.y;
        }
        const double n = static_cast<double>(pts.size());
        const double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double b = (sy - a * sx) / n;
        c.expect(std::abs(fit.a - a) <= 1e-9 * std::max(1.0, std::abs(a)),
                 "slope disagrees with the oracle");
        c.expect(std::abs(fit.b - b) <= 1e-9 * std::max(1.0, std::abs(b)),
                 "intercept disagrees with the oracle");

        std::vector<Point> scaled = pts;
        for (auto& p : scaled)
            p.y *= 3.5;
        const auto sfit = linear_fit(scaled);
        c.expect(std::abs(sfit.r_squared - fit.r_squared) <= 1e-9,
                 "r_squared not scale invariant");
        c.expect(std::abs(sfit.a - 3.5 * fit.a) <= 1e-9 * std::max(1.0, std::abs(fit.a) * 3.5),
                 "slope not covariant under scaling");
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(elapsed < 60.0, "property sweep took " + std::to_string(elapsed) + " s");
    return c;
}

Check criterion_corruption(const fs::path& scratch) {
    Check c;
    std::mt19937_64 rng(31337);

    // library level, on disk
    LocalFs local;
    const fs::path data_root = scratch / "c7-data";
    const fs::path key_root = scratch / "c7-keys";
    Vault vault(local, data_root, key_root, OpenMode::create);
    const Bytes content = testutil::random_bytes(rng, 5000);
    const auto entry = vault.put("doc", ByteView(content));

    Bytes ct = *local.read_file(data_root / entry.ciphertext_path);
    ct.resize(ct.size() - 16);
    local.write_file_atomic(data_root / entry.ciphertext_path, ByteView(ct));
    bool integrity = false;
    try {
        vault.get("doc");
    } catch (const IntegrityFailure&) {
        integrity = true;
    } catch (const MalformedCiphertext&) {
        integrity = true;
    }
    c.expect(integrity, "truncated ciphertext did not raise an integrity error");

    vault.put("doc2", ByteView(content));
    local.remove(vault.keys().key_path("doc2"));
    bool key_missing = false;
    try {
        vault.get("doc2");
    } catch (const KeyNotFound&) {
        key_missing = true;
    }
    c.expect(key_missing, "deleted key file did not raise KeyNotFound");

    // CLI level: corrupted entry must exit 2 and write nothing to stdout
    const fs::path cli_data = scratch / "c7-cli-data";
    const fs::path cli_keys = scratch / "c7-cli-keys";
    const std::string roots =
        "--data-root " + cli_data.string() + " --key-root " + cli_keys.string();
    c.expect(run_cli(roots + " init", scratch).exit_code == 0, "cli init failed");
    const fs::path input = scratch / "input.bin";
    local.write_file_atomic(input, ByteView(content));
    c.expect(run_cli(roots + " put " + input.string(), scratch).exit_code == 0,
             "cli put failed");

    // healthy path first: binary-identical through put/get
    const auto healthy = run_cli(roots + " get input.bin", scratch);
    c.expect(healthy.exit_code == 0, "cli get on a healthy entry failed");
    c.expect(healthy.out.size() == content.size() &&
                 std::equal(content.begin(), content.end(),
                            reinterpret_cast<const std::uint8_t*>(healthy.out.data())),
             "cli get did not return the original bytes");

    // find and truncate the single ciphertext object
    fs::path object;
    for (const auto& e : local.list_dir(cli_data / "objects"))
        object = cli_data / "objects" / e.name;
    Bytes cli_ct = *local.read_file(object);
    cli_ct.resize(cli_ct.size() - 16);
    local.write_file_atomic(object, ByteView(cli_ct));

    const auto res = run_cli(roots + " get input.bin", scratch);
    c.expect(res.exit_code == 2, "cli get on corrupted data exited " +
                                     std::to_string(res.exit_code) + ", want 2");
    c.expect(res.out.empty(), "cli get wrote data despite corruption");

    const auto missing = run_cli(roots + " get no-such-entry", scratch);
    c.expect(missing.exit_code == 1, "cli get on missing entry exited " +
                                         std::to_string(missing.exit_code) + ", want 1");
    c.expect(missing.err.find("not found") != std::string::npos,
             "missing-entry diagnostic lacks 'not found'");
    return c;
}

} // namespace

int main() {
    testutil::TempDir scratch("cryptvault-acceptance");
    int failures = 0;
    const auto report = [&](int number, const char* title, const Check& c) {
        if (c.ok) {
            std::printf("PASS  criterion %d: %s\n", number, title);
        } else {
            ++failures;
            std::printf("FAIL  criterion %d: %s — %s\n", number, title, c.detail.c_str());
        }
    };
    const auto guarded = [&](int number, const char* title,
                             const std::function<Check()>& body) {
        Check c;
        try {
            c = body();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        report(number, title, c);
    };

    // one shared cli bench run feeds criteria 1 and 5
    std::vector<BenchSample> bench_samples;
    double bench_seconds = 0;
    std::string bench_error;
    try {
        const fs::path csv = scratch.path() / "bench.csv";
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = run_cli("bench --out " + csv.string(), scratch.path());
        bench_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (res.exit_code != 0)
            throw std::runtime_error("bench exited " + std::to_string(res.exit_code) + ": " +
                                     res.err);
        LocalFs lfs;
        const auto blob = lfs.read_file(csv);
        if (!blob)
            throw std::runtime_error("bench wrote no csv");
        bench_samples = parse_table(
            std::string_view(reinterpret_cast<const char*>(blob->data()), blob->size()),
            TableFormat::csv);
    } catch (const std::exception& e) {
        bench_error = e.what();
    }

    {
        Check c;
        if (!bench_error.empty()) {
            c.ok = false;
            c.detail = bench_error;
        } else {
            c = criterion_size_law(bench_samples, bench_seconds);
        }
        report(1, "size-law reproduction via bench (exact, under 30 s)", c);
    }
    guarded(2, "key files are exactly 141 bytes across the corpus", criterion_key_size);
    guarded(3, "regression report reproduces r_squared 0.438 and 0.037",
            [&] { return criterion_regression(scratch.path()); });
    guarded(4, "worst-case space overhead reported as 157 bytes",
            [&] { return criterion_worst_overhead(scratch.path()); });
    {
        Check c;
        if (!bench_error.empty()) {
            c.ok = false;
            c.detail = bench_error;
        } else {
            c = criterion_time_ordering(bench_samples);
        }
        report(5, "execution time ordering and per-file bound", c);
    }
    guarded(6, "property suites (padding, cipher, envelopes, separation, fits)",
            criterion_property_suites);
    guarded(7, "corruption is detected, never silent",
            [&] { return criterion_corruption(scratch.path()); });

    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
