// cryptvault command-line tool: per-file encrypted vault with a separated
// key store, plus a benchmark and curve-fitting report harness.
//
// Exit codes: 0 success, 1 user error (bad arguments, missing entry),
// 2 integrity/corruption errors. Diagnostics go to stderr, data to stdout.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cryptvault/cryptvault.hpp"

namespace fs = std::filesystem;
using namespace cryptvault;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitCorruption = 2;

struct CliConfig {
    fs::path data_root = "cryptvault-data";
    fs::path key_root = "cryptvault-keys";
    std::string format = "csv";
    std::uint64_t seed = kDefaultBenchSeed;
    int repetitions = kDefaultBenchRepetitions;
};

Bytes read_input_file(const fs::path& p) {
    LocalFs fs_local;
    auto data = fs_local.read_file(p);
    if (!data)
        throw InvalidArgument("input file not found: '" + p.string() + "'");
    return std::move(*data);
}

// Buffer, then write in one shot so a failure never leaves a partial
// data-stream payload behind.
void write_stdout(ByteView data) {
    if (!data.empty() && std::fwrite(data.data(), 1, data.size(), stdout) != data.size())
        throw StorageError("short write to stdout");
    std::fflush(stdout);
}

void write_output(const std::string& text, const std::optional<fs::path>& out) {
    if (out) {
        LocalFs fs_local;
        if (out->has_parent_path())
            fs_local.make_dirs(out->parent_path());
        fs_local.write_file_atomic(*out, as_bytes_view(text));
    } else {
        write_stdout(as_bytes_view(text));
    }
}

TableFormat parse_format(const std::string& f) {
    if (f == "csv")
        return TableFormat::csv;
    if (f == "json")
        return TableFormat::json;
    throw InvalidArgument("unknown output format: '" + f + "' (expected csv or json)");
}

std::string fit_line(const std::string& name, const RegressionFit& fit) {
    return "fit " + name + ": n=" + std::to_string(fit.n) + " a=" + detail::format_double(fit.a) +
           " b=" + detail::format_double(fit.b) + " r=" + detail::format_double(fit.r) +
           " r_squared=" + detail::format_double(fit.r_squared) + "\n";
}

std::string render_report(const AnalysisReport& report) {
    std::string out;
    out += fit_line("overhead_vs_index", report.fit_overhead_vs_index);
    out += fit_line("exec_time_vs_index", report.fit_time_vs_index);
    if (const auto* cs = std::get_if<ConstantSeries>(&report.keysize_vs_index))
        out += "key_size_vs_index: constant " + detail::format_double(cs->value) +
               " (n=" + std::to_string(cs->n) + ", no relation)\n";
    else
        out += fit_line("key_size_vs_index", std::get<RegressionFit>(report.keysize_vs_index));
    out += "total_worst_overhead_bytes: " + std::to_string(report.total_worst_overhead) + "\n";
    return out;
}

// Scratch directory removed on scope exit; the bench runs in one of these so
// repeated runs start from a clean vault.
class ScratchDir {
public:
    ScratchDir() {
        std::random_device rd;
        char name[48];
        std::snprintf(name, sizeof name, "cryptvault-bench-%08x%08x", rd(), rd());
        path_ = fs::temp_directory_path() / name;
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

int run(int argc, char** argv) {
    CLI::App app{"per-file encrypted vault with separated key store"};
    app.require_subcommand(1);

    CliConfig cfg;
    app.add_option("--data-root", cfg.data_root, "vault data directory")
        ->envname("CRYPTVAULT_DATA_ROOT")
        ->capture_default_str();
    app.add_option("--key-root", cfg.key_root, "key store directory (keep on separate media)")
        ->envname("CRYPTVAULT_KEY_ROOT")
        ->capture_default_str();

    auto* cmd_init = app.add_subcommand("init", "initialize an empty vault");

    fs::path put_file;
    std::string put_name;
    bool put_overwrite = false;
    auto* cmd_put = app.add_subcommand("put", "encrypt a file into the vault");
    cmd_put->add_option("file", put_file, "plaintext file to store")->required();
    cmd_put->add_option("--name", put_name, "logical name (default: file name)");
    cmd_put->add_flag("--overwrite", put_overwrite, "replace an existing entry (rotates its key)");

    std::string get_name;
    std::optional<fs::path> get_out;
    auto* cmd_get = app.add_subcommand("get", "decrypt an entry");
    cmd_get->add_option("name", get_name, "logical name")->required();
    cmd_get->add_option("--out", get_out, "write plaintext here instead of stdout");

    auto* cmd_ls = app.add_subcommand("ls", "list entries");

    std::string rm_name;
    auto* cmd_rm = app.add_subcommand("rm", "remove an entry and its key");
    cmd_rm->add_option("name", rm_name, "logical name")->required();

    std::optional<fs::path> bench_out;
    std::optional<fs::path> bench_plots;
    auto* cmd_bench = app.add_subcommand(
        "bench", "encrypt the reference corpus in a scratch vault and emit the results table");
    cmd_bench->add_option("--seed", cfg.seed, "corpus content seed")
        ->envname("CRYPTVAULT_SEED");
    cmd_bench->add_option("--reps", cfg.repetitions, "timing repetitions per file (median)")
        ->envname("CRYPTVAULT_REPS")
        ->check(CLI::PositiveNumber);
    cmd_bench->add_option("--out", bench_out, "write the table here instead of stdout");
    cmd_bench->add_option("--plots", bench_plots, "also emit figure data files to this directory");
    cmd_bench->add_option("--format", cfg.format, "table format: csv or json")
        ->envname("CRYPTVAULT_FORMAT")
        ->check(CLI::IsMember({"csv", "json"}));

    fs::path report_csv;
    std::optional<fs::path> report_plots;
    auto* cmd_report = app.add_subcommand("report", "fit lines to a bench table and summarize");
    cmd_report->add_option("bench-csv", report_csv, "csv table produced by bench")->required();
    cmd_report->add_option("--plots", report_plots, "also emit figure data files to this directory");

    // let --data-root/--key-root appear after the subcommand as well
    for (auto* sub : {cmd_init, cmd_put, cmd_get, cmd_ls, cmd_rm, cmd_bench, cmd_report})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // exit code 0 here means --help/--version, anything else is bad usage
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }

    LocalFs local;

    if (cmd_init->parsed()) {
        Vault vault(local, cfg.data_root, cfg.key_root, OpenMode::create);
        std::cerr << "initialized vault: data root '" << cfg.data_root.string()
                  << "', key root '" << cfg.key_root.string() << "'\n";
        return kExitOk;
    }

    if (cmd_put->parsed()) {
        Vault vault(local, cfg.data_root, cfg.key_root, OpenMode::open);
        const std::string name = put_name.empty() ? put_file.filename().string() : put_name;
        const Bytes plaintext = read_input_file(put_file);
        const VaultEntry e = vault.put(name, ByteView(plaintext), put_overwrite);
        std::cerr << "stored '" << e.logical_name << "': " << e.original_size << " -> "
                  << e.encrypted_size << " bytes\n";
        return kExitOk;
    }

    if (cmd_get->parsed()) {
        Vault vault(local, cfg.data_root, cfg.key_root, OpenMode::open);
        const Bytes plaintext = vault.get(get_name);
        if (get_out) {
            LocalFs out_fs;
            if (get_out->has_parent_path())
                out_fs.make_dirs(get_out->parent_path());
            out_fs.write_file_atomic(*get_out, ByteView(plaintext));
        } else {
            write_stdout(ByteView(plaintext));
        }
        return kExitOk;
    }

    if (cmd_ls->parsed()) {
        Vault vault(local, cfg.data_root, cfg.key_root, OpenMode::open);
        std::string out;
        for (const auto& e : vault.list()) {
            out += percent_encode(e.logical_name);
            out += '\t';
            out += std::to_string(e.original_size);
            out += '\t';
            out += std::to_string(e.encrypted_size);
            out += '\t';
            out += std::to_string(e.created_at);
            out += '\n';
        }
        write_stdout(as_bytes_view(out));
        return kExitOk;
    }

    if (cmd_rm->parsed()) {
        Vault vault(local, cfg.data_root, cfg.key_root, OpenMode::open);
        vault.remove(rm_name);
        std::cerr << "removed '" << rm_name << "'\n";
        return kExitOk;
    }

    if (cmd_bench->parsed()) {
        ScratchDir scratch;
        const fs::path corpus_dir = scratch.path() / "corpus";
        Vault vault(local, scratch.path() / "data", scratch.path() / "keys", OpenMode::create);

        const CorpusSpec spec = CorpusSpec::reference(cfg.seed);
        std::cerr << "generating " << spec.entries.size() << " corpus files (seed " << cfg.seed
                  << ")\n";
        const auto corpus = make_corpus(spec, local, corpus_dir);
        std::cerr << "encrypting, " << cfg.repetitions << " repetition(s) per file\n";
        const auto samples = run_bench(corpus, vault, local, cfg.repetitions);

        write_output(emit_table(samples, parse_format(cfg.format)), bench_out);
        if (bench_plots)
            emit_plot_data(analyze(samples), samples, local, *bench_plots);
        return kExitOk;
    }

    if (cmd_report->parsed()) {
        const Bytes raw = read_input_file(report_csv);
        const std::string_view text(reinterpret_cast<const char*>(raw.data()), raw.size());
        const auto samples = parse_table(text, TableFormat::csv);
        const AnalysisReport report = analyze(samples);
        write_stdout(as_bytes_view(render_report(report)));
        if (report_plots)
            emit_plot_data(report, samples, local, *report_plots);
        return kExitOk;
    }

    return kExitUserError;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IntegrityFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const KeyNotFound& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const InvalidPadding& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const MalformedCiphertext& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const BadLength& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const BadMagic& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const UnsupportedVersion& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCorruption;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}
