#pragma once

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "cryptvault/bytes.hpp"
#include "cryptvault/errors.hpp"

namespace cryptvault {

struct FileStat {
    std::uint64_t size = 0;
    bool is_dir = false;
};

struct DirEntry {
    std::string name;
    bool is_dir = false;
};

// Storage seam: every byte the vault or key store touches goes through one
// of these. The in-memory and on-disk implementations must be behaviorally
// indistinguishable to callers.
class FsAdapter {
public:
    virtual ~FsAdapter() = default;

    virtual std::optional<Bytes> read_file(const std::filesystem::path& p) = 0;
    virtual void write_file_atomic(const std::filesystem::path& p, ByteView data) = 0;
    virtual std::vector<DirEntry> list_dir(const std::filesystem::path& p) = 0;
    virtual std::optional<FileStat> stat(const std::filesystem::path& p) = 0;
    virtual bool remove(const std::filesystem::path& p) = 0;
    virtual void make_dirs(const std::filesystem::path& p) = 0;
};

// True when root equals p or is an ancestor directory of p (component-wise,
// after lexical normalization).
inline bool path_contains(const std::filesystem::path& root, const std::filesystem::path& p) {
    const auto a = root.lexically_normal();
    const auto b = p.lexically_normal();
    auto ai = a.begin();
    auto bi = b.begin();
    for (; ai != a.end(); ++ai, ++bi) {
        if (ai->native() == ".")
            continue;
        if (bi == b.end() || *ai != *bi)
            return false;
    }
    return true;
}

inline void ensure_disjoint_roots(const std::filesystem::path& data_root,
                                  const std::filesystem::path& key_root) {
    if (path_contains(data_root, key_root) || path_contains(key_root, data_root))
        throw SeparationViolation("key root and data root must be disjoint: '" +
                                  data_root.string() + "' vs '" + key_root.string() + "'");
}

class InMemoryFs final : public FsAdapter {
public:
    InMemoryFs() { dirs_.insert(""); dirs_.insert("."); dirs_.insert("/"); }

    std::optional<Bytes> read_file(const std::filesystem::path& p) override {
        std::lock_guard lk(mx_);
        auto it = files_.find(norm(p));
        if (it == files_.end())
            return std::nullopt;
        return it->second;
    }

    void write_file_atomic(const std::filesystem::path& p, ByteView data) override {
        std::lock_guard lk(mx_);
        check_writable();
        const std::string key = norm(p);
        const std::string parent = norm(p.parent_path());
        if (!dirs_.contains(parent))
            throw StorageError("no such directory: " + parent);
        if (capacity_) {
            std::uint64_t used = 0;
            for (const auto& [k, v] : files_)
                if (k != key)
                    used += v.size();
            if (used + data.size() > *capacity_)
                throw StorageFull("in-memory filesystem is full");
        }
        files_[key] = Bytes(data.begin(), data.end());
    }

    std::vector<DirEntry> list_dir(const std::filesystem::path& p) override {
        std::lock_guard lk(mx_);
        const std::string base = norm(p);
        if (!dirs_.contains(base))
            throw StorageError("no such directory: " + base);
        std::set<std::string> names;
        std::vector<DirEntry> out;
        auto consider = [&](const std::string& full, bool is_dir) {
            std::string rel = child_of(base, full);
            if (rel.empty())
                return;
            const auto slash = rel.find('/');
            const bool direct = slash == std::string::npos;
            const std::string name = direct ? rel : rel.substr(0, slash);
            if (names.insert(name).second)
                out.push_back({name, !direct || is_dir});
        };
        for (const auto& [k, v] : files_)
            consider(k, false);
        for (const auto& d : dirs_)
            consider(d, true);
        std::sort(out.begin(), out.end(), [](const DirEntry& a, const DirEntry& b) {
            return a.name < b.name;
        });
        return out;
    }

    std::optional<FileStat> stat(const std::filesystem::path& p) override {
        std::lock_guard lk(mx_);
        const std::string key = norm(p);
        if (auto it = files_.find(key); it != files_.end())
            return FileStat{it->second.size(), false};
        if (dirs_.contains(key))
            return FileStat{0, true};
        return std::nullopt;
    }

    bool remove(const std::filesystem::path& p) override {
        std::lock_guard lk(mx_);
        check_writable();
        return files_.erase(norm(p)) > 0;
    }

    void make_dirs(const std::filesystem::path& p) override {
        std::lock_guard lk(mx_);
        check_writable();
        std::filesystem::path acc;
        for (const auto& part : p.lexically_normal())
            dirs_.insert(norm(acc /= part));
    }

    // Test hooks: simulate a read-only medium or a full disk.
    void set_read_only(bool ro) { std::lock_guard lk(mx_); read_only_ = ro; }
    void set_capacity(std::uint64_t bytes) { std::lock_guard lk(mx_); capacity_ = bytes; }

private:
    static std::string norm(const std::filesystem::path& p) {
        std::string s = p.lexically_normal().generic_string();
        while (s.size() > 1 && s.back() == '/')
            s.pop_back();
        if (s.rfind("./", 0) == 0)
            s.erase(0, 2);
        return s;
    }

    // Returns the path of `full` relative to directory `base`, or "" if the
    // entry is not under base.
    static std::string child_of(const std::string& base, const std::string& full) {
        if (base.empty() || base == "." ) {
            if (!full.empty() && full != "." && full != "/" && full[0] != '/')
                return full;
            return "";
        }
        if (full.size() <= base.size() || full.compare(0, base.size(), base) != 0)
            return "";
        std::size_t off = base.size();
        if (base == "/")
            return full.substr(1);
        if (full[off] != '/')
            return "";
        return full.substr(off + 1);
    }

    void check_writable() const {
        if (read_only_)
            throw PermissionDenied("in-memory filesystem is read-only");
    }

    mutable std::recursive_mutex mx_;
    std::map<std::string, Bytes> files_;
    std::set<std::string> dirs_;
    bool read_only_ = false;
    std::optional<std::uint64_t> capacity_;
};

class LocalFs final : public FsAdapter {
public:
    std::optional<Bytes> read_file(const std::filesystem::path& p) override {
        const int fd = ::open(p.c_str(), O_RDONLY | O_CLOEXEC);
        if (fd < 0) {
            if (errno == ENOENT || errno == ENOTDIR)
                return std::nullopt;
            throw_errno("open", p);
        }
        Bytes out;
        std::uint8_t buf[1 << 16];
        for (;;) {
            const ssize_t n = ::read(fd, buf, sizeof buf);
            if (n < 0) {
                const int err = errno;
                ::close(fd);
                errno = err;
                throw_errno("read", p);
            }
            if (n == 0)
                break;
            out.insert(out.end(), buf, buf + n);
        }
        ::close(fd);
        return out;
    }

    void write_file_atomic(const std::filesystem::path& p, ByteView data) override {
        const std::filesystem::path tmp = temp_sibling(p);
        const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600);
        if (fd < 0)
            throw_errno("create", tmp);
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
            if (n < 0) {
                const int err = errno;
                ::close(fd);
                ::unlink(tmp.c_str());
                errno = err;
                throw_errno("write", tmp);
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            const int err = errno;
            ::close(fd);
            ::unlink(tmp.c_str());
            errno = err;
            throw_errno("fsync", tmp);
        }
        ::close(fd);
        std::error_code ec;
        std::filesystem::rename(tmp, p, ec);
        if (ec) {
            ::unlink(tmp.c_str());
            throw StorageError("rename '" + tmp.string() + "' -> '" + p.string() +
                               "': " + ec.message());
        }
        sync_dir(p.parent_path());
    }

    std::vector<DirEntry> list_dir(const std::filesystem::path& p) override {
        std::error_code ec;
        std::vector<DirEntry> out;
        for (auto it = std::filesystem::directory_iterator(p, ec);
             !ec && it != std::filesystem::directory_iterator(); it.increment(ec)) {
            out.push_back({it->path().filename().string(), it->is_directory()});
        }
        if (ec)
            throw StorageError("list '" + p.string() + "': " + ec.message());
        std::sort(out.begin(), out.end(), [](const DirEntry& a, const DirEntry& b) {
            return a.name < b.name;
        });
        return out;
    }

    std::optional<FileStat> stat(const std::filesystem::path& p) override {
        std::error_code ec;
        const auto st = std::filesystem::status(p, ec);
        if (ec || st.type() == std::filesystem::file_type::not_found)
            return std::nullopt;
        if (std::filesystem::is_directory(st))
            return FileStat{0, true};
        return FileStat{std::filesystem::file_size(p), false};
    }

    bool remove(const std::filesystem::path& p) override {
        std::error_code ec;
        const bool removed = std::filesystem::remove(p, ec);
        if (ec)
            throw_ec("remove", p, ec);
        return removed;
    }

    void make_dirs(const std::filesystem::path& p) override {
        std::error_code ec;
        std::filesystem::create_directories(p, ec);
        if (ec)
            throw_ec("mkdir", p, ec);
    }

private:
    static std::filesystem::path temp_sibling(const std::filesystem::path& p) {
        static std::atomic<std::uint64_t> counter{0};
        std::random_device rd;
        char suffix[40];
        std::snprintf(suffix, sizeof suffix, ".tmp.%u.%llu.%08x",
                      static_cast<unsigned>(::getpid()),
                      static_cast<unsigned long long>(counter.fetch_add(1)),
                      rd());
        std::filesystem::path tmp = p;
        tmp += suffix;
        return tmp;
    }

    static void sync_dir(const std::filesystem::path& dir) {
        const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
        if (fd >= 0) {
            ::fsync(fd);
            ::close(fd);
        }
    }

    [[noreturn]] static void throw_errno(const char* op, const std::filesystem::path& p) {
        const int err = errno;
        const std::string msg = std::string(op) + " '" + p.string() + "': " + std::strerror(err);
        if (err == ENOSPC || err == EDQUOT)
            throw StorageFull(msg);
        if (err == EACCES || err == EPERM || err == EROFS)
            throw PermissionDenied(msg);
        throw StorageError(msg);
    }

    [[noreturn]] static void throw_ec(const char* op, const std::filesystem::path& p,
                                      const std::error_code& ec) {
        const std::string msg = std::string(op) + " '" + p.string() + "': " + ec.message();
        if (ec == std::errc::no_space_on_device)
            throw StorageFull(msg);
        if (ec == std::errc::permission_denied || ec == std::errc::operation_not_permitted ||
            ec == std::errc::read_only_file_system)
            throw PermissionDenied(msg);
        throw StorageError(msg);
    }
};

} // namespace cryptvault
