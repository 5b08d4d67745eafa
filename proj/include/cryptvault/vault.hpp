#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "cryptvault/bytes.hpp"
#include "cryptvault/cipher.hpp"
#include "cryptvault/digest.hpp"
#include "cryptvault/errors.hpp"
#include "cryptvault/fs.hpp"
#include "cryptvault/keystore.hpp"

namespace cryptvault {

inline constexpr std::string_view kIndexFileName = "INDEX";
inline constexpr std::string_view kObjectsDirName = "objects";

struct VaultEntry {
    std::string logical_name;
    std::filesystem::path ciphertext_path; // relative to the data root
    std::uint64_t original_size = 0;
    std::uint64_t encrypted_size = 0;
    Digest plaintext_checksum{};
    std::uint64_t created_at = 0;

    friend bool operator==(const VaultEntry&, const VaultEntry&) = default;
};

enum class OpenMode {
    create, // initialize a fresh vault; fails if one already exists
    open,   // open an existing vault; fails if none exists
};

// Whole-file encrypt/decrypt against a data root, with per-file keys kept in
// a disjoint key root. All I/O flows through the FsAdapter seam.
class Vault {
public:
    Vault(FsAdapter& fs, std::filesystem::path data_root, std::filesystem::path key_root,
          OpenMode mode, CipherConfig cfg = {})
        : fs_(&fs),
          data_root_(std::move(data_root)),
          key_root_(std::move(key_root)),
          cfg_(cfg),
          keys_(fs, key_root_, data_root_) { // KeyStore ctor enforces root separation
        const auto index_path = data_root_ / kIndexFileName;
        if (mode == OpenMode::create) {
            if (fs_->stat(index_path))
                throw Error("vault already initialized at '" + data_root_.string() + "'");
            fs_->make_dirs(data_root_ / kObjectsDirName);
            fs_->make_dirs(key_root_);
            persist_index();
        } else {
            const auto blob = fs_->read_file(index_path);
            if (!blob)
                throw Error("no vault at '" + data_root_.string() + "' (missing index)");
            load_index(*blob);
        }
    }

    Vault(const Vault&) = delete;
    Vault& operator=(const Vault&) = delete;

    const std::filesystem::path& data_root() const { return data_root_; }
    const std::filesystem::path& key_root() const { return key_root_; }
    const CipherConfig& config() const { return cfg_; }
    const KeyStore& keys() const { return keys_; }

    VaultEntry put(std::string_view logical_name, ByteView plaintext, bool overwrite = false) {
        validate_name(logical_name);
        const std::string name(logical_name);
        auto op_lock = lock_name(name);

        {
            std::shared_lock lk(index_mx_);
            if (!overwrite && index_.contains(name))
                throw DuplicateName("entry already exists: '" + name + "'");
        }

        VaultEntry entry;
        entry.logical_name = name;
        entry.original_size = plaintext.size();
        entry.plaintext_checksum = sha256(plaintext);

        // Fresh key per put; an overwrite rotates the key so (key, iv) pairs
        // are never reused across file versions.
        const KeyEnvelope env = generate_key(name, entry.plaintext_checksum, cfg_);
        entry.created_at = env.created_at;
        const Bytes ciphertext = encrypt(plaintext, raw_key(env), cfg_);
        entry.encrypted_size = ciphertext.size();
        entry.ciphertext_path = object_rel_path(env.file_id_hash);

        keys_.store(env);
        fs_->write_file_atomic(data_root_ / entry.ciphertext_path, ByteView(ciphertext));

        {
            std::unique_lock lk(index_mx_);
            if (!overwrite && index_.contains(name))
                throw DuplicateName("entry already exists: '" + name + "'");
            index_[name] = entry;
            persist_index_locked();
        }
        return entry;
    }

    Bytes get(std::string_view logical_name) const {
        const VaultEntry entry = find_entry(logical_name);
        const KeyEnvelope env = keys_.load(logical_name);
        const auto ciphertext = fs_->read_file(data_root_ / entry.ciphertext_path);
        if (!ciphertext)
            throw IntegrityFailure("ciphertext missing for '" + std::string(logical_name) + "'");

        Bytes plaintext;
        try {
            CipherConfig cfg = cfg_;
            cfg.algorithm_id = env.algorithm_id;
            plaintext = decrypt(ByteView(*ciphertext), raw_key(env), cfg);
        } catch (const InvalidPadding&) {
            // padding damage implies a corrupted file or foreign key; the
            // checksum below is the authoritative signal either way
            throw IntegrityFailure("decryption produced invalid padding for '" +
                                   std::string(logical_name) + "'");
        }
        if (plaintext.size() != entry.original_size ||
            sha256(ByteView(plaintext)) != entry.plaintext_checksum ||
            env.plaintext_checksum != entry.plaintext_checksum)
            throw IntegrityFailure("checksum mismatch for '" + std::string(logical_name) + "'");
        return plaintext;
    }

    std::vector<VaultEntry> list() const {
        std::shared_lock lk(index_mx_);
        std::vector<VaultEntry> out;
        out.reserve(index_.size());
        for (const auto& [name, entry] : index_)
            out.push_back(entry);
        return out; // std::map keeps entries sorted by logical name
    }

    VaultEntry remove(std::string_view logical_name) {
        const std::string name(logical_name);
        auto op_lock = lock_name(name);
        VaultEntry entry;
        {
            std::unique_lock lk(index_mx_);
            auto it = index_.find(name);
            if (it == index_.end())
                throw EntryNotFound("entry not found: '" + name + "'");
            entry = it->second;
            index_.erase(it);
            persist_index_locked();
        }
        fs_->remove(data_root_ / entry.ciphertext_path);
        keys_.remove(name);
        return entry;
    }

    // Sizes come from the storage layer, not from the index: encrypted_size
    // is the actual on-disk ciphertext length.
    VaultEntry stat(std::string_view logical_name) const {
        VaultEntry entry = find_entry(logical_name);
        const auto st = fs_->stat(data_root_ / entry.ciphertext_path);
        if (!st || st->is_dir)
            throw IntegrityFailure("ciphertext missing for '" + std::string(logical_name) + "'");
        entry.encrypted_size = st->size;
        return entry;
    }

private:
    static void validate_name(std::string_view name) {
        if (name.empty())
            throw InvalidArgument("logical name must be non-empty");
        if (name.find('/') != std::string_view::npos ||
            name.find('\\') != std::string_view::npos)
            throw InvalidArgument("logical name must not contain path separators: '" +
                                  std::string(name) + "'");
    }

    static std::filesystem::path object_rel_path(const Digest& file_id_hash) {
        return std::filesystem::path(kObjectsDirName) /
               (to_hex(ByteView(file_id_hash.data(), file_id_hash.size())) + ".enc");
    }

    VaultEntry find_entry(std::string_view logical_name) const {
        std::shared_lock lk(index_mx_);
        auto it = index_.find(std::string(logical_name));
        if (it == index_.end())
            throw EntryNotFound("entry not found: '" + std::string(logical_name) + "'");
        return it->second;
    }

    // Serializes mutations on one logical name while letting distinct names
    // proceed concurrently.
    std::unique_lock<std::mutex> lock_name(const std::string& name) {
        std::shared_ptr<std::mutex> mx;
        {
            std::lock_guard lk(name_locks_mx_);
            auto& slot = name_locks_[name];
            if (!slot)
                slot = std::make_shared<std::mutex>();
            mx = slot;
        }
        return std::unique_lock(*mx);
    }

    void persist_index() {
        std::unique_lock lk(index_mx_);
        persist_index_locked();
    }

    // One tab-separated record per entry, sorted by name; logical names are
    // percent-encoded so any byte is representable.
    void persist_index_locked() {
        std::string text;
        for (const auto& [name, e] : index_) {
            text += percent_encode(name);
            text += '\t';
            text += e.ciphertext_path.generic_string();
            text += '\t';
            text += std::to_string(e.original_size);
            text += '\t';
            text += std::to_string(e.encrypted_size);
            text += '\t';
            text += to_hex(ByteView(e.plaintext_checksum.data(), e.plaintext_checksum.size()));
            text += '\t';
            text += std::to_string(e.created_at);
            text += '\n';
        }
        fs_->write_file_atomic(data_root_ / kIndexFileName, as_bytes_view(text));
    }

    void load_index(const Bytes& blob) {
        const std::string_view text(reinterpret_cast<const char*>(blob.data()), blob.size());
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos)
                eol = text.size();
            const std::string_view line = text.substr(pos, eol - pos);
            pos = eol + 1;
            if (line.empty())
                continue;
            index_.insert(parse_index_line(line));
        }
    }

    static std::pair<std::string, VaultEntry> parse_index_line(std::string_view line) {
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 6)
            throw Error("malformed index record: expected 6 fields, got " +
                        std::to_string(fields.size()));
        VaultEntry e;
        e.logical_name = percent_decode(fields[0]);
        e.ciphertext_path = std::filesystem::path(std::string(fields[1]));
        e.original_size = std::stoull(std::string(fields[2]));
        e.encrypted_size = std::stoull(std::string(fields[3]));
        const Bytes digest = from_hex(fields[4]);
        if (digest.size() != e.plaintext_checksum.size())
            throw Error("malformed index record: bad checksum length");
        std::copy(digest.begin(), digest.end(), e.plaintext_checksum.begin());
        e.created_at = std::stoull(std::string(fields[5]));
        return {e.logical_name, e};
    }

    FsAdapter* fs_;
    std::filesystem::path data_root_;
    std::filesystem::path key_root_;
    CipherConfig cfg_;
    KeyStore keys_;
    std::map<std::string, VaultEntry> index_;
    mutable std::shared_mutex index_mx_;
    std::mutex name_locks_mx_;
    std::map<std::string, std::shared_ptr<std::mutex>> name_locks_;
};

} // namespace cryptvault
