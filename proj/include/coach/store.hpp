#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "coach/util.hpp"

namespace coach {

// Known collections.
inline constexpr std::string_view kModels = "models";
inline constexpr std::string_view kSessions = "sessions";
inline constexpr std::string_view kGoals = "goals";
inline constexpr std::string_view kAudits = "audits";
inline constexpr std::string_view kGatewayAudits = "gateway-audits";

// Newest document schema this build reads.
inline constexpr std::int64_t kStoreSchemaVersion = 1;

struct StoreKey {
  std::string collection;
  std::string id;

  auto operator<=>(const StoreKey&) const = default;
  std::string str() const { return collection + "/" + id; }
};

struct StoredRecord {
  StoreKey key;
  std::string body;
  std::int64_t version = 0;
  Timestamp updated_at{};
};

struct RecordSummary {
  StoreKey key;
  std::int64_t version = 0;
  Timestamp updated_at{};
  std::string novice_id;  // empty when the document has none
};

struct ListFilter {
  std::optional<std::string> novice_id;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // inclusive
};

bool is_audit_collection(std::string_view collection);

// Versioned document store. Versions start at 1 and grow by one per put.
// `expected_version` of 0 means "the key must not exist yet".
//
// Bodies are JSON documents carrying schema_version; audit collections hold
// newline-delimited records, each carrying schema_version, and only accept
// bodies that extend the current one.
class Store {
 public:
  virtual ~Store() = default;

  // Throws VersionConflict, ValidationError, Error(io_error).
  std::int64_t put(const StoreKey& key, const std::string& body, std::optional<std::int64_t> expected_version = {});
  // Throws Error(not_found), Error(migration_required), Error(io_error).
  StoredRecord get(const StoreKey& key) const;
  std::optional<StoredRecord> find(const StoreKey& key) const;
  // Newest first; ties broken by id.
  std::vector<RecordSummary> list(std::string_view collection, const ListFilter& filter = {}) const;

  // Appends NDJSON lines to an audit record, retrying on concurrent appends.
  std::int64_t append(const StoreKey& key, const std::string& lines);

 protected:
  explicit Store(Clock clock) : clock_(std::move(clock)) {}

  virtual std::optional<StoredRecord> load(const StoreKey& key) const = 0;
  virtual void save(const StoredRecord& record) = 0;
  virtual std::vector<StoredRecord> load_all(std::string_view collection) const = 0;

 private:
  Clock clock_;
  std::mutex write_mu_;  // serializes writers; readers never block on it
};

class MemoryStore : public Store {
 public:
  explicit MemoryStore(Clock clock = system_clock()) : Store(std::move(clock)) {}

 protected:
  std::optional<StoredRecord> load(const StoreKey& key) const override;
  void save(const StoredRecord& record) override;
  std::vector<StoredRecord> load_all(std::string_view collection) const override;

 private:
  mutable std::shared_mutex mu_;
  std::map<StoreKey, StoredRecord> records_;
};

// Points in a file write where a test can inject a crash.
enum class FaultPoint { temp_written, before_swap, after_swap };

// One directory per collection, one file per key. Each file is a header line
// {"version":N,"updated_at":"..."} followed by the body. Writes go to a temp
// file in the same directory, are fsynced, then renamed over the target, so a
// reader sees either the old record or the new one. Leftover temp files from
// a crash are removed when the store is opened.
class FileStore : public Store {
 public:
  explicit FileStore(std::filesystem::path root, Clock clock = system_clock());

  const std::filesystem::path& root() const { return root_; }
  std::size_t recovered_temp_files() const { return recovered_; }

  // Test hook, called at each FaultPoint of every write.
  std::function<void(FaultPoint, const StoreKey&)> fault_hook;

 protected:
  std::optional<StoredRecord> load(const StoreKey& key) const override;
  void save(const StoredRecord& record) override;
  std::vector<StoredRecord> load_all(std::string_view collection) const override;

 private:
  std::filesystem::path path_for(const StoreKey& key) const;
  std::optional<StoredRecord> read_file(const std::filesystem::path& path, const StoreKey& key) const;

  std::filesystem::path root_;
  std::size_t recovered_ = 0;
};

// Percent-encodes characters outside [A-Za-z0-9._@-] so any id maps to a file name.
std::string encode_key_id(std::string_view id);
std::string decode_key_id(std::string_view name);

}  // namespace coach
