#include "coach/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coach/error.hpp"

namespace coach {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kTempPrefix = ".tmp-";

void check_key(const StoreKey& key) {
  static const std::vector<std::string_view> known{kModels, kSessions, kGoals, kAudits, kGatewayAudits};
  std::vector<FieldError> errors;
  if (std::find(known.begin(), known.end(), key.collection) == known.end()) {
    errors.push_back({"collection", "unknown collection \"" + key.collection + "\""});
  }
  if (key.id.empty()) errors.push_back({"id", "must not be empty"});
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

// Throws ValidationError for malformed bodies and migration_required for
// documents newer than this build.
void check_document(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ValidationError(std::vector<FieldError>{{where, "expected a JSON object"}});
  auto it = doc.find("schema_version");
  if (it == doc.end() || !it->is_number_integer()) {
    throw ValidationError(std::vector<FieldError>{{where + ".schema_version", "expected integer"}});
  }
  if (it->get<std::int64_t>() > kStoreSchemaVersion) {
    throw Error(Errc::migration_required, where + " has schema_version " + std::to_string(it->get<std::int64_t>()) +
                                              "; this build reads up to " + std::to_string(kStoreSchemaVersion));
  }
}

void check_body(std::string_view collection, const std::string& body) {
  if (is_audit_collection(collection)) {
    std::istringstream in(body);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      json doc = json::parse(line, nullptr, false);
      if (doc.is_discarded()) {
        throw ValidationError(std::vector<FieldError>{{"line " + std::to_string(n), "not valid JSON"}});
      }
      check_document(doc, "line " + std::to_string(n));
    }
    return;
  }
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw ValidationError(std::vector<FieldError>{{"body", "not valid JSON"}});
  check_document(doc, "body");
}

std::string novice_of(const StoredRecord& r) {
  if (is_audit_collection(r.key.collection)) return {};
  json doc = json::parse(r.body, nullptr, false);
  if (!doc.is_object()) return {};
  if (doc.contains("novice_id") && doc["novice_id"].is_string()) return doc["novice_id"].get<std::string>();
  if (doc.contains("session") && doc["session"].is_object() && doc["session"].contains("novice_id")) {
    return doc["session"]["novice_id"].get<std::string>();
  }
  return {};
}

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw Error(Errc::io_error, what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("cannot write", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) io_fail("cannot open directory", dir);
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

bool is_audit_collection(std::string_view collection) {
  return collection == kAudits || collection == kGatewayAudits;
}

std::string encode_key_id(std::string_view id) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '.' || c == '_' || c == '@' || c == '-') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  // A leading dot would collide with temp and hidden files.
  if (!out.empty() && out[0] == '.') out.replace(0, 1, "%2E");
  return out;
}

std::string decode_key_id(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '%' && i + 2 < name.size()) {
      out += static_cast<char>(std::stoi(std::string(name.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += name[i];
    }
  }
  return out;
}

// --- Store ----------------------------------------------------------------

std::int64_t Store::put(const StoreKey& key, const std::string& body, std::optional<std::int64_t> expected_version) {
  check_key(key);
  check_body(key.collection, body);
  std::lock_guard lock(write_mu_);
  const auto current = load(key);
  const std::int64_t current_version = current ? current->version : 0;
  if (expected_version && *expected_version != current_version) throw VersionConflict(key.str(), current_version);
  if (current && is_audit_collection(key.collection) && body.compare(0, current->body.size(), current->body) != 0) {
    throw ValidationError(std::vector<FieldError>{{key.str(), "append-only; the new body must extend the current one"}});
  }
  StoredRecord next{key, body, current_version + 1, clock_()};
  save(next);
  return next.version;
}

std::optional<StoredRecord> Store::find(const StoreKey& key) const {
  check_key(key);
  auto r = load(key);
  if (r) check_body(key.collection, r->body);
  return r;
}

StoredRecord Store::get(const StoreKey& key) const {
  auto r = find(key);
  if (!r) throw Error(Errc::not_found, "no record " + key.str());
  return *r;
}

std::vector<RecordSummary> Store::list(std::string_view collection, const ListFilter& filter) const {
  check_key({std::string(collection), "_"});
  std::vector<RecordSummary> out;
  for (const auto& r : load_all(collection)) {
    RecordSummary s{r.key, r.version, r.updated_at, novice_of(r)};
    if (filter.novice_id && s.novice_id != *filter.novice_id) continue;
    if (filter.from && s.updated_at < *filter.from) continue;
    if (filter.to && s.updated_at > *filter.to) continue;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const RecordSummary& a, const RecordSummary& b) {
    if (a.updated_at != b.updated_at) return a.updated_at > b.updated_at;
    return a.key.id < b.key.id;
  });
  return out;
}

std::int64_t Store::append(const StoreKey& key, const std::string& lines) {
  while (true) {
    const auto current = find(key);
    const std::int64_t version = current ? current->version : 0;
    try {
      return put(key, (current ? current->body : std::string()) + lines, version);
    } catch (const VersionConflict&) {
      // Another writer appended first; rebase onto its body.
    }
  }
}

// --- MemoryStore ----------------------------------------------------------

std::optional<StoredRecord> MemoryStore::load(const StoreKey& key) const {
  std::shared_lock lock(mu_);
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void MemoryStore::save(const StoredRecord& record) {
  std::unique_lock lock(mu_);
  records_[record.key] = record;
}

std::vector<StoredRecord> MemoryStore::load_all(std::string_view collection) const {
  std::shared_lock lock(mu_);
  std::vector<StoredRecord> out;
  for (const auto& [k, r] : records_)
    if (k.collection == collection) out.push_back(r);
  return out;
}

// --- FileStore ------------------------------------------------------------

FileStore::FileStore(fs::path root, Clock clock) : Store(std::move(clock)), root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(Errc::io_error, "cannot create store root " + root_.string() + ": " + ec.message());
  for (const auto& dir : fs::directory_iterator(root_)) {
    if (!dir.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(dir.path())) {
      if (f.path().filename().string().rfind(kTempPrefix, 0) == 0) {
        fs::remove(f.path(), ec);
        ++recovered_;
      }
    }
  }
}

fs::path FileStore::path_for(const StoreKey& key) const {
  return root_ / key.collection / (encode_key_id(key.id) + ".rec");
}

std::optional<StoredRecord> FileStore::read_file(const fs::path& path, const StoreKey& key) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) return std::nullopt;
    throw Error(Errc::io_error, "cannot read " + path.string());
  }
  std::string header;
  std::getline(in, header);
  std::stringstream rest;
  rest << in.rdbuf();
  json h = json::parse(header, nullptr, false);
  if (h.is_discarded() || !h.contains("version") || !h.contains("updated_at")) {
    throw Error(Errc::io_error, "corrupt record header in " + path.string());
  }
  StoredRecord r;
  r.key = key;
  r.version = h["version"].get<std::int64_t>();
  r.updated_at = parse_timestamp(h["updated_at"].get<std::string>());
  r.body = rest.str();
  if (h.contains("length") && h["length"].get<std::size_t>() != r.body.size()) {
    throw Error(Errc::io_error, "truncated record " + path.string());
  }
  return r;
}

std::optional<StoredRecord> FileStore::load(const StoreKey& key) const { return read_file(path_for(key), key); }

std::vector<StoredRecord> FileStore::load_all(std::string_view collection) const {
  std::vector<StoredRecord> out;
  const auto dir = root_ / std::string(collection);
  if (!fs::exists(dir)) return out;
  for (const auto& f : fs::directory_iterator(dir)) {
    const auto name = f.path().filename().string();
    if (name.rfind(kTempPrefix, 0) == 0 || f.path().extension() != ".rec") continue;
    StoreKey key{std::string(collection), decode_key_id(f.path().stem().string())};
    if (auto r = read_file(f.path(), key)) out.push_back(std::move(*r));
  }
  return out;
}

void FileStore::save(const StoredRecord& record) {
  static std::atomic<std::uint64_t> counter{0};
  const auto dir = root_ / record.key.collection;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());

  const auto target = path_for(record.key);
  const auto temp = dir / (std::string(kTempPrefix) + encode_key_id(record.key.id) + "-" + std::to_string(::getpid()) +
                           "-" + std::to_string(counter++));
  const json header{{"version", record.version},
                    {"updated_at", format_timestamp(record.updated_at)},
                    {"length", record.body.size()}};

  const int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("cannot create", temp);
  try {
    write_all(fd, header.dump() + "\n", temp);
    write_all(fd, record.body, temp);
    if (::fsync(fd) != 0) io_fail("cannot fsync", temp);
  } catch (...) {
    ::close(fd);
    fs::remove(temp, ec);
    throw;
  }
  ::close(fd);
  if (fault_hook) fault_hook(FaultPoint::temp_written, record.key);
  if (fault_hook) fault_hook(FaultPoint::before_swap, record.key);
  if (::rename(temp.c_str(), target.c_str()) != 0) {
    fs::remove(temp, ec);
    io_fail("cannot rename onto", target);
  }
  fsync_dir(dir);
  if (fault_hook) fault_hook(FaultPoint::after_swap, record.key);
}

}  // namespace coach
