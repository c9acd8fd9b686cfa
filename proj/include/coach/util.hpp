#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>

namespace coach {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Injectable time source. Tests and reproducible runs use a stepping clock so
// that serialized documents are byte-stable.
using Clock = std::function<Timestamp()>;

Clock system_clock();

// Returns `start`, then `start + step`, `start + 2*step`, ...
Clock stepping_clock(Timestamp start, std::chrono::milliseconds step = std::chrono::seconds(1));

// ISO-8601 UTC with millisecond precision, e.g. 2025-03-01T09:30:00.000Z.
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

// Injectable source of opaque unique ids.
using IdSource = std::function<std::string()>;

IdSource random_ids();
IdSource sequential_ids(std::string prefix);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

// Lowercase, spaces to hyphens, punctuation stripped, runs of hyphens collapsed.
std::string slugify(std::string_view name);

bool is_slug(std::string_view s);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace coach
