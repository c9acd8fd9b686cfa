#include "coach/structured.hpp"

namespace coach {

std::string_view to_string(RepairStage s) {
  switch (s) {
    case RepairStage::direct: return "direct";
    case RepairStage::fences_stripped: return "fences_stripped";
    case RepairStage::region_extracted: return "region_extracted";
    case RepairStage::reprompted: return "reprompted";
  }
  return "unknown";
}

std::optional<std::string> strip_code_fences(std::string_view raw) {
  auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  // Skip an optional language tag on the opening fence line.
  auto body = raw.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  auto close = raw.find("```", body + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return trim(raw.substr(body + 1, close - body - 1));
}

namespace {

// Balanced region starting at the first '{' or '[' at or after `from`; sets
// `start` to where it begins.
std::optional<std::string> balanced_region_from(std::string_view raw, std::size_t from, std::size_t& start_out) {
  for (std::size_t start = from; start < raw.size(); ++start) {
    const char open = raw[start];
    if (open != '{' && open != '[') continue;
    std::vector<char> stack{open};
    bool in_string = false, escaped = false;
    for (std::size_t i = start + 1; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{' || c == '[') {
        stack.push_back(c);
      } else if (c == '}' || c == ']') {
        const char want = c == '}' ? '{' : '[';
        if (stack.back() != want) break;
        stack.pop_back();
        if (stack.empty()) {
          start_out = start;
          return std::string(raw.substr(start, i - start + 1));
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> first_balanced_region(std::string_view raw) {
  std::size_t start = 0;
  return balanced_region_from(raw, 0, start);
}

namespace {

// Tries the three local stages; returns the first schema-valid candidate and
// accumulates the problems seen along the way.
std::optional<ParsedOutput> local_stages(std::string_view raw, const SchemaDescriptor& schema,
                                         std::vector<FieldError>& problems) {
  auto attempt = [&](std::string_view text, RepairStage stage) -> std::optional<ParsedOutput> {
    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) {
      problems.push_back({std::string(to_string(stage)), "not valid JSON"});
      return std::nullopt;
    }
    auto errors = validate_against(value, schema);
    if (!errors.empty()) {
      for (auto& e : errors) problems.push_back({std::string(to_string(stage)) + ":" + e.path, e.message});
      return std::nullopt;
    }
    return ParsedOutput{std::move(value), stage};
  };

  if (auto out = attempt(raw, RepairStage::direct)) return out;
  if (auto fenced = strip_code_fences(raw)) {
    if (auto out = attempt(*fenced, RepairStage::fences_stripped)) return out;
  }
  // Prose may contain brace pairs that are not JSON; walk forward to the
  // first region that parses.
  std::size_t from = 0, start = 0;
  while (auto region = balanced_region_from(raw, from, start)) {
    if (json::accept(*region)) return attempt(*region, RepairStage::region_extracted);
    from = start + 1;
  }
  problems.push_back({std::string(to_string(RepairStage::region_extracted)), "no balanced JSON region"});
  return std::nullopt;
}

}  // namespace

ParsedOutput parse_structured(std::string_view raw, const SchemaDescriptor& schema, const Reprompt& reprompt) {
  std::vector<FieldError> problems;
  if (auto out = local_stages(raw, schema, problems)) return *out;
  if (!reprompt) throw SchemaError(std::string(raw), std::move(problems));

  const std::string second = reprompt(problems);
  std::vector<FieldError> second_problems;
  if (auto out = local_stages(second, schema, second_problems)) {
    out->stage = RepairStage::reprompted;
    return *out;
  }
  for (auto& p : second_problems) problems.push_back({"reprompt:" + p.path, p.message});
  throw SchemaError(std::string(raw) + "\n--- reprompt ---\n" + second, std::move(problems));
}

}  // namespace coach
