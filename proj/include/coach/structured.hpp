#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coach/error.hpp"
#include "coach/prompts.hpp"

namespace coach {

// How a structured value was recovered from raw model text.
enum class RepairStage { direct, fences_stripped, region_extracted, reprompted };

std::string_view to_string(RepairStage s);

struct ParsedOutput {
  json value;
  RepairStage stage = RepairStage::direct;
};

// Issues one corrective re-prompt. Receives the problems found in the first
// response and returns the model's new raw text.
using Reprompt = std::function<std::string(const std::vector<FieldError>& problems)>;

// Contents of the first ``` fenced block, or nullopt.
std::optional<std::string> strip_code_fences(std::string_view raw);

// First balanced {...} or [...] region, honoring string literals and escapes.
std::optional<std::string> first_balanced_region(std::string_view raw);

// Recovery pipeline: direct parse, then fence stripping, then the first
// balanced region, then (when `reprompt` is given) one corrective re-prompt
// whose answer goes through the same three local stages. Every accepted value
// has passed strict schema validation. Throws SchemaError with the raw text.
ParsedOutput parse_structured(std::string_view raw, const SchemaDescriptor& schema, const Reprompt& reprompt = {});

}  // namespace coach
