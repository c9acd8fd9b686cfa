#pragma once

#include <string_view>

#include "coach/prompts.hpp"

namespace coach::detail {

// Raw text of the checked-in template resource for `task`.
std::string_view embedded_template(PromptTask task);

}  // namespace coach::detail
