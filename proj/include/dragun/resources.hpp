#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace dragun {

// Files compiled into the binary: prompt templates under "prompts/" and
// analyzer data under "data/". Names are repository-relative paths.
std::optional<std::string_view> find_resource(std::string_view name);
std::vector<std::string_view> resource_names();

}  // namespace dragun
