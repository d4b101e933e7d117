#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace sgame {

enum class Dataset { kHhh, kTruthfulQa, kSafetyBench, kCustom };

std::string_view to_string(Dataset d);
std::optional<Dataset> parse_dataset(std::string_view s);

/// True for datasets whose candidates are the item's answer options.
inline bool is_multiple_choice(Dataset d) { return d != Dataset::kTruthfulQa; }

}  // namespace sgame
