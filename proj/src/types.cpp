#include "sgame/types.hpp"

namespace sgame {

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::kHhh: return "hhh";
    case Dataset::kTruthfulQa: return "truthfulqa";
    case Dataset::kSafetyBench: return "safetybench";
    case Dataset::kCustom: return "custom";
  }
  return "custom";
}

std::optional<Dataset> parse_dataset(std::string_view s) {
  if (s == "hhh") return Dataset::kHhh;
  if (s == "truthfulqa" || s == "tqa") return Dataset::kTruthfulQa;
  if (s == "safetybench" || s == "sb") return Dataset::kSafetyBench;
  if (s == "custom") return Dataset::kCustom;
  return std::nullopt;
}

}  // namespace sgame
