#pragma once

#include <filesystem>

#include "json.hpp"

#include "coadapt/mlp.hpp"

namespace coadapt {

// {"format": "coadapt-mlp/1", "output_activation": "tanh" | "none",
//  "layers": [{"rows": in, "cols": out, "weight": [row-major], "bias": [...]}]}
nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

void save_mlp(const Mlp& net, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);
// Copies weights from `source` into `target`; shapes must match.
void assign_weights(Mlp& target, const Mlp& source);

}  // namespace coadapt
