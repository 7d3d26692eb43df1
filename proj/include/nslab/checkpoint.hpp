#pragma once

#include <string>

#include "json.hpp"
#include "nslab/constitutive.hpp"
#include "nslab/solver.hpp"

namespace nslab {

nlohmann::json params_to_json(const Params& p);
/// Strict: unknown keys raise ConfigError; missing keys keep the defaults of `base`.
Params params_from_json(const nlohmann::json& j, const Params& base);

struct Checkpoint {
    FluidState state;
    Params params;
    nlohmann::json extra;  ///< free-form metadata (version, run id, ledger offsets)
};

/// Binary container: magic, endianness tag, length-prefixed JSON header, then raw doubles
/// (ρ, u_0..u_{d-1}, w) in row-major order.
void write_checkpoint(const std::string& path, const FluidState& s, const Params& p,
                      const nlohmann::json& extra = nlohmann::json::object());
Checkpoint read_checkpoint(const std::string& path);

}  // namespace nslab
