#pragma once

// JSON forms of the configuration types shared by dataset sidecars and bundles.

#include <json.hpp>

#include "ast/calib.hpp"
#include "ast/signal.hpp"
#include "ast/skinsim.hpp"

namespace ast::signal {
void to_json(nlohmann::json& j, const ToneSet& t);
void from_json(const nlohmann::json& j, ToneSet& t);
}  // namespace ast::signal

namespace ast::skin {
void to_json(nlohmann::json& j, const SkinSpec& s);
void from_json(const nlohmann::json& j, SkinSpec& s);
}  // namespace ast::skin

namespace ast::calib {
void to_json(nlohmann::json& j, const ProtocolSpec& p);
void from_json(const nlohmann::json& j, ProtocolSpec& p);
}  // namespace ast::calib
