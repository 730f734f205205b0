#pragma once

#include <json.hpp>

#include "oba/player.hpp"

// JSON wire format of the control protocol (see docs/protocol.md).
namespace oba {

nlohmann::json state_to_json(const PlayerState& state);
nlohmann::json event_to_json(const PlayerEvent& event);

/// Throws schema-error naming the offending JSON pointer.
ControlCommand command_from_json(const nlohmann::json& json);
nlohmann::json command_to_json(const ControlCommand& command);

nlohmann::json user_state_to_json(const UserState& user);

/// Persisted listener preferences: kind preferences, layout, target
/// loudness, DRC profile and UI language.
nlohmann::json preferences_to_json(const PlayerState& state);
void apply_preferences(const nlohmann::json& json, PlayerState& state);

}  // namespace oba
