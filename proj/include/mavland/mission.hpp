#pragma once

namespace mavland {

/// Mission phases in nominal order. Disarmed is terminal.
enum class MissionPhase { Approach, Landing, Descent, Disarmed };

inline const char* to_string(MissionPhase p) {
  switch (p) {
    case MissionPhase::Approach: return "Approach";
    case MissionPhase::Landing:  return "Landing";
    case MissionPhase::Descent:  return "Descent";
    case MissionPhase::Disarmed: return "Disarmed";
  }
  return "?";
}

}  // namespace mavland
