#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shieldroute/guardplan.hpp"
#include "shieldroute/layout.hpp"

namespace shieldroute {

enum class AttackKind : std::uint8_t { Delete, Move, Jog };
enum class JogVariant : std::uint8_t { Lengthening, BendPreserving };

std::string to_string(AttackKind k);
std::string to_string(JogVariant v);
AttackKind parse_attack_kind(std::string_view s);
JogVariant parse_jog_variant(std::string_view s);

/// Ground truth for one simulated edit. Deltas come from re-tracing the
/// touched guards before and after (after minus before, summed).
struct AttackRecord {
  AttackKind kind = AttackKind::Delete;
  std::optional<JogVariant> variant;
  std::vector<std::string> guards;
  std::string target;           // jog only
  std::optional<Point> attach;  // jog only: point on the target centerline
  int stub_layer = 0;           // jog only: layer of the Trojan via pad and stub
  Nm delta_length = 0;
  int delta_bends = 0;
  Point translation{0, 0};

  friend bool operator==(const AttackRecord&, const AttackRecord&) = default;
};

struct AttackResult {
  Layout layout;
  AttackRecord record;
};

/// Removes every shape of a guard net. LookupError when it is not a guard.
AttackResult delete_attack(const Layout& layout, const std::string& guard);

/// Smallest translation step keeping every layer the guards use on its grid.
Nm move_step(const Layout& layout, const std::vector<std::string>& guards);

/// Rigid translation. A vector off the move_step grid is an Error; a
/// destination that is not DRC-clean or leaves the die is InfeasibleError.
/// The input is never modified.
AttackResult move_attack(const Layout& layout, const std::vector<std::string>& guards, Point translation);

/// Nearest legal translation within `radius_steps` steps (Manhattan order,
/// then x, then y), or nothing.
std::optional<Point> find_move(const Layout& layout, const std::vector<std::string>& guards, int radius_steps);

/// Displaces the top (else bottom) guard over `attach` by one pitch with two
/// jogs and attaches a Trojan via plus stub to the target. The bend
/// preserving variant also pulls in U-turn bases of the same guard so the
/// total length is unchanged. A nonzero `guard_layer` restricts the edit to
/// the guard on that layer.
AttackResult jog_attack(const Layout& layout, const GuardPlan& plan, const std::string& target, Point attach,
                        JogVariant variant, int guard_layer = 0);

struct JogSite {
  std::string target;
  Point attach;
  std::string guard;
  int guard_layer = 0;
};

/// On-grid attach points where a top or bottom guard segment extends at
/// least one pitch beyond the jog on both sides. Deterministic order.
std::vector<JogSite> jog_sites(const Layout& layout, const GuardPlan& plan);

std::string attack_record_to_json(const AttackRecord& record);
AttackRecord attack_record_from_json(std::string_view text);

}  // namespace shieldroute
