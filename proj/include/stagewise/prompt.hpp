#pragma once
// Stage-marked prompt assembly, model-output parsing, premature-suggestion
// gating and action-plan extraction.
//
// Wire conventions for model output:
//   <think> ... </think>       reasoning block; its first line reads
//                              "Current stage: <Stage>; Focus: <topic>"
//   [[extract]] ... [[/extract]]
//                              trailing self-report, one "key: a, b" line per
//                              key among keywords, foci, stressors, resources
//                              (resources as "tag" or "tag=<minutes>")
//   [needs: tag, tag; N min/day]
//                              optional per-step resource annotation

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stagewise/gateway.hpp"
#include "stagewise/session.hpp"
#include "stagewise/stage.hpp"
#include "stagewise/suggestions.hpp"

namespace stagewise {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kExtractOpen = "[[extract]]";
inline constexpr std::string_view kExtractClose = "[[/extract]]";

struct PromptOptions {
    bool thinking = true;
    bool stage_info = true;  // false: no marker, neutral instructions
    int window = 6;          // dialogue turns of history
};

struct PromptBundle {
    std::string system_text;
    std::string state_summary;
    std::vector<DialogueTurn> history;
    std::string stage_instructions;
    bool thinking_enabled = false;
    std::string user_text;  // rendered turn template (summary + history)

    std::vector<ChatMessage> messages() const;
};

struct StageEcho {
    Stage stage = Stage::Exploration;
    std::string focus;

    friend bool operator==(const StageEcho&, const StageEcho&) = default;
};

struct ParsedResponse {
    std::optional<std::string> reasoning_chain;
    std::optional<StageEcho> stage_echo;
    std::vector<std::vector<std::string>> causal_chains;  // "A → B → C" as nodes
    std::string reply;
    std::vector<std::string> suggestions;
    events::Extraction extractions;
    bool degraded = false;
};

struct GatedReply {
    std::string final_reply;
    std::vector<std::string> suppressed;
};

// Templates and tables loaded from a prompt asset directory:
//   system.v1.txt          placeholders {stage_marker} {stage_instructions}
//                          {thinking_instructions}
//   turn.v1.txt            placeholders {state_summary} {history}
//   stages.v1.json         per-stage instructions, neutral text, thinking text
//   fallback_lines.v1.json per-stage empathic fallback lines and "default"
//   suggestion_lexicon.v1.json
struct PromptAssets {
    std::string system_template;
    std::string turn_template;
    std::map<Stage, std::string> stage_instructions;
    std::string neutral_instructions;
    std::string thinking_with_stage;
    std::string thinking_without_stage;
    std::map<Stage, std::string> fallback_lines;
    std::string default_fallback;
    SuggestionLexicon suggestions;

    static PromptAssets load(const std::filesystem::path& dir,
                             std::vector<std::string> generic_suggestions);
};

class PromptEngine {
public:
    explicit PromptEngine(PromptAssets assets);

    // Throws std::invalid_argument for Closed.
    PromptBundle build_prompt(const SessionState& state, Stage stage,
                              const PromptOptions& options) const;

    // Never throws. With thinking off, reasoning blocks are still stripped
    // but not reported.
    ParsedResponse parse_response(std::string_view raw, bool thinking) const;

    // Removes suggestion sentences in Exploration and Insight when enabled.
    GatedReply gate_reply(Stage stage, const ParsedResponse& parsed, bool enabled = true) const;

    const PromptAssets& assets() const noexcept { return assets_; }
    const SuggestionLexicon& suggestions() const noexcept { return assets_.suggestions; }

private:
    PromptAssets assets_;
};

std::string state_summary(const SessionState& state);

// Causal chains in free text: lines with "→" (or "->") joining >= 2 nodes.
std::vector<std::vector<std::string>> causal_chains(std::string_view text);

// Step list from an Action-stage reply: numbered lines ("1. ...") or
// schedule phrases ("In the first week, ..."). Needs at least two steps.
std::optional<ActionPlan> extract_plan(std::string_view reply);

}  // namespace stagewise
