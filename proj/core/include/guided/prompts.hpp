#pragma once

#include <stdexcept>
#include <string>

namespace guided::dialogue {

/// Named template sections. The three system prompts select the agent role;
/// guidance_frame wraps a verifier critique before it re-enters the policy
/// context ({critique} placeholder).
struct PromptSet {
    std::string system_policy;
    std::string system_verifier;
    std::string system_standalone;
    std::string guidance_frame;
};

/// Built-in prompts for collaborative inference and rollouts.
const PromptSet& builtin_prompts();

/// Built-in prompts for the data-synthesis Guide/Solver protocol. The solver
/// prompt rides system_policy, the guide prompt rides system_verifier.
const PromptSet& synthesis_prompts();

/// Loads a template file with [SYSTEM_POLICY], [SYSTEM_VERIFIER],
/// [SYSTEM_STANDALONE] and [GUIDANCE_FRAME] section headers. Missing sections
/// fall back to the built-ins.
PromptSet load_prompt_file(const std::string& path);

}  // namespace guided::dialogue
