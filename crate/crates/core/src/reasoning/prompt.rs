use serde::{Deserialize, Serialize};

use crate::context::HolisticContext;
use crate::knowledge::DetectionUnit;

/// Detection meta-prompt. `%C%`, `%API%`, `%cwe%`, `%vuln_patterns_cwe%`
/// and `%defense_knowledge_cwe%` are the slots.
pub const META_PROMPT_TEMPLATE: &str = r#"### Problem
You are an expert security auditor for Java. Given a specific code context %C% encompassing a target sensitive invocation of %API%, analyze %C% to determine whether a genuine %cwe% vulnerability exists.
%CODE%
### Solution Instructions
Follow the guideline below step by step. After completing each step, critically review your reasoning for overlooked issues (e.g., implicit sanitization, broken dataflow, incomplete context) and revise your analysis as necessary. Continue this review until you reach a well-justified conclusion. Summarize your final answer in the following JSON format: {"explanation": <step-by-step reasoning>, "is_vulnerable": true or false}.
### Vulnerability Type Specific Guideline:
Step 1: Contextual Flow Understanding -- Starting from the sensitive invocation of %API%, precisely understand and extract all relevant data and control flow paths within %C%.
Step 2: Trigger Condition Verification -- Systematically evaluate whether the extracted paths fulfill the exact vulnerability conditions specified by %vuln_patterns_cwe%.
Step 3: Defense Assessment -- Critically examine defense mechanisms present in C using %defense_knowledge_cwe%, clearly distinguishing robust mitigations from insufficient or bypassable ones.
Step 4: Evidence-Driven Verdict Synthesis -- Synthesize prior artifacts. Weight verified exploitable indicators against active counter-evidence before deriving a final verdict.
"#;

pub const STEP_HEADERS: [&str; 4] = [
    "Step 1: Contextual Flow Understanding",
    "Step 2: Trigger Condition Verification",
    "Step 3: Defense Assessment",
    "Step 4: Evidence-Driven Verdict Synthesis",
];

const SLOTS: [&str; 6] = ["%C%", "%API%", "%cwe%", "%vuln_patterns_cwe%", "%defense_knowledge_cwe%", "%CODE%"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSlots {
    pub context: String,
    pub api: String,
    pub cwe: String,
    pub vuln_patterns: String,
    pub defense_knowledge: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPrompt {
    pub text: String,
    pub slots: PromptSlots,
}

/// The context symbol `C` names the code block placed right after the
/// problem statement; the guideline blocks are quoted in place.
pub fn fill_template(slots: &PromptSlots) -> String {
    let code = format!("\nC =\n```java\n{}```\n", slots.context);
    // Code goes in last so that its text is never rewritten.
    META_PROMPT_TEMPLATE
        .replace("%C%", "C")
        .replace("%API%", &format!("`{}`", slots.api))
        .replace("%cwe%", &slots.cwe)
        .replace("%vuln_patterns_cwe%", &format!("the following {} patterns: \"{}\"", slots.cwe, slots.vuln_patterns.trim()))
        .replace("%defense_knowledge_cwe%", &format!("the following {} defense knowledge: \"{}\"", slots.cwe, slots.defense_knowledge.trim()))
        .replace("%CODE%", &code)
}

pub fn build_detection_prompt(ctx: &HolisticContext, unit: &DetectionUnit) -> MetaPrompt {
    let slots = PromptSlots {
        context: ctx.rendered.clone(),
        api: unit.api.clone(),
        cwe: format!("{} ({})", unit.cwe, unit.guideline.title),
        vuln_patterns: unit.guideline.vuln_patterns.clone(),
        defense_knowledge: unit.guideline.defense_knowledge.clone(),
    };
    MetaPrompt { text: fill_template(&slots), slots }
}

/// Template slots still present in `text`, outside the code block.
pub fn unfilled_slots(text: &str) -> Vec<&'static str> {
    let outside: String = text.split("```").step_by(2).collect();
    SLOTS.iter().copied().filter(|s| outside.contains(s)).collect()
}
