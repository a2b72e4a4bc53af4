//! Prompt templates shipped with the crate.
//!
//! Templates are plain text with a single placeholder, `{count}`, replaced by
//! the English count word of the rules being rendered. Every other brace is
//! literal.

pub const MCQ_LEVEL1: &str = include_str!("../prompts/mcq_level1.txt");
pub const MCQ_MULTI: &str = include_str!("../prompts/mcq_multi.txt");
pub const MCQ_LEVEL5: &str = include_str!("../prompts/mcq_level5.txt");
pub const MCQ_CHECK: &str = include_str!("../prompts/mcq_check.txt");
pub const COEXISTENCE: &str = include_str!("../prompts/coexistence.txt");
pub const SEMANTIC_STRUCTURING: &str = include_str!("../prompts/semantic_structuring.txt");
pub const DSL_TRANSLATION: &str = include_str!("../prompts/dsl_translation.txt");
pub const QUALITY_SEMANTIC_STRUCTURING: &str = include_str!("../prompts/quality_semantic_structuring.txt");
pub const QUALITY_COEXISTENCE: &str = include_str!("../prompts/quality_coexistence.txt");
pub const QUALITY_TRANSCRIPTION: &str = include_str!("../prompts/quality_transcription.txt");
pub const QUALITY_DSL_TRANSLATION: &str = include_str!("../prompts/quality_dsl_translation.txt");
pub const TEST_VISUAL: &str = include_str!("../prompts/test_visual.txt");
pub const TEST_TEXT: &str = include_str!("../prompts/test_text.txt");

/// Substitutes `{count}`.
pub fn with_count(template: &str, count: usize) -> String {
    template.replace("{count}", crate::util::count_word(count))
}

/// Numbered `Input Rule N: …` block, or `Input Rule: …` for a single rule.
pub fn rule_slots<'a>(contents: impl IntoIterator<Item = &'a str>) -> String {
    let contents: Vec<&str> = contents.into_iter().collect();
    if contents.len() == 1 {
        return format!("Input Rule: {}", contents[0]);
    }
    contents
        .iter()
        .enumerate()
        .map(|(i, c)| format!("Input Rule {}: {}", i + 1, c))
        .collect::<Vec<_>>()
        .join("\n\n")
}
