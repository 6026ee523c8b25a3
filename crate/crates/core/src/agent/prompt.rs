/// Version tag of the bundled system prompt; recorded in run reports.
pub const SYSTEM_PROMPT_VERSION: &str = "v1";

pub const SYSTEM_PROMPT: &str = include_str!("../../prompts/system_prompt_v1.txt");

/// System message issued before the final tool-free call once the iteration
/// budget is spent.
pub const FORCED_COMPLETION_TEXT: &str = "Answer now using only information already gathered; do not call tools.";
