//! Prompt templates, checked in under `prompts/`, and a tiny renderer.

pub const EDITOR_SYSTEM: &str = include_str!("../prompts/editor_system.txt");
pub const BALANCED_USER: &str = include_str!("../prompts/balanced_user.txt");
pub const COOL_USER: &str = include_str!("../prompts/cool_user.txt");
pub const CORRECTIVE: &str = include_str!("../prompts/corrective.txt");
pub const ADVICE_SYSTEM: &str = include_str!("../prompts/advice_system.txt");
pub const ADVICE_USER: &str = include_str!("../prompts/advice_user.txt");
pub const GUIDE_SYSTEM: &str = include_str!("../prompts/guide_system.txt");
pub const GUIDE_USER: &str = include_str!("../prompts/guide_user.txt");

/// Delimiter fencing embedded source text inside a user prompt.
pub const FENCE: &str = "\"\"\"";

/// Replaces `{key}` placeholders in one pass over the template, so values
/// containing braces are inserted verbatim.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let template = template.trim_end();
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Text between the first pair of [`FENCE`] lines.
pub fn fenced_text(prompt: &str) -> Option<&str> {
    let start = prompt.find(FENCE)? + FENCE.len();
    let body = &prompt[start..];
    let end = body.find(FENCE)?;
    Some(body[..end].trim_matches('\n'))
}
