use thiserror::Error;

pub const FUNCTION_NAME: &str = "next_generation";

const OPEN: &str = "<next_generation>";
const CLOSE: &str = "</next_generation>";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("response has no <next_generation>...</next_generation> block")]
    MissingTags,
    #[error("the <next_generation> block is empty")]
    EmptyBlock,
    #[error("the extracted code never mentions `next_generation`")]
    MissingFunctionName,
    #[error("nested <next_generation> tags are not supported")]
    NestedTags,
}

/// Returns the code inside the first tag pair, with code fences removed.
pub fn extract_operator(response: &str) -> Result<String, ExtractError> {
    let start = response.find(OPEN).ok_or(ExtractError::MissingTags)? + OPEN.len();
    let rest = &response[start..];
    let end = rest.find(CLOSE).ok_or(ExtractError::MissingTags)?;
    let inner = &rest[..end];
    if inner.contains(OPEN) {
        return Err(ExtractError::NestedTags);
    }
    let code = strip_fences(inner.trim()).trim();
    if code.is_empty() {
        return Err(ExtractError::EmptyBlock);
    }
    if !code.contains(FUNCTION_NAME) {
        return Err(ExtractError::MissingFunctionName);
    }
    Ok(code.to_string())
}

fn strip_fences(s: &str) -> &str {
    let mut s = s;
    if s.starts_with("```") {
        s = match s.find('\n') {
            Some(nl) => &s[nl + 1..],
            None => "",
        };
    }
    let trimmed = s.trim_end();
    if let Some(body) = trimmed.strip_suffix("```") {
        s = body;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_block() {
        let r = "<next_generation>def next_generation(...): pass</next_generation>";
        assert_eq!(extract_operator(r).unwrap(), "def next_generation(...): pass");
    }

    #[test]
    fn fenced_block_inside_tags() {
        let r = "Sure!\n<next_generation>\n```python\ndef next_generation(p, o, m, s):\n    return p\n```\n</next_generation>\nthanks";
        assert_eq!(
            extract_operator(r).unwrap(),
            "def next_generation(p, o, m, s):\n    return p"
        );
    }

    #[test]
    fn first_block_wins() {
        let r = "<next_generation>def next_generation(): return 1</next_generation><next_generation>def next_generation(): return 2</next_generation>";
        assert_eq!(extract_operator(r).unwrap(), "def next_generation(): return 1");
    }

    #[test]
    fn distinguishable_errors() {
        assert_eq!(extract_operator("here is my answer"), Err(ExtractError::MissingTags));
        assert_eq!(extract_operator("<next_generation>unterminated"), Err(ExtractError::MissingTags));
        assert_eq!(extract_operator("<next_generation>\n```\n```\n</next_generation>"), Err(ExtractError::EmptyBlock));
        assert_eq!(
            extract_operator("<next_generation>def other(): pass</next_generation>"),
            Err(ExtractError::MissingFunctionName)
        );
        assert_eq!(
            extract_operator("<next_generation>a<next_generation>def next_generation(): pass</next_generation>"),
            Err(ExtractError::NestedTags)
        );
    }
}
