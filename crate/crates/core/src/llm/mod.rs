//! Prompt rendering, chat backends and operator extraction.

mod backend;
mod extract;
mod prompts;
mod texts;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    complete, BackendError, ChatBackend, HttpBackendConfig, MockBackend, OpenAiCompatibleBackend, DEFAULT_API_KEY_ENV,
    HTTP_RETRIES,
};
pub use extract::{extract_operator, ExtractError, FUNCTION_NAME};
pub use prompts::{
    format_score, render_crossover, render_initialization, render_mutation, render_repair, PromptContext,
    PromptError, SelectedOperator, DEFAULT_CHAR_BUDGET, ERROR_TAIL_CHARS,
};
pub use texts::{format_spec, problem_description, problem_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

/// The template a prompt was rendered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Initialization,
    Crossover,
    Mutation,
    Repair,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::Initialization,
        PromptKind::Crossover,
        PromptKind::Mutation,
        PromptKind::Repair,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            PromptKind::Initialization => "initialization",
            PromptKind::Crossover => "crossover",
            PromptKind::Mutation => "mutation",
            PromptKind::Repair => "repair",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TranscriptError {
    #[error("message content is empty")]
    EmptyContent,
    #[error("a system message may only open the transcript")]
    MisplacedSystem,
}

/// One dialogue with a backend. Messages are only ever appended.
///
/// `kind` tracks the template of the most recent prompt, so a repair request
/// appended to a generation dialogue is classified as a repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTranscript {
    messages: Vec<ChatMessage>,
    pub kind: PromptKind,
    pub backend_id: Option<String>,
    pub temperature: Option<f64>,
}

impl ChatTranscript {
    pub fn new(kind: PromptKind) -> Self {
        ChatTranscript {
            messages: Vec::new(),
            kind,
            backend_id: None,
            temperature: None,
        }
    }

    pub fn messages(&self) -> &[ChatMessage] {
        &self.messages
    }

    pub fn push(&mut self, role: ChatRole, content: impl Into<String>) -> Result<(), TranscriptError> {
        let content = content.into();
        if content.is_empty() {
            return Err(TranscriptError::EmptyContent);
        }
        if role == ChatRole::System && !self.messages.is_empty() {
            return Err(TranscriptError::MisplacedSystem);
        }
        self.messages.push(ChatMessage { role, content });
        Ok(())
    }

    /// Appends the messages of `follow_up` and adopts its kind.
    pub fn continue_with(&mut self, follow_up: &ChatTranscript) -> Result<(), TranscriptError> {
        for m in &follow_up.messages {
            if m.role == ChatRole::System {
                continue;
            }
            self.push(m.role, m.content.clone())?;
        }
        self.kind = follow_up.kind;
        Ok(())
    }

    /// Concatenated message contents, for inspection and size checks.
    pub fn text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn last_user(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == ChatRole::User)
            .map(|m| m.content.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transcript_rejects_late_system_and_empty() {
        let mut t = ChatTranscript::new(PromptKind::Initialization);
        t.push(ChatRole::System, "sys").unwrap();
        t.push(ChatRole::User, "hi").unwrap();
        assert_eq!(t.push(ChatRole::System, "again"), Err(TranscriptError::MisplacedSystem));
        assert_eq!(t.push(ChatRole::Assistant, ""), Err(TranscriptError::EmptyContent));
        assert_eq!(t.messages().len(), 2);
    }

    #[test]
    fn continuation_adopts_follow_up_kind() {
        let mut t = ChatTranscript::new(PromptKind::Mutation);
        t.push(ChatRole::User, "a").unwrap();
        t.push(ChatRole::Assistant, "b").unwrap();
        let mut r = ChatTranscript::new(PromptKind::Repair);
        r.push(ChatRole::User, "fix").unwrap();
        t.continue_with(&r).unwrap();
        assert_eq!(t.kind, PromptKind::Repair);
        assert_eq!(t.messages().len(), 3);
        assert_eq!(t.last_user(), Some("fix"));
    }
}
