use std::collections::HashMap;

use thiserror::Error;

use super::{ChatRole, ChatTranscript, PromptKind};

pub const DEFAULT_CHAR_BUDGET: usize = 60_000;
pub const ERROR_TAIL_CHARS: usize = 2000;

const INIT_SYSTEM: &str = "You are an expert in designing intelligent evolutionary search strategies that can solve #PROBLEM# efficiently and effectively. #PROBLEM_DESC#";

const INIT_USER: &str = "Description of Task:
Your task is to evolve a superior evolutionary operator with Python for tackling #PROBLEM#, with the goal of achieving top search performance across #PROBLEM#. You have to provide me the Python code with a single function namely 'next_generation' following the format and the requirements given below, which are matched with their functionalities:
#FORMAT#

Requirements:
You have to return me a single function namely 'next_generation', keep the format of input and the format of output unchanged, and provide concise descriptions in the annotation.
Please return me an XML text using the following format:
<next_generation>
...
</next_generation>
where '...' gives only the entire code without any additional information. To enable direct compilation for the code given in '...', please don't provide any other text except the single Python function namely 'next_generation' with its annotation.
No Explanation Needed!!";

const CROSSOVER_USER: &str = "Description of Task:
I will showcase several evaluated 'next_generation' functions in XML format, with their scores obtained on the #PROBLEM#. Your task is to conceive an advanced function with the same input/output formats, termed 'next_generation', that is inspired by the evaluated cases.
#FORMAT#
Below, you will find the #N_s# evaluated 'next_generation' functions in XML texts, each accompanied by its corresponding score.
#SELECTED_OPERATORS#

Requirements:
Kindly devise an innovative 'next_generation' method with XML that retains the identical input/output structure. This method should be crafted through a meticulous analysis of the shared characteristics among high-performing algorithms.
No Explanation Needed!!";

const MUTATION_USER: &str = "Description of Task:
I will introduce an evolutionary search function titled 'next_generation' in XML format. Your task is to meticulously refine this function and propose a novel one that may obtain superior search performance on #PROBLEM#, ensuring the input/output formats, function name, and core functionality remain unaltered.
#FORMAT#
The original function is given by:
<next_generation>#OPERATOR#</next_generation>

Requirements:
Please return me an innovative 'next_generation' operator with the same XML format. No Explanation Needed!!";

const REPAIR_USER: &str = "Description of Task:
The code you provided for me cannot pass my demo test on #PROBLEM#. The error is given by: #ERROR#. Can you correct the code according to the errors?

Requirements:
Please return me a refined 'next_generation' with the same XML format, i.e.,
<next_generation>...</next_generation>
, where the '...' represents the code snippet.
No Explanation Needed!!";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("placeholder #{0}# has no value")]
    MissingPlaceholder(String),
    #[error("crossover needs at least 2 parents, got {0}")]
    TooFewParents(usize),
    #[error("n_selected is {n_selected} but {given} operators were supplied")]
    CountMismatch { n_selected: usize, given: usize },
    #[error("rendered prompt has {len} characters, budget is {budget}")]
    OverBudget { len: usize, budget: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedOperator {
    pub source: String,
    pub score: f64,
}

/// Values for the template placeholders. Empty strings count as missing.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptContext {
    pub problem_name: String,
    pub problem_desc: String,
    pub format_spec: String,
    pub selected_operators: Vec<SelectedOperator>,
    pub n_selected: usize,
    pub operator_source: String,
    pub error_text: String,
    pub char_budget: usize,
}

impl Default for PromptContext {
    fn default() -> Self {
        PromptContext {
            problem_name: String::new(),
            problem_desc: String::new(),
            format_spec: String::new(),
            selected_operators: Vec::new(),
            n_selected: 0,
            operator_source: String::new(),
            error_text: String::new(),
            char_budget: DEFAULT_CHAR_BUDGET,
        }
    }
}

impl PromptContext {
    /// Context with the category texts filled in.
    pub fn for_category(category: crate::problems::Category) -> Self {
        PromptContext {
            problem_name: super::problem_name(category).to_string(),
            problem_desc: super::problem_description(category).to_string(),
            format_spec: super::format_spec(category),
            ..PromptContext::default()
        }
    }
}

/// Substitutes `#NAME#` markers in one left-to-right pass.
///
/// Substituted values are never rescanned, so operator code containing `#`
/// comments passes through untouched. A `#` not opening a known marker is
/// copied literally.
fn fill(template: &str, values: &HashMap<&str, &str>) -> Result<String, PromptError> {
    const NAMES: [&str; 7] = [
        "PROBLEM_DESC",
        "PROBLEM",
        "FORMAT",
        "N_s",
        "SELECTED_OPERATORS",
        "OPERATOR",
        "ERROR",
    ];
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(pos) = rest.find('#') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let marker = NAMES
            .iter()
            .find(|name| after.starts_with(*name) && after[name.len()..].starts_with('#'));
        match marker {
            Some(name) => {
                let value = values
                    .get(name)
                    .copied()
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| PromptError::MissingPlaceholder((*name).to_string()))?;
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('#');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn check_budget(text: &str, budget: usize) -> Result<(), PromptError> {
    let len = text.chars().count();
    if len > budget {
        return Err(PromptError::OverBudget { len, budget });
    }
    Ok(())
}

fn single_user(kind: PromptKind, system: Option<String>, user: String) -> ChatTranscript {
    let mut t = ChatTranscript::new(kind);
    if let Some(s) = system {
        t.push(ChatRole::System, s).expect("nonempty system prompt");
    }
    t.push(ChatRole::User, user).expect("nonempty user prompt");
    t
}

pub fn render_initialization(ctx: &PromptContext) -> Result<ChatTranscript, PromptError> {
    let values = HashMap::from([
        ("PROBLEM", ctx.problem_name.as_str()),
        ("PROBLEM_DESC", ctx.problem_desc.as_str()),
        ("FORMAT", ctx.format_spec.as_str()),
    ]);
    let system = fill(INIT_SYSTEM, &values)?;
    let user = fill(INIT_USER, &values)?;
    check_budget(&system, ctx.char_budget.saturating_sub(user.chars().count()))?;
    Ok(single_user(PromptKind::Initialization, Some(system), user))
}

/// Renders the crossover prompt, dropping the lowest-scoring parents while
/// the text exceeds the character budget.
pub fn render_crossover(ctx: &PromptContext) -> Result<ChatTranscript, PromptError> {
    if ctx.n_selected != ctx.selected_operators.len() {
        return Err(PromptError::CountMismatch {
            n_selected: ctx.n_selected,
            given: ctx.selected_operators.len(),
        });
    }
    let mut parents: Vec<&SelectedOperator> = ctx.selected_operators.iter().collect();
    loop {
        if parents.len() < 2 {
            return Err(PromptError::TooFewParents(parents.len()));
        }
        let blocks = parents
            .iter()
            .map(|p| format!("<next_generation>\n{}\n</next_generation>\nscore: {}", p.source, format_score(p.score)))
            .collect::<Vec<_>>()
            .join("\n\n");
        let count = parents.len().to_string();
        let values = HashMap::from([
            ("PROBLEM", ctx.problem_name.as_str()),
            ("FORMAT", ctx.format_spec.as_str()),
            ("N_s", count.as_str()),
            ("SELECTED_OPERATORS", blocks.as_str()),
        ]);
        let user = fill(CROSSOVER_USER, &values)?;
        match check_budget(&user, ctx.char_budget) {
            Ok(()) => return Ok(single_user(PromptKind::Crossover, None, user)),
            Err(e) if parents.len() == 2 => return Err(e),
            Err(_) => {
                // Drop the lowest score; among ties the later parent goes first.
                let worst = parents
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.score.total_cmp(&b.1.score).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .expect("at least two parents");
                parents.remove(worst);
            }
        }
    }
}

pub fn render_mutation(ctx: &PromptContext) -> Result<ChatTranscript, PromptError> {
    let values = HashMap::from([
        ("PROBLEM", ctx.problem_name.as_str()),
        ("FORMAT", ctx.format_spec.as_str()),
        ("OPERATOR", ctx.operator_source.as_str()),
    ]);
    let user = fill(MUTATION_USER, &values)?;
    check_budget(&user, ctx.char_budget)?;
    Ok(single_user(PromptKind::Mutation, None, user))
}

/// Renders the repair request, keeping only the tail of long error texts.
pub fn render_repair(ctx: &PromptContext) -> Result<ChatTranscript, PromptError> {
    let n = ctx.error_text.chars().count();
    let tail: String = if n > ERROR_TAIL_CHARS {
        ctx.error_text.chars().skip(n - ERROR_TAIL_CHARS).collect()
    } else {
        ctx.error_text.clone()
    };
    let values = HashMap::from([("PROBLEM", ctx.problem_name.as_str()), ("ERROR", tail.as_str())]);
    let user = fill(REPAIR_USER, &values)?;
    check_budget(&user, ctx.char_budget)?;
    Ok(single_user(PromptKind::Repair, None, user))
}

/// Six significant digits in the style of C's `%g`.
pub fn format_score(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
