//! A protocol-conformant stand-in for the operator worker.
//!
//! The stub does not interpret operator code. Instead it reads a directive
//! comment from the source,
//!
//! ```text
//! # stub-behavior: <name> key=value ...
//! ```
//!
//! and acts accordingly. Sources without `next_generation` fail to load like
//! a real worker would; sources without a directive behave as `identity`.
//!
//! | name            | step behavior                                                  |
//! |-----------------|----------------------------------------------------------------|
//! | `identity`      | offspring equal parents                                        |
//! | `variation`     | encoding-matched crossover and mutation (`rate`, `eta`, `repair`) |
//! | `random`        | uniform random offspring (`repair`)                            |
//! | `zero_division` | step error with a traceback, after `after` good steps          |
//! | `hang`          | never replies after `after` steps; `child=1` spawns a sleeper  |
//! | `crash`         | exits abruptly after `after` steps                             |
//! | `wrong_count`   | validation error for a short offspring list                    |
//! | `short`         | sends one offspring too few without complaining                |
//! | `garbage`       | sends offspring that are not arrays                            |
//! | `bad_json`      | writes a line that is not JSON                                 |
//! | `syntax_error`  | load error                                                     |

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::protocol::{Phase, ProblemMeta, Reply, Request};
use crate::baseline::operators;
use crate::problems::{Category, Encoding};

const DIRECTIVE: &str = "stub-behavior:";

#[derive(Debug, Clone, PartialEq)]
struct Behavior {
    name: String,
    params: HashMap<String, String>,
    line: usize,
}

impl Behavior {
    fn parse(source: &str) -> Behavior {
        for (i, line) in source.lines().enumerate() {
            if let Some(pos) = line.find(DIRECTIVE) {
                let mut words = line[pos + DIRECTIVE.len()..].split_whitespace();
                let name = words.next().unwrap_or("identity").to_string();
                let params = words
                    .filter_map(|w| w.split_once('='))
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect();
                return Behavior { name, params, line: i + 1 };
            }
        }
        Behavior {
            name: "identity".into(),
            params: HashMap::new(),
            line: 1,
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> T {
        self.params.get(key).and_then(|v| v.parse().ok()).unwrap_or(default)
    }
}

struct Loaded {
    behavior: Behavior,
    meta: ProblemMeta,
    steps: usize,
}

/// Command-line entry point shared by the stub binaries.
///
/// `--tag <t>` is accepted (and forwarded to spawned children) so tests can
/// find every process belonging to one worker; `--sleep-forever` turns the
/// process into such a child.
pub fn run_from_args(args: impl IntoIterator<Item = String>) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    if args.iter().any(|a| a == "--sleep-forever") {
        loop {
            std::thread::sleep(Duration::from_secs(3600));
        }
    }
    let tag = args
        .iter()
        .position(|a| a == "--tag")
        .and_then(|i| args.get(i + 1))
        .cloned();
    let stdin = io::stdin();
    let stdout = io::stdout();
    match serve(stdin.lock(), stdout.lock(), tag.as_deref()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("stub worker: {e}");
            1
        }
    }
}

/// Serves the protocol until shutdown or end of input.
pub fn serve(input: impl BufRead, mut output: impl Write, tag: Option<&str>) -> io::Result<()> {
    let mut loaded: Option<Loaded> = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                let phase = if loaded.is_some() { Phase::Step } else { Phase::Load };
                write_reply(&mut output, &Reply::error(phase, format!("malformed message: {e}"), ""))?;
                continue;
            }
        };
        match request {
            Request::Shutdown => return Ok(()),
            Request::Load {
                operator_source,
                problem_meta,
            } => {
                let reply = match load(&operator_source) {
                    Ok(behavior) => {
                        loaded = Some(Loaded {
                            behavior,
                            meta: problem_meta,
                            steps: 0,
                        });
                        Reply::Ready
                    }
                    Err(reply) => {
                        loaded = None;
                        reply
                    }
                };
                write_reply(&mut output, &reply)?;
            }
            Request::Step { seed, parents, .. } => {
                let Some(state) = loaded.as_mut() else {
                    write_reply(&mut output, &Reply::error(Phase::Step, "no operator loaded", ""))?;
                    continue;
                };
                state.steps += 1;
                step(state, seed, &parents, &mut output, tag)?;
            }
        }
    }
    Ok(())
}

fn load(source: &str) -> Result<Behavior, Reply> {
    let behavior = Behavior::parse(source);
    if behavior.name == "syntax_error" {
        return Err(Reply::error(
            Phase::Load,
            format!("SyntaxError: invalid syntax (<operator>, line {})", behavior.line),
            format!(
                "Traceback (most recent call last):\n  File \"<operator>\", line {}\n    def next_generation(\nSyntaxError: invalid syntax",
                behavior.line
            ),
        ));
    }
    if !source.contains("def next_generation") {
        return Err(Reply::error(Phase::Load, "next_generation not found", ""));
    }
    Ok(behavior)
}

fn step(state: &Loaded, seed: u64, parents: &[Vec<Value>], out: &mut impl Write, tag: Option<&str>) -> io::Result<()> {
    let b = &state.behavior;
    let after: usize = b.get("after", 0);
    let misbehave = state.steps > after;
    let n = parents.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match b.name.as_str() {
        "zero_division" if misbehave => {
            let line = b.line + 1;
            write_reply(
                out,
                &Reply::error(
                    Phase::Step,
                    "ZeroDivisionError: division by zero",
                    format!(
                        "Traceback (most recent call last):\n  File \"<operator>\", line {line}, in next_generation\n    scale = spread / 0\nZeroDivisionError: division by zero"
                    ),
                ),
            )
        }
        "hang" if misbehave => {
            if b.get("child", 0) == 1 {
                spawn_sleeper(tag);
            }
            loop {
                std::thread::sleep(Duration::from_secs(3600));
            }
        }
        "crash" if misbehave => {
            eprintln!("Fatal Python error: Segmentation fault");
            std::process::exit(139);
        }
        "wrong_count" => write_reply(
            out,
            &Reply::error(
                Phase::Step,
                format!("ValidationError: expected {n} offspring, got {}", n.saturating_sub(1)),
                "",
            ),
        ),
        "short" => {
            let genomes = parents.iter().skip(1).map(|p| Value::Array(p.clone())).collect();
            write_reply(out, &Reply::Offspring { genomes })
        }
        "garbage" => {
            let genomes = (0..n).map(|_| Value::String("offspring".into())).collect();
            write_reply(out, &Reply::Offspring { genomes })
        }
        "bad_json" => {
            writeln!(out, "offspring: [[0, 1]]")?;
            out.flush()
        }
        "random" => {
            let genomes = (0..n)
                .map(|_| finish(state, random_solution(&state.meta, &mut rng), &mut rng))
                .collect();
            write_reply(out, &Reply::Offspring { genomes })
        }
        "variation" | "zero_division" | "hang" | "crash" => {
            let decoded: Vec<Vec<f64>> = parents.iter().map(|p| p.iter().map(|v| v.as_f64().unwrap_or(0.0)).collect()).collect();
            let genomes = (0..n)
                .map(|i| {
                    let mate = rng.gen_range(0..n);
                    let child = vary(&state.meta, b, &decoded[i], &decoded[mate], &mut rng);
                    finish(state, child, &mut rng)
                })
                .collect();
            write_reply(out, &Reply::Offspring { genomes })
        }
        _ => {
            let genomes = parents.iter().map(|p| Value::Array(p.clone())).collect();
            write_reply(out, &Reply::Offspring { genomes })
        }
    }
}

fn spawn_sleeper(tag: Option<&str>) {
    let Ok(exe) = std::env::current_exe() else { return };
    let mut cmd = Command::new(exe);
    cmd.arg("--sleep-forever");
    if let Some(t) = tag {
        cmd.args(["--tag", t]);
    }
    let _ = cmd.stdin(Stdio::null()).stdout(Stdio::null()).stderr(Stdio::null()).spawn();
}

fn random_solution(meta: &ProblemMeta, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match meta.encoding {
        Encoding::Real => {
            let b = meta.bounds.as_ref().expect("real encoding has bounds");
            b.lower.iter().zip(&b.upper).map(|(lo, hi)| rng.gen_range(*lo..=*hi)).collect()
        }
        Encoding::Bitstring => (0..meta.n_var).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect(),
        Encoding::Permutation => {
            let mut p: Vec<usize> = (0..meta.n_var).collect();
            p.shuffle(rng);
            p.into_iter().map(|x| x as f64).collect()
        }
    }
}

fn vary(meta: &ProblemMeta, b: &Behavior, a: &[f64], other: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rate = b.get("rate", 1.0) / meta.n_var as f64;
    let cross = rng.gen::<f64>() < 0.9;
    match meta.encoding {
        Encoding::Real => {
            let bounds = meta.bounds.as_ref().expect("real encoding has bounds");
            let mut child = if cross {
                operators::sbx(a, other, &bounds.lower, &bounds.upper, 15.0, 0.5, rng).0
            } else {
                a.to_vec()
            };
            operators::polynomial_mutation(&mut child, &bounds.lower, &bounds.upper, b.get("eta", 20.0), rate, rng);
            child
        }
        Encoding::Bitstring => {
            let x: Vec<bool> = a.iter().map(|v| *v != 0.0).collect();
            let y: Vec<bool> = other.iter().map(|v| *v != 0.0).collect();
            let mut child = if cross { operators::two_point_crossover(&x, &y, rng).0 } else { x };
            operators::bitflip(&mut child, rate, rng);
            child.into_iter().map(|bit| f64::from(u8::from(bit))).collect()
        }
        Encoding::Permutation => {
            let x: Vec<usize> = a.iter().map(|v| *v as usize).collect();
            let y: Vec<usize> = other.iter().map(|v| *v as usize).collect();
            let mut child = if cross { operators::order_crossover(&x, &y, rng) } else { x };
            operators::inversion_mutation(&mut child, rng);
            child.into_iter().map(|c| c as f64).collect()
        }
    }
}

/// Applies knapsack repair when asked and converts to the wire form,
/// clipping reals to their bounds.
fn finish(state: &Loaded, mut x: Vec<f64>, rng: &mut ChaCha8Rng) -> Value {
    let meta = &state.meta;
    if meta.category == Category::Mokp && state.behavior.params.get("repair").map(String::as_str) != Some("none") {
        let weights = meta.weights.as_deref().unwrap_or(&[]);
        let capacity = meta.capacity.unwrap_or(u64::MAX);
        let mut load: u64 = weights.iter().zip(&x).filter(|(_, b)| **b != 0.0).map(|(w, _)| *w).sum();
        while load > capacity {
            let packed: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
            let j = packed[rng.gen_range(0..packed.len())];
            x[j] = 0.0;
            load -= weights[j];
        }
    }
    match meta.encoding {
        Encoding::Real => {
            let b = meta.bounds.as_ref().expect("real encoding has bounds");
            Value::Array(
                x.iter()
                    .enumerate()
                    .map(|(i, v)| Value::from(v.clamp(b.lower[i], b.upper[i])))
                    .collect(),
            )
        }
        _ => Value::Array(x.into_iter().map(|v| Value::from(v as u64)).collect()),
    }
}

fn write_reply(out: &mut impl Write, reply: &Reply) -> io::Result<()> {
    serde_json::to_writer(&mut *out, reply)?;
    out.write_all(b"\n")?;
    out.flush()
}
