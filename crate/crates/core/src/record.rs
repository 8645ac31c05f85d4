//! On-disk record of an evolution run and the reports derived from it.
//!
//! ```text
//! <run>/config.json
//! <run>/suite/                      suite.json + one file per instance
//! <run>/operators/gen_GG/op_NN.src
//! <run>/operators/gen_GG/op_NN.meta.json
//! <run>/scores.jsonl                one line per (operator, instance) evaluation
//! <run>/convergence.csv             generation,best_score
//! <run>/events.jsonl
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evolution::{Event, OperatorCandidate, RunObserver};
use crate::metrics::ScoreReport;
use crate::problems::SuiteSpec;
use crate::sandbox::{Evaluation, OperatorArtifact, Origin};

pub const CONVERGENCE_HEADER: &str = "generation,best_score";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub id: String,
    pub origin: Origin,
    pub parent_ids: Vec<String>,
    pub created_generation: usize,
    pub source_file: String,
    /// Generation in which the operator was scored, if it was.
    pub scored_generation: Option<usize>,
    pub score_report: Option<ScoreReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub artifact_id: String,
    pub generation: usize,
    pub instance_id: String,
    pub seed: u64,
    pub score: f64,
    pub metric: Option<f64>,
    pub failure: Option<String>,
    pub elapsed_secs: f64,
    pub trace: Vec<f64>,
}

#[derive(Serialize)]
struct EventLine<'a> {
    generation: usize,
    #[serde(flatten)]
    event: &'a Event,
}

/// Single writer for every file of a run directory.
pub struct RunRecorder {
    dir: PathBuf,
    scores: File,
    events: File,
    convergence: File,
    next_slot: BTreeMap<usize, usize>,
    metas: HashMap<String, (PathBuf, OperatorMeta)>,
}

impl RunRecorder {
    /// Creates the run directory, which must not already hold a run.
    pub fn create(dir: &Path, config: &impl Serialize, suite: &SuiteSpec) -> io::Result<Self> {
        if dir.join("config.json").exists() {
            return Err(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("{} already holds a run", dir.display()),
            ));
        }
        fs::create_dir_all(dir.join("operators"))?;
        write_json(&dir.join("config.json"), config)?;
        suite.save_dir(&dir.join("suite")).map_err(io::Error::other)?;
        let mut convergence = File::create(dir.join("convergence.csv"))?;
        writeln!(convergence, "{CONVERGENCE_HEADER}")?;
        Ok(RunRecorder {
            dir: dir.to_path_buf(),
            scores: File::create(dir.join("scores.jsonl"))?,
            events: File::create(dir.join("events.jsonl"))?,
            convergence,
            next_slot: BTreeMap::new(),
            metas: HashMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl RunObserver for RunRecorder {
    fn artifact(&mut self, generation: usize, artifact: &OperatorArtifact) -> io::Result<()> {
        if self.metas.contains_key(&artifact.id) {
            return Ok(());
        }
        let slot = self.next_slot.entry(generation).or_insert(0);
        *slot += 1;
        let gen_dir = self.dir.join("operators").join(format!("gen_{generation:02}"));
        fs::create_dir_all(&gen_dir)?;
        let stem = format!("op_{slot:02}");
        fs::write(gen_dir.join(format!("{stem}.src")), &artifact.source)?;
        let meta = OperatorMeta {
            id: artifact.id.clone(),
            origin: artifact.origin,
            parent_ids: artifact.parent_ids.clone(),
            created_generation: artifact.created_generation,
            source_file: format!("{stem}.src"),
            scored_generation: None,
            score_report: None,
        };
        let path = gen_dir.join(format!("{stem}.meta.json"));
        write_json(&path, &meta)?;
        self.metas.insert(artifact.id.clone(), (path, meta));
        Ok(())
    }

    fn scored(&mut self, candidate: &OperatorCandidate, evaluations: &[Evaluation]) -> io::Result<()> {
        let generation = candidate.generation_admitted;
        self.artifact(generation, &candidate.artifact)?;
        let (path, meta) = self.metas.get_mut(&candidate.artifact.id).expect("artifact recorded above");
        meta.scored_generation = Some(generation);
        meta.score_report = Some(candidate.report.clone());
        write_json(path, meta)?;
        for e in evaluations {
            let line = ScoreLine {
                artifact_id: candidate.artifact.id.clone(),
                generation,
                instance_id: e.instance_id.clone(),
                seed: e.seed,
                score: e.score,
                metric: e.metric,
                failure: e.failure.clone(),
                elapsed_secs: e.elapsed_secs,
                trace: e.trace.clone(),
            };
            writeln!(self.scores, "{}", serde_json::to_string(&line)?)?;
        }
        Ok(())
    }

    fn event(&mut self, generation: usize, event: &Event) -> io::Result<()> {
        writeln!(self.events, "{}", serde_json::to_string(&EventLine { generation, event })?)
    }

    fn generation_done(&mut self, generation: usize, population: &[OperatorCandidate]) -> io::Result<()> {
        let best = population.first().map(OperatorCandidate::score).unwrap_or(f64::NAN);
        writeln!(self.convergence, "{generation},{best}")
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

/// Every operator meta file of a run, in generation and slot order.
pub fn load_operator_metas(run_dir: &Path) -> io::Result<Vec<(PathBuf, OperatorMeta)>> {
    let mut metas = Vec::new();
    let mut gen_dirs: Vec<PathBuf> = fs::read_dir(run_dir.join("operators"))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    gen_dirs.sort_by_key(|p| natural_key(p));
    for gen_dir in gen_dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(&gen_dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
            .collect();
        files.sort_by_key(|p| natural_key(p));
        for f in files {
            let meta: OperatorMeta = serde_json::from_str(&fs::read_to_string(&f)?)
                .map_err(|e| invalid(format!("{}: {e}", f.display())))?;
            metas.push((f, meta));
        }
    }
    Ok(metas)
}

/// Orders `op_9` before `op_10`.
fn natural_key(path: &Path) -> (usize, String) {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    (name.len(), name)
}

pub fn load_score_lines(run_dir: &Path) -> io::Result<Vec<ScoreLine>> {
    let text = fs::read_to_string(run_dir.join("scores.jsonl"))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| invalid(format!("scores.jsonl line {}: {e}", i + 1))))
        .collect()
}

/// Files derived from a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub best_id: String,
    /// `generation,best_score`, one row per generation starting at 0.
    pub convergence_csv: String,
    /// Per-instance `generation,metric` traces of the best operator.
    pub instance_csvs: BTreeMap<String, String>,
}

pub fn build_report(run_dir: &Path) -> io::Result<Report> {
    let metas = load_operator_metas(run_dir)?;
    let scored: Vec<(usize, &OperatorMeta, f64)> = metas
        .iter()
        .filter_map(|(_, m)| Some((m.scored_generation?, m, m.score_report.as_ref()?.aggregate)))
        .collect();
    if scored.is_empty() {
        return Err(invalid(format!("{} has no scored operators", run_dir.display())));
    }
    let last = scored.iter().map(|(g, _, _)| *g).max().expect("nonempty");
    let mut convergence_csv = format!("{CONVERGENCE_HEADER}\n");
    for generation in 0..=last {
        let best = scored
            .iter()
            .filter(|(g, _, _)| *g <= generation)
            .map(|(_, _, s)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        convergence_csv.push_str(&format!("{generation},{best}\n"));
    }
    let best = scored
        .iter()
        .fold(scored[0], |best, c| if c.2 > best.2 || (c.2 == best.2 && c.0 < best.0) { *c } else { best });
    let best_id = best.1.id.clone();
    let mut instance_csvs = BTreeMap::new();
    for line in load_score_lines(run_dir)?.into_iter().filter(|l| l.artifact_id == best_id) {
        let mut csv = String::from("generation,metric\n");
        for (g, v) in line.trace.iter().enumerate() {
            csv.push_str(&format!("{g},{v}\n"));
        }
        instance_csvs.insert(line.instance_id, csv);
    }
    Ok(Report {
        best_id,
        convergence_csv,
        instance_csvs,
    })
}

/// Writes `convergence.csv` and `instance_<id>.csv` files into `out_dir`.
pub fn write_report(run_dir: &Path, out_dir: &Path) -> io::Result<Report> {
    let report = build_report(run_dir)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("convergence.csv"), &report.convergence_csv)?;
    for (id, csv) in &report.instance_csvs {
        fs::write(out_dir.join(format!("instance_{id}.csv")), csv)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{toy_suite, Category};

    fn candidate(id: &str, generation: usize, score: f64) -> OperatorCandidate {
        OperatorCandidate {
            artifact: OperatorArtifact {
                id: id.into(),
                source: format!("def next_generation():  # {id}\n    pass\n"),
                origin: Origin::Init,
                parent_ids: vec![],
                created_generation: generation,
            },
            report: ScoreReport::new(BTreeMap::from([("mokp-toy".to_string(), score)])).unwrap(),
            generation_admitted: generation,
        }
    }

    fn evaluation(score: f64) -> Evaluation {
        Evaluation {
            instance_id: "mokp-toy".into(),
            seed: 9,
            score,
            metric: Some(1.0 - score),
            trace: vec![0.9, 1.0 - score],
            front: None,
            failure: None,
            elapsed_secs: 0.1,
        }
    }

    #[test]
    fn layout_and_report() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let suite = toy_suite(Category::Mokp);
        let mut rec = RunRecorder::create(&dir, &serde_json::json!({"n_ev": 2}), &suite).unwrap();
        let a = candidate("op-0001", 0, 0.25);
        let b = candidate("op-0002", 0, 0.5);
        rec.artifact(0, &a.artifact).unwrap();
        rec.scored(&a, &[evaluation(0.25)]).unwrap();
        rec.scored(&b, &[evaluation(0.5)]).unwrap();
        rec.generation_done(0, &[b.clone(), a.clone()]).unwrap();
        let c = candidate("op-0003", 1, 0.125);
        rec.scored(&c, &[evaluation(0.125)]).unwrap();
        rec.event(1, &Event::Admitted { artifact_id: "op-0003".into(), rank: None }).unwrap();
        rec.generation_done(1, &[b, a]).unwrap();

        assert!(dir.join("operators/gen_00/op_02.src").exists());
        assert!(dir.join("operators/gen_01/op_01.meta.json").exists());
        assert!(dir.join("suite/suite.json").exists());
        let convergence = fs::read_to_string(dir.join("convergence.csv")).unwrap();
        assert_eq!(convergence, "generation,best_score\n0,0.5\n1,0.5\n");
        let events = fs::read_to_string(dir.join("events.jsonl")).unwrap();
        assert_eq!(events.trim(), r#"{"generation":1,"event":"admitted","artifact_id":"op-0003","rank":null}"#);

        let report = build_report(&dir).unwrap();
        assert_eq!(report.convergence_csv, convergence);
        assert_eq!(report.best_id, "op-0002");
        assert_eq!(report.instance_csvs["mokp-toy"], "generation,metric\n0,0.9\n1,0.5\n");
        assert_eq!(load_score_lines(&dir).unwrap().len(), 3);
        assert!(RunRecorder::create(&dir, &1, &suite).is_err());
    }
}
