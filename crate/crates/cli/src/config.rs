use std::path::{Path, PathBuf};

use opforge::evolution::EvolutionConfig;
use opforge::llm::HttpBackendConfig;
use opforge::problems::{make_suite, SuiteRole, SuiteSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Worker launched when a config does not name one.
pub fn default_worker_command() -> Vec<String> {
    vec!["python3".into(), "-m".into(), "opforge_worker".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Directory of the run record; `--out` overrides it.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub suite: SuiteConfig,
    pub backend: BackendConfig,
    #[serde(default)]
    pub worker: WorkerConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// A directory written by `gen-instances`; when absent the validation
    /// suite of the run category is generated from `seed`.
    pub dir: Option<PathBuf>,
    pub seed: u64,
    /// Keep only the first `limit` instances.
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    /// Scripted responses, one subdirectory per prompt kind.
    Mock { dir: PathBuf },
    Http {
        #[serde(flatten)]
        http: HttpBackendConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkerConfig {
    pub command: Vec<String>,
}

impl Default for WorkerConfig {
    fn default() -> Self {
        WorkerConfig {
            command: default_worker_command(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|m| CliError::config(format!("{}:{m}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = config.suite.dir.as_mut() {
            resolve(d);
        }
        if let Some(d) = config.out_dir.as_mut() {
            resolve(d);
        }
        if let BackendConfig::Mock { dir } = &mut config.backend {
            resolve(dir);
        }
        Ok(config)
    }

    /// Errors read `line:column: message`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "{}: unsupported schema_version {}, expected {SCHEMA_VERSION}",
                line_of(text, "schema_version"),
                config.schema_version
            ));
        }
        config
            .evolution
            .validate()
            .map_err(|e| format!("{}: {e}", line_of(text, "evolution")))?;
        if config.worker.command.is_empty() {
            return Err(format!("{}: worker.command must not be empty", line_of(text, "worker")));
        }
        if let BackendConfig::Http { http } = &config.backend {
            if (http.temperature - config.evolution.temperature).abs() > 1e-12 {
                return Err(format!(
                    "{}: backend temperature {} differs from evolution.temperature {}",
                    line_of(text, "backend"),
                    http.temperature,
                    config.evolution.temperature
                ));
            }
        }
        Ok(config)
    }

    pub fn build_suite(&self) -> Result<SuiteSpec, CliError> {
        let suite = match &self.suite.dir {
            Some(dir) => SuiteSpec::load_dir(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?,
            None => make_suite(
                self.evolution.category,
                SuiteRole::Validation,
                &mut ChaCha8Rng::seed_from_u64(self.suite.seed),
            )
            .map_err(|e| CliError::config(e.to_string()))?,
        };
        let suite = match self.suite.limit {
            Some(n) => suite.truncated(n),
            None => suite,
        };
        if suite.is_empty() {
            return Err(CliError::config("the suite has no instances"));
        }
        if suite.category != self.evolution.category {
            return Err(CliError::config(format!(
                "suite category {} does not match evolution.category {}",
                suite.category, self.evolution.category
            )));
        }
        Ok(suite)
    }
}

/// `line:column` of the first occurrence of `"key"`, for semantic errors.
fn line_of(text: &str, key: &str) -> String {
    let needle = format!("\"{key}\"");
    text.lines()
        .enumerate()
        .find_map(|(i, l)| l.find(&needle).map(|c| format!("{}:{}", i + 1, c + 1)))
        .unwrap_or_else(|| "1:1".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use opforge::problems::Category;

    const MINIMAL: &str = r#"{
  "schema_version": 1,
  "backend": {"kind": "mock", "dir": "fixtures"}
}"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.evolution, EvolutionConfig::default());
        assert_eq!(c.worker.command, default_worker_command());
        assert_eq!(c.suite, SuiteConfig::default());
    }

    #[test]
    fn http_backend_fields_are_flattened() {
        let text = r#"{"schema_version": 1, "backend": {"kind": "http", "endpoint": "http://x", "model": "m"}}"#;
        let c = RunConfig::parse(text).unwrap();
        match c.backend {
            BackendConfig::Http { http } => {
                assert_eq!(http.endpoint, "http://x");
                assert_eq!(http.timeout_secs, 120);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = RunConfig::parse("{\n  \"schema_version\": 1,\n  \"evolution\": {\"n_evv\": 3},\n  \"backend\": {\"kind\": \"mock\", \"dir\": \"d\"}\n}").unwrap_err();
        assert!(err.starts_with("3:"), "{err}");
        assert!(err.contains("n_evv"));
        let err = RunConfig::parse(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 7")).unwrap_err();
        assert!(err.starts_with("2:3:"), "{err}");
        let err = RunConfig::parse("{\n \"schema_version\": 1,\n \"evolution\": {\"g_ev\": 0},\n \"backend\": {\"kind\": \"mock\", \"dir\": \"d\"}}").unwrap_err();
        assert!(err.starts_with("3:") && err.contains("g_ev"), "{err}");
        assert!(RunConfig::parse("{\"backend\": {\"kind\": \"mock\", \"dir\": \"d\"}}").unwrap_err().contains("schema_version"));
    }

    #[test]
    fn generated_suite_respects_limit_and_category() {
        let mut c = RunConfig::parse(MINIMAL).unwrap();
        c.evolution.category = Category::Mokp;
        c.suite.limit = Some(2);
        let suite = c.build_suite().unwrap();
        assert_eq!(suite.len(), 2);
        assert_eq!(suite.category, Category::Mokp);
    }
}
