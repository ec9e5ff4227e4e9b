//! Optional TOML configuration file.
//!
//! Every CLI default can be supplied from a config file; explicit CLI flags
//! still win. Precedence is flag > file > built-in default, resolved
//! per-field with [`pick`]. Unknown keys are rejected so typos surface
//! instead of silently falling back to defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hardthresh::solvers::SolverConfig;
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // recovery benchmark
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub s_min: Option<usize>,
    pub s_max: Option<usize>,
    pub s_step: Option<usize>,
    /// Explicit sparsity levels; overrides the range keys.
    pub levels: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub algs: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    // scaling benchmark
    pub sizes: Option<Vec<usize>>,
    // execution
    pub workers: Option<usize>,
    pub solver: Option<SolverOverrides>,
}

/// Partial solver settings; unset fields keep the library defaults.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub max_iters: Option<usize>,
    pub residual_tol: Option<f64>,
    pub trace_window: Option<usize>,
    pub trace_std_tol: Option<f64>,
    pub ls_alpha: Option<f64>,
    pub ls_trials: Option<usize>,
    pub ls_beta: Option<f64>,
    pub restart_gamma: Option<f64>,
    pub fixed_point_tol: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.residual_tol {
            cfg.residual_tol = v;
        }
        if let Some(v) = self.trace_window {
            cfg.trace_window = v;
        }
        if let Some(v) = self.trace_std_tol {
            cfg.trace_std_tol = v;
        }
        if let Some(v) = self.ls_alpha {
            cfg.line_search.alpha = v;
        }
        if let Some(v) = self.ls_trials {
            cfg.line_search.trials = v;
        }
        if let Some(v) = self.ls_beta {
            cfg.line_search.beta = v;
        }
        if let Some(v) = self.restart_gamma {
            cfg.restart_gamma = v;
        }
        if let Some(v) = self.fixed_point_tol {
            cfg.fixed_point_tol = v;
        }
    }
}

/// Loads the file when a path is given; no path means an empty config.
pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config file {}", p.display()))
        }
    }
}

/// Flag > file > default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_path_gives_the_empty_config() {
        assert_eq!(load(None).unwrap(), FileConfig::default());
    }

    #[test]
    fn full_file_round_trips() {
        let text = r#"
m = 32
n = 128
s_min = 2
s_max = 10
s_step = 2
trials = 25
algs = ["gpnp-l", "mfista"]
seed = 9
out = "runs/exp1"
sizes = [100, 200]
workers = 2

[solver]
max_iters = 500
ls_trials = 4
"#;
        let cfg: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.m, Some(32));
        assert_eq!(cfg.algs.as_deref(), Some(&["gpnp-l".to_string(), "mfista".to_string()][..]));
        assert_eq!(cfg.sizes.as_deref(), Some(&[100, 200][..]));
        let mut solver = SolverConfig::default();
        cfg.solver.unwrap().apply(&mut solver);
        assert_eq!(solver.max_iters, 500);
        assert_eq!(solver.line_search.trials, 4);
        assert_eq!(solver.residual_tol, SolverConfig::default().residual_tol);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("mm = 3").is_err());
        assert!(toml::from_str::<FileConfig>("[solver]\nmaxiters = 3").is_err());
    }

    #[test]
    fn pick_prefers_flag_then_file() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick::<usize>(None, None, 3), 3);
    }
}
