//! Flat `key = value` experiment configuration.
//!
//! Relative paths are resolved against the directory holding the config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tenfill::{CoarseView, GpParams, ModeKind, SolverConfig};

use crate::error::{CliError, Result};
use crate::io::read_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Generate a synthetic instance and complete it.
    Synth,
    /// Complete a problem read from files.
    Complete,
    /// Score stored factors against a ground-truth tensor.
    Eval,
    /// Extrapolate a stored time factor.
    Forecast,
}

/// Synthetic instance settings for [`RunMode::Synth`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub size: usize,
    pub coarse_size: usize,
    pub fraction: f64,
    pub views: [CoarseView; 2],
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            size: 125,
            coarse_size: 12,
            fraction: 0.03,
            views: [CoarseView::Unknown, CoarseView::Known],
        }
    }
}

/// One coarse tensor read from files. Without an aggregation file the
/// aggregation is unknown and `size` gives its coarse size.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseInput {
    pub tensor: PathBuf,
    pub aggregation: Option<PathBuf>,
    pub size: Option<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub solver: SolverConfig,
    /// Directory receiving every output file.
    pub output: PathBuf,
    pub synth: SynthSettings,
    pub observations: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub kinds: [ModeKind; 3],
    pub coarse: [Option<CoarseInput>; 3],
    /// U, V, W files for `eval` and `forecast`.
    pub factors: [Option<PathBuf>; 3],
    pub horizon: usize,
    pub gp: GpParams,
    /// Future tensor the forecast is scored against.
    pub future: Option<PathBuf>,
    pub run_oracle: bool,
    pub run_cpc: bool,
}

impl ExperimentConfig {
    pub fn new(mode: RunMode, output: PathBuf) -> Self {
        ExperimentConfig {
            mode,
            solver: SolverConfig {
                seed: 7,
                ..SolverConfig::default()
            },
            output,
            synth: SynthSettings::default(),
            observations: None,
            truth: None,
            kinds: [ModeKind::Categorical, ModeKind::Continuous, ModeKind::Continuous],
            coarse: [None, None, None],
            factors: [None, None, None],
            horizon: 7,
            gp: GpParams::default(),
            future: None,
            run_oracle: false,
            run_cpc: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&read_text(path)?, base)
    }

    /// Parses config text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut keys = Keys::read(text)?;
        let mode = match keys.take("mode").as_deref() {
            Some("synth") => RunMode::Synth,
            Some("complete") => RunMode::Complete,
            Some("eval") => RunMode::Eval,
            Some("forecast") => RunMode::Forecast,
            Some(other) => return Err(keys.bad("mode", format!("unknown mode `{other}`"))),
            None => return Err(CliError::Config("missing key `mode`".into())),
        };
        let output = keys.path("output", base).unwrap_or_else(|| base.join("out"));
        let mut cfg = ExperimentConfig::new(mode, output);

        let s = &mut cfg.solver;
        keys.set("rank", &mut s.rank)?;
        keys.set("coarse_level_iters", &mut s.coarse_level_iters)?;
        keys.set("fine_level_iters", &mut s.fine_level_iters)?;
        keys.set("stage1_iters", &mut s.stage1_iters)?;
        keys.set("jacobi_rounds", &mut s.jacobi_rounds)?;
        keys.set("jacobi_weight", &mut s.jacobi_weight)?;
        keys.set("diag_epsilon", &mut s.diag_epsilon)?;
        keys.set("lambda_decay", &mut s.lambda_decay)?;
        keys.set("tolerance", &mut s.tolerance)?;
        keys.set("min_mode_size", &mut s.min_mode_size)?;
        keys.set("seed", &mut s.seed)?;
        keys.set("record_timing", &mut s.record_timing)?;
        if let Some(v) = keys.take("max_depth") {
            s.max_depth = match v.as_str() {
                "none" => None,
                n => Some(
                    n.parse()
                        .map_err(|_| keys.bad("max_depth", format!("invalid value `{n}`")))?,
                ),
            };
        }
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;

        keys.set("synth.size", &mut cfg.synth.size)?;
        keys.set("synth.coarse_size", &mut cfg.synth.coarse_size)?;
        keys.set("synth.fraction", &mut cfg.synth.fraction)?;
        for (m, view) in cfg.synth.views.iter_mut().enumerate() {
            let key = format!("synth.coarse{}", m + 1);
            if let Some(v) = keys.take(&key) {
                *view = match v.as_str() {
                    "omit" => CoarseView::Omit,
                    "unknown" => CoarseView::Unknown,
                    "known" => CoarseView::Known,
                    other => return Err(keys.bad(&key, format!("expected omit, unknown or known, found `{other}`"))),
                };
            }
        }

        cfg.observations = keys.path("observations", base);
        cfg.truth = keys.path("truth", base);
        cfg.future = keys.path("future", base);
        for m in 0..3 {
            let key = format!("mode{}.kind", m + 1);
            if let Some(v) = keys.take(&key) {
                cfg.kinds[m] = match v.as_str() {
                    "categorical" => ModeKind::Categorical,
                    "continuous" => ModeKind::Continuous,
                    other => return Err(keys.bad(&key, format!("expected categorical or continuous, found `{other}`"))),
                };
            }
            let prefix = format!("coarse{}", m + 1);
            let tensor = keys.path(&format!("{prefix}.tensor"), base);
            let aggregation = keys.path(&format!("{prefix}.aggregation"), base);
            let mut size = None;
            let mut weight = 1.0;
            keys.set_opt(&format!("{prefix}.size"), &mut size)?;
            keys.set(&format!("{prefix}.weight"), &mut weight)?;
            cfg.coarse[m] = match tensor {
                Some(tensor) => {
                    if aggregation.is_none() && size.is_none() {
                        return Err(CliError::Config(format!(
                            "{prefix} needs `{prefix}.aggregation` or `{prefix}.size`"
                        )));
                    }
                    Some(CoarseInput {
                        tensor,
                        aggregation,
                        size,
                        weight,
                    })
                }
                None if aggregation.is_some() || size.is_some() => {
                    return Err(CliError::Config(format!("{prefix} lacks `{prefix}.tensor`")))
                }
                None => None,
            };
        }
        for (m, name) in ["u", "v", "w"].iter().enumerate() {
            cfg.factors[m] = keys.path(&format!("factors.{name}"), base);
        }
        keys.set("horizon", &mut cfg.horizon)?;
        keys.set("gp.length_scale", &mut cfg.gp.length_scale)?;
        keys.set("gp.noise", &mut cfg.gp.noise)?;
        keys.set("baseline.oracle_cpd", &mut cfg.run_oracle)?;
        keys.set("baseline.cpc_als", &mut cfg.run_cpc)?;
        keys.finish()?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Checks that the keys each mode needs are present.
    fn check(&self) -> Result<()> {
        let need = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!("mode {:?} needs `{key}`", self.mode)))
            }
        };
        match self.mode {
            RunMode::Synth => {
                if !(self.synth.fraction > 0.0 && self.synth.fraction <= 1.0) {
                    return Err(CliError::Config(format!(
                        "synth.fraction {} outside (0, 1]",
                        self.synth.fraction
                    )));
                }
                Ok(())
            }
            RunMode::Complete => {
                need(self.observations.is_some(), "observations")?;
                need(!self.run_oracle || self.truth.is_some(), "truth")
            }
            RunMode::Eval => {
                need(self.truth.is_some(), "truth")?;
                need(
                    self.factors.iter().all(Option::is_some),
                    "factors.u, factors.v, factors.w",
                )
            }
            RunMode::Forecast => {
                need(
                    self.factors.iter().all(Option::is_some),
                    "factors.u, factors.v, factors.w",
                )?;
                need(self.horizon > 0, "horizon > 0")
            }
        }
    }
}

/// Remaining keys with the line each came from.
struct Keys(BTreeMap<String, (usize, String)>);

impl Keys {
    fn read(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if let Some((prev, _)) = map.get(&k) {
                return Err(CliError::Config(format!(
                    "line {}: key `{k}` repeated, first on line {prev}",
                    i + 1
                )));
            }
            map.insert(k, (i + 1, v));
        }
        Ok(Keys(map))
    }

    fn line(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.0)
    }

    fn bad(&self, key: &str, msg: String) -> CliError {
        CliError::Config(format!("line {}: {key}: {msg}", self.line(key)))
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key).map(|(_, v)| v)
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        let line = self.line(key);
        if let Some(v) = self.take(key) {
            *slot = v
                .parse()
                .map_err(|_| CliError::Config(format!("line {line}: {key}: invalid value `{v}`")))?;
        }
        Ok(())
    }

    fn set_opt<T: FromStr>(&mut self, key: &str, slot: &mut Option<T>) -> Result<()> {
        let line = self.line(key);
        if let Some(v) = self.take(key) {
            *slot = Some(
                v.parse()
                    .map_err(|_| CliError::Config(format!("line {line}: {key}: invalid value `{v}`")))?,
            );
        }
        Ok(())
    }

    fn path(&mut self, key: &str, base: &Path) -> Option<PathBuf> {
        self.take(key).map(|v| base.join(v))
    }

    fn finish(self) -> Result<()> {
        match self.0.into_iter().next() {
            Some((k, (line, _))) => Err(CliError::Config(format!("line {line}: unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_for_synth() {
        let cfg = ExperimentConfig::parse("mode = synth\n", Path::new("/x")).unwrap();
        assert_eq!(cfg.mode, RunMode::Synth);
        assert_eq!(cfg.solver.rank, 10);
        assert_eq!(cfg.solver.seed, 7);
        assert_eq!(cfg.synth, SynthSettings::default());
        assert_eq!(cfg.output, Path::new("/x/out"));
    }

    #[test]
    fn keys_are_applied() {
        let text = "# comment\nmode = complete\noutput = res\nobservations = obs.txt\nrank = 4\nmax_depth = 0\n\
                    coarse1.tensor = c1.txt\ncoarse1.size = 3\ncoarse2.tensor = /abs/c2.txt\n\
                    coarse2.aggregation = p2.txt\ncoarse2.weight = 0.5\nmode3.kind = categorical\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/d")).unwrap();
        assert_eq!(cfg.solver.rank, 4);
        assert_eq!(cfg.solver.max_depth, Some(0));
        assert_eq!(cfg.output, Path::new("/d/res"));
        let c1 = cfg.coarse[0].as_ref().unwrap();
        assert_eq!((c1.size, c1.aggregation.as_ref()), (Some(3), None));
        let c2 = cfg.coarse[1].as_ref().unwrap();
        assert_eq!(c2.tensor, Path::new("/abs/c2.txt"));
        assert_eq!(c2.weight, 0.5);
        assert_eq!(cfg.kinds[2], ModeKind::Categorical);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            ("rank = 3", "missing key `mode`"),
            ("mode = fly", "unknown mode"),
            ("mode = synth\nbogus = 1", "line 2: unknown key `bogus`"),
            ("mode = synth\nrank = x", "line 2: rank: invalid value"),
            ("mode = synth\nrank = 0", "rank must be positive"),
            ("mode = synth\nseed = 1\nseed = 2", "line 3: key `seed` repeated"),
            ("mode = synth\nnot a pair", "line 2: expected `key = value`"),
            ("mode = complete", "needs `observations`"),
            ("mode = complete\nobservations = o\ncoarse1.tensor = c", "coarse1 needs"),
            ("mode = eval\ntruth = t", "needs `factors.u"),
            ("mode = synth\nsynth.fraction = 0", "outside (0, 1]"),
        ];
        for (text, needle) in cases {
            let e = ExperimentConfig::parse(text, Path::new(".")).unwrap_err();
            assert!(e.to_string().contains(needle), "{text:?}: {e}");
        }
    }
}
