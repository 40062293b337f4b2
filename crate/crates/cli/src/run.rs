//! Executes one experiment and writes its outputs.
//!
//! Every mode writes `summary.csv`. Solving modes also write `mtc.csv`
//! (the per-iteration report) and the factors under `factors/`; `forecast`
//! writes `w_future.txt`.

use std::fmt::Write as _;
use std::path::Path;

use tenfill::multires::derive_seed;
use tenfill::synth::PredictionTarget;
use tenfill::{
    cpc_als, evaluate_prediction, generate_synthetic, gp_forecast, mtc_solve_tracked, oracle_cpd, pof_factors,
    sample_mask, Aggregation, CoarseTensor, CompletionProblem, DenseTensor3, FactorSet, Mode, ModeSpec,
};

use crate::config::{ExperimentConfig, RunMode};
use crate::error::{CliError, Result};
use crate::io::{
    format_matrix, parse_aggregation_file, parse_coo_file, parse_matrix_file, parse_tensor_file, write_text,
};

/// One scored row per method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub rows: Vec<(String, Option<f64>)>,
}

impl Summary {
    pub const HEADER: &'static str = "method,pof";

    fn push(&mut self, method: &str, pof: Option<f64>) {
        self.rows.push((method.to_string(), pof));
    }

    pub fn get(&self, method: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == method).and_then(|r| r.1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::HEADER);
        for (m, p) in &self.rows {
            match p {
                Some(p) => writeln!(out, "{m},{p:?}").unwrap(),
                None => writeln!(out, "{m},").unwrap(),
            }
        }
        out
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Summary> {
    std::fs::create_dir_all(&cfg.output).map_err(|source| CliError::Io {
        path: cfg.output.clone(),
        source,
    })?;
    let summary = match cfg.mode {
        RunMode::Synth => run_synth(cfg)?,
        RunMode::Complete => run_complete(cfg)?,
        RunMode::Eval => run_eval(cfg)?,
        RunMode::Forecast => run_forecast(cfg)?,
    };
    write_text(&cfg.output.join("summary.csv"), &summary.to_csv())?;
    Ok(summary)
}

fn run_synth(cfg: &ExperimentConfig) -> Result<Summary> {
    let s = &cfg.synth;
    let seed = cfg.solver.seed;
    let inst = generate_synthetic(cfg.solver.rank, s.size, s.coarse_size, seed)?;
    let obs = sample_mask(&inst.truth, s.fraction, derive_seed(seed, 0, 200))?;
    let p = inst.problem(obs, s.views[0], s.views[1])?;
    solve_and_report(cfg, &p, Some(&inst.truth))
}

fn run_complete(cfg: &ExperimentConfig) -> Result<Summary> {
    let obs_path = cfg.observations.as_ref().expect("checked by config");
    let obs = parse_coo_file(obs_path)?;
    let shape = obs.shape();
    let mut modes = [0, 1, 2].map(|m| ModeSpec::single(cfg.kinds[m], shape[m]));
    let mut coarse = Vec::new();
    for mode in Mode::ALL {
        let Some(input) = &cfg.coarse[mode.index()] else {
            continue;
        };
        let aggregation = match (&input.aggregation, input.size) {
            (Some(path), _) => Aggregation::Known(parse_aggregation_file(path)?),
            (None, Some(coarse_size)) => Aggregation::Unknown { coarse_size },
            (None, None) => unreachable!("checked by config"),
        };
        modes[mode.index()] = ModeSpec::aggregated(cfg.kinds[mode.index()], shape[mode.index()], aggregation);
        coarse.push(CoarseTensor {
            mode,
            tensor: parse_tensor_file(&input.tensor)?,
            weight: input.weight,
        });
    }
    let p = CompletionProblem::new(modes, obs, coarse)?;
    let truth = cfg.truth.as_deref().map(parse_tensor_file).transpose()?;
    solve_and_report(cfg, &p, truth.as_ref())
}

fn solve_and_report(cfg: &ExperimentConfig, p: &CompletionProblem, truth: Option<&DenseTensor3>) -> Result<Summary> {
    let (fs, report) = mtc_solve_tracked(p, &cfg.solver, truth)?;
    write_text(&cfg.output.join("mtc.csv"), &report.to_csv())?;
    write_factors(&cfg.output.join("factors"), &fs)?;
    let mut summary = Summary::default();
    summary.push("mtc", truth.map(|t| pof_factors(t, &fs)).transpose()?);
    if cfg.run_oracle {
        let t = truth.expect("checked by config");
        let oracle = oracle_cpd(t, cfg.solver.rank, &cfg.solver)?;
        summary.push("oracle_cpd", Some(pof_factors(t, &oracle)?));
    }
    if cfg.run_cpc {
        let cpc = cpc_als(p.observations(), cfg.solver.rank, &cfg.solver)?;
        summary.push("cpc_als", truth.map(|t| pof_factors(t, &cpc)).transpose()?);
    }
    Ok(summary)
}

fn write_factors(dir: &Path, fs: &FactorSet) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (m, name) in ["U", "V", "W"].iter().enumerate() {
        write_text(&dir.join(format!("{name}.txt")), &format_matrix(&fs.fine[m]))?;
    }
    for mode in Mode::ALL {
        if let Some(q) = fs.coarse_factor(mode) {
            write_text(&dir.join(format!("Q{}.txt", mode.number())), &format_matrix(q))?;
        }
    }
    Ok(())
}

fn load_factors(cfg: &ExperimentConfig) -> Result<FactorSet> {
    let [u, v, w] = cfg
        .factors
        .clone()
        .map(|p| parse_matrix_file(&p.expect("checked by config")));
    Ok(FactorSet::new(u?, v?, w?)?)
}

fn run_eval(cfg: &ExperimentConfig) -> Result<Summary> {
    let fs = load_factors(cfg)?;
    let truth = parse_tensor_file(cfg.truth.as_ref().expect("checked by config"))?;
    let mut summary = Summary::default();
    summary.push("eval", Some(pof_factors(&truth, &fs)?));
    Ok(summary)
}

fn run_forecast(cfg: &ExperimentConfig) -> Result<Summary> {
    let fs = load_factors(cfg)?;
    let w_future = gp_forecast(fs.w(), cfg.horizon, cfg.gp)?;
    write_text(&cfg.output.join("w_future.txt"), &format_matrix(&w_future))?;
    let mut summary = Summary::default();
    if let Some(path) = &cfg.future {
        let future = parse_tensor_file(path)?;
        for (name, target) in [
            ("daily", PredictionTarget::Daily),
            ("cumulative", PredictionTarget::Cumulative),
        ] {
            summary.push(
                name,
                Some(evaluate_prediction(&future, fs.u(), fs.v(), &w_future, target)?),
            );
        }
    }
    Ok(summary)
}
