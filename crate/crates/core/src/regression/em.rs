//! Model-agnostic EM driver: iteration loop, convergence rule, collapsed
//! component guard and restart selection.

use rayon::prelude::*;

use super::fit::{FitConfig, InitStrategy};
use crate::error::{Error, Result};

/// Share of the sample below which a component counts as collapsed.
const DEGENERATE_SHARE: f64 = 1e-3;
/// Consecutive collapsed iterations before a component is frozen.
const DEGENERATE_PATIENCE: usize = 3;

/// Responsibilities and observed log-likelihood for weighted rows.
pub(crate) struct Posterior {
    /// Row-major `n × m`.
    pub resp: Vec<f64>,
    pub loglik: f64,
}

pub(crate) trait MixtureOps: Sync {
    type Params: Clone + Send;

    /// Number of responsibility columns.
    fn width(&self) -> usize;
    /// Total observation weight.
    fn total(&self) -> f64;
    /// Whether column `j` is watched by the collapsed-component guard.
    fn guarded(&self, j: usize) -> bool;
    fn posterior(&self, params: &Self::Params) -> Posterior;
    fn masses(&self, resp: &[f64]) -> Vec<f64>;
    /// Columns flagged in `frozen` keep their component parameters.
    fn m_step(&self, resp: &[f64], params: &Self::Params, frozen: &[bool]) -> Result<Self::Params>;
    fn complete_loglik(&self, resp: &[f64], params: &Self::Params) -> f64;
    /// Starting responsibilities and parameters for one run.
    fn start(&self, strategy: InitStrategy, seed: u64) -> Result<(Vec<f64>, Self::Params)>;
}

pub(crate) struct EmRun<P> {
    pub params: P,
    pub resp: Vec<f64>,
    pub loglik: f64,
    pub trace: Vec<f64>,
    pub complete_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Columns frozen during the run or collapsed at its end.
    pub degenerate: Vec<bool>,
    pub seed: u64,
}

pub(crate) fn run_em<O: MixtureOps>(
    ops: &O,
    strategy: InitStrategy,
    seed: u64,
    cfg: &FitConfig,
) -> Result<EmRun<O::Params>> {
    let m = ops.width();
    let n_total = ops.total();
    let (init, start) = ops.start(strategy, seed)?;
    let mut frozen = vec![false; m];
    let mut params = ops.m_step(&init, &start, &frozen)?;
    let mut post = ops.posterior(&params);
    let mut trace = vec![post.loglik];
    let mut complete_trace = Vec::new();
    let mut low = vec![0usize; m];
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=cfg.max_iter {
        let next = ops.m_step(&post.resp, &params, &frozen)?;
        complete_trace.push(ops.complete_loglik(&post.resp, &next));
        let next_post = ops.posterior(&next);
        let change = next_post.loglik - post.loglik;
        params = next;
        post = next_post;
        trace.push(post.loglik);
        iterations = iter;

        let mass = ops.masses(&post.resp);
        for j in (0..m).filter(|&j| ops.guarded(j)) {
            if mass[j] < DEGENERATE_SHARE * n_total {
                low[j] += 1;
                if low[j] >= DEGENERATE_PATIENCE && !frozen[j] {
                    frozen[j] = true;
                    log::debug!("component {j} collapsed at iteration {iter}; frozen");
                }
            } else {
                low[j] = 0;
            }
        }

        if change.abs() < cfg.loglik_tol {
            converged = true;
            break;
        }
    }
    let mass = ops.masses(&post.resp);
    for j in (0..m).filter(|&j| ops.guarded(j)) {
        if mass[j] < DEGENERATE_SHARE * n_total {
            frozen[j] = true;
        }
    }
    Ok(EmRun {
        params,
        resp: post.resp,
        loglik: post.loglik,
        trace,
        complete_trace,
        converged,
        iterations,
        degenerate: frozen,
        seed,
    })
}

/// Runs the first EM pass with the configured initialisation and
/// `n_restarts` more from random responsibilities (seeds `seed + r`), and
/// keeps the highest final log-likelihood; ties go to the lowest seed.
pub(crate) fn best_run<O: MixtureOps>(ops: &O, cfg: &FitConfig) -> Result<(EmRun<O::Params>, usize)> {
    let runs: Vec<(u64, InitStrategy)> = (0..=cfg.n_restarts as u64)
        .map(|r| {
            let strategy =
                if r == 0 { cfg.init_strategy } else { InitStrategy::RandomResponsibilities };
            (cfg.seed.wrapping_add(r), strategy)
        })
        .collect();
    let outcomes: Vec<Result<EmRun<O::Params>>> =
        runs.par_iter().map(|&(seed, strategy)| run_em(ops, strategy, seed, cfg)).collect();
    let n_runs = outcomes.len();
    let mut best: Option<EmRun<O::Params>> = None;
    let mut first_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(run) => {
                log::debug!("EM run seed {} loglik {:.6}", run.seed, run.loglik);
                if best.as_ref().is_none_or(|b| run.loglik > b.loglik) {
                    best = Some(run);
                }
            }
            Err(e) => {
                log::warn!("EM run failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(run) => {
            if !run.converged {
                log::warn!(
                    "EM stopped after {} iterations without meeting the tolerance",
                    run.iterations
                );
            }
            Ok((run, n_runs))
        }
        None => Err(first_err.unwrap_or_else(|| Error::NonConvergence("no EM run finished".into()))),
    }
}

/// Reorders responsibility columns `offset..` by `perm` (`perm[new] = old`).
pub(crate) fn permute_columns(resp: &[f64], m: usize, offset: usize, perm: &[usize]) -> Vec<f64> {
    let mut out = resp.to_vec();
    for (row_in, row_out) in resp.chunks(m).zip(out.chunks_mut(m)) {
        for (new, &old) in perm.iter().enumerate() {
            row_out[offset + new] = row_in[offset + old];
        }
    }
    out
}

/// Expands pattern-level responsibilities back to one row per observation.
pub(crate) fn expand_rows(resp: &[f64], m: usize, map: &[usize]) -> Vec<Vec<f64>> {
    map.iter().map(|&s| resp[s * m..(s + 1) * m].to_vec()).collect()
}
