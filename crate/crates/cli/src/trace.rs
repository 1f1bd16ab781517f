//! JSON run traces. Field order is fixed by the struct layout and no timing
//! is recorded, so equal runs produce byte-identical files.

use serde::Serialize;

use ncas_core::{SegmentationResult, SolverConfig};

const SCHEMA: u32 = 1;

#[derive(Serialize)]
pub struct Params {
    lambda: f64,
    eta: f64,
    epsilon: f64,
    h0: f64,
    tau: f64,
    inner_iters: usize,
    outer_iters: usize,
    tol: f64,
    seed: u64,
    /// Graph size parameter: window radius for images, k for point sets.
    graph: GraphParam,
}

#[derive(Serialize)]
struct GraphParam {
    kind: &'static str,
    value: usize,
}

impl Params {
    pub fn from_config(c: &SolverConfig, graph_kind: &'static str, graph_value: usize) -> Self {
        Self {
            lambda: c.lambda,
            eta: c.eta,
            epsilon: c.epsilon_penalty,
            h0: c.h0,
            tau: c.tau,
            inner_iters: c.inner_iters,
            outer_iters: c.outer_iters,
            tol: c.outer_tol,
            seed: c.seed,
            graph: GraphParam {
                kind: graph_kind,
                value: graph_value,
            },
        }
    }
}

#[derive(Serialize)]
pub struct Outer {
    iteration: usize,
    energy: f64,
    h: f64,
    change: Option<f64>,
}

#[derive(Serialize)]
pub struct Trace<'a> {
    schema: u32,
    command: &'a str,
    model: &'a str,
    params: Params,
    /// Per outer iteration; empty for the fixed-similarity baselines.
    outer: Vec<Outer>,
    /// Dinkelbach ratios of the last inner loop.
    mu: &'a [f64],
    iterations: usize,
    converged: Option<bool>,
    step: Option<f64>,
    final_energy: Option<f64>,
    final_h: f64,
    eigenvalue: Option<f64>,
    pub errors: Option<usize>,
}

impl<'a> Trace<'a> {
    pub fn new(
        command: &'a str,
        model: &'a str,
        params: Params,
        run: Option<&'a SegmentationResult>,
        eigenvalue: Option<f64>,
        h: f64,
    ) -> Self {
        let outer = run
            .map(|r| {
                r.energy_trace
                    .iter()
                    .zip(&r.h_trace)
                    .enumerate()
                    .map(|(i, (&energy, &h))| Outer {
                        iteration: i + 1,
                        energy,
                        h,
                        change: r.change_trace.get(i).copied(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self {
            schema: SCHEMA,
            command,
            model,
            params,
            outer,
            mu: run.map_or(&[], |r| r.mu_trace.as_slice()),
            iterations: run.map_or(0, |r| r.iterations_run),
            converged: run.map(|r| r.converged),
            step: run.map(|r| r.step),
            final_energy: run.and_then(|r| r.energy_trace.last().copied()),
            final_h: h,
            eigenvalue,
            errors: None,
        }
    }
}
