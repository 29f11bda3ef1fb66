//! Streaming log-barrier interior point method on the dual.
//!
//! The barrier objective is `f_η(y) = η·bᵀy − log det S(y)` with
//! `S(y) = Σ y_i A_i − C`. Its gradient is `g_j = η b_j − tr[S⁻¹ A_j]` and its
//! Hessian `H_ij = tr[S⁻¹ A_i S⁻¹ A_j]`. Each main-phase iteration grows `η` by
//! `1 + 1/√n`, then makes three passes over the constraints:
//!
//! 1. gradient (`tr[S⁻¹ A_j]` for every `j`),
//! 2. sketch (the Hessian estimate `H̃ = Q Qᵀ`, or the exact oracle),
//! 3. slack update (`S(y + αδ)`, repeated only when backtracking).
//!
//! On the central path `X = S⁻¹/η` is primal feasible with duality gap `n/η`,
//! which is the primal certificate returned by [`solve`].

use std::io::{self, Read, Seek, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, SdpError};
use crate::hessian::{self, HessianMatrix};
use crate::instance::{ConstraintStream, SdpInstance};
use crate::ledger::{Category, Lease, LedgerSnapshot, Scaling, SpaceLedger};
use crate::linalg::{self, SlackEigen, SlackFactors, SymMatrix};
use crate::sketch::{self, SketchSeed, SketchWorkspace};

/// Solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Target accuracy, in `(0, 0.01]`.
    pub eps: f64,
    /// Barrier parameter at which the initial point is centered.
    pub eta0: f64,
    /// Iteration budget constant: `T = ⌈c_t·√n·ln(n/eps)⌉`.
    pub c_t: f64,
    /// Hessian sketch accuracy.
    pub sketch_eps: f64,
    /// Hessian sketch failure probability; `None` means `min(1/n³, 0.05)`.
    pub sketch_delta: Option<f64>,
    /// Explicit sketch size, bypassing the formula.
    pub sketch_size: Option<usize>,
    /// Use the exact Hessian oracle instead of the sketch.
    pub exact_hessian: bool,
    pub rng_seed: u64,
    /// User bound on `‖X*‖`, echoed into reports.
    pub r_hint: Option<f64>,
    /// Overrides `T`.
    pub max_iters: Option<usize>,
    /// Draw a fresh sketch for every Newton system instead of one per run.
    pub resample_sketch: bool,
    /// Newton decrement at which the initial point counts as centered.
    pub center_tol: f64,
    /// Newton decrement targeted by the final re-centering at the last `η`.
    pub final_tol: f64,
    pub guard: StepGuard,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: 1e-3,
            eta0: 1.0,
            c_t: 40.0,
            sketch_eps: 0.01,
            sketch_delta: None,
            sketch_size: None,
            exact_hessian: false,
            rng_seed: 0,
            r_hint: None,
            max_iters: None,
            resample_sketch: false,
            center_tol: 1e-2,
            final_tol: 1e-10,
            guard: StepGuard::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SdpError::InvalidParameter(msg));
        if !(self.eps > 0.0 && self.eps <= 0.01) {
            return bad(format!("eps {} outside (0, 0.01]", self.eps));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 {} must be positive", self.eta0));
        }
        if !(self.c_t > 0.0 && self.c_t.is_finite()) {
            return bad(format!("c_t {} must be positive", self.c_t));
        }
        if !(self.center_tol > 0.0 && self.final_tol > 0.0) {
            return bad("decrement tolerances must be positive".into());
        }
        if self.sketch_size == Some(0) {
            return bad("sketch size must be at least 1".into());
        }
        if let Some(r) = self.r_hint {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("R hint {r} must be positive"));
            }
        }
        Ok(())
    }

    pub fn sketch_delta_for(&self, n: usize) -> f64 {
        self.sketch_delta
            .unwrap_or_else(|| (1.0 / (n as f64).powi(3)).min(0.05))
    }

    /// Main-phase iteration budget `T`.
    pub fn iteration_budget(&self, n: usize) -> usize {
        if let Some(t) = self.max_iters {
            return t;
        }
        let nf = n as f64;
        ((self.c_t * nf.sqrt() * (nf / self.eps).ln()).ceil() as usize).max(1)
    }

    /// Stop once `η ≥ 2n/eps`, i.e. the gap estimate `n/η` is at most `eps/2`.
    pub fn eta_target(&self, n: usize) -> f64 {
        2.0 * n as f64 / self.eps
    }
}

/// Backtracking safeguard for the slack update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepGuard {
    /// Sufficient-decrease constant for the barrier objective; `None` accepts
    /// the first positive definite trial.
    pub armijo: Option<f64>,
    /// Trial scales are `1, 1/2, …, 2^-max_halvings`.
    pub max_halvings: u32,
}

impl Default for StepGuard {
    fn default() -> Self {
        StepGuard {
            armijo: Some(1e-4),
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Centering,
    Main,
    FinalCentering,
}

/// One line of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub phase: Phase,
    pub iter: usize,
    pub eta: f64,
    pub grad_norm: f64,
    pub decrement: f64,
    pub alpha: f64,
    pub trials: usize,
    pub passes: u64,
    pub peak_words: usize,
    pub ridge: bool,
    /// `λ_min(S)` of the accepted state.
    pub min_eig: f64,
}

/// Writes the trace as JSON lines.
pub fn emit_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone)]
pub struct IpmState {
    pub y: DVector<f64>,
    pub eta: f64,
    pub factors: SlackFactors,
    /// Accepted main-phase iterations.
    pub iter: usize,
    pub centering_iters: usize,
}

/// `g_j = η b_j − tr[S⁻¹ A_j]`, one pass.
pub fn streamed_gradient<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    factors: &SlackFactors,
    eta: f64,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    if b.len() != stream.m() {
        return Err(SdpError::DimensionMismatch(format!(
            "b has length {}, stream has m={}",
            b.len(),
            stream.m()
        )));
    }
    let mut g = b * eta;
    stream.scan(|j, a| {
        g[j] -= linalg::trace_product(&factors.s_inv, a)?;
        Ok(())
    })?;
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub delta: DVector<f64>,
    /// `gᵀ H̃⁻¹ g`.
    pub decrement: f64,
    /// Whether the ridge `1e-12·tr(H̃)/m` was needed.
    pub ridge: bool,
}

/// Solves `H̃ δ = −g` by Cholesky, adding a small ridge if `H̃` is numerically singular.
pub fn newton_step(h: &HessianMatrix, g: &DVector<f64>) -> Result<NewtonStep> {
    let m = h.m();
    if g.len() != m {
        return Err(SdpError::DimensionMismatch(format!(
            "gradient length {} for a {m}x{m} Hessian",
            g.len()
        )));
    }
    if g.iter().all(|v| *v == 0.0) {
        return Ok(NewtonStep {
            delta: DVector::zeros(m),
            decrement: 0.0,
            ridge: false,
        });
    }
    let mut system = h.h.clone();
    let mut ridge = false;
    let chol = match system.clone().cholesky() {
        Some(c) => c,
        None => {
            let shift = 1e-12 * h.h.trace() / m as f64;
            if !(shift > 0.0 && shift.is_finite()) {
                return Err(SdpError::DegenerateHessian);
            }
            for i in 0..m {
                system[(i, i)] += shift;
            }
            ridge = true;
            system
                .clone()
                .cholesky()
                .ok_or(SdpError::DegenerateHessian)?
        }
    };
    let rhs = -g;
    let mut delta = chol.solve(&rhs);
    // One round of iterative refinement against the (possibly shifted) system.
    let residual = &rhs - &system * &delta;
    delta += chol.solve(&residual);
    let residual = (&system * &delta - &rhs).norm();
    let converged = residual.is_finite() && residual <= 1e-8 * g.norm();
    if !converged || delta.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::DegenerateHessian);
    }
    let decrement = -g.dot(&delta);
    Ok(NewtonStep {
        delta,
        decrement,
        ridge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub alpha: f64,
    /// Slack-formation passes spent (one per trial scale).
    pub trials: usize,
}

/// Backtracking slack update: tries `α = 1, 1/2, …` and accepts the first
/// trial whose slack is positive definite and, with the Armijo guard enabled,
/// satisfies `f_η(y+αδ) ≤ f_η(y) + c·α·gᵀδ`. Each trial is one pass.
pub fn apply_step<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    c: &SymMatrix,
    b: &DVector<f64>,
    state: &IpmState,
    g: &DVector<f64>,
    delta: &DVector<f64>,
    guard: &StepGuard,
) -> Result<(IpmState, StepInfo)> {
    let n = state.factors.n();
    let slope = g.dot(delta);
    let b_delta = b.dot(delta);
    let cond = state.factors.s.norm() / state.factors.min_eig;
    let roundoff = 64.0 * f64::EPSILON * n as f64 * cond.max(1.0);
    let mut alpha = 1.0;
    for trial in 1..=(guard.max_halvings as usize + 1) {
        let y_trial = &state.y + delta * alpha;
        let slack = stream.form_slack(c, &y_trial)?;
        let eig = SlackEigen::new(slack)?;
        if eig.is_positive_definite() {
            let accept = match guard.armijo {
                None => true,
                Some(c_arm) => {
                    let change = state.eta * alpha * b_delta - (eig.log_det() - state.factors.log_det);
                    change <= c_arm * alpha * slope + roundoff
                }
            };
            if accept {
                let factors = eig.into_factors()?;
                let next = IpmState {
                    y: y_trial,
                    eta: state.eta,
                    factors,
                    iter: state.iter,
                    centering_iters: state.centering_iters,
                };
                return Ok((
                    next,
                    StepInfo {
                        alpha,
                        trials: trial,
                    },
                ));
            }
        }
        alpha *= 0.5;
    }
    Err(SdpError::StepRejected {
        trials: guard.max_halvings as usize + 1,
        min_alpha: 2.0 * alpha,
    })
}

/// Output certificate of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub y_final: Vec<f64>,
    #[serde(skip)]
    pub x_hat: SymMatrix,
    /// `⟨C, X̂⟩`.
    pub objective: f64,
    /// `bᵀy`, an upper bound on the optimum for any dual feasible `y`.
    pub dual_objective: f64,
    /// `Σ_i |⟨A_i, X̂⟩ − b_i|`.
    pub infeas_l1: f64,
    /// `n/η`.
    pub gap_estimate: f64,
    pub eta_final: f64,
    pub x_hat_min_eig: f64,
    pub x_hat_norm: f64,
    pub iterations: usize,
    pub iteration_budget: usize,
    pub centering_iters: usize,
    pub final_centering_iters: usize,
    pub final_decrement: f64,
    pub passes_used: u64,
    pub passes: PassBreakdown,
    pub sketch_size: Option<usize>,
    pub peak_space_words: usize,
    pub ledger: LedgerSnapshot,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

/// Where the passes went.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PassBreakdown {
    pub startup: u64,
    pub centering: u64,
    pub main: u64,
    pub final_centering: u64,
    pub certificate: u64,
    /// Slack passes beyond the first trial of each step, over all phases.
    pub backtracking: u64,
}

struct Direction {
    g: DVector<f64>,
    step: NewtonStep,
}

/// Stateful driver: owns the sketch seed, the space ledger and the trace.
///
/// The trace remains readable after a failed solve.
pub struct Solver {
    config: SolverConfig,
    ledger: SpaceLedger,
    trace: Vec<TraceRecord>,
    seed: Option<SketchSeed>,
    sketch_draws: u64,
    passes: PassBreakdown,
    _seed_leases: Vec<Lease>,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Self::with_ledger(config, SpaceLedger::new())
    }

    pub fn with_ledger(config: SolverConfig, ledger: SpaceLedger) -> Self {
        Solver {
            config,
            ledger,
            trace: Vec::new(),
            seed: None,
            sketch_draws: 0,
            passes: PassBreakdown::default(),
            _seed_leases: Vec::new(),
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn ledger(&self) -> &SpaceLedger {
        &self.ledger
    }

    pub fn sketch_seed(&self) -> Option<&SketchSeed> {
        self.seed.as_ref()
    }

    fn draw_seed(&mut self, n: usize, m: usize) -> Result<()> {
        let rng_seed = sketch::derive_seed(self.config.rng_seed, self.sketch_draws);
        self.sketch_draws += 1;
        let seed = SketchSeed::new(
            n,
            m,
            self.config.sketch_eps,
            self.config.sketch_delta_for(n),
            rng_seed,
            self.config.sketch_size,
        )?;
        self._seed_leases = vec![
            self.ledger.core("sketch.signs", 2 * seed.n_pad, Scaling::Dense),
            self.ledger.core("sketch.coords", 2 * seed.s, Scaling::Constraint),
        ];
        self.seed = Some(seed);
        Ok(())
    }

    fn factor_lease(&self, n: usize) -> Lease {
        self.ledger
            .core("slack.factors", 3 * n * n + n, Scaling::Dense)
    }

    /// Gradient pass plus Hessian pass, then the Newton system.
    fn direction<R: Read + Seek>(
        &mut self,
        stream: &mut ConstraintStream<R>,
        b: &DVector<f64>,
        state: &IpmState,
    ) -> Result<Direction> {
        let (n, m) = (stream.n(), stream.m());
        let g = streamed_gradient(stream, &state.factors, state.eta, b)?;
        let _g_lease = self.ledger.core("ipm.gradient", m, Scaling::Constraint);

        let h = if self.config.exact_hessian {
            let _oracle = self.ledger.lease(
                "oracle.conjugated",
                hessian::exact_oracle_words(n, m) + 2 * n * n,
                Category::OracleOnly,
                Scaling::Dense,
            );
            hessian::exact_hessian(stream, &state.factors)?
        } else {
            if self.seed.is_none() || self.config.resample_sketch {
                self.draw_seed(n, m)?;
            }
            let seed = self.seed.as_ref().expect("seed drawn above");
            let ws = {
                let _w2 = self.ledger.core(
                    "sketch.w2",
                    SketchWorkspace::build_words(n, seed.n_pad),
                    Scaling::Dense,
                );
                let _w1 = self.ledger.core(
                    "sketch.w1",
                    SketchWorkspace::build_words(n, seed.n_pad),
                    Scaling::Dense,
                );
                let _x = self.ledger.core(
                    "sketch.x",
                    n * seed.n_pad.min(seed.s),
                    Scaling::Dense,
                );
                sketch::refresh_workspace(seed, &state.factors.s_inv_sqrt)?
            };
            let _ws = self.ledger.core(
                "sketch.workspace",
                ws.words() - seed.s,
                Scaling::Dense,
            );
            let _slots = self.ledger.core("sketch.slots", seed.s, Scaling::Constraint);
            let _z = self
                .ledger
                .core("sketch.z", ws.scratch_words(), Scaling::Dense);
            let _q = self
                .ledger
                .core("sketch.basis", m * seed.s, Scaling::Constraint);
            let basis = sketch::sketch_all(stream, &ws, seed)?;
            let _h = self.ledger.core("hessian", m * m, Scaling::Constraint);
            hessian::sketched_hessian(&basis)?
        };
        let _h = self.ledger.core("hessian", m * m, Scaling::Constraint);
        let _chol = self
            .ledger
            .core("hessian.cholesky", m * m + m, Scaling::Constraint);
        let step = newton_step(&h, &g)?;
        Ok(Direction { g, step })
    }

    fn step<R: Read + Seek>(
        &mut self,
        stream: &mut ConstraintStream<R>,
        instance: &SdpInstance,
        state: &IpmState,
        dir: &Direction,
    ) -> Result<(IpmState, StepInfo)> {
        let n = stream.n();
        let _delta = self
            .ledger
            .core("ipm.delta", dir.step.delta.len(), Scaling::Constraint);
        let _trial = self.ledger.core("slack.trial", n * n, Scaling::Dense);
        let _eig = self.ledger.core("slack.eig", 2 * n * n + n, Scaling::Dense);
        let out = apply_step(
            stream,
            &instance.c,
            &instance.b,
            state,
            &dir.g,
            &dir.step.delta,
            &self.config.guard,
        )?;
        self.passes.backtracking += out.1.trials as u64 - 1;
        Ok(out)
    }

    fn record<R: Read + Seek>(
        &mut self,
        stream: &ConstraintStream<R>,
        phase: Phase,
        state: &IpmState,
        iter: usize,
        dir: &Direction,
        info: &StepInfo,
    ) {
        self.trace.push(TraceRecord {
            phase,
            iter,
            eta: state.eta,
            grad_norm: dir.g.norm(),
            decrement: dir.step.decrement,
            alpha: info.alpha,
            trials: info.trials,
            passes: stream.pass_count(),
            peak_words: self.ledger.peak_words(),
            ridge: dir.step.ridge,
            min_eig: state.factors.min_eig,
        });
    }

    /// Damped Newton at fixed `η` until the decrement drops below `tol`.
    /// Returns the centered state and the last decrement observed.
    fn center<R: Read + Seek>(
        &mut self,
        stream: &mut ConstraintStream<R>,
        instance: &SdpInstance,
        mut state: IpmState,
        tol: f64,
        phase: Phase,
        factors_lease: &mut Lease,
    ) -> Result<(IpmState, f64, usize)> {
        let cap = (50.0 * (stream.n() as f64).sqrt()).ceil() as usize;
        let mut steps = 0;
        loop {
            let dir = self.direction(stream, &instance.b, &state)?;
            if dir.step.decrement <= tol {
                return Ok((state, dir.step.decrement, steps));
            }
            if steps >= cap {
                if phase == Phase::FinalCentering {
                    return Ok((state, dir.step.decrement, steps));
                }
                return Err(SdpError::CenteringFailed {
                    iters: steps,
                    decrement: dir.step.decrement,
                });
            }
            let (next, info) = match self.step(stream, instance, &state, &dir) {
                Ok(out) => out,
                // Final polishing only improves an already valid certificate.
                Err(SdpError::StepRejected { .. }) if phase == Phase::FinalCentering => {
                    return Ok((state, dir.step.decrement, steps));
                }
                Err(e) => return Err(e),
            };
            steps += 1;
            state = next;
            *factors_lease = self.factor_lease(stream.n());
            if phase == Phase::Centering {
                state.centering_iters += 1;
            }
            self.record(stream, phase, &state, steps, &dir, &info);
        }
    }

    /// Checks `S(y0) ≻ 0` in one pass and centers at `η = eta0`.
    pub fn initial_center<R: Read + Seek>(
        &mut self,
        stream: &mut ConstraintStream<R>,
        instance: &SdpInstance,
    ) -> Result<IpmState> {
        let mut lease = self.factor_lease(instance.n());
        self.initial_center_inner(stream, instance, &mut lease)
    }

    fn initial_center_inner<R: Read + Seek>(
        &mut self,
        stream: &mut ConstraintStream<R>,
        instance: &SdpInstance,
        factors_lease: &mut Lease,
    ) -> Result<IpmState> {
        self.config.validate()?;
        let y0 = instance.y0.clone().ok_or(SdpError::NoInitialDual)?;
        let start = stream.pass_count();
        let slack = stream.form_slack(&instance.c, &y0)?;
        let factors = match linalg::slack_factors(slack) {
            Ok(f) => f,
            Err(SdpError::NotPositiveDefinite { min_eig, .. }) => {
                return Err(SdpError::InfeasibleStart { min_eig })
            }
            Err(e) => return Err(e),
        };
        self.passes.startup += stream.pass_count() - start;
        let state = IpmState {
            y: y0,
            eta: self.config.eta0,
            factors,
            iter: 0,
            centering_iters: 0,
        };
        let start = stream.pass_count();
        let tol = self.config.center_tol;
        let (state, _, _) =
            self.center(stream, instance, state, tol, Phase::Centering, factors_lease)?;
        self.passes.centering += stream.pass_count() - start;
        Ok(state)
    }

    /// Runs centering, the main path-following loop, a final re-centering at
    /// the last `η`, and primal recovery `X̂ = S⁻¹/η`.
    pub fn solve<R: Read + Seek>(
        &mut self,
        stream: &mut ConstraintStream<R>,
        instance: &SdpInstance,
    ) -> Result<Solution> {
        self.config.validate()?;
        let (n, m) = (instance.n(), instance.m());
        if stream.n() != n || stream.m() != m {
            return Err(SdpError::DimensionMismatch(
                "stream and instance headers differ".into(),
            ));
        }
        let passes_at_start = stream.pass_count();
        let _c = self.ledger.core("instance.c", n * n, Scaling::Dense);
        let _b = self.ledger.core("instance.b", m, Scaling::Constraint);
        let _buf = self
            .ledger
            .core("stream.buffer", stream.buffer_words(), Scaling::Dense);
        let _y = self.ledger.core("ipm.y", m, Scaling::Constraint);

        let mut factors_lease = self.factor_lease(n);
        let mut state = self.initial_center_inner(stream, instance, &mut factors_lease)?;

        let budget = self.config.iteration_budget(n);
        let target = self.config.eta_target(n);
        let growth = 1.0 + 1.0 / (n as f64).sqrt();
        let start = stream.pass_count();
        while state.iter < budget && state.eta < target {
            state.eta *= growth;
            let dir = self.direction(stream, &instance.b, &state)?;
            let (mut next, info) = self.step(stream, instance, &state, &dir)?;
            factors_lease = self.factor_lease(n);
            next.iter += 1;
            state = next;
            self.record(stream, Phase::Main, &state, state.iter, &dir, &info);
        }
        self.passes.main += stream.pass_count() - start;

        let start = stream.pass_count();
        let tol = self.config.final_tol;
        let (state, final_decrement, final_iters) = self.center(
            stream,
            instance,
            state,
            tol,
            Phase::FinalCentering,
            &mut factors_lease,
        )?;
        self.passes.final_centering += stream.pass_count() - start;

        let _x = self.ledger.core("primal.x_hat", n * n, Scaling::Dense);
        let mut x_hat = &state.factors.s_inv / state.eta;
        linalg::symmetrize(&mut x_hat);
        let objective = linalg::trace_product(&instance.c, &x_hat)?;
        let start = stream.pass_count();
        let mut infeas_l1 = 0.0;
        stream.scan(|i, a| {
            infeas_l1 += (linalg::trace_product(a, &x_hat)? - instance.b[i]).abs();
            Ok(())
        })?;
        self.passes.certificate += stream.pass_count() - start;
        let x_eigs = linalg::eigenvalues(&x_hat)?;
        drop(factors_lease);

        let snapshot = self.ledger.snapshot();
        Ok(Solution {
            dual_objective: instance.b.dot(&state.y),
            y_final: state.y.iter().copied().collect(),
            objective,
            infeas_l1,
            gap_estimate: n as f64 / state.eta,
            eta_final: state.eta,
            x_hat_min_eig: x_eigs.min(),
            x_hat_norm: x_eigs.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
            x_hat,
            iterations: state.iter,
            iteration_budget: budget,
            centering_iters: state.centering_iters,
            final_centering_iters: final_iters,
            final_decrement,
            passes_used: stream.pass_count() - passes_at_start,
            passes: self.passes,
            sketch_size: if self.config.exact_hessian {
                None
            } else {
                self.seed.as_ref().map(|s| s.s)
            },
            peak_space_words: snapshot.peak_words,
            ledger: snapshot,
            trace: self.trace.clone(),
        })
    }

    /// Computes the sketched and exact Hessians at `state` for one fresh sketch seed.
    pub fn hessian_pair<R: Read + Seek>(
        stream: &mut ConstraintStream<R>,
        state: &IpmState,
        seed: &SketchSeed,
    ) -> Result<(HessianMatrix, HessianMatrix)> {
        let exact = hessian::exact_hessian(stream, &state.factors)?;
        let ws = sketch::refresh_workspace(seed, &state.factors.s_inv_sqrt)?;
        let basis = sketch::sketch_all(stream, &ws, seed)?;
        Ok((exact, hessian::sketched_hessian(&basis)?))
    }
}

/// Convenience wrapper: centers from `y0` at `config.eta0`.
pub fn initial_center<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    instance: &SdpInstance,
    config: &SolverConfig,
) -> Result<IpmState> {
    Solver::new(config.clone()).initial_center(stream, instance)
}

/// Convenience wrapper around [`Solver::solve`].
pub fn solve<R: Read + Seek>(
    stream: &mut ConstraintStream<R>,
    instance: &SdpInstance,
    config: &SolverConfig,
) -> Result<Solution> {
    Solver::new(config.clone()).solve(stream, instance)
}

/// Symmetric dense primal matrix from `S⁻¹/η`; exposed for tests and reports.
pub fn primal_from_slack(factors: &SlackFactors, eta: f64) -> DMatrix<f64> {
    let mut x = &factors.s_inv / eta;
    linalg::symmetrize(&mut x);
    x
}
