//! Subcommand implementations behind the `streaming-sdp` binary.
//!
//! Each command is a plain function returning a serializable report so the
//! binary, the integration tests and the acceptance suite share one code path.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use streaming_sdp::hessian::{self, SpectralRatio};
use streaming_sdp::instance::{self, InstanceKind};
use streaming_sdp::ipm::{self, PassBreakdown, Solver, SolverConfig};
use streaming_sdp::sketch::{self, SketchSeed};
use streaming_sdp::{linalg, InstanceStats, LedgerSnapshot, Result, SdpError};

/// Instance size and the norms entering the accuracy bounds.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub m: usize,
    pub sum_schatten1: f64,
    pub b_l1: f64,
    pub c_spectral: f64,
}

impl InstanceSummary {
    fn new(n: usize, m: usize, stats: &InstanceStats) -> Self {
        InstanceSummary {
            n,
            m,
            sum_schatten1: stats.sum_schatten1,
            b_l1: stats.b_l1,
            c_spectral: stats.c_spectral,
        }
    }
}

/// Machine-readable summary of one `solve` run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: InstanceSummary,
    pub config: SolverConfig,
    pub rng_seed: u64,
    pub objective: f64,
    pub dual_objective: f64,
    pub infeas_l1: f64,
    pub gap_estimate: f64,
    /// `R` used in the bounds: the hint if given, else the measured `‖X̂‖`.
    pub r: f64,
    /// `4·n·eps·(R·Σ‖A_i‖₁ + ‖b‖₁)`.
    pub infeas_bound: f64,
    pub eta_final: f64,
    pub final_decrement: f64,
    pub iterations: usize,
    pub iteration_budget: usize,
    pub centering_iters: usize,
    pub final_centering_iters: usize,
    pub passes_used: u64,
    pub passes: PassBreakdown,
    pub sketch_size: Option<usize>,
    pub peak_words: usize,
    pub ledger: LedgerSnapshot,
    /// Present only when timing was requested, so default reports are byte-reproducible.
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub timing: bool,
}

/// Writes a generated instance and returns its stats.
pub fn cmd_gen(
    n: usize,
    m: Option<usize>,
    kind: InstanceKind,
    seed: u64,
    out: &Path,
) -> Result<InstanceSummary> {
    if n == 0 {
        return Err(SdpError::InvalidParameter("n must be at least 1".into()));
    }
    let m = match (kind, m) {
        (InstanceKind::MaxCut, Some(m)) if m != n => {
            return Err(SdpError::InvalidParameter(format!(
                "max-cut instances have m = n = {n}, got m = {m}"
            )))
        }
        (InstanceKind::MaxCut, _) => n,
        (InstanceKind::Random, Some(m)) if m >= 1 => m,
        (InstanceKind::Random, _) => {
            return Err(SdpError::InvalidParameter(
                "random instances need m >= 1".into(),
            ))
        }
    };
    let data = instance::generate_feasible(n, m, seed, kind)?;
    instance::write_instance(&data, out)?;
    let (inst, mut stream) = instance::open_stream(out)?;
    let stats = instance::compute_stats(&mut stream, &inst, None)?;
    Ok(InstanceSummary::new(inst.n(), inst.m(), &stats))
}

/// Solves the instance at `path`, writing the trace and report if requested.
///
/// The trace is written even when the solve aborts.
pub fn cmd_solve(path: &Path, config: SolverConfig, opts: &SolveOptions) -> Result<RunReport> {
    let started = Instant::now();
    config.validate()?;
    let (inst, mut stream) = instance::open_stream(path)?;
    let stats = instance::compute_stats(&mut stream, &inst, config.r_hint)?;
    let mut solver = Solver::new(config.clone());
    let outcome = solver.solve(&mut stream, &inst);
    if let Some(trace) = &opts.trace {
        let file = BufWriter::new(File::create(trace)?);
        ipm::emit_trace(solver.trace(), file)?;
    }
    let sol = outcome?;

    let n = inst.n();
    let r = config.r_hint.unwrap_or(sol.x_hat_norm);
    let report = RunReport {
        instance: InstanceSummary::new(n, inst.m(), &stats),
        rng_seed: config.rng_seed,
        infeas_bound: 4.0 * n as f64 * config.eps * (r * stats.sum_schatten1 + stats.b_l1),
        config,
        objective: sol.objective,
        dual_objective: sol.dual_objective,
        infeas_l1: sol.infeas_l1,
        gap_estimate: sol.gap_estimate,
        r,
        eta_final: sol.eta_final,
        final_decrement: sol.final_decrement,
        iterations: sol.iterations,
        iteration_budget: sol.iteration_budget,
        centering_iters: sol.centering_iters,
        final_centering_iters: sol.final_centering_iters,
        passes_used: sol.passes_used,
        passes: sol.passes,
        sketch_size: sol.sketch_size,
        peak_words: sol.peak_space_words,
        ledger: sol.ledger,
        wall_time_secs: opts.timing.then(|| started.elapsed().as_secs_f64()),
    };
    if let Some(out) = &opts.report {
        write_json(&report, out)?;
    }
    Ok(report)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value).map_err(std::io::Error::from)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

#[derive(Debug, Clone)]
pub struct CheckSketchOptions {
    pub eps_h: f64,
    pub trials: usize,
    pub seed: u64,
    pub sketch_size: Option<usize>,
    pub sketch_delta: Option<f64>,
    /// Sample every coordinate once (`ΠᵀΠ = I`), a test mode.
    pub exhaustive: bool,
}

impl Default for CheckSketchOptions {
    fn default() -> Self {
        CheckSketchOptions {
            eps_h: 0.5,
            trials: 100,
            seed: 0,
            sketch_size: None,
            sketch_delta: None,
            exhaustive: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSketchReport {
    pub n: usize,
    pub m: usize,
    pub eps_h: f64,
    pub trials: usize,
    pub sketch_size: Option<usize>,
    pub exhaustive: bool,
    /// `η` of the centered state the Hessians are evaluated at.
    pub eta: f64,
    pub ratios: Vec<SpectralRatio>,
    pub fraction_within: Option<f64>,
    pub lo_min: Option<f64>,
    pub hi_max: Option<f64>,
}

/// Spectral ratios of sketched against exact Hessians at one centered state.
pub fn cmd_check_sketch(path: &Path, opts: &CheckSketchOptions) -> Result<CheckSketchReport> {
    if !(opts.eps_h > 0.0 && opts.eps_h < 1.0) {
        return Err(SdpError::InvalidParameter(format!(
            "eps_h {} outside (0, 1)",
            opts.eps_h
        )));
    }
    let (inst, mut stream) = instance::open_stream(path)?;
    let (n, m) = (inst.n(), inst.m());
    let mut report = CheckSketchReport {
        n,
        m,
        eps_h: opts.eps_h,
        trials: opts.trials,
        sketch_size: None,
        exhaustive: opts.exhaustive,
        eta: 0.0,
        ratios: Vec::new(),
        fraction_within: None,
        lo_min: None,
        hi_max: None,
    };
    if opts.trials == 0 {
        return Ok(report);
    }
    let config = SolverConfig {
        exact_hessian: true,
        ..SolverConfig::default()
    };
    let delta = opts.sketch_delta.unwrap_or(config.sketch_delta_for(n));
    let state = ipm::initial_center(&mut stream, &inst, &config)?;
    report.eta = state.eta;
    let exact = hessian::exact_hessian(&mut stream, &state.factors)?;
    for t in 0..opts.trials {
        let rng_seed = sketch::derive_seed(opts.seed, t as u64);
        let seed = if opts.exhaustive {
            SketchSeed::exhaustive(n, rng_seed)?
        } else {
            SketchSeed::new(n, m, opts.eps_h, delta, rng_seed, opts.sketch_size)?
        };
        report.sketch_size = Some(seed.s);
        let ws = sketch::refresh_workspace(&seed, &state.factors.s_inv_sqrt)?;
        let basis = sketch::sketch_all(&mut stream, &ws, &seed)?;
        let sketched = hessian::sketched_hessian(&basis)?;
        report
            .ratios
            .push(hessian::spectral_ratio(&exact.h, &sketched.h)?);
    }
    let (lo, hi) = (1.0 - opts.eps_h, 1.0 + opts.eps_h);
    let inside = report.ratios.iter().filter(|r| r.within(lo, hi)).count();
    report.fraction_within = Some(inside as f64 / opts.trials as f64);
    report.lo_min = report.ratios.iter().map(|r| r.lo).reduce(f64::min);
    report.hi_max = report.ratios.iter().map(|r| r.hi).reduce(f64::max);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct InfoReport {
    pub instance: InstanceSummary,
    pub has_initial_dual: bool,
    /// `λ_min(S(y0))`, if the file carries `y0`.
    pub y0_min_eig: Option<f64>,
    pub y0_feasible: Option<bool>,
}

impl InfoReport {
    /// Human-readable lines printed by `info`.
    pub fn lines(&self) -> Vec<String> {
        let i = &self.instance;
        let mut out = vec![
            format!("n: {}", i.n),
            format!("m: {}", i.m),
            format!("sum_schatten1: {}", i.sum_schatten1),
            format!("b_l1: {}", i.b_l1),
            format!("c_spectral: {}", i.c_spectral),
        ];
        match (self.y0_feasible, self.y0_min_eig) {
            (Some(ok), Some(e)) => out.push(format!(
                "S(y0) PD: {}, min_eig={:?}",
                if ok { "yes" } else { "no" },
                round_sig(e, 12)
            )),
            _ => out.push("S(y0) PD: no y0 in file".into()),
        }
        out
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

/// One stats pass plus, if `y0` is present, one slack pass.
pub fn cmd_info(path: &Path) -> Result<InfoReport> {
    let (inst, mut stream) = instance::open_stream(path)?;
    let stats = instance::compute_stats(&mut stream, &inst, None)?;
    let (y0_min_eig, y0_feasible) = match &inst.y0 {
        Some(y0) => {
            let s = stream.form_slack(&inst.c, y0)?;
            let eig = linalg::SlackEigen::new(s)?;
            (Some(eig.min_eig()), Some(eig.is_positive_definite()))
        }
        None => (None, None),
    };
    Ok(InfoReport {
        instance: InstanceSummary::new(inst.n(), inst.m(), &stats),
        has_initial_dual: inst.y0.is_some(),
        y0_min_eig,
        y0_feasible,
    })
}
