use serde::{Deserialize, Serialize};

use super::config::{BudgetTerms, ExperimentConfig, ExperimentKind, FormKind};
use super::ensemble::run_ensemble;
use super::fluct::{compute_fluctuations, FluctuationSeries};
use super::HarnessError;
use crate::census::{scan_small_denominators, EtaValue, ScanOrder};
use crate::freq::{CoarsePartition, FrequencyGrid};
use crate::kinetic::{solve_at, KineticForm, KineticMesh, KineticState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub kx: f64,
    pub ky: f64,
    pub f_mc: f64,
    /// Kinetic prediction, or `g₀` for the flatness experiment.
    pub f_ref: Option<f64>,
    pub abs_err: Option<f64>,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub t: f64,
    pub tau: f64,
    /// `sup_K |F_K − f_ref,K|`, or `sup_K |F_K|` without a reference.
    pub sup_err: f64,
    pub max_stderr: f64,
    pub cells: Vec<CellRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub eta: EtaValue,
    pub n: u32,
    pub min_three_wave: Option<f64>,
    pub exact_zeros: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub kind: ExperimentKind,
    pub n: u32,
    pub eta: EtaValue,
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    pub h: f64,
    pub members: usize,
    pub requested_members: usize,
    pub partial: bool,
    pub lambda: Option<f64>,
    pub budget: Option<BudgetTerms>,
    pub h_override: bool,
    pub rows: Vec<TimeRow>,
    /// `sup_K |F_K − f_res,K|` per save, when the resonant form is also compared.
    pub resonant_sup_err: Option<Vec<f64>>,
    /// Contrast `sup_K |f_K(τ) − f_K(0)|` of the resonant kinetic solution per save.
    pub kinetic_drift: Option<Vec<f64>>,
    /// `sup |g₀|` over the lattice and the kinetic mesh.
    pub g0_sup: f64,
    pub census: Option<CensusSummary>,
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    /// `max_t sup_K |F_K(t) − f_ref,K(t)|`.
    pub fn max_sup_err(&self) -> f64 {
        self.rows.iter().map(|r| r.sup_err).fold(0.0, f64::max)
    }
}

/// Per-mode moment check of the initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCheckReport {
    pub n: u32,
    pub members: usize,
    /// `(i, j, target, mean, stderr)` per mode.
    pub modes: Vec<(i64, i64, f64, f64, f64)>,
    pub max_abs_z: f64,
    pub within_3se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticReport {
    pub form: KineticForm,
    pub mesh_dx: f64,
    pub active_nodes: usize,
    pub nnz: usize,
    pub operator_norm: f64,
    pub dtau: f64,
    pub taus: Vec<f64>,
    pub sup_norm: Vec<f64>,
    /// `(λ, sup_τ ‖f_λ − f_res‖_∞)` for a quasi-resonant sweep.
    pub lambda_sweep: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Report {
    Comparison(ComparisonReport),
    SampleCheck(SampleCheckReport),
    Kinetic(KineticReport),
}

/// Nodal kinetic solution restricted to active mesh nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticRecord {
    pub nodes: Vec<(f64, f64)>,
    pub states: Vec<KineticState>,
}

/// Everything one pipeline produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub report: Option<Report>,
    pub series: Option<FluctuationSeries>,
    pub kinetic: Option<KineticRecord>,
}

struct Setup {
    grid: FrequencyGrid,
    partition: CoarsePartition,
    mesh: KineticMesh,
}

fn setup(config: &ExperimentConfig) -> Result<Setup, HarnessError> {
    let grid = FrequencyGrid::build(config.domain, config.dispersion()?, config.grid.n)?;
    let partition = CoarsePartition::new(&grid, config.coarse.h)?;
    let mesh = KineticMesh::new(config.domain, config.kinetic.mesh_dx)?;
    Ok(Setup { grid, partition, mesh })
}

/// Interpolates nodal values at the lattice points and coarse-averages them.
pub fn kinetic_on_cells(
    mesh: &KineticMesh,
    values: &[f64],
    grid: &FrequencyGrid,
    partition: &CoarsePartition,
) -> Vec<f64> {
    let at: Vec<f64> = grid.modes().iter().map(|m| mesh.interpolate(values, m.k)).collect();
    partition.average(&at).expect("partition matches grid")
}

fn g0_on_cells(config: &ExperimentConfig, s: &Setup) -> Vec<f64> {
    let at: Vec<f64> = s.grid.modes().iter().map(|m| config.g0.eval(m.k, &config.domain)).collect();
    s.partition.average(&at).expect("partition matches grid")
}

fn g0_sup(config: &ExperimentConfig, s: &Setup) -> f64 {
    let lattice = s.grid.modes().iter().map(|m| config.g0.eval(m.k, &config.domain).abs());
    let nodes = (0..s.mesh.len()).map(|n| config.g0.eval(s.mesh.node(n), &config.domain).abs());
    lattice.chain(nodes).fold(0.0, f64::max)
}

fn solve_form(
    config: &ExperimentConfig,
    s: &Setup,
    form: KineticForm,
    taus: &[f64],
) -> Result<(Vec<KineticState>, f64, f64, usize), HarnessError> {
    let op = form.build(&s.mesh, &config.dispersion()?, config.kinetic.n_sigma, config.kinetic.convention)?;
    let f0 = s.mesh.sample(|k| config.g0.eval(k, &config.domain));
    let traj = solve_at(&op, &f0, taus, config.kinetic.dtau)?;
    Ok((traj.states, traj.operator_norm, traj.dtau, op.nnz()))
}

fn record(s: &Setup, states: &[KineticState]) -> KineticRecord {
    let active: Vec<usize> = (0..s.mesh.len()).filter(|&n| s.mesh.is_active(n)).collect();
    KineticRecord {
        nodes: active.iter().map(|&n| (s.mesh.node(n).x, s.mesh.node(n).y)).collect(),
        states: states
            .iter()
            .map(|st| KineticState {
                tau: st.tau,
                values: active.iter().map(|&n| st.values[n]).collect(),
            })
            .collect(),
    }
}

fn rows(series: &FluctuationSeries, reference: Option<&[Vec<f64>]>) -> Vec<TimeRow> {
    (0..series.save_times.len())
        .map(|s| {
            let cells: Vec<CellRow> = series
                .cells
                .iter()
                .enumerate()
                .map(|(c, id)| {
                    let f_mc = series.cell_f[s][c];
                    let f_ref = reference.map(|r| r[s][c]);
                    CellRow {
                        kx: id.kx,
                        ky: id.ky,
                        f_mc,
                        f_ref,
                        abs_err: f_ref.map(|r| (f_mc - r).abs()),
                        stderr: series.cell_se[s][c],
                    }
                })
                .collect();
            TimeRow {
                t: series.save_times[s],
                tau: series.taus[s],
                sup_err: cells
                    .iter()
                    .map(|c| c.abs_err.unwrap_or(c.f_mc.abs()))
                    .fold(0.0, f64::max),
                max_stderr: cells.iter().map(|c| c.stderr).filter(|x| x.is_finite()).fold(0.0, f64::max),
                cells,
            }
        })
        .collect()
}

fn base_report(
    config: &ExperimentConfig,
    kind: ExperimentKind,
    series: &FluctuationSeries,
    raw_partial: bool,
    s: &Setup,
    warnings: Vec<String>,
) -> ComparisonReport {
    ComparisonReport {
        kind,
        n: config.grid.n,
        eta: config.physics.eta,
        eps: config.physics.eps,
        delta: config.physics.delta,
        alpha: config.physics.alpha,
        h: config.coarse.h,
        members: series.members,
        requested_members: config.run.ensemble,
        partial: raw_partial,
        lambda: None,
        budget: None,
        h_override: false,
        rows: Vec::new(),
        resonant_sup_err: None,
        kinetic_drift: None,
        g0_sup: g0_sup(config, s),
        census: None,
        warnings,
    }
}

fn ensemble_series(
    config: &ExperimentConfig,
    kind: ExperimentKind,
    s: &Setup,
) -> Result<(FluctuationSeries, bool, Vec<String>), HarnessError> {
    let plan = config.plan(kind)?;
    let raw = run_ensemble(config, &plan)?;
    let series = compute_fluctuations(&raw, &s.grid, config.physics.alpha, config.physics.eps, config.coarse.h)?;
    Ok((series, raw.partial, plan.warnings))
}

/// Ensemble and fluctuations without a reference.
pub fn simulate(config: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let s = setup(config)?;
    let (series, partial, warnings) = ensemble_series(config, ExperimentKind::Simulate, &s)?;
    let mut report = base_report(config, ExperimentKind::Simulate, &series, partial, &s, warnings);
    report.rows = rows(&series, None);
    Ok(Outcome {
        report: Some(Report::Comparison(report)),
        series: Some(series),
        kinetic: None,
    })
}

/// Ensemble to `t = T/(πε²)` against the Lorentzian (`λ = 3δ`) kinetic solution
/// at the matched times `τ = πε²t`.
pub fn compare_theorem1(config: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let plan = config.plan(ExperimentKind::Theorem1)?;
    let s = setup(config)?;
    let lambda = 3.0 * config.physics.delta;
    let (series, partial, warnings) = ensemble_series(config, ExperimentKind::Theorem1, &s)?;
    let (states, _, _, _) = solve_form(config, &s, KineticForm::Lorentzian { lambda }, &series.taus)?;
    let reference: Vec<Vec<f64>> = states
        .iter()
        .map(|st| kinetic_on_cells(&s.mesh, &st.values, &s.grid, &s.partition))
        .collect();
    let mut report = base_report(config, ExperimentKind::Theorem1, &series, partial, &s, warnings);
    report.lambda = Some(lambda);
    report.budget = plan.budget;
    report.h_override = config.coarse.h > config.physics.delta.powi(2);
    report.rows = rows(&series, Some(&reference));
    if config.kinetic.also_resonant {
        let (res, _, _, _) = solve_form(config, &s, KineticForm::Resonant, &series.taus)?;
        report.resonant_sup_err = Some(
            res.iter()
                .enumerate()
                .map(|(i, st)| {
                    kinetic_on_cells(&s.mesh, &st.values, &s.grid, &s.partition)
                        .iter()
                        .zip(&series.cell_f[i])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .collect(),
        );
    }
    Ok(Outcome {
        report: Some(Report::Comparison(report)),
        kinetic: Some(record(&s, &states)),
        series: Some(series),
    })
}

/// Minimum three-wave denominator of the run's `η` on `D_N`, when exact.
pub fn census_summary(config: &ExperimentConfig, grid: &FrequencyGrid) -> Option<CensusSummary> {
    let eta = config.physics.eta;
    let r = scan_small_denominators(grid, &eta, ScanOrder::ThreeWave).ok()?;
    Some(CensusSummary {
        eta,
        n: config.grid.n,
        min_three_wave: r.min_denominator,
        exact_zeros: r.exact_zeros,
    })
}

/// Deterministic ensemble to `t = T/ε²`: reports `sup_K |F_K(t) − g₀(K)|`
/// beside the resonant kinetic drift `sup_K |f_K(πε²t) − f_K(0)|`.
pub fn flatness_theorem2(config: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    config.plan(ExperimentKind::Theorem2)?;
    let s = setup(config)?;
    let (series, partial, warnings) = ensemble_series(config, ExperimentKind::Theorem2, &s)?;
    let g0 = g0_on_cells(config, &s);
    let reference: Vec<Vec<f64>> = vec![g0; series.save_times.len()];
    let (states, _, _, _) = solve_form(config, &s, KineticForm::Resonant, &series.taus)?;
    let kin: Vec<Vec<f64>> = states
        .iter()
        .map(|st| kinetic_on_cells(&s.mesh, &st.values, &s.grid, &s.partition))
        .collect();
    let drift = kin
        .iter()
        .map(|f| f.iter().zip(&kin[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let mut report = base_report(config, ExperimentKind::Theorem2, &series, partial, &s, warnings);
    report.rows = rows(&series, Some(&reference));
    report.kinetic_drift = Some(drift);
    report.census = census_summary(config, &s.grid);
    Ok(Outcome {
        report: Some(Report::Comparison(report)),
        kinetic: Some(record(&s, &states)),
        series: Some(series),
    })
}

/// Draws the initial law (uncoupled) and compares mean actions with their targets.
pub fn sample_check(config: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let mut c = config.clone();
    c.run.coupled = false;
    c.run.t_max = Some(0.0);
    let plan = c.plan(ExperimentKind::SampleCheck)?;
    let s = setup(&c)?;
    let raw = run_ensemble(&c, &plan)?;
    let targets = c.init_law().target_variances(&s.grid);
    let mut modes = Vec::with_capacity(s.grid.len());
    let (mut max_z, mut inside) = (0.0f64, 0usize);
    for (k, m) in s.grid.modes().iter().enumerate() {
        let mean = raw.mode_stats.mean[k];
        let se = raw.mode_stats.std_error(k);
        let z = (mean - targets[k]) / se;
        max_z = max_z.max(z.abs());
        if z.abs() <= 3.0 {
            inside += 1;
        }
        modes.push((m.i, m.j, targets[k], mean, se));
    }
    Ok(Outcome {
        report: Some(Report::SampleCheck(SampleCheckReport {
            n: c.grid.n,
            members: raw.members(),
            modes,
            max_abs_z: max_z,
            within_3se: inside as f64 / s.grid.len() as f64,
        })),
        series: None,
        kinetic: None,
    })
}

/// Solves the configured kinetic form from `g₀` on `τ ∈ [0, T]`, optionally
/// with a quasi-resonant sweep against the resonant solution.
pub fn run_kinetic(config: &ExperimentConfig, sweep: &[f64]) -> Result<Outcome, HarnessError> {
    let plan = config.plan(ExperimentKind::Kinetic)?;
    let s = setup(config)?;
    let form = config.kinetic_form();
    let (states, norm, dtau, nnz) = solve_form(config, &s, form, &plan.taus)?;
    let mut lambda_sweep = Vec::new();
    if !sweep.is_empty() {
        let reference = if config.kinetic.form == FormKind::Resonant {
            states.clone()
        } else {
            solve_form(config, &s, KineticForm::Resonant, &plan.taus)?.0
        };
        for &lambda in sweep {
            let (st, _, _, _) = solve_form(config, &s, KineticForm::Lorentzian { lambda }, &plan.taus)?;
            let err = st
                .iter()
                .zip(&reference)
                .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            lambda_sweep.push((lambda, err));
        }
    }
    let sup_norm = states
        .iter()
        .map(|st| st.values.iter().fold(0.0, |a: f64, x| a.max(x.abs())))
        .collect();
    Ok(Outcome {
        report: Some(Report::Kinetic(KineticReport {
            form,
            mesh_dx: config.kinetic.mesh_dx,
            active_nodes: s.mesh.active_count(),
            nnz,
            operator_norm: norm,
            dtau,
            taus: plan.taus.clone(),
            sup_norm,
            lambda_sweep,
        })),
        kinetic: Some(record(&s, &states)),
        series: None,
    })
}
