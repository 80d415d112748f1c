//! The experiment runners: deterministic pipelines from a resolved
//! configuration to tabular results. Sweep points run in a rayon pool and are
//! assembled in axis order, so outputs are identical regardless of the worker
//! count.

use ecd_core::models::{
    ramp_schedule, BellCd, BellModel, BellParams, LzModel, RampKind, StirapCd, StirapModel,
};
use ecd_core::propagate::{propagate_state, state_fidelity, StepPolicy, StoreMode};
use ecd_core::spectral::sorted_eigh;
use rayon::prelude::*;

use crate::config::ExperimentConfig;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

/// A column-oriented result table. The leading `n_axis` columns identify the
/// sweep point (join keys for compare); the rest are measured values. Column
/// names carry unit annotations in parentheses.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub n_axis: usize,
    pub rows: Vec<Vec<f64>>,
}

/// A 2-D infidelity map over two sweep axes. Failed points carry the sentinel
/// −1 (never NaN) and are logged when they occur.
#[derive(Clone, Debug)]
pub struct FidelityMap {
    pub axis1_name: String,
    pub axis2_name: String,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// infidelity[i][j] at (axis1[i], axis2[j])
    pub infidelity: Vec<Vec<f64>>,
}

pub struct RunArtifacts {
    pub table: Table,
    pub map: Option<FidelityMap>,
    pub warnings: Vec<String>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    match cfg.experiment.as_str() {
        "lz" => run_lz(cfg),
        "lz-convergence" => run_lz_convergence(cfg),
        "stirap-map" => run_stirap_map(cfg),
        "bell-tau" => run_bell_tau(cfg),
        other => Err(RunError::Config(format!("unknown experiment '{other}'"))),
    }
}

fn policy(cfg: &ExperimentConfig) -> StepPolicy {
    StepPolicy {
        points_per_period: cfg.integrator.points_per_period.unwrap_or(96),
        min_steps: cfg.integrator.min_steps.unwrap_or(4000),
        max_dt: None,
    }
}

fn protocol(cfg: &ExperimentConfig) -> &str {
    cfg.protocol.as_deref().unwrap_or("adiabatic")
}

fn run_lz(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    let v = cfg.model["v"];
    let coupling = cfg.model["coupling"];
    let span = cfg.model["span"];
    let model = LzModel::new(v, coupling).map_err(|e| RunError::Config(e.to_string()))?;
    let window = (-span / 2.0, span / 2.0);
    let psi0 = model.ground_state(window.0);
    let pol = policy(cfg);
    let omega = cfg.drive.omega.unwrap_or(50.0);
    let phi = cfg.drive.phi.unwrap_or(0.0);

    let run = |h: &dyn ecd_core::propagate::TimeHamiltonian| {
        // store ~2000 rows regardless of step count
        let dt = pol.resolve(h.carrier_frequency(), span);
        let stride = ((span / dt) as usize / 2000).max(1);
        propagate_state(h, window.0, span, &psi0, &pol, StoreMode::Stride(stride))
    };
    let res = match protocol(cfg) {
        "adiabatic" => run(&model.bare(window)),
        "exact_cd" => run(&model.with_exact_cd(window)),
        "ecd" => {
            let (h, _) = model
                .with_ecd(omega, phi, window)
                .map_err(|e| RunError::Numerical(e.to_string()))?;
            run(&h)
        }
        other => return Err(RunError::Config(format!("unknown protocol '{other}'"))),
    }
    .map_err(|e| RunError::Numerical(e.to_string()))?;

    let mut rows = Vec::with_capacity(res.times.len());
    for (t, psi) in res.times.iter().zip(&res.states) {
        let gs = model.ground_state(*t);
        let inf = 1.0 - state_fidelity(&gs, psi).map_err(|e| RunError::Numerical(e.to_string()))?;
        rows.push(vec![
            *t,
            psi[0].norm_sqr(),
            psi[1].norm_sqr(),
            psi[0].re,
            psi[0].im,
            psi[1].re,
            psi[1].im,
            inf.max(0.0),
        ]);
    }
    Ok(RunArtifacts {
        table: Table {
            columns: vec![
                "t (time)".into(),
                "pop_up (-)".into(),
                "pop_down (-)".into(),
                "amp_up_re (-)".into(),
                "amp_up_im (-)".into(),
                "amp_down_re (-)".into(),
                "amp_down_im (-)".into(),
                "ground_infidelity (-)".into(),
            ],
            n_axis: 1,
            rows,
        },
        map: None,
        warnings: Vec::new(),
    })
}

fn run_lz_convergence(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    let v = cfg.model["v"];
    let coupling = cfg.model["coupling"];
    let span = cfg.model["span"];
    let model = LzModel::new(v, coupling).map_err(|e| RunError::Config(e.to_string()))?;
    let window = (-span / 2.0, span / 2.0);
    let psi0 = model.ground_state(window.0);
    let gs_end = model.ground_state(window.1);
    let pol = policy(cfg);
    let phi = cfg.drive.phi.unwrap_or(0.0);

    let sweep = cfg.sweep.as_ref().ok_or_else(|| RunError::Config("missing sweep".into()))?;
    // snap each ω to an even number of drive periods over the window: the
    // end-of-protocol micromotion phase and the half-period echo structure of
    // the anti-phase drive otherwise hide the trend
    let omegas: Vec<f64> = sweep.axes[0]
        .values()
        .iter()
        .map(|w| {
            let periods = 2.0 * (w * span / (2.0 * std::f64::consts::TAU)).round();
            std::f64::consts::TAU * periods / span
        })
        .collect();

    let results: Vec<Result<Vec<f64>, String>> = omegas
        .par_iter()
        .map(|&omega| {
            let (h_ecd, _) = model.with_ecd(omega, phi, window).map_err(|e| e.to_string())?;
            let res = propagate_state(&h_ecd, window.0, span, &psi0, &pol, StoreMode::Stride(8))
                .map_err(|e| e.to_string())?;
            let end_inf =
                1.0 - state_fidelity(&gs_end, res.final_state()).map_err(|e| e.to_string())?;
            let h_exact = model.with_exact_cd(window);
            let pol_ref = StepPolicy { max_dt: Some(res.step), ..pol.clone() };
            let reference =
                propagate_state(&h_exact, window.0, span, &psi0, &pol_ref, StoreMode::Stride(8))
                    .map_err(|e| e.to_string())?;
            let mut max_dev = 0.0f64;
            for (a, b) in res.states.iter().zip(&reference.states) {
                max_dev = max_dev.max(1.0 - state_fidelity(a, b).map_err(|e| e.to_string())?);
            }
            Ok(vec![omega, end_inf.max(0.0), max_dev])
        })
        .collect();

    let mut rows = Vec::new();
    for (omega, r) in omegas.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return Err(RunError::Numerical(format!("ω = {omega}: {e}"))),
        }
    }
    Ok(RunArtifacts {
        table: Table {
            columns: vec![
                "omega (rad/time)".into(),
                "end_infidelity (-)".into(),
                "micromotion_max_deviation (-)".into(),
            ],
            n_axis: 1,
            rows,
        },
        map: None,
        warnings: Vec::new(),
    })
}

fn run_stirap_map(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    let sigma = cfg.model["sigma"];
    let delta1 = cfg.model["delta1_sigma"] / sigma;
    let omega_drive = cfg.drive.omega.unwrap_or(50.0 / sigma);
    let phi = cfg.drive.phi.unwrap_or(0.0);
    let pol = policy(cfg);
    let proto = protocol(cfg).to_string();

    let sweep = cfg.sweep.as_ref().ok_or_else(|| RunError::Config("missing sweep".into()))?;
    let (ax_r, ax_d) = (&sweep.axes[0], &sweep.axes[1]);
    if ax_r.param != "rabi_sigma" || ax_d.param != "delay_sigma" {
        return Err(RunError::Config(
            "stirap-map sweep axes must be rabi_sigma then delay_sigma".into(),
        ));
    }
    let rabis = ax_r.values();
    let delays = ax_d.values();

    let points: Vec<(usize, usize)> = (0..rabis.len())
        .flat_map(|i| (0..delays.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(i, j)| {
            let rabi = rabis[i] / sigma;
            let delay = delays[j] * sigma;
            let result = (|| -> Result<f64, ecd_core::Error> {
                let m = StirapModel::new(rabi, delay, sigma, delta1)?;
                let cd = match proto.as_str() {
                    "adiabatic" => StirapCd::None,
                    "exact_cd" => StirapCd::Exact,
                    _ => StirapCd::Fmod { omega: omega_drive, phi_minus: phi },
                };
                let h = m.hamiltonian(cd)?;
                let (t0, t1) = m.window();
                let res = propagate_state(h.as_ref(), t0, t1 - t0, &m.initial_state(), &pol,
                    StoreMode::Endpoints)?;
                let inf = 1.0 - state_fidelity(&m.target_state(), res.final_state())?;
                Ok(inf.clamp(0.0, 1.0))
            })();
            match result {
                Ok(v) if v.is_finite() => v,
                Ok(_) | Err(_) => {
                    if let Err(e) = result {
                        eprintln!(
                            "stirap-map: point (rabi_sigma={}, delay_sigma={}) failed: {e}",
                            rabis[i], delays[j]
                        );
                    } else {
                        eprintln!(
                            "stirap-map: point (rabi_sigma={}, delay_sigma={}) returned non-finite infidelity",
                            rabis[i], delays[j]
                        );
                    }
                    -1.0
                }
            }
        })
        .collect();

    if values.iter().all(|v| *v == -1.0) {
        return Err(RunError::Numerical("every sweep point failed".into()));
    }

    let mut rows = Vec::with_capacity(points.len());
    let mut grid = vec![vec![0.0; delays.len()]; rabis.len()];
    for (&(i, j), &v) in points.iter().zip(&values) {
        rows.push(vec![rabis[i], delays[j], v]);
        grid[i][j] = v;
    }
    Ok(RunArtifacts {
        table: Table {
            columns: vec![
                "rabi_sigma (-)".into(),
                "delay_sigma (-)".into(),
                "infidelity (-)".into(),
            ],
            n_axis: 2,
            rows,
        },
        map: Some(FidelityMap {
            axis1_name: "rabi_sigma (-)".into(),
            axis2_name: "delay_sigma (-)".into(),
            axis1: rabis,
            axis2: delays,
            infidelity: grid,
        }),
        warnings: Vec::new(),
    })
}

fn run_bell_tau(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    let g = cfg.model["g"];
    let detuning = cfg.model["detuning_g"] * g;
    let offset = cfg.model["offset_g"] * g;
    let n_ph = cfg.model["n_ph"] as usize;
    let ramp_kind_id = cfg.model["ramp"] as i64;
    let omega_drive = cfg.drive.omega.unwrap_or(10.0 * detuning);
    let pol = policy(cfg);
    let proto = protocol(cfg).to_string();

    // qubits below the resonator
    let params = BellParams {
        omega_q2: 5.0 - detuning,
        omega_r: 5.0,
        g1: g,
        g2: g,
        n_ph,
    };
    let g_eff = g * g / detuning;
    let ramp_kind = match ramp_kind_id {
        0 => RampKind::Linear,
        1 => RampKind::LocalAdiabatic { gap_coupling: g_eff },
        2 => RampKind::BoundaryCancel,
        other => return Err(RunError::Config(format!("model.ramp: unknown ramp id {other}"))),
    };
    let sweep = cfg.sweep.as_ref().ok_or_else(|| RunError::Config("missing sweep".into()))?;
    let taus = sweep.axes[0].values();

    let mut collected_warnings: Vec<String> = Vec::new();
    {
        // construct once at a reference τ just to surface dispersive warnings
        let ramp = ramp_schedule(ramp_kind, params.omega_q2 + offset, params.omega_q2, taus[0])
            .map_err(|e| RunError::Config(e.to_string()))?;
        let (_, warnings) =
            BellModel::new(params, ramp).map_err(|e| RunError::Config(e.to_string()))?;
        collected_warnings.extend(warnings);
    }

    let results: Vec<f64> = taus
        .par_iter()
        .map(|&tau| {
            let result = (|| -> Result<f64, ecd_core::Error> {
                let ramp =
                    ramp_schedule(ramp_kind, params.omega_q2 + offset, params.omega_q2, tau)?;
                let model = BellModel::new(params, ramp)?.0;
                let h3 = model.h0_lambda().restrict(&model.single_excitation_indices())?;
                let lam = model.lambda();
                let (_, v0) = sorted_eigh(&h3.at(lam.value(0.0)));
                let psi0 = v0.column(0).into_owned();
                let (_, v1) = sorted_eigh(&h3.at(lam.value(tau)));
                let target = v1.column(0).into_owned();
                let cd = match proto.as_str() {
                    "adiabatic" => BellCd::None,
                    "exact_cd" => BellCd::Exact,
                    _ => BellCd::Ecd { omega: omega_drive },
                };
                let h = model.single_excitation_hamiltonian(cd)?;
                let res =
                    propagate_state(h.as_ref(), 0.0, tau, &psi0, &pol, StoreMode::Endpoints)?;
                let inf = 1.0 - state_fidelity(&target, res.final_state())?;
                Ok(inf.clamp(1e-14, 1.0))
            })();
            match result {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("bell-tau: point τ = {tau} failed: {e}");
                    -1.0
                }
            }
        })
        .collect();

    if results.iter().all(|v| *v == -1.0) {
        return Err(RunError::Numerical("every sweep point failed".into()));
    }
    let rows = taus.iter().zip(&results).map(|(t, v)| vec![*t, *v]).collect();
    Ok(RunArtifacts {
        table: Table {
            columns: vec!["tau (time)".into(), "infidelity (-)".into()],
            n_axis: 1,
            rows,
        },
        map: None,
        warnings: collected_warnings,
    })
}

/// Join two tables on their axis columns and append the per-point ratio
/// value_a / value_b. Errors when the sweep shapes differ.
pub fn compare_tables(a: &Table, b: &Table) -> Result<Table, RunError> {
    if a.n_axis != b.n_axis || a.columns[..a.n_axis] != b.columns[..b.n_axis] {
        return Err(RunError::Config("compare: sweep axes differ between the two runs".into()));
    }
    if a.rows.len() != b.rows.len() {
        return Err(RunError::Config(format!(
            "compare: row counts differ ({} vs {})",
            a.rows.len(),
            b.rows.len()
        )));
    }
    // the compared value is the last column of each table
    let va = a.columns.len() - 1;
    let vb = b.columns.len() - 1;
    let mut rows = Vec::with_capacity(a.rows.len());
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for k in 0..a.n_axis {
            if (ra[k] - rb[k]).abs() > 1e-12 * ra[k].abs().max(1.0) {
                return Err(RunError::Config(format!(
                    "compare: axis values differ at column {k}: {} vs {}",
                    ra[k], rb[k]
                )));
            }
        }
        let (x, y) = (ra[va], rb[vb]);
        let ratio = if x >= 0.0 && y > 0.0 { x / y.max(1e-300) } else { -1.0 };
        let mut row: Vec<f64> = ra[..a.n_axis].to_vec();
        row.extend([x, y, ratio]);
        rows.push(row);
    }
    let mut columns: Vec<String> = a.columns[..a.n_axis].to_vec();
    columns.push(format!("a:{}", a.columns[va]));
    columns.push(format!("b:{}", b.columns[vb]));
    columns.push("ratio_a_over_b (-)".into());
    Ok(Table { columns, n_axis: a.n_axis, rows })
}

/// Geometric mean of the valid ratios in a comparison table.
pub fn geometric_mean_ratio(cmp: &Table) -> f64 {
    let rcol = cmp.columns.len() - 1;
    let mut acc = 0.0;
    let mut n = 0usize;
    for row in &cmp.rows {
        let r = row[rcol];
        if r > 0.0 {
            acc += r.ln();
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        (acc / n as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, ExperimentConfig};

    fn cfg(json: &str) -> ExperimentConfig {
        resolve(serde_json::from_str(json).unwrap()).unwrap()
    }

    #[test]
    fn lz_run_produces_population_columns() {
        let c = cfg(r#"{"experiment": "lz", "protocol": "exact_cd",
            "integrator": {"min_steps": 2000}}"#);
        let art = run_experiment(&c).unwrap();
        assert_eq!(art.table.columns.len(), 8);
        assert!(art.table.rows.len() > 100);
        // exact CD keeps the ground-state infidelity tiny everywhere
        let worst = art.table.rows.iter().map(|r| r[7]).fold(0.0, f64::max);
        assert!(worst < 1e-6, "worst infidelity {worst}");
    }

    #[test]
    fn lz_convergence_is_monotone() {
        let c = cfg(r#"{"experiment": "lz-convergence",
            "integrator": {"min_steps": 2000, "points_per_period": 96}}"#);
        let art = run_experiment(&c).unwrap();
        let infs: Vec<f64> = art.table.rows.iter().map(|r| r[1]).collect();
        assert!(infs.windows(2).all(|w| w[1] < w[0]), "{infs:?}");
    }

    #[test]
    fn compare_identical_tables_gives_unit_ratio() {
        let t = Table {
            columns: vec!["x (-)".into(), "y (-)".into()],
            n_axis: 1,
            rows: vec![vec![1.0, 0.5], vec![2.0, 0.25]],
        };
        let cmp = compare_tables(&t, &t).unwrap();
        assert!(cmp.rows.iter().all(|r| (r[3] - 1.0).abs() < 1e-15));
        assert!((geometric_mean_ratio(&cmp) - 1.0).abs() < 1e-15);
        let t2 = Table {
            columns: vec!["x (-)".into(), "y (-)".into()],
            n_axis: 1,
            rows: vec![vec![1.5, 0.5], vec![2.0, 0.25]],
        };
        assert!(matches!(compare_tables(&t, &t2), Err(RunError::Config(_))));
    }
}
