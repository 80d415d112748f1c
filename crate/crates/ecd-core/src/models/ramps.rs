//! Ramp schedules λ(t) on [0, τ]: linear, locally-adiabatic (rate ∝ gap²),
//! and polynomial boundary-cancellation.

use crate::error::{Error, Result};
use crate::schedule::{Pchip, Schedule};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RampKind {
    Linear,
    /// dλ/dt ∝ gap²(λ) with the closed-form two-level gap
    /// gap(λ) = 2√(g̃² + (λ/2)²) of the effective Bell model.
    LocalAdiabatic { gap_coupling: f64 },
    /// λ(s) = λ₀ + Δλ·(10s³ − 15s⁴ + 6s⁵): first and second derivatives vanish
    /// at both ends.
    BoundaryCancel,
}

pub fn ramp_schedule(kind: RampKind, lambda_start: f64, lambda_end: f64, tau: f64) -> Result<Schedule> {
    if tau <= 0.0 {
        return Err(Error::InvalidParameter("ramp duration must be positive".into()));
    }
    let dl = lambda_end - lambda_start;
    match kind {
        RampKind::Linear => Ok(Schedule::from_fns(
            move |t| lambda_start + dl * t / tau,
            move |_| dl / tau,
            (0.0, tau),
        )),
        RampKind::BoundaryCancel => Ok(Schedule::from_fns(
            move |t| {
                let s = (t / tau).clamp(0.0, 1.0);
                let p = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
                lambda_start + dl * p
            },
            move |t| {
                let s = (t / tau).clamp(0.0, 1.0);
                let dp = 30.0 * s * s * (1.0 - s) * (1.0 - s);
                dl * dp / tau
            },
            (0.0, tau),
        )),
        RampKind::LocalAdiabatic { gap_coupling } => {
            let g = gap_coupling.abs();
            if g == 0.0 {
                return Err(Error::InvalidParameter(
                    "locally-adiabatic ramp needs a nonzero effective coupling".into(),
                ));
            }
            // dλ/dt ∝ 4g̃² + λ²  ⇒  λ(t) = 2g̃·tan(θ₀ + (θ₁−θ₀)·t/τ)
            let th0 = (lambda_start / (2.0 * g)).atan();
            let th1 = (lambda_end / (2.0 * g)).atan();
            Ok(Schedule::from_fns(
                move |t| {
                    let th = th0 + (th1 - th0) * (t / tau).clamp(0.0, 1.0);
                    2.0 * g * th.tan()
                },
                move |t| {
                    let th = th0 + (th1 - th0) * (t / tau).clamp(0.0, 1.0);
                    let c = th.cos();
                    2.0 * g * (th1 - th0) / (tau * c * c)
                },
                (0.0, tau),
            ))
        }
    }
}

/// Locally-adiabatic ramp from a numeric gap function: integrates
/// t(λ) ∝ ∫ dλ/gap²(λ) on `n_grid` points and inverts by monotone
/// interpolation. Fallback for models without the closed-form two-level gap.
pub fn local_adiabatic_from_gap(
    gap: impl Fn(f64) -> f64,
    lambda_start: f64,
    lambda_end: f64,
    tau: f64,
    n_grid: usize,
) -> Result<Schedule> {
    if tau <= 0.0 || n_grid < 3 {
        return Err(Error::InvalidParameter("need tau > 0 and at least 3 grid points".into()));
    }
    let n = n_grid;
    let dl = (lambda_end - lambda_start) / (n - 1) as f64;
    let mut ts = vec![0.0; n];
    for k in 1..n {
        let lm = lambda_start + (k as f64 - 0.5) * dl;
        let g = gap(lm);
        if g <= 0.0 {
            return Err(Error::InvalidParameter(format!("gap vanished at λ = {lm}")));
        }
        ts[k] = ts[k - 1] + dl.abs() / (g * g);
    }
    let total = ts[n - 1];
    let times: Vec<f64> = ts.iter().map(|t| t / total * tau).collect();
    let lambdas: Vec<f64> = (0..n).map(|k| lambda_start + k as f64 * dl).collect();
    let interp = Pchip::new(times, lambdas)?;
    let i2 = interp.clone();
    Ok(Schedule::from_fns(
        move |t| interp.value(t),
        move |t| i2.derivative(t),
        (0.0, tau),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_midpoint() {
        let r = ramp_schedule(RampKind::Linear, 2.0, 4.0, 1.0).unwrap();
        assert_eq!(r.value(0.5), 3.0);
    }

    #[test]
    fn endpoints_exact_for_all_kinds() {
        for kind in [
            RampKind::Linear,
            RampKind::BoundaryCancel,
            RampKind::LocalAdiabatic { gap_coupling: -0.0025 },
        ] {
            let (l0, l1, tau) = (0.05, 0.0, 1234.0);
            let r = ramp_schedule(kind, l0, l1, tau).unwrap();
            assert!((r.value(0.0) - l0).abs() <= 1e-12 * l0.abs().max(1.0), "{kind:?}");
            assert!((r.value(tau) - l1).abs() <= 1e-12 * l0.abs().max(1.0), "{kind:?}");
        }
    }

    #[test]
    fn boundary_cancel_derivatives_vanish_at_ends() {
        let tau = 7.0;
        let r = ramp_schedule(RampKind::BoundaryCancel, 1.0, -1.0, tau).unwrap();
        assert_eq!(r.derivative(0.0), 0.0);
        assert_eq!(r.derivative(tau), 0.0);
        // second derivative by finite differences
        let h = 1e-5;
        let dd0 = (r.derivative(h) - r.derivative(0.0)) / h;
        let dd1 = (r.derivative(tau) - r.derivative(tau - h)) / h;
        assert!(dd0.abs() < 1e-3 && dd1.abs() < 1e-3);
        assert!(r.derivative_defect(200) < 1e-6);
    }

    #[test]
    fn local_adiabatic_slows_near_resonance() {
        let g = 0.0025;
        let (l0, tau) = (0.05, 100.0);
        let r = ramp_schedule(RampKind::LocalAdiabatic { gap_coupling: g }, l0, 0.0, tau).unwrap();
        let rate_at_start = r.derivative(0.0).abs(); // λ = λ₀
        let rate_at_end = r.derivative(tau).abs(); // λ = 0
        let gap2 = |l: f64| 4.0 * g * g + l * l;
        let expect = gap2(0.0) / gap2(l0); // ≈ 0.00990099
        assert!(rate_at_end < rate_at_start);
        assert!(((rate_at_end / rate_at_start) - expect).abs() < 1e-9 * expect.max(1.0));
        assert!((expect - 0.0099009900990099).abs() < 1e-12);
    }

    #[test]
    fn numeric_local_adiabatic_matches_closed_form() {
        let g = 0.01_f64;
        let closed =
            ramp_schedule(RampKind::LocalAdiabatic { gap_coupling: g }, 0.2, 0.0, 50.0).unwrap();
        let numeric = local_adiabatic_from_gap(
            |l| 2.0 * (g * g + 0.25 * l * l).sqrt(),
            0.2,
            0.0,
            50.0,
            4001,
        )
        .unwrap();
        for k in 0..=20 {
            let t = 50.0 * k as f64 / 20.0;
            assert!(
                (closed.value(t) - numeric.value(t)).abs() < 2e-4,
                "t={t}: {} vs {}",
                closed.value(t),
                numeric.value(t)
            );
        }
    }
}
