//! STIRAP: three-level population transfer |0⟩ → |2⟩ through a dark state,
//! with Gaussian pump/Stokes pulses in counter-intuitive order, optional exact
//! CD coupling and its fmod-STIRAP sideband approximation.
//!
//! RWA Hamiltonian in two-photon resonance:
//!   H(t) = ½[ Ω₋(t)·(|0⟩⟨1|+h.c.) + Ω₊(t)·(|1⟩⟨2|+h.c.) + 2Δ₁|1⟩⟨1|
//!           + Ω_CD(t)·(i|0⟩⟨2|+h.c.) ]
//! with pump Ω₋ peaking at +d/2 and Stokes Ω₊ at −d/2.

use num_complex::Complex64 as C64;

use crate::control::ControlHamiltonian;
use crate::error::{Error, Result};
use crate::floquet::synthesize_fmod_stirap;
use crate::operator::{CMat, CVec, Operator};
use crate::propagate::{TimeHamiltonian, WithCarrier};
use crate::schedule::Schedule;
use crate::spectral::{cd_field_direct, FrameOptions};

/// Which counterdiabatic correction to include.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StirapCd {
    None,
    /// Exact CD coupling Ω_CD(t)·(i|0⟩⟨2| + h.c.)/2 from the spectral engine.
    Exact,
    /// Oscillating sidebands on pump and Stokes approximating the CD coupling.
    Fmod { omega: f64, phi_minus: f64 },
}

#[derive(Clone, Debug)]
pub struct StirapModel {
    pub rabi_peak: f64,
    pub delay: f64,
    pub sigma: f64,
    pub delta1: f64,
    window: (f64, f64),
}

pub(crate) fn x_minus() -> Operator {
    let mut m = CMat::zeros(3, 3);
    m[(0, 1)] = C64::new(1.0, 0.0);
    m[(1, 0)] = C64::new(1.0, 0.0);
    Operator::hermitian(m).unwrap()
}

pub(crate) fn x_plus() -> Operator {
    let mut m = CMat::zeros(3, 3);
    m[(1, 2)] = C64::new(1.0, 0.0);
    m[(2, 1)] = C64::new(1.0, 0.0);
    Operator::hermitian(m).unwrap()
}

pub(crate) fn proj_intermediate() -> Operator {
    let mut m = CMat::zeros(3, 3);
    m[(1, 1)] = C64::new(1.0, 0.0);
    Operator::hermitian(m).unwrap()
}

/// The CD coupling operator G = i|0⟩⟨2| − i|2⟩⟨0| (Hermitian).
pub(crate) fn cd_coupling_op() -> Operator {
    let mut m = CMat::zeros(3, 3);
    m[(0, 2)] = C64::new(0.0, 1.0);
    m[(2, 0)] = C64::new(0.0, -1.0);
    Operator::hermitian(m).unwrap()
}

impl StirapModel {
    pub fn new(rabi_peak: f64, delay: f64, sigma: f64, delta1: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter("pulse width σ must be positive".into()));
        }
        if delay < 0.0 {
            return Err(Error::InvalidParameter(
                "negative delay is the intuitive pulse ordering, a different protocol".into(),
            ));
        }
        let window = (-7.0 * sigma, 3.5 * sigma);
        Ok(Self { rabi_peak, delay, sigma, delta1, window })
    }

    /// Protocol window, default t ∈ [−7σ, 3.5σ].
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn with_window(mut self, window: (f64, f64)) -> Self {
        self.window = window;
        self
    }

    /// Pump Ω₋(t), peaking at +d/2 (it arrives second).
    pub fn pump(&self) -> Schedule {
        Schedule::gaussian(self.rabi_peak, self.delay / 2.0, self.sigma, self.window)
    }

    /// Stokes Ω₊(t), peaking at −d/2 (it arrives first).
    pub fn stokes(&self) -> Schedule {
        Schedule::gaussian(self.rabi_peak, -self.delay / 2.0, self.sigma, self.window)
    }

    fn base_hamiltonian(&self) -> ControlHamiltonian {
        ControlHamiltonian::new(vec![
            (self.pump().scale(0.5), x_minus()),
            (self.stokes().scale(0.5), x_plus()),
            (Schedule::constant(self.delta1, self.window), proj_intermediate()),
        ])
        .expect("three-level terms are Hermitian")
    }

    /// Dark-bright mixing angle θ(t) = atan(Ω₋/Ω₊).
    pub fn mixing_angle(&self, t: f64) -> f64 {
        self.pump().value(t).atan2(self.stokes().value(t))
    }

    /// Instantaneous dark state cosθ|0⟩ − sinθ|2⟩.
    pub fn dark_state(&self, t: f64) -> CVec {
        let th = self.mixing_angle(t);
        let mut v = CVec::zeros(3);
        v[0] = C64::new(th.cos(), 0.0);
        v[2] = C64::new(-th.sin(), 0.0);
        v
    }

    /// The exact CD Rabi frequency Ω_CD(t) = 2·Im⟨0|H_CD(t)|2⟩ from the
    /// generic spectral engine, sampled on a dense grid and interpolated.
    /// Samples where the engine reports a (near-)degeneracy — the far pulse
    /// tails at Δ₁ ≠ 0 — contribute zero; the dark-state rotation rate is
    /// negligible there.
    pub fn cd_rabi(&self) -> Result<Schedule> {
        let base = self.base_hamiltonian();
        let opts = FrameOptions::default();
        let (t0, t1) = self.window;
        let n = ((t1 - t0) / self.sigma * 50.0).ceil() as usize + 1;
        let mut ts = Vec::with_capacity(n);
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
            let v = match cd_field_direct(&base, t, 1.0, &opts) {
                Ok(cd) => 2.0 * cd.matrix()[(0, 2)].im,
                Err(Error::Degeneracy { .. }) | Err(Error::NearDegeneracy { .. }) => 0.0,
                Err(e) => return Err(e),
            };
            ts.push(t);
            vals.push(v);
        }
        Schedule::sampled(ts, vals)
    }

    /// Assemble the protocol Hamiltonian for the requested CD mode.
    pub fn hamiltonian(&self, cd: StirapCd) -> Result<Box<dyn TimeHamiltonian>> {
        match cd {
            StirapCd::None => Ok(Box::new(self.base_hamiltonian())),
            StirapCd::Exact => {
                let cd_rabi = self.cd_rabi()?;
                let h = ControlHamiltonian::new(vec![
                    (self.pump().scale(0.5), x_minus()),
                    (self.stokes().scale(0.5), x_plus()),
                    (Schedule::constant(self.delta1, self.window), proj_intermediate()),
                    (cd_rabi.scale(0.5), cd_coupling_op()),
                ])?;
                Ok(Box::new(h))
            }
            StirapCd::Fmod { omega, phi_minus } => {
                let cd_rabi = self.cd_rabi()?;
                let fmod = synthesize_fmod_stirap(
                    &self.pump(),
                    &self.stokes(),
                    &cd_rabi,
                    omega,
                    phi_minus,
                )?;
                let h = ControlHamiltonian::new(vec![
                    (fmod.pump.scale(0.5), x_minus()),
                    (fmod.stokes.scale(0.5), x_plus()),
                    (Schedule::constant(self.delta1, self.window), proj_intermediate()),
                ])?;
                Ok(Box::new(WithCarrier::new(Box::new(h), omega)))
            }
        }
    }

    /// |0⟩, the initial state of the transfer.
    pub fn initial_state(&self) -> CVec {
        let mut v = CVec::zeros(3);
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// |2⟩, the transfer target.
    pub fn target_state(&self) -> CVec {
        let mut v = CVec::zeros(3);
        v[2] = C64::new(1.0, 0.0);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagate::{propagate_state, state_fidelity, StepPolicy, StoreMode};

    /// Independent oracle: for Gaussian pulses tanθ = e^{2td/σ²}, so
    /// θ̇ = (d/σ²)·sech(2td/σ²) and Ω_CD = 2θ̇.
    fn mixing_angle_rate_oracle(d: f64, sigma: f64, t: f64) -> f64 {
        let u = 2.0 * t * d / (sigma * sigma);
        (d / (sigma * sigma)) / u.cosh()
    }

    #[test]
    fn engine_cd_rabi_matches_mixing_angle_oracle() {
        let m = StirapModel::new(20.0, 1.0, 1.0, 0.0).unwrap();
        let cd = m.cd_rabi().unwrap();
        // frozen oracle values (σ = d = 1): Ω_CD(0.7) = 2·sech(1.4), Ω_CD(0) = 2
        assert!((cd.value(0.7) - 0.929843984817963).abs() < 1e-6, "{}", cd.value(0.7));
        assert!((cd.value(0.0) - 2.0).abs() < 1e-6);
        for t in [-2.0, -0.5, 0.3, 1.5] {
            let expect = 2.0 * mixing_angle_rate_oracle(1.0, 1.0, t);
            assert!(
                (cd.value(t) - expect).abs() < 1e-6 * expect.max(1.0),
                "t={t}: engine {} vs oracle {expect}",
                cd.value(t)
            );
        }
        // the oracle is independent of the peak Rabi frequency
        let m2 = StirapModel::new(7.0, 1.5, 1.0, 0.0).unwrap();
        let cd2 = m2.cd_rabi().unwrap();
        assert!((cd2.value(-0.4) - 1.656858462834614).abs() < 1e-6);
    }

    #[test]
    fn dark_state_is_zero_eigenstate_without_intermediate_component() {
        for delta1 in [0.0, 3.0] {
            let m = StirapModel::new(15.0, 1.2, 1.0, delta1).unwrap();
            let h = m.hamiltonian(StirapCd::None).unwrap();
            for t in [-3.0, -1.0, 0.0, 0.8, 2.0] {
                let d = m.dark_state(t);
                assert!(d[1].norm() == 0.0);
                let hd = h.hamiltonian_at(t) * &d;
                assert!(hd.norm() < 1e-12 * m.rabi_peak, "‖H|D⟩‖ = {} at t={t}", hd.norm());
            }
        }
    }

    #[test]
    fn plain_stirap_transfers_in_adiabatic_regime() {
        // Ω·σ = 20, d = σ, Δ₁ = 0
        let m = StirapModel::new(20.0, 1.0, 1.0, 0.0).unwrap();
        let h = m.hamiltonian(StirapCd::None).unwrap();
        let (t0, t1) = m.window();
        let pol = StepPolicy { min_steps: 6000, ..StepPolicy::default() };
        let res = propagate_state(h.as_ref(), t0, t1 - t0, &m.initial_state(), &pol,
            StoreMode::Stride(10)).unwrap();
        let fid = state_fidelity(&m.target_state(), res.final_state()).unwrap();
        assert!(fid > 0.95, "transfer fidelity {fid}");
        // dark-state following: intermediate population stays small
        let max_p1 = res.states.iter().map(|s| s[1].norm_sqr()).fold(0.0, f64::max);
        assert!(max_p1 < 0.05, "max intermediate population {max_p1}");
    }

    #[test]
    fn exact_cd_follows_dark_state_to_1e8() {
        for d in [1.0, 1.5] {
            let m = StirapModel::new(4.0, d, 1.0, 0.0).unwrap();
            let h = m.hamiltonian(StirapCd::Exact).unwrap();
            let (t0, t1) = m.window();
            let psi0 = m.dark_state(t0);
            let pol = StepPolicy { min_steps: 40_000, ..StepPolicy::default() };
            let res =
                propagate_state(h.as_ref(), t0, t1 - t0, &psi0, &pol, StoreMode::Stride(400))
                    .unwrap();
            for (t, psi) in res.times.iter().zip(&res.states) {
                let fid = state_fidelity(&m.dark_state(*t), psi).unwrap();
                assert!(fid >= 1.0 - 1e-8, "d={d}: dark-state fidelity {fid} at t={t}");
            }
        }
    }

    #[test]
    fn fmod_sidebands_beat_plain_stirap() {
        // mid-region point of the infidelity map: Ω·σ = 8, d = σ, ω·σ = 50
        let m = StirapModel::new(8.0, 1.0, 1.0, 0.0).unwrap();
        let (t0, t1) = m.window();
        let psi0 = m.initial_state();
        let target = m.target_state();

        let plain = m.hamiltonian(StirapCd::None).unwrap();
        let pol = StepPolicy { min_steps: 8000, ..StepPolicy::default() };
        let res_p =
            propagate_state(plain.as_ref(), t0, t1 - t0, &psi0, &pol, StoreMode::Endpoints).unwrap();
        let inf_plain = 1.0 - state_fidelity(&target, res_p.final_state()).unwrap();

        let fmod = m.hamiltonian(StirapCd::Fmod { omega: 50.0, phi_minus: 0.0 }).unwrap();
        let pol_f = StepPolicy { points_per_period: 96, min_steps: 8000, max_dt: None };
        let res_f =
            propagate_state(fmod.as_ref(), t0, t1 - t0, &psi0, &pol_f, StoreMode::Endpoints).unwrap();
        let inf_fmod = 1.0 - state_fidelity(&target, res_f.final_state()).unwrap();

        assert!(
            inf_fmod * 50.0 < inf_plain,
            "fmod infidelity {inf_fmod:.3e} vs plain {inf_plain:.3e}"
        );
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(StirapModel::new(1.0, -0.1, 1.0, 0.0).is_err());
        assert!(StirapModel::new(1.0, 0.1, 0.0, 0.0).is_err());
    }
}
