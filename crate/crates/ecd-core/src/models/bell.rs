//! Bell-state preparation in circuit QED: two qubits dispersively coupled to
//! a common resonator mode, H = H_Q + H_QR + H_R with
//!   H_Q = Σᵢ Ωᵢ σᵢᶻ/2,  H_R = ω_R a†a,  H_QR = Σᵢ gᵢ(σᵢ⁺a + σᵢ⁻a†).
//!
//! An initial qubit-frequency offset λ = Ω₁ − Ω₂ is ramped to resonance; the
//! resonator mediates an effective flip-flop coupling g̃ = g₁g₂/(2(Ω₁ − ω_R))
//! whose avoided crossing turns |01⟩ into the Bell state (|01⟩+|10⟩)/√2. The
//! exact CD field is dominated by a flip-flop interaction i·h(t)(σ₁⁺σ₂⁻ −
//! σ₁⁻σ₂⁺), approximated by quadrature-modulated qubit-resonator couplings.

use num_complex::Complex64 as C64;

use crate::control::ControlHamiltonian;
use crate::error::{Error, Result};
use crate::floquet::synthesize_ecd_bell;
use crate::operator::{build_ladder, number_op, sigma_minus, sigma_plus, sigma_z, tensor, CMat, CVec, Operator};
use crate::propagate::{DrivenHamiltonian, FnHamiltonian, SumHamiltonian, TimeHamiltonian, WithCarrier};
use crate::schedule::Schedule;
use crate::spectral::{cd_field_direct, FrameOptions};

#[derive(Clone, Copy, Debug)]
pub struct BellParams {
    /// Fixed frequency of qubit 2.
    pub omega_q2: f64,
    /// Resonator frequency.
    pub omega_r: f64,
    pub g1: f64,
    pub g2: f64,
    /// Photon-number truncation (levels); 4 exposes leakage above the 0/1
    /// sector the protocol lives in.
    pub n_ph: usize,
}

impl Default for BellParams {
    fn default() -> Self {
        // qubits below the resonator: g̃ < 0, |01⟩ maps onto |B₊⟩
        Self { omega_q2: 4.5, omega_r: 5.0, g1: 0.05, g2: 0.05, n_ph: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BellCd {
    None,
    /// Exact CD field of the full model, evaluated on the fly.
    Exact,
    /// Quadrature-modulated coupling sidebands at carrier `omega`.
    Ecd { omega: f64 },
}

/// Result of projecting the exact CD field onto the flip-flop operator.
#[derive(Clone, Debug)]
pub struct HExtraction {
    /// Signed flip-flop coefficient h(t).
    pub h: Schedule,
    /// Largest relative norm of the CD field component outside the flip-flop
    /// operator over the ramp (the flip-flop is the major component, not the
    /// only one; far from the crossing the dressing terms gain weight).
    pub max_residual: f64,
    /// Same residual at the end of the ramp (resonance), where the flip-flop
    /// dominates most strongly.
    pub end_residual: f64,
}

#[derive(Clone)]
pub struct BellModel {
    pub params: BellParams,
    /// Qubit-1 frequency ramp Ω₁(t) on [0, τ]; must end at resonance.
    pub ramp: Schedule,
}

impl BellModel {
    pub fn new(params: BellParams, ramp: Schedule) -> Result<(Self, Vec<String>)> {
        if params.n_ph < 2 {
            return Err(Error::InvalidParameter("need at least 2 photon levels".into()));
        }
        let (_, tau) = ramp.domain();
        let end = ramp.value(tau);
        let scale = params.omega_r.abs().max(1.0);
        if (end - params.omega_q2).abs() > 1e-9 * scale {
            return Err(Error::InvalidParameter(format!(
                "ramp must end at resonance Ω₁(τ) = Ω₂: got {end} vs {}",
                params.omega_q2
            )));
        }
        let mut warnings = Vec::new();
        // dispersive condition |Ωᵢ − ω_R| ≥ 10·gᵢ, checked at both ends
        let omega1_start = ramp.value(ramp.domain().0);
        for (label, omega, g) in [
            ("qubit 1 (start)", omega1_start, params.g1),
            ("qubit 1 (end)", end, params.g1),
            ("qubit 2", params.omega_q2, params.g2),
        ] {
            if (omega - params.omega_r).abs() < 10.0 * g {
                warnings.push(format!(
                    "dispersive condition violated for {label}: |Ω − ω_R| = {:.3e} < 10g = {:.3e}",
                    (omega - params.omega_r).abs(),
                    10.0 * g
                ));
            }
        }
        Ok((Self { params, ramp }, warnings))
    }

    pub fn dim(&self) -> usize {
        4 * self.params.n_ph
    }

    /// Basis index of |q1, q2, n⟩; `true` = qubit excited. Qubit basis order
    /// is (excited, ground) to match σz = diag(1, −1).
    pub fn basis_index(&self, q1_excited: bool, q2_excited: bool, n_phot: usize) -> usize {
        let b1 = if q1_excited { 0 } else { 1 };
        let b2 = if q2_excited { 0 } else { 1 };
        (b1 * 2 + b2) * self.params.n_ph + n_phot
    }

    /// Total excitation number of each basis state (the conserved sector label).
    pub fn excitation_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.dim()];
        for q1 in [true, false] {
            for q2 in [true, false] {
                for n in 0..self.params.n_ph {
                    labels[self.basis_index(q1, q2, n)] =
                        (q1 as usize) + (q2 as usize) + n;
                }
            }
        }
        labels
    }

    fn id_q() -> Operator {
        Operator::identity(2)
    }

    fn id_r(&self) -> Operator {
        Operator::identity(self.params.n_ph)
    }

    /// σ₁ᶻ/2 ⊗ I ⊗ I — the operator multiplying λ.
    pub fn sz1_half(&self) -> Operator {
        let m = tensor(&tensor(&sigma_z(), &Self::id_q()), &self.id_r());
        Operator::hermitian(m.matrix() * C64::new(0.5, 0.0)).unwrap()
    }

    /// gᵢ-independent coupling operator σᵢ⁺a + σᵢ⁻a†.
    pub fn coupling_op(&self, qubit: usize) -> Operator {
        let a = build_ladder(self.params.n_ph).unwrap();
        let (sp, sm) = (sigma_plus(), sigma_minus());
        let build = |s: &Operator, ares: &Operator| -> CMat {
            match qubit {
                1 => tensor(&tensor(s, &Self::id_q()), ares).into_matrix(),
                2 => tensor(&tensor(&Self::id_q(), s), ares).into_matrix(),
                _ => panic!("qubit index must be 1 or 2"),
            }
        };
        let m = build(&sp, &a) + build(&sm, &a.adjoint());
        Operator::hermitian(m).unwrap()
    }

    /// The flip-flop direction of the CD field: i(σ₁⁺σ₂⁻ − σ₁⁻σ₂⁺) ⊗ I_res.
    pub fn flip_flop_op(&self) -> Operator {
        let pm = tensor(&tensor(&sigma_plus(), &sigma_minus()), &self.id_r());
        let mp = tensor(&tensor(&sigma_minus(), &sigma_plus()), &self.id_r());
        let m = (pm.matrix() - mp.matrix()) * C64::i();
        Operator::hermitian(m).unwrap()
    }

    /// Static part of H₀ (everything except the λ·σ₁ᶻ/2 ramp term).
    fn static_part(&self) -> Operator {
        let p = &self.params;
        let sz_sum = tensor(&tensor(&sigma_z(), &Self::id_q()), &self.id_r()).into_matrix()
            + tensor(&tensor(&Self::id_q(), &sigma_z()), &self.id_r()).into_matrix();
        let m = sz_sum * C64::new(p.omega_q2 / 2.0, 0.0)
            + tensor(&tensor(&Self::id_q(), &Self::id_q()), &number_op(p.n_ph)).into_matrix()
                * C64::new(p.omega_r, 0.0)
            + self.coupling_op(1).matrix() * C64::new(p.g1, 0.0)
            + self.coupling_op(2).matrix() * C64::new(p.g2, 0.0);
        Operator::hermitian(m).unwrap()
    }

    /// H₀ as a function of the detuning λ = Ω₁ − Ω₂.
    pub fn h0_lambda(&self) -> ControlHamiltonian {
        let wide = (-1e12, 1e12);
        ControlHamiltonian::new(vec![
            (Schedule::linear(0.0, 1.0, wide), self.sz1_half()),
            (Schedule::constant(1.0, wide), self.static_part()),
        ])
        .expect("Bell model terms are Hermitian")
    }

    /// λ(t) = Ω₁(t) − Ω₂.
    pub fn lambda(&self) -> Schedule {
        let om2 = self.params.omega_q2;
        let ramp = self.ramp.clone();
        let ramp2 = self.ramp.clone();
        Schedule::from_fns(
            move |t| ramp.value(t) - om2,
            move |t| ramp2.derivative(t),
            self.ramp.domain(),
        )
    }

    pub fn frame_options(&self) -> FrameOptions {
        FrameOptions { sectors: Some(self.excitation_labels()), ..FrameOptions::default() }
    }

    /// Effective qubit-qubit coupling mediated by the resonator at resonance:
    /// second-order dispersive result g̃ = g₁g₂(1/Δ₁ + 1/Δ₂)/2 = g₁g₂/(Ω₂ − ω_R)
    /// for equal detunings. The single-excitation avoided crossing has width 2g̃.
    pub fn effective_coupling(&self) -> f64 {
        let p = &self.params;
        p.g1 * p.g2 / (p.omega_q2 - p.omega_r)
    }

    /// Project the exact CD field onto the flip-flop operator over the ramp,
    /// within the single-excitation sector the protocol lives in. (The full
    /// space also carries photon-number-enhanced flip-flop CD components in
    /// higher sectors, which are irrelevant to the protocol state.)
    pub fn extract_h(&self, n_grid: usize) -> Result<HExtraction> {
        let idx = self.single_excitation_indices();
        let h0 = self.h0_lambda().restrict(&idx)?;
        let lam = self.lambda();
        let opts = FrameOptions::default();
        // i(|10⟩⟨01| − |01⟩⟨10|) in the restricted basis
        let op = {
            let mut m = CMat::zeros(3, 3);
            m[(0, 1)] = C64::i();
            m[(1, 0)] = -C64::i();
            Operator::hermitian(m).unwrap()
        };
        let op_norm_sq = crate::operator::hs_inner_raw(op.matrix(), op.matrix()).re;
        let (t0, t1) = self.ramp.domain();
        let n = n_grid.max(16);
        let mut ts = Vec::with_capacity(n);
        let mut hs = Vec::with_capacity(n);
        let mut max_residual = 0.0f64;
        let mut end_residual = 0.0f64;
        for k in 0..n {
            let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
            let cd = cd_field_direct(&h0, lam.value(t), lam.derivative(t), &opts)?;
            let h_val = crate::operator::hs_inner_raw(op.matrix(), cd.matrix()).re / op_norm_sq;
            let residual = {
                let rem = cd.matrix() - op.matrix() * C64::new(h_val, 0.0);
                let cd_norm = crate::operator::fro_norm(cd.matrix());
                if cd_norm > 0.0 {
                    crate::operator::fro_norm(&rem) / cd_norm
                } else {
                    0.0
                }
            };
            max_residual = max_residual.max(residual);
            end_residual = residual;
            ts.push(t);
            hs.push(h_val);
        }
        Ok(HExtraction { h: Schedule::sampled(ts, hs)?, max_residual, end_residual })
    }

    /// Full-model Hamiltonian for the requested CD mode.
    pub fn hamiltonian(&self, cd: BellCd) -> Result<Box<dyn TimeHamiltonian>> {
        let h0 = self.h0_lambda();
        let lam = self.lambda();
        match cd {
            BellCd::None => Ok(Box::new(DrivenHamiltonian { h0, lambda: lam })),
            BellCd::Exact => {
                let opts = self.frame_options();
                let dim = self.dim();
                let h0_cd = self.h0_lambda();
                let lam_cd = self.lambda();
                let cd_drive = FnHamiltonian {
                    dim,
                    f: std::sync::Arc::new(move |t| {
                        cd_field_direct(&h0_cd, lam_cd.value(t), lam_cd.derivative(t), &opts)
                            .map(Operator::into_matrix)
                            .unwrap_or_else(|_| CMat::zeros(dim, dim))
                    }),
                    carrier: None,
                };
                Ok(Box::new(SumHamiltonian::new(vec![
                    Box::new(DrivenHamiltonian { h0, lambda: lam }),
                    Box::new(cd_drive),
                ])?))
            }
            BellCd::Ecd { omega } => {
                let ham = self.ecd_control_hamiltonian(omega)?;
                Ok(Box::new(WithCarrier::new(Box::new(ham), omega)))
            }
        }
    }

    /// The eCD-corrected model as a single control Hamiltonian over time:
    /// couplings gᵢ → gᵢ + δgᵢ(t) with δg₁ = s·√(2ω|h|)cos(ωt),
    /// δg₂ = √(2ω|h|)sin(ωt); the sign s of the extracted h(t) is absorbed as
    /// a π phase on the qubit-1 channel.
    pub fn ecd_control_hamiltonian(&self, omega: f64) -> Result<ControlHamiltonian> {
        let p = &self.params;
        let extraction = self.extract_h(801)?;
        let (t0, t1) = self.ramp.domain();
        // dominant sign of h over the ramp
        let mut sign = 1.0f64;
        let mut max_abs = 0.0f64;
        for k in 0..=200 {
            let t = t0 + (t1 - t0) * k as f64 / 200.0;
            let v = extraction.h.value(t);
            if v.abs() > max_abs {
                max_abs = v.abs();
                sign = if v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        let h_mag = {
            let h = extraction.h.clone();
            let h2 = extraction.h.clone();
            Schedule::from_fns(move |t| sign * h.value(t), move |t| sign * h2.derivative(t), (t0, t1))
        };
        let modulation = synthesize_ecd_bell(&h_mag, omega)?;
        let coeff_sz1 = self.lambda();
        let g1_mod = modulation.qubit1.scale(sign).add(&Schedule::constant(p.g1, (t0, t1)));
        let g2_mod = modulation.qubit2.add(&Schedule::constant(p.g2, (t0, t1)));
        // rebuild the static part without the couplings (they get their own
        // time-dependent coefficients now)
        let sz_sum = tensor(&tensor(&sigma_z(), &Self::id_q()), &self.id_r()).into_matrix()
            + tensor(&tensor(&Self::id_q(), &sigma_z()), &self.id_r()).into_matrix();
        let bare_static = Operator::hermitian(
            sz_sum * C64::new(p.omega_q2 / 2.0, 0.0)
                + tensor(&tensor(&Self::id_q(), &Self::id_q()), &number_op(p.n_ph)).into_matrix()
                    * C64::new(p.omega_r, 0.0),
        )?;
        ControlHamiltonian::new(vec![
            (coeff_sz1, self.sz1_half()),
            (Schedule::constant(1.0, (t0, t1)), bare_static),
            (g1_mod, self.coupling_op(1)),
            (g2_mod, self.coupling_op(2)),
        ])
    }

    /// The protocol Hamiltonian restricted to the single-excitation sector
    /// {|10,0⟩, |01,0⟩, |00,1⟩}. Every term conserves the total excitation
    /// number, so this restriction is exact for protocol states and makes long
    /// sweeps cheap (3×3 instead of 4·N_ph).
    pub fn single_excitation_hamiltonian(&self, cd: BellCd) -> Result<Box<dyn TimeHamiltonian>> {
        let idx = self.single_excitation_indices();
        let lam = self.lambda();
        match cd {
            BellCd::None => Ok(Box::new(DrivenHamiltonian {
                h0: self.h0_lambda().restrict(&idx)?,
                lambda: lam,
            })),
            BellCd::Exact => {
                let h0r = self.h0_lambda().restrict(&idx)?;
                let h0_cd = h0r.clone();
                let lam_cd = lam.clone();
                let opts = FrameOptions::default();
                let cd_drive = FnHamiltonian {
                    dim: 3,
                    f: std::sync::Arc::new(move |t| {
                        cd_field_direct(&h0_cd, lam_cd.value(t), lam_cd.derivative(t), &opts)
                            .map(Operator::into_matrix)
                            .unwrap_or_else(|_| CMat::zeros(3, 3))
                    }),
                    carrier: None,
                };
                Ok(Box::new(SumHamiltonian::new(vec![
                    Box::new(DrivenHamiltonian { h0: h0r, lambda: lam }),
                    Box::new(cd_drive),
                ])?))
            }
            BellCd::Ecd { omega } => {
                let full = self.ecd_control_hamiltonian(omega)?;
                Ok(Box::new(WithCarrier::new(Box::new(full.restrict(&idx)?), omega)))
            }
        }
    }

    /// Indices of the single-excitation sector {|10,0⟩, |01,0⟩, |00,1⟩}
    /// (qubit-1 excited, qubit-2 excited, one photon).
    pub fn single_excitation_indices(&self) -> [usize; 3] {
        [
            self.basis_index(true, false, 0),
            self.basis_index(false, true, 0),
            self.basis_index(false, false, 1),
        ]
    }

    /// |01, 0⟩ in the full space: the protocol's initial state for Ω₁ > Ω₂.
    pub fn initial_state(&self) -> CVec {
        let mut v = CVec::zeros(self.dim());
        v[self.basis_index(false, true, 0)] = C64::new(1.0, 0.0);
        v
    }

    /// Bell states (|01⟩ ± |10⟩)/√2 ⊗ |0_photons⟩.
    pub fn bell_state(&self, plus: bool) -> CVec {
        let mut v = CVec::zeros(self.dim());
        let s = 1.0 / 2f64.sqrt();
        v[self.basis_index(false, true, 0)] = C64::new(s, 0.0);
        v[self.basis_index(true, false, 0)] = C64::new(if plus { s } else { -s }, 0.0);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ramps::{ramp_schedule, RampKind};
    use crate::operator::{commutator_raw, fro_norm};
    use crate::propagate::{propagate_state, state_fidelity, StepPolicy, StoreMode};
    use crate::spectral::sorted_eigh;

    fn model(tau: f64) -> BellModel {
        let p = BellParams::default();
        let lambda0 = 0.05;
        let ramp = ramp_schedule(RampKind::Linear, p.omega_q2 + lambda0, p.omega_q2, tau).unwrap();
        BellModel::new(p, ramp).unwrap().0
    }

    #[test]
    fn effective_coupling_formula() {
        // g = 0.05, |Δ| = 0.5 → |g̃| = g²/|Δ| = 0.005
        let m = model(100.0);
        assert!((m.effective_coupling().abs() - 0.005).abs() < 1e-15);
        assert!(m.effective_coupling() < 0.0); // qubits below the resonator
    }

    #[test]
    fn excitation_number_is_conserved_including_ecd() {
        let m = model(200.0);
        let n_op = {
            let p = &m.params;
            let sz_sum = tensor(&tensor(&sigma_z(), &Operator::identity(2)), &Operator::identity(p.n_ph))
                .into_matrix()
                + tensor(&tensor(&Operator::identity(2), &sigma_z()), &Operator::identity(p.n_ph))
                    .into_matrix();
            // qubit excitations = (σz+1)/2 each
            let id = CMat::identity(m.dim(), m.dim());
            sz_sum * C64::new(0.5, 0.0)
                + &id
                + tensor(
                    &tensor(&Operator::identity(2), &Operator::identity(2)),
                    &number_op(p.n_ph),
                )
                .into_matrix()
        };
        let h_ecd = m.ecd_control_hamiltonian(5.0).unwrap();
        for t in [0.0, 37.0, 123.0, 200.0] {
            let h = h_ecd.at(t);
            let c = commutator_raw(&h, &n_op);
            assert!(fro_norm(&c) < 1e-12 * fro_norm(&h), "t={t}: ‖[H,N]‖ = {}", fro_norm(&c));
        }
    }

    #[test]
    fn avoided_crossing_width_matches_2_gtilde() {
        // g/Δ = 0.1: scan the single-excitation gap through resonance
        let m = model(100.0);
        let h3 = m.h0_lambda().restrict(&m.single_excitation_indices()).unwrap();
        let gt = m.effective_coupling().abs();
        let mut min_gap = f64::INFINITY;
        for k in 0..=400 {
            let lam = -4.0 * gt + 8.0 * gt * k as f64 / 400.0;
            let (vals, _) = sorted_eigh(&h3.at(lam));
            // the two qubit-like levels are the lowest two (photon level is Δ above)
            min_gap = min_gap.min(vals[1] - vals[0]);
        }
        assert!(
            (min_gap - 2.0 * gt).abs() < 0.1 * 2.0 * gt,
            "avoided crossing width {min_gap:.6e} vs 2g̃ = {:.6e}",
            2.0 * gt
        );
    }

    #[test]
    fn single_excitation_restriction_matches_full_model() {
        let m = model(150.0);
        let idx = m.single_excitation_indices();
        let full = m.hamiltonian(BellCd::None).unwrap();
        let restricted = m.h0_lambda().restrict(&idx).unwrap();
        let lam = m.lambda();
        for t in [0.0, 75.0, 150.0] {
            let hf = full.hamiltonian_at(t);
            let hr = restricted.at(lam.value(t));
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    assert!((hf[(i, j)] - hr[(a, b)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn adiabatic_ramp_maps_01_to_bell_plus() {
        // slow ramp: end state tracks the dressed eigenstate, which is |B₊⟩ up
        // to the O((g/Δ)²) photon dressing
        let tau = 60_000.0;
        let m = model(tau);
        let drive = m.single_excitation_hamiltonian(BellCd::None).unwrap();
        let h3 = m.h0_lambda().restrict(&m.single_excitation_indices()).unwrap();
        let lam = m.lambda();
        // bare |01⟩ (index 1 of the restricted basis) carries an O((g/Δ)²)
        // mismatch with the initial dressed eigenstate that no adiabaticity
        // removes; start from the eigenstate for the clean following metric
        let (_, vecs0) = sorted_eigh(&h3.at(lam.value(0.0)));
        let psi0 = vecs0.column(0).into_owned(); // |01⟩-like, lowest at λ > 0
        assert!(psi0[1].norm_sqr() > 0.95, "initial eigenstate should be |01⟩-like");
        let pol = StepPolicy { min_steps: 30_000, ..StepPolicy::default() };
        let res =
            propagate_state(drive.as_ref(), 0.0, tau, &psi0, &pol, StoreMode::Endpoints).unwrap();
        // |B₊⟩ in the restricted basis: (|10⟩ + |01⟩)/√2 = (e₀ + e₁)/√2
        let mut bell = CVec::zeros(3);
        bell[0] = C64::new(0.5f64.sqrt(), 0.0);
        bell[1] = C64::new(0.5f64.sqrt(), 0.0);
        let fid = state_fidelity(&bell, res.final_state()).unwrap();
        assert!(fid > 0.97, "Bell fidelity {fid}");
        // against the adiabatically-connected (dressed) eigenstate: near-perfect
        let (_, vecs1) = sorted_eigh(&h3.at(0.0));
        let target = vecs1.column(0).into_owned(); // B₊-like dressed state
        let fid_dressed = state_fidelity(&target, res.final_state()).unwrap();
        assert!(fid_dressed > 0.9999, "dressed-eigenstate fidelity {fid_dressed}");
    }

    #[test]
    fn extracted_h_is_positive_and_flip_flop_dominates() {
        let m = model(2000.0);
        let ex = m.extract_h(401).unwrap();
        let (t0, t1) = m.ramp.domain();
        let mut max_h = 0.0f64;
        for k in 0..=100 {
            let t = t0 + (t1 - t0) * k as f64 / 100.0;
            let v = ex.h.value(t);
            assert!(v >= -1e-12, "h({t}) = {v}");
            max_h = max_h.max(v);
        }
        assert!(max_h > 0.0);
        // "its major component is a time-dependent interaction": at the
        // crossing the remainder is the O(g/Δ) photon-channel CD (harmless —
        // transitions to the far-detuned photon level are gap-suppressed);
        // away from it the dressing terms gain relative weight but stay minor
        assert!(ex.end_residual < 0.25, "residual at resonance {}", ex.end_residual);
        assert!(ex.end_residual > 0.0);
        assert!(ex.max_residual < 0.5, "max residual {}", ex.max_residual);
    }

    #[test]
    fn resonant_eigenstates_are_bell_states() {
        // tracked frame across the crossing: at λ = 0 the two qubit-like
        // eigenstates are (|01⟩ ± |10⟩)/√2 up to the photon dressing
        let m = model(100.0);
        let h3 = m.h0_lambda().restrict(&m.single_excitation_indices()).unwrap();
        let gt = m.effective_coupling().abs();
        let grid: Vec<f64> = (0..=80).map(|k| -4.0 * gt + 8.0 * gt * k as f64 / 80.0).collect();
        let frame = crate::spectral::eigendecompose_continuous(
            &h3,
            &grid,
            &crate::spectral::FrameOptions::default(),
        )
        .unwrap();
        let k0 = frame
            .grid()
            .iter()
            .position(|&l| l.abs() < 1e-12)
            .expect("grid contains resonance");
        let v = frame.vectors(k0);
        let s = 0.5f64.sqrt();
        for (n, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            // restricted basis order: e₀ = |10⟩, e₁ = |01⟩
            let overlap = (v[(0, n)] * C64::new(s, 0.0) + v[(1, n)] * C64::new(sign * s, 0.0))
                .norm_sqr();
            assert!(overlap > 0.97, "state {n}: Bell overlap {overlap}");
        }
    }

    #[test]
    fn ramp_must_end_at_resonance() {
        let p = BellParams::default();
        let bad = ramp_schedule(RampKind::Linear, p.omega_q2 + 0.05, p.omega_q2 + 0.01, 10.0).unwrap();
        assert!(BellModel::new(p, bad).is_err());
    }

    #[test]
    fn dispersive_violation_warns_but_constructs() {
        let p = BellParams { omega_q2: 5.0 - 0.2, omega_r: 5.0, g1: 0.05, g2: 0.05, n_ph: 3 };
        let ramp = ramp_schedule(RampKind::Linear, p.omega_q2 + 0.01, p.omega_q2, 10.0).unwrap();
        let (_, warnings) = BellModel::new(p, ramp).unwrap();
        assert!(!warnings.is_empty());
    }

    #[test]
    fn ecd_effective_hamiltonian_reproduces_flip_flop_coupling() {
        // pure synthesized field (couplings' static part removed): its
        // one-period Floquet log restricted to the qubit single-excitation
        // pair must equal i·h(σ₁⁺σ₂⁻ − σ₁⁻σ₂⁺) within O(1/ω)
        let m = model(100.0);
        let h_val = 0.002;
        let h_const = Schedule::constant(h_val, (0.0, 100.0));
        for omega in [2.0, 4.0] {
            let modulation = synthesize_ecd_bell(&h_const, omega).unwrap();
            let c1 = m.coupling_op(1);
            let c2 = m.coupling_op(2);
            let drive = ControlHamiltonian::new(vec![
                (modulation.qubit1.clone(), c1),
                (modulation.qubit2.clone(), c2),
            ])
            .unwrap();
            let period = std::f64::consts::TAU / omega;
            let pol = StepPolicy::with_points_per_period(2048);
            let res = crate::propagate::propagate_unitary(&drive, 0.0, period, &pol,
                StoreMode::Endpoints).unwrap();
            let hf = crate::propagate::floquet_log(
                &Operator::unitary(res.final_state().clone()).unwrap(),
                period,
            )
            .unwrap();
            let i10 = m.basis_index(true, false, 0);
            let i01 = m.basis_index(false, true, 0);
            let got = hf.matrix()[(i10, i01)];
            // i·h·(σ₁⁺σ₂⁻)(10,01) element = i·h
            let want = C64::new(0.0, h_val);
            let rel = (got - want).norm() / h_val;
            assert!(rel < 2.0 / omega, "ω={omega}: coupling {got} vs {want} (rel {rel})");
        }
    }
}
