//! Time-ordered Schrödinger propagation and its oracles.
//!
//! The integrator is midpoint-exponential: each step applies the exact
//! exponential of the midpoint-sampled Hamiltonian, exp(−i·H(t+dt/2)·dt), so
//! unitarity is preserved exactly per step and the local error is O(dt³).
//! Also here: the adiabatic-frame coefficient ODE (used as a cross-validation
//! oracle), principal-log extraction of Floquet Hamiltonians from one-period
//! propagators, and state/gate fidelities.

use num_complex::Complex64 as C64;

use crate::control::ControlHamiltonian;
use crate::error::{Error, Result};
use crate::operator::{expm_i_raw, CMat, CVec, Operator};
use crate::schedule::Schedule;
use crate::spectral::{sorted_eigh, FrameOptions};

/// A time-dependent Hermitian Hamiltonian, evaluated at arbitrary times.
pub trait TimeHamiltonian: Send + Sync {
    fn dim(&self) -> usize;
    fn hamiltonian_at(&self, t: f64) -> CMat;
    /// Highest carrier angular frequency present, if any; drives the step
    /// policy and stroboscopic grid alignment.
    fn carrier_frequency(&self) -> Option<f64> {
        None
    }
}

impl TimeHamiltonian for ControlHamiltonian {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn hamiltonian_at(&self, t: f64) -> CMat {
        self.at(t)
    }
}

/// H(t) = H₀(λ(t)) — a control Hamiltonian over a sweep parameter composed
/// with the protocol schedule.
pub struct DrivenHamiltonian {
    pub h0: ControlHamiltonian,
    pub lambda: Schedule,
}

impl TimeHamiltonian for DrivenHamiltonian {
    fn dim(&self) -> usize {
        self.h0.dim()
    }
    fn hamiltonian_at(&self, t: f64) -> CMat {
        self.h0.at(self.lambda.value(t))
    }
}

/// Pointwise sum of parts (base drive + CD correction + oscillating fields).
pub struct SumHamiltonian {
    parts: Vec<Box<dyn TimeHamiltonian>>,
}

impl SumHamiltonian {
    pub fn new(parts: Vec<Box<dyn TimeHamiltonian>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("empty Hamiltonian sum".into()));
        }
        let dim = parts[0].dim();
        for p in &parts {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch(dim, p.dim()));
            }
        }
        Ok(Self { parts })
    }
}

impl TimeHamiltonian for SumHamiltonian {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }
    fn hamiltonian_at(&self, t: f64) -> CMat {
        let mut m = self.parts[0].hamiltonian_at(t);
        for p in &self.parts[1..] {
            m += p.hamiltonian_at(t);
        }
        m
    }
    fn carrier_frequency(&self) -> Option<f64> {
        self.parts
            .iter()
            .filter_map(|p| p.carrier_frequency())
            .fold(None, |acc, w| Some(acc.map_or(w, |a: f64| a.max(w))))
    }
}

/// Tags an inner Hamiltonian with a carrier frequency so the step policy
/// resolves against the oscillation period (used when the oscillation lives
/// inside coefficient schedules rather than a `PulseDrive`).
pub struct WithCarrier {
    inner: Box<dyn TimeHamiltonian>,
    carrier: f64,
}

impl WithCarrier {
    pub fn new(inner: Box<dyn TimeHamiltonian>, carrier: f64) -> Self {
        Self { inner, carrier }
    }
}

impl TimeHamiltonian for WithCarrier {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn hamiltonian_at(&self, t: f64) -> CMat {
        self.inner.hamiltonian_at(t)
    }
    fn carrier_frequency(&self) -> Option<f64> {
        Some(self.carrier)
    }
}

/// Closure-backed Hamiltonian for tests and one-off models.
pub struct FnHamiltonian {
    pub dim: usize,
    pub f: std::sync::Arc<dyn Fn(f64) -> CMat + Send + Sync>,
    pub carrier: Option<f64>,
}

impl TimeHamiltonian for FnHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn hamiltonian_at(&self, t: f64) -> CMat {
        (self.f)(t)
    }
    fn carrier_frequency(&self) -> Option<f64> {
        self.carrier
    }
}

/// Step-size policy. The resolved step satisfies
/// dt ≤ min(T_carrier/points_per_period, τ/min_steps, max_dt) and, when a
/// carrier is present, divides the carrier period exactly so that
/// stroboscopic times t₀ + nT land on grid points.
#[derive(Clone, Debug)]
pub struct StepPolicy {
    pub points_per_period: usize,
    pub min_steps: usize,
    pub max_dt: Option<f64>,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { points_per_period: 20, min_steps: 100, max_dt: None }
    }
}

impl StepPolicy {
    pub fn with_points_per_period(n: usize) -> Self {
        Self { points_per_period: n, ..Self::default() }
    }

    /// Resolve the actual step for a protocol of duration `tau`.
    pub fn resolve(&self, carrier: Option<f64>, tau: f64) -> f64 {
        let mut dt = tau / self.min_steps.max(1) as f64;
        if let Some(cap) = self.max_dt {
            dt = dt.min(cap);
        }
        if let Some(w) = carrier {
            let period = std::f64::consts::TAU / w;
            let per = period / self.points_per_period.max(20) as f64;
            dt = dt.min(per);
            // align so an integer number of steps covers one period
            let n_sub = (period / dt).ceil() as usize;
            dt = period / n_sub as f64;
        }
        dt
    }

    /// Doubled refinement of the same policy (self-convergence mode).
    pub fn refined(&self) -> Self {
        Self {
            points_per_period: self.points_per_period * 2,
            min_steps: self.min_steps * 2,
            max_dt: self.max_dt.map(|d| d / 2.0),
        }
    }
}

/// What to keep from a propagation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreMode {
    /// Every step.
    All,
    /// Every n-th step (plus the endpoint).
    Stride(usize),
    /// Initial and final state only.
    Endpoints,
}

/// A propagated trajectory: times and states (or accumulated unitaries).
#[derive(Clone, Debug)]
pub struct PropagationResult<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub step: f64,
    /// Model / pulse identification for provenance in outputs.
    pub metadata: String,
}

impl<S> PropagationResult<S> {
    pub fn final_state(&self) -> &S {
        self.states.last().expect("propagation stores at least the endpoint")
    }
}

fn check_finite(m: &CMat, t: f64) -> Result<()> {
    for z in m.iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFiniteSample { t });
        }
    }
    Ok(())
}

fn step_times(t0: f64, tau: f64, dt: f64) -> Vec<f64> {
    // n full steps plus a possibly-short last one covering exactly [t0, t0+tau]
    let n_full = (tau / dt - 1e-9).floor().max(0.0) as usize;
    let mut ts = Vec::with_capacity(n_full + 2);
    for k in 0..=n_full {
        ts.push(t0 + k as f64 * dt);
    }
    if ts.last().is_none_or(|&last| last < t0 + tau - 1e-12 * tau.abs()) {
        ts.push(t0 + tau);
    }
    ts
}

/// Propagate a state with midpoint-exponential steps.
pub fn propagate_state(
    h: &dyn TimeHamiltonian,
    t0: f64,
    tau: f64,
    psi0: &CVec,
    policy: &StepPolicy,
    store: StoreMode,
) -> Result<PropagationResult<CVec>> {
    if tau <= 0.0 {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized { norm_sq: norm * norm });
    }
    let dt = policy.resolve(h.carrier_frequency(), tau);
    let ts = step_times(t0, tau, dt);
    let stride = match store {
        StoreMode::All => 1,
        StoreMode::Stride(n) => n.max(1),
        StoreMode::Endpoints => usize::MAX,
    };
    let mut psi = psi0.clone();
    let mut times = vec![t0];
    let mut states = vec![psi.clone()];
    for (k, pair) in ts.windows(2).enumerate() {
        let (ta, tb) = (pair[0], pair[1]);
        let hm = h.hamiltonian_at(0.5 * (ta + tb));
        check_finite(&hm, 0.5 * (ta + tb))?;
        psi = expm_i_raw(&hm, tb - ta) * psi;
        let is_last = k + 2 == ts.len();
        if is_last || (stride != usize::MAX && (k + 1) % stride == 0) {
            times.push(tb);
            states.push(psi.clone());
        }
    }
    Ok(PropagationResult { times, states, step: dt, metadata: String::new() })
}

/// Propagate the full evolution operator U(t₀+τ, t₀).
pub fn propagate_unitary(
    h: &dyn TimeHamiltonian,
    t0: f64,
    tau: f64,
    policy: &StepPolicy,
    store: StoreMode,
) -> Result<PropagationResult<CMat>> {
    if tau <= 0.0 {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let n = h.dim();
    let dt = policy.resolve(h.carrier_frequency(), tau);
    let ts = step_times(t0, tau, dt);
    let stride = match store {
        StoreMode::All => 1,
        StoreMode::Stride(s) => s.max(1),
        StoreMode::Endpoints => usize::MAX,
    };
    let mut u = CMat::identity(n, n);
    let mut times = vec![t0];
    let mut states = vec![u.clone()];
    for (k, pair) in ts.windows(2).enumerate() {
        let (ta, tb) = (pair[0], pair[1]);
        let hm = h.hamiltonian_at(0.5 * (ta + tb));
        check_finite(&hm, 0.5 * (ta + tb))?;
        u = expm_i_raw(&hm, tb - ta) * u;
        let is_last = k + 2 == ts.len();
        if is_last || (stride != usize::MAX && (k + 1) % stride == 0) {
            times.push(tb);
            states.push(u.clone());
        }
    }
    Ok(PropagationResult { times, states, step: dt, metadata: String::new() })
}

/// Propagate with successively refined steps until the end-state fidelity
/// changes by less than `tol`; returns the converged trajectory and the last
/// fidelity change observed.
pub fn propagate_state_converged(
    h: &dyn TimeHamiltonian,
    t0: f64,
    tau: f64,
    psi0: &CVec,
    policy: &StepPolicy,
    store: StoreMode,
    tol: f64,
    max_refinements: usize,
) -> Result<(PropagationResult<CVec>, f64)> {
    let mut pol = policy.clone();
    let mut prev = propagate_state(h, t0, tau, psi0, &pol, store)?;
    let mut change = f64::INFINITY;
    for _ in 0..max_refinements {
        pol = pol.refined();
        let cur = propagate_state(h, t0, tau, psi0, &pol, store)?;
        change = 1.0 - state_fidelity(prev.final_state(), cur.final_state())?;
        prev = cur;
        if change.abs() < tol {
            break;
        }
    }
    Ok((prev, change))
}

/// Trajectory of adiabatic-frame expansion coefficients a_n(t), with the
/// instantaneous frame data at stored points.
#[derive(Clone, Debug)]
pub struct AdiabaticTrajectory {
    pub times: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub coeffs: Vec<CVec>,
    pub energies: Vec<Vec<f64>>,
    /// Gauge used for the stored coefficients (eigenvector columns).
    pub bases: Vec<CMat>,
}

impl AdiabaticTrajectory {
    pub fn populations(&self, k: usize) -> Vec<f64> {
        self.coeffs[k].iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Integrate the adiabatic-frame coefficient equation
///   da_n/dt = −i E_n a_n + i λ̇ b_n a_n − λ̇ Σ_{m≠n} ⟨n|∂_λH₀|m⟩/(E_m − E_n) a_m,
/// (b_n = i⟨n|∂_λ n⟩ the Berry connection in the transported gauge) with
/// classic RK4. Serves as an independent cross-validation oracle for
/// [`propagate_state`].
pub fn adiabatic_frame_propagate(
    h0: &ControlHamiltonian,
    lambda: &Schedule,
    a0: &CVec,
    t0: f64,
    tau: f64,
    n_steps: usize,
    options: &FrameOptions,
) -> Result<AdiabaticTrajectory> {
    if tau <= 0.0 || n_steps == 0 {
        return Err(Error::InvalidParameter("tau and n_steps must be positive".into()));
    }
    let dim = h0.dim();
    let dt = tau / n_steps as f64;
    let fd_delta = {
        let (lo, hi) = lambda.domain();
        ((hi - lo).abs().max(1.0)) * 1e-7
    };

    // reference basis for gauge continuity, committed after every full step
    let (mut ref_vals, mut ref_vecs) = sorted_eigh(&h0.at(lambda.value(t0)));
    let _ = &ref_vals;

    let eval_frame = |lam: f64, reference: &CMat| -> Result<(Vec<f64>, CMat)> {
        let (vals, vecs) = sorted_eigh(&h0.at(lam));
        let (perm, worst) = crate::spectral::match_states_pub(reference, &vecs);
        if worst <= options.min_overlap {
            return Err(Error::TrackingLost { lambda: lam, overlap: worst });
        }
        Ok(crate::spectral::align_to_pub(reference, &vals, &vecs, &perm))
    };

    let rhs = |t: f64, a: &CVec, reference: &CMat| -> Result<CVec> {
        let lam = lambda.value(t);
        let lam_dot = lambda.derivative(t);
        let (vals, vecs) = eval_frame(lam, reference)?;
        // gap guard on coupling denominators
        let range = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let floor = options.gap_floor_rel * range;
        let m = vecs.adjoint() * h0.derivative_at(lam) * &vecs;
        // Berry connection via centered difference in the local gauge
        let (_, vp) = eval_frame(lam + fd_delta, &vecs)?;
        let (_, vm) = eval_frame(lam - fd_delta, &vecs)?;
        let mut out = CVec::zeros(dim);
        for n in 0..dim {
            let mut b = C64::new(0.0, 0.0);
            for i in 0..dim {
                b += vecs[(i, n)].conj() * (vp[(i, n)] - vm[(i, n)]);
            }
            let berry = C64::i() * b / C64::new(2.0 * fd_delta, 0.0);
            let mut acc = (-C64::i() * C64::new(vals[n], 0.0)
                + C64::i() * C64::new(lam_dot, 0.0) * berry)
                * a[n];
            for mm in 0..dim {
                if mm == n {
                    continue;
                }
                let gap = vals[mm] - vals[n];
                if gap.abs() < floor {
                    return Err(Error::Degeneracy { lambda: lam, gap: gap.abs() });
                }
                acc -= C64::new(lam_dot, 0.0) * m[(n, mm)] / C64::new(gap, 0.0) * a[mm];
            }
            out[n] = acc;
        }
        Ok(out)
    };

    let mut a = a0.clone();
    let mut times = vec![t0];
    let mut lambdas = vec![lambda.value(t0)];
    let mut coeffs = vec![a.clone()];
    let mut energies = Vec::new();
    let mut bases = Vec::new();
    {
        let (v, b) = eval_frame(lambda.value(t0), &ref_vecs)?;
        energies.push(v);
        bases.push(b);
    }

    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        let k1 = rhs(t, &a, &ref_vecs)?;
        let k2 = rhs(t + 0.5 * dt, &(&a + &k1 * C64::new(0.5 * dt, 0.0)), &ref_vecs)?;
        let k3 = rhs(t + 0.5 * dt, &(&a + &k2 * C64::new(0.5 * dt, 0.0)), &ref_vecs)?;
        let k4 = rhs(t + dt, &(&a + &k3 * C64::new(dt, 0.0)), &ref_vecs)?;
        a += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
            * C64::new(dt / 6.0, 0.0);
        // commit the reference gauge at the end of the step
        let lam_next = lambda.value(t + dt);
        let (vals_next, vecs_next) = eval_frame(lam_next, &ref_vecs)?;
        ref_vals = vals_next;
        ref_vecs = vecs_next;
        times.push(t + dt);
        lambdas.push(lam_next);
        coeffs.push(a.clone());
        energies.push(ref_vals.clone());
        bases.push(ref_vecs.clone());
    }

    Ok(AdiabaticTrajectory { times, lambdas, coeffs, energies, bases })
}

/// H_F = (i/T)·log U via the Cayley transform A = i(I−U)(I+U)⁻¹ (Hermitian
/// for unitary U), whose eigenvalues tan(θ/2) recover the principal
/// eigenphases. Errors when any eigenphase is within 0.1 of the ±π branch cut.
pub fn floquet_log(u_period: &Operator, period: f64) -> Result<Operator> {
    let defect = crate::operator::unitarity_defect(u_period.matrix());
    if defect > 1e-8 {
        return Err(Error::NotUnitary { defect });
    }
    let n = u_period.dim();
    let id = CMat::identity(n, n);
    let plus = &id + u_period.matrix();
    let minus = &id - u_period.matrix();
    let inv = plus
        .lu()
        .try_inverse()
        .ok_or(Error::BranchCut { phase: std::f64::consts::PI })?;
    let a = (minus * inv) * C64::i();
    let a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let (tans, vecs) = sorted_eigh(&a);
    let mut hf = CMat::zeros(n, n);
    for k in 0..n {
        let theta = 2.0 * tans[k].atan();
        if theta.abs() > std::f64::consts::PI - 0.1 {
            return Err(Error::BranchCut { phase: theta });
        }
        let e = -theta / period;
        for i in 0..n {
            for j in 0..n {
                hf[(i, j)] += vecs[(i, k)] * C64::new(e, 0.0) * vecs[(j, k)].conj();
            }
        }
    }
    Operator::hermitian(hf)
}

/// |⟨ψ|φ⟩|² for normalized states.
pub fn state_fidelity(psi: &CVec, phi: &CVec) -> Result<f64> {
    for v in [psi, phi] {
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > 1e-8 {
            return Err(Error::Unnormalized { norm_sq: n2 });
        }
    }
    Ok(psi.dotc(phi).norm_sqr())
}

/// Global-phase-invariant subspace gate fidelity |Tr(P U† V P)/Tr(P)|².
pub fn gate_fidelity(u: &Operator, v: &Operator, p: &Operator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(u.dim(), v.dim()));
    }
    if u.dim() != p.dim() {
        return Err(Error::DimensionMismatch(u.dim(), p.dim()));
    }
    // P must be an orthogonal projector
    let idem = p.matrix() * p.matrix() - p.matrix();
    let defect = idem.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let herm = crate::operator::hermiticity_defect(p.matrix());
    if defect > 1e-10 || herm > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "P is not an orthogonal projector (idempotency defect {defect:.2e}, hermiticity {herm:.2e})"
        )));
    }
    let tr_p: f64 = (0..p.dim()).map(|i| p.matrix()[(i, i)].re).sum();
    if tr_p <= 0.0 {
        return Err(Error::InvalidParameter("projector has zero trace".into()));
    }
    let m = p.matrix() * u.matrix().adjoint() * v.matrix() * p.matrix();
    let tr: C64 = (0..p.dim()).map(|i| m[(i, i)]).sum();
    Ok((tr / C64::new(tr_p, 0.0)).norm_sqr())
}

/// Lowest-energy eigenpair of a Hermitian matrix.
pub fn ground_state(m: &CMat) -> (f64, CVec) {
    let (vals, vecs) = sorted_eigh(m);
    (vals[0], vecs.column(0).into_owned())
}
