use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not Hermitian (max asymmetry {asym:.3e}, scale {scale:.3e})")]
    NotHermitian { asym: f64, scale: f64 },

    #[error("matrix is not unitary (max |U†U - I| = {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("near-degenerate spectrum at λ = {lambda:.6e}: gap {gap:.3e} below floor {floor:.3e}")]
    NearDegeneracy { lambda: f64, gap: f64, floor: f64 },

    #[error("degenerate pair within one symmetry sector at λ = {lambda:.6e} (gap {gap:.3e})")]
    Degeneracy { lambda: f64, gap: f64 },

    #[error("eigenphase {phase:.4} too close to ±π branch cut (margin 0.1); reduce the period")]
    BranchCut { phase: f64 },

    #[error("state is not normalized: |ψ|² = {norm_sq:.6e}")]
    Unnormalized { norm_sq: f64 },

    #[error("non-finite Hamiltonian sample at t = {t:.6e}")]
    NonFiniteSample { t: f64 },

    #[error("eigenstate tracking lost continuity near λ = {lambda:.6e} (best overlap {overlap:.3})")]
    TrackingLost { lambda: f64, overlap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
