//! Next-generation-matrix analysis: the new-infection matrix `F`, the
//! transfer matrix `V`, the next-generation matrix `FV⁻¹`, its named
//! entries, and the basic reproduction number R0.
//!
//! The linearization works on the seven infected coordinates in the order
//! `(E_H, I_H, E_F, I_F, E_D, I_D, M)`. Two variants of `F` are supported:
//!
//! * [`R0Mode::PaperLiteral`] keeps the environmental column of `F`
//!   identically zero, so infection through the reservoir contributes to R0
//!   only via the shedding terms in `V` — the reservoir is treated as a
//!   transfer route, not a source of new infections.
//! * [`R0Mode::Corrected`] also linearizes the three environmental exposure
//!   routes at the disease-free point, adding `∂χ/∂M = rate·S*/c` terms
//!   (the saturation function has slope `1/c` at `M = 0`) to the
//!   environmental column.
//!
//! The closed-form R0 is assembled from twelve named entries of `FV⁻¹`
//! ([`REntries`]); only the dog–dog block `(R33, R35, R53, R55)` enters the
//! dominant eigenvalue, which solves the quadratic of that 2×2 block.

use nalgebra::SMatrix;
use thiserror::Error;

use crate::params::Params;

/// A 7×7 matrix over the infected coordinates `(E_H, I_H, E_F, I_F, E_D,
/// I_D, M)`.
pub type InfectedMatrix = SMatrix<f64, 7, 7>;

/// Which variant of the new-infection matrix `F` to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R0Mode {
    /// Environmental column of `F` identically zero.
    PaperLiteral,
    /// Environmental exposure linearized into column 7 of `F`.
    Corrected,
}

/// Errors raised by the NGM construction and the closed-form R0.
#[derive(Debug, Error, PartialEq)]
pub enum NgmError {
    /// A diagonal entry of the transfer matrix `V` is zero, so `V` is
    /// singular (it is lower triangular; its determinant is the diagonal
    /// product). `index` is the zero-based infected-coordinate index.
    #[error("transfer matrix V is singular: diagonal entry {index} is zero")]
    SingularTransfer { index: usize },
    /// The closed-form radicand came out negative. Cannot happen for
    /// non-negative entries — the radicand equals `(R33−R55)² + 4·R35·R53`
    /// — but guarded to keep the function total.
    #[error("closed-form R0 radicand is negative: {radicand}")]
    NegativeDiscriminant { radicand: f64 },
}

/// The twelve named entries of the next-generation matrix `FV⁻¹`, written
/// `R_ij` for the 1-based (row, column) position. Row 1 is new human
/// infections; rows 3 and 5 are new free-range-dog and domestic-dog
/// infections; columns 3–6 are the dog compartments `(E_F, I_F, E_D, I_D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct REntries {
    pub r13: f64,
    pub r14: f64,
    pub r15: f64,
    pub r16: f64,
    pub r33: f64,
    pub r34: f64,
    pub r35: f64,
    pub r36: f64,
    pub r53: f64,
    pub r54: f64,
    pub r55: f64,
    pub r56: f64,
}

/// The full decomposition: both factor matrices, the inverse transfer
/// matrix, the next-generation matrix, its named entries, and R0.
#[derive(Debug, Clone, PartialEq)]
pub struct NgmDecomposition {
    pub f_matrix: InfectedMatrix,
    pub v_matrix: InfectedMatrix,
    pub v_inverse: InfectedMatrix,
    /// `F · V⁻¹`; entrywise non-negative.
    pub ngm: InfectedMatrix,
    pub r_entries: REntries,
    /// Spectral radius of `ngm`.
    pub r0: f64,
}

/// Builds the new-infection matrix `F`: the derivative of the new-infection
/// inflow with respect to each infected coordinate, at the disease-free
/// point. Rows 1, 3, 5 (`E_H`, `E_F`, `E_D`) receive the force-of-infection
/// linearizations; all other rows are zero because progression, shedding,
/// and recovery are transfers, not new infections.
pub fn build_f(p: &Params, mode: R0Mode) -> InfectedMatrix {
    let s_h = p.theta1 / p.mu1;
    let s_f = p.theta2 / p.mu2;
    let s_d = p.theta3 / p.mu3;

    let mut f = InfectedMatrix::zeros();
    // Row E_H: ∂χ1/∂(I_F, I_D) at the disease-free point.
    f[(0, 3)] = p.tau1 * s_h;
    f[(0, 5)] = p.tau2 * s_h;
    // Row E_F: ∂χ2/∂(I_F, I_D).
    f[(2, 3)] = p.kappa1 * s_f;
    f[(2, 5)] = p.kappa2 * s_f;
    // Row E_D: ∂χ3/∂(I_F, I_D), damped by the deterrent coefficients.
    f[(4, 3)] = p.psi1 * s_d / (1.0 + p.rho1);
    f[(4, 5)] = p.psi2 * s_d / (1.0 + p.rho2);

    if mode == R0Mode::Corrected {
        // ∂χ/∂M at M = 0: the saturation slope there is 1/c.
        f[(0, 6)] = p.tau3 * s_h / p.c;
        f[(2, 6)] = p.kappa3 * s_f / p.c;
        f[(4, 6)] = p.psi3 * s_d / ((1.0 + p.rho3) * p.c);
    }
    f
}

/// Builds the transfer matrix `V`: outflow rates on the diagonal,
/// progression transfers on the sub-diagonal, and environmental shedding in
/// the last row. Lower triangular, so it is invertible exactly when every
/// diagonal entry is nonzero.
pub fn build_v(p: &Params) -> InfectedMatrix {
    let mut v = InfectedMatrix::zeros();
    v[(0, 0)] = p.mu1 + p.beta1 + p.beta2;
    v[(1, 1)] = p.sigma1 + p.mu1;
    v[(2, 2)] = p.mu2 + p.gamma;
    v[(3, 3)] = p.mu2 + p.sigma2;
    v[(4, 4)] = p.mu3 + p.gamma1 + p.gamma2;
    v[(5, 5)] = p.mu3 + p.sigma3;
    v[(6, 6)] = p.mu4;
    // Progression E → I within each host.
    v[(1, 0)] = -p.beta1;
    v[(3, 2)] = -p.gamma;
    v[(5, 4)] = -p.gamma1;
    // Shedding into the reservoir from the three infectious classes.
    v[(6, 1)] = -p.nu1;
    v[(6, 3)] = -p.nu2;
    v[(6, 5)] = -p.nu3;
    v
}

/// Evaluates the twelve named `FV⁻¹` entries from their closed forms.
///
/// Writing `a_f = μ2+γ`, `b_f = μ2+σ2` (free-range progression/removal),
/// `a_d = μ3+γ1+γ2`, `b_d = μ3+σ3` (domestic), each row factors as
/// (new-infection rate at the DFE) × (time spent infectious), with the
/// E-column entries additionally carrying the progression probability
/// `γ/a_f` or `γ1/a_d`:
pub fn r_entries(p: &Params) -> REntries {
    let s_h = p.theta1 / p.mu1;
    let s_f = p.theta2 / p.mu2;
    let s_d = p.theta3 / p.mu3;
    let a_f = p.mu2 + p.gamma;
    let b_f = p.mu2 + p.sigma2;
    let a_d = p.mu3 + p.gamma1 + p.gamma2;
    let b_d = p.mu3 + p.sigma3;

    REntries {
        r13: p.tau1 * s_h * p.gamma / (a_f * b_f),
        r14: p.tau1 * s_h / b_f,
        r15: p.tau2 * s_h * p.gamma1 / (a_d * b_d),
        r16: p.tau2 * s_h / b_d,
        r33: p.kappa1 * s_f * p.gamma / (a_f * b_f),
        r34: p.kappa1 * s_f / b_f,
        r35: p.kappa2 * s_f * p.gamma1 / (a_d * b_d),
        r36: p.kappa2 * s_f / b_d,
        r53: p.psi1 * s_d * p.gamma / ((1.0 + p.rho1) * a_f * b_f),
        r54: p.psi1 * s_d / ((1.0 + p.rho1) * b_f),
        r55: p.psi2 * s_d * p.gamma1 / ((1.0 + p.rho2) * a_d * b_d),
        r56: p.psi2 * s_d / ((1.0 + p.rho2) * b_d),
    }
}

/// Spectral radius: the largest eigenvalue modulus.
pub fn spectral_radius(m: &InfectedMatrix) -> f64 {
    // The QR eigenvalue iteration stagnates on the exact zero matrix (no
    // subdiagonal energy to deflate), so answer that case directly.
    if m.amax() == 0.0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Assembles the full decomposition `F`, `V`, `V⁻¹`, `FV⁻¹`, the named
/// entries, and the spectral-radius R0.
///
/// # Errors
///
/// [`NgmError::SingularTransfer`] if a diagonal entry of `V` is zero.
pub fn next_generation_matrix(
    p: &Params,
    mode: R0Mode,
) -> Result<NgmDecomposition, NgmError> {
    let f_matrix = build_f(p, mode);
    let v_matrix = build_v(p);
    for i in 0..7 {
        if v_matrix[(i, i)] == 0.0 {
            return Err(NgmError::SingularTransfer { index: i });
        }
    }
    let v_inverse = v_matrix
        .lu()
        .try_inverse()
        .ok_or(NgmError::SingularTransfer { index: 0 })?;
    let ngm = f_matrix * v_inverse;
    let r0 = spectral_radius(&ngm);
    Ok(NgmDecomposition {
        f_matrix,
        v_matrix,
        v_inverse,
        ngm,
        r_entries: r_entries(p),
        r0,
    })
}

/// Closed-form R0: the dominant eigenvalue of the dog–dog block of `FV⁻¹`,
///
/// ```text
/// R0 = ((R55 + R33) + sqrt(R33·(R33 − 2·R55) + 4·R35·R53 + R55²)) / 2
/// ```
///
/// The radicand rearranges to `(R33 − R55)² + 4·R35·R53 ≥ 0` for
/// non-negative entries, so the guard below cannot trip for valid
/// parameters; it exists to keep the function total.
///
/// # Errors
///
/// [`NgmError::NegativeDiscriminant`] if the radicand is negative.
pub fn r0_closed_form(p: &Params) -> Result<f64, NgmError> {
    let r = r_entries(p);
    let radicand = r.r33 * (r.r33 - 2.0 * r.r55) + 4.0 * r.r35 * r.r53
        + r.r55 * r.r55;
    if radicand < 0.0 {
        return Err(NgmError::NegativeDiscriminant { radicand });
    }
    Ok(((r.r55 + r.r33) + radicand.sqrt()) / 2.0)
}
