//! Linear stability analysis of the disease-free equilibrium: Jacobians,
//! the reduced quartic block and its Routh–Hurwitz conditions, the
//! G0/G2 block decomposition with the Metzler sign check, and an
//! eigenvalue-based classification.
//!
//! At the disease-free point the Jacobian is block-triangular with respect
//! to the (uninfected, infected) split: ordering the coordinates as the
//! five uninfected `(S_H, R_H, S_F, S_D, R_D)` followed by the seven
//! infected `(E_H, I_H, E_F, I_F, E_D, I_D, M)` gives
//!
//! ```text
//! J ~ [ G0  G1 ]
//!     [ 0   G2 ]
//! ```
//!
//! so its spectrum is the union of the `G0` and `G2` spectra. `G0` is upper
//! triangular with negative diagonal for any valid parameters; stability is
//! decided entirely by `G2`. When the three environmental transmission
//! rates vanish, `G2` splits further and the dog–dog subsystem
//! `(E_F, I_F, E_D, I_D)` carries the dominant eigenvalue; its
//! characteristic polynomial is the quartic whose Routh–Hurwitz conditions
//! are reported here.

use nalgebra::{Complex, SMatrix, SVector};

use crate::model::rhs;
use crate::params::Params;
use crate::state::{idx, StateVector};
use crate::tolerances::FD_JACOBIAN_RELSTEP;

/// A 12×12 Jacobian over the full state.
pub type FullJacobian = SMatrix<f64, 12, 12>;

/// Verdict of the eigenvalue classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    /// Every Jacobian eigenvalue has strictly negative real part.
    LocallyStable,
    /// Some eigenvalue has strictly positive real part.
    Unstable,
    /// The largest real part is exactly zero (a marginal case the linear
    /// test cannot decide).
    Inconclusive,
}

/// Routh–Hurwitz analysis of a monic quartic
/// `λ⁴ + c1·λ³ + c2·λ² + c3·λ + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhDetail {
    pub c1_positive: bool,
    pub c3_positive: bool,
    pub c0_positive: bool,
    /// The determinant condition `c1·c2·c3 > c3² + c1²·c0`.
    pub determinant_ok: bool,
    /// The complete criterion: all four conditions above.
    pub satisfied: bool,
    /// The weaker necessary-only check that every coefficient is positive,
    /// reported separately because some analyses stop there.
    pub all_coefficients_positive: bool,
}

/// The G0/G1/G2 decomposition at the disease-free point and the Metzler
/// sign check on the infected block.
#[derive(Debug, Clone, PartialEq)]
pub struct MetzlerCheck {
    /// Uninfected-block Jacobian over `(S_H, R_H, S_F, S_D, R_D)`.
    pub g0: SMatrix<f64, 5, 5>,
    /// Coupling block: derivatives of the uninfected equations with
    /// respect to the infected coordinates.
    pub g1: SMatrix<f64, 5, 7>,
    /// Infected-block Jacobian over `(E_H, I_H, E_F, I_F, E_D, I_D, M)`.
    pub g2: SMatrix<f64, 7, 7>,
    /// Real parts of the `G0` eigenvalues (imaginary parts vanish — the
    /// block is triangular).
    pub g0_eigenvalues: [f64; 5],
    /// True when every `G0` eigenvalue has negative real part.
    pub g0_stable: bool,
    /// True when every off-diagonal entry of `G2` is non-negative (the
    /// Metzler sign pattern).
    pub g2_offdiag_nonnegative: bool,
    /// `g0_stable && g2_offdiag_nonnegative`.
    pub verdict: bool,
}

/// Everything the disease-free stability analysis produces.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// All 12 eigenvalues of the Jacobian at the disease-free point,
    /// sorted by descending real part (ties by descending imaginary part).
    pub jacobian_eigenvalues: Vec<Complex<f64>>,
    pub max_real_part: f64,
    /// `(c1, c2, c3, c0)` of the reduced quartic.
    pub rh_coefficients: (f64, f64, f64, f64),
    pub rh_satisfied: bool,
    pub rh_all_coefficients_positive: bool,
    pub metzler_g0_eigs: [f64; 5],
    pub metzler_offdiag_ok: bool,
    pub classification: StabilityClass,
}

/// Central finite-difference Jacobian of `f` at `x`: column `j` perturbs
/// coordinate `j` by `relstep · max(|x_j|, 1)` in each direction. Exact for
/// affine maps (up to rounding).
pub fn fd_jacobian<const N: usize, F>(
    f: &F,
    x: &SVector<f64, N>,
    relstep: f64,
) -> SMatrix<f64, N, N>
where
    F: Fn(&SVector<f64, N>) -> SVector<f64, N>,
{
    let mut jac = SMatrix::<f64, N, N>::zeros();
    for j in 0..N {
        let h = relstep * x[j].abs().max(1.0);
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let column = (f(&xp) - f(&xm)) / (2.0 * h);
        jac.set_column(j, &column);
    }
    jac
}

/// The exact Jacobian of the model at the disease-free point, assembled
/// analytically. The force-of-infection terms contribute only through
/// their derivatives with respect to the infectious coordinates and `M`
/// (the susceptible-direction derivatives vanish because there is no
/// infection pressure at the DFE); the saturation slope at `M = 0` is
/// `1/c`.
fn analytic_dfe_jacobian(p: &Params) -> FullJacobian {
    let s_h = p.theta1 / p.mu1;
    let s_f = p.theta2 / p.mu2;
    let s_d = p.theta3 / p.mu3;
    let mut j = FullJacobian::zeros();

    // Humans.
    j[(idx::S_H, idx::S_H)] = -p.mu1;
    j[(idx::S_H, idx::R_H)] = p.beta3;
    j[(idx::S_H, idx::I_F)] = -p.tau1 * s_h;
    j[(idx::S_H, idx::I_D)] = -p.tau2 * s_h;
    j[(idx::S_H, idx::M)] = -p.tau3 * s_h / p.c;
    j[(idx::E_H, idx::E_H)] = -(p.mu1 + p.beta1 + p.beta2);
    j[(idx::E_H, idx::I_F)] = p.tau1 * s_h;
    j[(idx::E_H, idx::I_D)] = p.tau2 * s_h;
    j[(idx::E_H, idx::M)] = p.tau3 * s_h / p.c;
    j[(idx::I_H, idx::E_H)] = p.beta1;
    j[(idx::I_H, idx::I_H)] = -(p.sigma1 + p.mu1);
    j[(idx::R_H, idx::E_H)] = p.beta2;
    j[(idx::R_H, idx::R_H)] = -(p.beta3 + p.mu1);

    // Free-range dogs.
    j[(idx::S_F, idx::S_F)] = -p.mu2;
    j[(idx::S_F, idx::I_F)] = -p.kappa1 * s_f;
    j[(idx::S_F, idx::I_D)] = -p.kappa2 * s_f;
    j[(idx::S_F, idx::M)] = -p.kappa3 * s_f / p.c;
    j[(idx::E_F, idx::E_F)] = -(p.mu2 + p.gamma);
    j[(idx::E_F, idx::I_F)] = p.kappa1 * s_f;
    j[(idx::E_F, idx::I_D)] = p.kappa2 * s_f;
    j[(idx::E_F, idx::M)] = p.kappa3 * s_f / p.c;
    j[(idx::I_F, idx::E_F)] = p.gamma;
    j[(idx::I_F, idx::I_F)] = -(p.mu2 + p.sigma2);

    // Domestic dogs.
    let d1 = p.psi1 * s_d / (1.0 + p.rho1);
    let d2 = p.psi2 * s_d / (1.0 + p.rho2);
    let d3 = p.psi3 * s_d / ((1.0 + p.rho3) * p.c);
    j[(idx::S_D, idx::S_D)] = -p.mu3;
    j[(idx::S_D, idx::R_D)] = p.gamma3;
    j[(idx::S_D, idx::I_F)] = -d1;
    j[(idx::S_D, idx::I_D)] = -d2;
    j[(idx::S_D, idx::M)] = -d3;
    j[(idx::E_D, idx::E_D)] = -(p.mu3 + p.gamma1 + p.gamma2);
    j[(idx::E_D, idx::I_F)] = d1;
    j[(idx::E_D, idx::I_D)] = d2;
    j[(idx::E_D, idx::M)] = d3;
    j[(idx::I_D, idx::E_D)] = p.gamma1;
    j[(idx::I_D, idx::I_D)] = -(p.mu3 + p.sigma3);
    j[(idx::R_D, idx::E_D)] = p.gamma2;
    j[(idx::R_D, idx::R_D)] = -(p.gamma3 + p.mu3);

    // Environmental reservoir.
    j[(idx::M, idx::I_H)] = p.nu1;
    j[(idx::M, idx::I_F)] = p.nu2;
    j[(idx::M, idx::I_D)] = p.nu3;
    j[(idx::M, idx::M)] = -p.mu4;

    j
}

/// True when `state` is exactly the disease-free point of `p` (bitwise
/// component equality, which is how [`crate::equilibria::disease_free_equilibrium`]
/// constructs it).
fn is_exact_dfe(state: &StateVector, p: &Params) -> bool {
    state[idx::S_H] == p.theta1 / p.mu1
        && state[idx::S_F] == p.theta2 / p.mu2
        && state[idx::S_D] == p.theta3 / p.mu3
        && idx::INFECTED.iter().all(|&i| state[i] == 0.0)
        && state[idx::R_H] == 0.0
        && state[idx::R_D] == 0.0
}

/// The model Jacobian at `state`: the exact analytic matrix when `state`
/// is the disease-free point of `p`, otherwise central finite differences
/// of [`rhs`] with relative step
/// [`FD_JACOBIAN_RELSTEP`](crate::tolerances::FD_JACOBIAN_RELSTEP). The two
/// routes are cross-validated against each other in tests.
pub fn jacobian(state: &StateVector, p: &Params) -> FullJacobian {
    if is_exact_dfe(state, p) {
        analytic_dfe_jacobian(p)
    } else {
        fd_jacobian(&|y| rhs(0.0, y, p), state, FD_JACOBIAN_RELSTEP)
    }
}

/// The reduced 4×4 dog–dog block over `(E_F, I_F, E_D, I_D)` whose
/// characteristic polynomial is the stability quartic. Writing
/// `a4 = μ2+γ`, `a5 = μ2+σ2`, `a6 = μ3+γ1+γ2`, `a7 = μ3+σ3` and the
/// infection pressures `b1 = κ1θ2/μ2`, `b2 = ψ1θ3/((1+ρ1)μ3)`,
/// `b3 = κ2θ2/μ2`, `b4 = ψ2θ3/((1+ρ2)μ3)`:
///
/// ```text
/// [ -a4   b1   0    b3 ]
/// [  γ   -a5   0    0  ]
/// [  0    b2  -a6   b4 ]
/// [  0    0    γ1  -a7 ]
/// ```
pub fn reduced_quartic_block(p: &Params) -> SMatrix<f64, 4, 4> {
    let a4 = p.mu2 + p.gamma;
    let a5 = p.mu2 + p.sigma2;
    let a6 = p.mu3 + p.gamma1 + p.gamma2;
    let a7 = p.mu3 + p.sigma3;
    let b1 = p.kappa1 * p.theta2 / p.mu2;
    let b2 = p.psi1 * p.theta3 / ((1.0 + p.rho1) * p.mu3);
    let b3 = p.kappa2 * p.theta2 / p.mu2;
    let b4 = p.psi2 * p.theta3 / ((1.0 + p.rho2) * p.mu3);
    SMatrix::<f64, 4, 4>::from_row_slice(&[
        -a4, b1, 0.0, b3, //
        p.gamma, -a5, 0.0, 0.0, //
        0.0, b2, -a6, b4, //
        0.0, 0.0, p.gamma1, -a7,
    ])
}

/// Coefficients `(c1, c2, c3, c0)` of the characteristic polynomial
/// `λ⁴ + c1·λ³ + c2·λ² + c3·λ + c0` of [`reduced_quartic_block`], expanded
/// symbolically (tests confirm they match the block's numerically computed
/// characteristic polynomial).
pub fn quartic_coefficients(p: &Params) -> (f64, f64, f64, f64) {
    let a4 = p.mu2 + p.gamma;
    let a5 = p.mu2 + p.sigma2;
    let a6 = p.mu3 + p.gamma1 + p.gamma2;
    let a7 = p.mu3 + p.sigma3;
    let b1 = p.kappa1 * p.theta2 / p.mu2;
    let b2 = p.psi1 * p.theta3 / ((1.0 + p.rho1) * p.mu3);
    let b3 = p.kappa2 * p.theta2 / p.mu2;
    let b4 = p.psi2 * p.theta3 / ((1.0 + p.rho2) * p.mu3);
    let g = p.gamma;
    let g1 = p.gamma1;

    let c1 = a4 + a5 + a6 + a7;
    let c2 = a4 * a5 + a4 * a6 + a4 * a7 + a5 * a6 + a5 * a7 + a6 * a7
        - g * b1
        - g1 * b4;
    let c3 = (a6 + a7) * (a4 * a5 - g * b1) + (a4 + a5) * (a6 * a7 - g1 * b4);
    let c0 = g * g1 * b1 * b4 - g * g1 * b2 * b3 - g1 * a4 * a5 * b4
        - g * a6 * a7 * b1
        + a4 * a5 * a6 * a7;
    (c1, c2, c3, c0)
}

/// Routh–Hurwitz test for the monic quartic
/// `λ⁴ + c1·λ³ + c2·λ² + c3·λ + c0`: all roots have negative real parts
/// iff `c1 > 0`, `c3 > 0`, `c0 > 0`, and `c1·c2·c3 > c3² + c1²·c0`. The
/// weaker all-coefficients-positive check (necessary but not sufficient)
/// is reported alongside.
pub fn routh_hurwitz_quartic(c1: f64, c2: f64, c3: f64, c0: f64) -> RhDetail {
    let c1_positive = c1 > 0.0;
    let c3_positive = c3 > 0.0;
    let c0_positive = c0 > 0.0;
    let determinant_ok = c1 * c2 * c3 > c3 * c3 + c1 * c1 * c0;
    RhDetail {
        c1_positive,
        c3_positive,
        c0_positive,
        determinant_ok,
        satisfied: c1_positive && c3_positive && c0_positive && determinant_ok,
        all_coefficients_positive: c1 > 0.0 && c2 > 0.0 && c3 > 0.0 && c0 > 0.0,
    }
}

// Uninfected coordinate ordering for the block decomposition.
const UNINFECTED_ORDER: [usize; 5] =
    [idx::S_H, idx::R_H, idx::S_F, idx::S_D, idx::R_D];

/// Builds the `(G0, G1, G2)` decomposition of the DFE Jacobian and applies
/// the global-stability sign check: `G0` must be stable (its eigenvalues
/// are `{-μ1, -(β3+μ1), -μ2, -μ3, -(μ3+γ3)}`) and `G2` must be a Metzler
/// matrix (non-negative off-diagonals), which holds for any valid
/// parameters and fails only for constructed sign violations.
pub fn metzler_global_check(p: &Params) -> MetzlerCheck {
    let j = analytic_dfe_jacobian(p);

    let mut g0 = SMatrix::<f64, 5, 5>::zeros();
    let mut g1 = SMatrix::<f64, 5, 7>::zeros();
    let mut g2 = SMatrix::<f64, 7, 7>::zeros();
    for (r, &ri) in UNINFECTED_ORDER.iter().enumerate() {
        for (c, &ci) in UNINFECTED_ORDER.iter().enumerate() {
            g0[(r, c)] = j[(ri, ci)];
        }
        for (c, &ci) in idx::INFECTED.iter().enumerate() {
            g1[(r, c)] = j[(ri, ci)];
        }
    }
    for (r, &ri) in idx::INFECTED.iter().enumerate() {
        for (c, &ci) in idx::INFECTED.iter().enumerate() {
            g2[(r, c)] = j[(ri, ci)];
        }
    }

    let mut g0_eigenvalues = [0.0; 5];
    for (slot, z) in g0_eigenvalues
        .iter_mut()
        .zip(g0.complex_eigenvalues().iter())
    {
        *slot = z.re;
    }
    g0_eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let g0_stable = g0_eigenvalues.iter().all(|&re| re < 0.0);

    let mut g2_offdiag_nonnegative = true;
    for r in 0..7 {
        for c in 0..7 {
            if r != c && g2[(r, c)] < 0.0 {
                g2_offdiag_nonnegative = false;
            }
        }
    }

    MetzlerCheck {
        g0,
        g1,
        g2,
        g0_eigenvalues,
        g0_stable,
        g2_offdiag_nonnegative,
        verdict: g0_stable && g2_offdiag_nonnegative,
    }
}

/// Full local stability analysis at the disease-free point: all 12
/// Jacobian eigenvalues, the reduced-quartic Routh–Hurwitz conditions, the
/// Metzler sub-verdicts, and the eigenvalue classification
/// (stable iff the largest real part is negative, unstable iff positive,
/// inconclusive exactly at zero).
pub fn local_dfe_stability(p: &Params) -> StabilityReport {
    let j = analytic_dfe_jacobian(p);
    let mut eigenvalues: Vec<Complex<f64>> =
        j.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let max_real_part = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);

    let (c1, c2, c3, c0) = quartic_coefficients(p);
    let rh = routh_hurwitz_quartic(c1, c2, c3, c0);
    let metzler = metzler_global_check(p);

    let classification = if max_real_part < 0.0 {
        StabilityClass::LocallyStable
    } else if max_real_part > 0.0 {
        StabilityClass::Unstable
    } else {
        StabilityClass::Inconclusive
    };

    StabilityReport {
        jacobian_eigenvalues: eigenvalues,
        max_real_part,
        rh_coefficients: (c1, c2, c3, c0),
        rh_satisfied: rh.satisfied,
        rh_all_coefficients_positive: rh.all_coefficients_positive,
        metzler_g0_eigs: metzler.g0_eigenvalues,
        metzler_offdiag_ok: metzler.g2_offdiag_nonnegative,
        classification,
    }
}
