//! Finite-width square laser profiles solved exactly with 4×4 transfer
//! matrices. As the width l → 0 at fixed Ωl = u they reproduce the delta
//! amplitudes; with l = 0 the same machinery composes point couplings.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::amplitudes::{ChannelAmplitudes, LayoutKind};
use crate::error::{Error, Result};
use crate::model::{check_wavenumber, excited_wavenumber, AtomSpec};
use crate::numerics::exp_i;

/// Square profile of width `width` and Rabi frequency `rabi` centred at
/// `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareBarrierSpec {
    pub width: f64,
    pub rabi: f64,
    pub position: f64,
    pub atom: AtomSpec,
}

impl SquareBarrierSpec {
    /// Barrier with Ω = u / l, the finite-width stand-in for a delta laser of
    /// strength `u`.
    pub fn for_strength(u: f64, width: f64, position: f64, atom: AtomSpec) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid(format!("barrier width must be > 0, got {width}")));
        }
        if !(u.is_finite() && u >= 0.0) {
            return Err(Error::invalid(format!("laser strength must be >= 0, got {u}")));
        }
        Ok(Self { width, rabi: u / width, position, atom })
    }

    /// Ω·l.
    pub fn strength(&self) -> f64 {
        self.rabi * self.width
    }
}

type Mat4 = Matrix4<C64>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// sin(z)/z.
fn sinc(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// cos(√λ l) and sin(√λ l)/√λ, independent of the branch of √λ.
fn cos_sin_over(lambda: C64, l: f64) -> (C64, C64) {
    let s = lambda.sqrt();
    ((s * l).cos(), sinc(s * l) * l)
}

/// Applies the pair of scalar functions above to a 2×2 matrix through its
/// eigenvalues (Sylvester's formula).
fn matrix_cos_sin(w: &Matrix2<C64>, l: f64) -> (Matrix2<C64>, Matrix2<C64>) {
    let off = w[(0, 1)].norm() + w[(1, 0)].norm();
    if off == 0.0 {
        let (c0, s0) = cos_sin_over(w[(0, 0)], l);
        let (c1, s1) = cos_sin_over(w[(1, 1)], l);
        return (
            Matrix2::new(c0, c(0.0), c(0.0), c1),
            Matrix2::new(s0, c(0.0), c(0.0), s1),
        );
    }
    let half_tr = 0.5 * (w[(0, 0)] + w[(1, 1)]);
    let half_diff = 0.5 * (w[(0, 0)] - w[(1, 1)]);
    let root = (half_diff * half_diff + w[(0, 1)] * w[(1, 0)]).sqrt();
    let scale = w[(0, 0)].norm().max(w[(1, 1)].norm()).max(off);
    let id = Matrix2::identity();
    if root.norm() < 1e-7 * scale {
        // near an exceptional point: first-order expansion about the mean
        let h = 1e-4 * scale.max(1.0 / (l * l));
        let (c0, s0) = cos_sin_over(half_tr, l);
        let (cp, sp) = cos_sin_over(half_tr + h, l);
        let (cm, sm) = cos_sin_over(half_tr - h, l);
        let dc = (cp - cm) / (2.0 * h);
        let ds = (sp - sm) / (2.0 * h);
        let shifted = w - id * half_tr;
        return (id * c0 + shifted * dc, id * s0 + shifted * ds);
    }
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    let p1 = (w - id * l2) / (l1 - l2);
    let p2 = (w - id * l1) / (l2 - l1);
    let (c1, s1) = cos_sin_over(l1, l);
    let (c2, s2) = cos_sin_over(l2, l);
    (p1 * c1 + p2 * c2, p1 * s1 + p2 * s2)
}

/// Transfer matrix of the state (ψ₁, ψ₂, ψ₁', ψ₂') across a region of length
/// `len` where ψ'' = −W ψ with W = diag(k², q²) − (mΩ/ħ) σx.
fn region_transfer(k: f64, q: C64, coupling: f64, len: f64) -> Mat4 {
    let w = Matrix2::new(c(k * k), c(-coupling), c(-coupling), q * q);
    let (cm, sm) = matrix_cos_sin(&w, len);
    let ws = -(w * sm);
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&cm);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&sm);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&ws);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&cm);
    m
}

/// Derivative jump ψ'(+) − ψ'(−) = g σx ψ of a point coupling.
fn point_transfer(g: f64) -> Mat4 {
    let mut m = Mat4::identity();
    m[(2, 1)] = c(g);
    m[(3, 0)] = c(g);
    m
}

/// Columns: ground e^{ikx}, e^{−ikx}, excited e^{iqx}, e^{−iqx}, evaluated
/// with derivatives at `x`.
fn plane_waves(k: f64, q: C64, x: f64) -> Mat4 {
    let i = C64::new(0.0, 1.0);
    let kc = c(k);
    let ep = exp_i(kc * x);
    let em = exp_i(-kc * x);
    let qp = exp_i(q * x);
    let qm = exp_i(-q * x);
    let z = c(0.0);
    Mat4::new(
        ep, em, z, z, //
        z, z, qp, qm, //
        i * k * ep, -i * k * em, z, z, //
        z, z, i * q * qp, -i * q * qm,
    )
}

/// Solves for (r11, r12, t11, t12) given the total transfer matrix from
/// `x_left` to `x_right`.
fn solve_scattering(
    k: f64,
    atom: &AtomSpec,
    transfer: &Mat4,
    x_left: f64,
    x_right: f64,
    kind: LayoutKind,
) -> Result<ChannelAmplitudes> {
    let q = excited_wavenumber(k, atom)?;
    if q.norm() == 0.0 {
        return Err(Error::NumericalFailure("excited wavenumber is zero; plane-wave basis is degenerate".into()));
    }
    let left = transfer * plane_waves(k, q, x_left);
    let right = plane_waves(k, q, x_right);
    let mut sys = Mat4::zeros();
    sys.set_column(0, &left.column(1));
    sys.set_column(1, &left.column(3));
    sys.set_column(2, &(-right.column(0)));
    sys.set_column(3, &(-right.column(2)));
    let rhs: Vector4<C64> = -left.column(0);
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure(format!("singular matching system at k={k}")))?;
    if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(format!("non-finite matching solution at k={k}")));
    }
    Ok(ChannelAmplitudes {
        kind,
        k,
        q,
        reflect_ground: sol[0],
        reflect_excited: sol[1],
        transmit_ground: sol[2],
        transmit_excited: sol[3],
        lossless: atom.gamma() == 0.0,
        open_excited: atom.gamma() == 0.0 && q.im == 0.0 && q.re > 0.0,
    })
}

fn barrier_transfer(k: f64, q: C64, spec: &SquareBarrierSpec) -> Mat4 {
    let coupling = spec.atom.mass_over_hbar() * spec.rabi;
    region_transfer(k, q, coupling, spec.width)
}

/// Exact amplitudes for a single square profile.
pub fn square_barrier_amplitudes(k: f64, spec: &SquareBarrierSpec) -> Result<ChannelAmplitudes> {
    check_wavenumber(k)?;
    let q = excited_wavenumber(k, &spec.atom)?;
    let m = barrier_transfer(k, q, spec);
    let half = 0.5 * spec.width;
    solve_scattering(k, &spec.atom, &m, spec.position - half, spec.position + half, LayoutKind::Single)
}

/// Two identical square profiles centred at `spec.position` and
/// `spec.position + separation`, joined by a field-free gap.
pub fn double_square_barrier_amplitudes(k: f64, spec: &SquareBarrierSpec, separation: f64) -> Result<ChannelAmplitudes> {
    check_wavenumber(k)?;
    if !(separation.is_finite() && spec.width < separation / 10.0) {
        return Err(Error::invalid(format!(
            "barriers overlap or are too close: width {} must be < separation/10 = {}",
            spec.width,
            separation / 10.0
        )));
    }
    let q = excited_wavenumber(k, &spec.atom)?;
    let one = barrier_transfer(k, q, spec);
    let gap = region_transfer(k, q, 0.0, separation - spec.width);
    let m = one * gap * one;
    let half = 0.5 * spec.width;
    solve_scattering(
        k,
        &spec.atom,
        &m,
        spec.position - half,
        spec.position + separation + half,
        LayoutKind::Double,
    )
}

/// Amplitudes of one or two zero-width couplings, from the derivative-jump
/// matching conditions composed with free propagation. Exact; independent of
/// the closed-form expressions.
pub fn point_coupling_amplitudes(k: f64, atom: &AtomSpec, u: f64, positions: &[f64]) -> Result<ChannelAmplitudes> {
    check_wavenumber(k)?;
    let q = excited_wavenumber(k, atom)?;
    let jump = point_transfer(atom.coupling_wavenumber(u));
    match positions {
        [x] => solve_scattering(k, atom, &jump, *x, *x, LayoutKind::Single),
        [a, b] if b >= a => {
            let m = jump * region_transfer(k, q, 0.0, b - a) * jump;
            solve_scattering(k, atom, &m, *a, *b, LayoutKind::Double)
        }
        _ => Err(Error::invalid("expected one or two ordered positions")),
    }
}
