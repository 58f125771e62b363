//! Dense Hermitian linear algebra on raw complex matrices.
//!
//! Everything here works on `DMatrix<Complex<f64>>`. Callers that carry
//! register labels live in [`crate::operator`]; this module is the numerical
//! floor underneath: eigendecompositions, matrix functions through the
//! spectral calculus, norms, and fidelity-type overlaps.

use crate::{C64, CMat};
use nalgebra::DVector;

/// Relative eigenvalue cutoff under which a PSD operator's eigenvalue is
/// treated as exact kernel by pseudo-inverse style matrix functions.
pub const KERNEL_CUTOFF: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Max entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> C64 {
    let mut t = C64::new(0.0, 0.0);
    for i in 0..m.nrows() {
        t += m[(i, i)];
    }
    t
}

pub fn trace_re(m: &CMat) -> f64 {
    trace(m).re
}

/// Real inner product `Re tr(a† b)` on the space of complex matrices.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        s += x.conj().re * y.re - (-x.im) * y.im; // Re(conj(x)*y)
    }
    s
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized first
/// so antisymmetric rounding noise cannot leak into the spectrum.
/// Returns eigenvalues (ascending) and the unitary of eigenvectors (columns).
pub fn herm_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let h = hermitian_part(m);
    let se = nalgebra::SymmetricEigen::new(h);
    // nalgebra does not guarantee ordering; sort ascending.
    let n = se.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn max_eigval(m: &CMat) -> f64 {
    let (vals, _) = herm_eigen(m);
    vals[vals.len() - 1]
}

pub fn min_eigval(m: &CMat) -> f64 {
    let (vals, _) = herm_eigen(m);
    vals[0]
}

/// Apply a real scalar function to a Hermitian matrix through its spectrum.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = herm_eigen(m);
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = cr(f(vals[i]));
    }
    &vecs * d * vecs.adjoint()
}

/// Complex power `a^z` of a PSD matrix via the spectral calculus.
///
/// Eigenvalues at or below `KERNEL_CUTOFF` times the largest eigenvalue are
/// mapped to 0 (Moore–Penrose convention, also for negative real parts).
pub fn psd_power(a: &CMat, z: C64) -> CMat {
    let (vals, vecs) = herm_eigen(a);
    let n = vals.len();
    let vmax = vals[n - 1].max(0.0);
    let cut = KERNEL_CUTOFF * vmax;
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        let lam = vals[i];
        if lam > cut && lam > 0.0 {
            // lam^z = exp(z ln lam)
            let w = (z * cr(lam.ln())).exp();
            d[(i, i)] = w;
        }
    }
    &vecs * d * vecs.adjoint()
}

/// `sqrt` of a PSD matrix (kernel stays kernel).
pub fn psd_sqrt(a: &CMat) -> CMat {
    psd_power(a, cr(0.5))
}

/// Matrix exponential of a Hermitian matrix.
pub fn herm_exp(m: &CMat) -> CMat {
    herm_fn(m, f64::exp)
}

/// `exp(z m)` for Hermitian `m` and complex scalar `z`.
pub fn herm_exp_scaled(m: &CMat, z: C64) -> CMat {
    let (vals, vecs) = herm_eigen(m);
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = (z * cr(vals[i])).exp();
    }
    &vecs * d * vecs.adjoint()
}

/// Natural log of a PSD matrix on its support (kernel maps to 0).
pub fn psd_log(a: &CMat) -> CMat {
    let (vals, vecs) = herm_eigen(a);
    let n = vals.len();
    let vmax = vals[n - 1].max(0.0);
    let cut = KERNEL_CUTOFF * vmax;
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        if vals[i] > cut && vals[i] > 0.0 {
            d[(i, i)] = cr(vals[i].ln());
        }
    }
    &vecs * d * vecs.adjoint()
}

/// Projector onto the strictly positive eigenspace (relative cutoff).
pub fn support_projector(a: &CMat) -> CMat {
    let (vals, vecs) = herm_eigen(a);
    let n = vals.len();
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let cut = KERNEL_CUTOFF * vmax;
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        if vals[i] > cut && vals[i] > 0.0 {
            d[(i, i)] = cr(1.0);
        }
    }
    &vecs * d * vecs.adjoint()
}

/// Positive part `(x)⁺` and the projector onto the strictly positive
/// eigenspace of a Hermitian matrix.
pub fn positive_part(x: &CMat) -> (CMat, CMat) {
    let (vals, vecs) = herm_eigen(x);
    let n = vals.len();
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cut = KERNEL_CUTOFF * scale;
    let mut dp = CMat::zeros(n, n);
    let mut dsup = CMat::zeros(n, n);
    for i in 0..n {
        if vals[i] > cut {
            dp[(i, i)] = cr(vals[i]);
            dsup[(i, i)] = cr(1.0);
        }
    }
    ((&vecs * dp * vecs.adjoint()), (&vecs * dsup * vecs.adjoint()))
}

/// Trace norm `‖x‖₁ = tr √(x†x)` via singular values.
pub fn trace_norm(x: &CMat) -> f64 {
    x.clone().singular_values().iter().sum()
}

/// Operator norm (largest singular value).
pub fn op_norm(x: &CMat) -> f64 {
    x.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn herm_trace_norm(x: &CMat) -> f64 {
    let (vals, _) = herm_eigen(x);
    vals.iter().map(|v| v.abs()).sum()
}

/// Root fidelity `‖√p √q‖₁` between PSD matrices.
pub fn root_fidelity(p: &CMat, q: &CMat) -> f64 {
    let sp = psd_sqrt(p);
    let sq = psd_sqrt(q);
    trace_norm(&(sp * sq))
}

/// Uhlmann fidelity `F(p,q) = ‖√p √q‖₁²`.
pub fn fidelity(p: &CMat, q: &CMat) -> f64 {
    let r = root_fidelity(p, q);
    r * r
}

/// Identity matrix of size n.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Solve the divided-difference (Daleckii–Krein) contraction for a function
/// `f` at a Hermitian matrix `h`: returns the derivative `Df(h)[k]` of
/// `f(h)` in direction `k`.
///
/// `f` and `df` are the scalar function and its derivative.
pub fn daleckii_krein(
    h: &CMat,
    k: &CMat,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> CMat {
    let (vals, vecs) = herm_eigen(h);
    let n = vals.len();
    let kt = vecs.adjoint() * k * &vecs;
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (vals[i], vals[j]);
            let phi = if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                (f(a) - f(b)) / (a - b)
            } else {
                df(0.5 * (a + b))
            };
            out[(i, j)] = kt[(i, j)] * cr(phi);
        }
    }
    &vecs * out * vecs.adjoint()
}

/// Gradient of `Q ↦ ‖√P √Q‖₁` at a PSD `Q` (Hermitian part), via the polar
/// decomposition of `√P√Q` and the divided-difference derivative of the
/// matrix square root.
pub fn root_fidelity_gradient(p: &CMat, q: &CMat) -> CMat {
    let sp = psd_sqrt(p);
    let sq = psd_sqrt(q);
    let m = &sp * &sq;
    // polar: M = U |M| from the SVD M = W Σ V†, U = W V†
    let svd = m.clone().svd(true, true);
    let w = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let u = &w * &vt;
    // d‖M‖₁ = Re tr(U† √P d√Q); gradient via the self-adjoint divided
    // difference of sqrt at Q
    let a = u.adjoint() * &sp;
    let g = daleckii_krein(
        q,
        &hermitian_part(&a),
        |x| if x > 0.0 { x.sqrt() } else { 0.0 },
        |x| if x > 1e-300 { 0.5 / x.sqrt() } else { 0.0 },
    );
    hermitian_part(&g)
}

/// Orthonormal basis of the null space of `m` (columns), with a
/// singular-value cutoff `tol` relative to the largest singular value.
///
/// Works through the Gram matrix `m† m`, whose small-eigenvalue eigenvectors
/// span the null space (singular values are the square roots).
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return eye(ncols);
    }
    let gram = m.adjoint() * m;
    let (vals, vecs) = herm_eigen(&gram);
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let cut2 = if vmax > 0.0 { tol * tol * vmax } else { tol * tol };
    let cols: Vec<usize> = (0..ncols).filter(|&i| vals[i] <= cut2).collect();
    let mut out = CMat::zeros(ncols, cols.len());
    for (c, &i) in cols.iter().enumerate() {
        out.set_column(c, &vecs.column(i));
    }
    out
}

/// Projection of a real vector onto `{x ≥ 0, Σx = s}` (scaled simplex).
pub fn project_simplex_eq(v: &[f64], s: f64) -> Vec<f64> {
    // standard threshold algorithm
    let n = v.len();
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for i in 0..n {
        css += u[i];
        let t = (css - s) / (i as f64 + 1.0);
        if u[i] - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projection of a real vector onto `{x ≥ 0, Σx ≤ s}`.
pub fn project_simplex_le(v: &[f64], s: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    let tot: f64 = clipped.iter().sum();
    if tot <= s {
        clipped
    } else {
        project_simplex_eq(v, s)
    }
}

/// Frobenius projection onto the PSD cone.
pub fn project_psd(m: &CMat) -> CMat {
    herm_fn(m, |x| x.max(0.0))
}

/// Frobenius projection onto `{X ⪰ 0, tr X = t}`.
pub fn project_psd_trace_eq(m: &CMat, t: f64) -> CMat {
    let (vals, vecs) = herm_eigen(m);
    let clipped = project_simplex_eq(vals.as_slice(), t);
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = cr(clipped[i]);
    }
    &vecs * d * vecs.adjoint()
}

/// Frobenius projection onto `{X ⪰ 0, tr X ≤ t}`.
pub fn project_psd_trace_le(m: &CMat, t: f64) -> CMat {
    let (vals, vecs) = herm_eigen(m);
    let clipped = project_simplex_le(vals.as_slice(), t);
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = cr(clipped[i]);
    }
    &vecs * d * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat2(a: f64, b: C64, d: f64) -> CMat {
        CMat::from_row_slice(2, 2, &[cr(a), b, b.conj(), cr(d)])
    }

    #[test]
    fn eigen_of_pauli_x_like() {
        let m = mat2(0.0, cr(1.0), 0.0);
        let (vals, vecs) = herm_eigen(&m);
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let rec = &vecs
            * CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(vals[0]), cr(vals[1])]))
            * vecs.adjoint();
        assert!(frob_norm(&(rec - m)) < 1e-12);
    }

    #[test]
    fn complex_eigen_hermitian() {
        let m = mat2(1.0, c(0.3, 0.4), 2.0);
        let (vals, vecs) = herm_eigen(&m);
        let rec = &vecs
            * CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(vals[0]), cr(vals[1])]))
            * vecs.adjoint();
        assert!(frob_norm(&(rec - m)) < 1e-12);
    }

    #[test]
    fn sqrt_of_diag() {
        let m = mat2(4.0, cr(0.0), 9.0);
        let s = psd_sqrt(&m);
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((s[(1, 1)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_exponent_addition_on_support() {
        // A^{(1-it)/2} A^{(1+it)/2} = A for PSD A, t = 0.7
        let g = CMat::from_fn(3, 3, |i, j| c((i + 2 * j) as f64 * 0.31 - 1.0, (i * j) as f64 * 0.17));
        let a = &g * g.adjoint();
        let t = 0.7;
        let p1 = psd_power(&a, c(0.5, -0.5 * t));
        let p2 = psd_power(&a, c(0.5, 0.5 * t));
        assert!(frob_norm(&(&p1 * &p2 - &a)) < 1e-8 * frob_norm(&a).max(1.0));
    }

    #[test]
    fn trace_norm_and_positive_part_identity() {
        // for traceless hermitian x: tr((x)+) = ||x||_1 / 2
        let g = CMat::from_fn(2, 2, |i, j| c((i + j) as f64 * 0.4, (i as f64 - j as f64) * 0.2));
        let mut x = hermitian_part(&g);
        let t = trace_re(&x) / 2.0;
        x[(0, 0)] -= cr(t);
        x[(1, 1)] -= cr(t);
        let (pos, _) = positive_part(&x);
        assert!((trace_re(&pos) - herm_trace_norm(&x) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn null_space_of_rank_one() {
        let mut m = CMat::zeros(1, 3);
        m[(0, 0)] = cr(1.0);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        // columns orthonormal, orthogonal to e0
        for c0 in 0..2 {
            assert!(ns[(0, c0)].norm() < 1e-12);
        }
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex_eq(&[0.4, 0.8], 1.0);
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.7).abs() < 1e-12);
        let q = project_simplex_le(&[0.2, 0.3], 1.0);
        assert!((q[0] - 0.2).abs() < 1e-12 && (q[1] - 0.3).abs() < 1e-12);
    }
}
