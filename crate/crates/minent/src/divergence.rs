//! Relative-entropy-family quantities between positive operators.
//!
//! All values are in nats. Support violations yield `+∞` as a value, never an
//! error and never a NaN, since the chain-rule pipelines rely on infinity
//! propagating through comparisons.

use crate::linalg::{self, cr, KERNEL_CUTOFF};
use crate::operator::{LabeledOperator, QuantumState};
use crate::{CMat, Error, Result};

/// Result of a divergence computation.
#[derive(Debug, Clone)]
pub struct DivergenceResult {
    /// Value in nats; `f64::INFINITY` encodes a support violation.
    pub value: f64,
    /// Optimizer where one exists: the variational witness ω for the measured
    /// relative entropy, the test operator P for the observational divergence.
    pub witness: Option<LabeledOperator>,
    /// False when an iterative optimizer hit its cap before its tolerance.
    pub converged: bool,
}

impl DivergenceResult {
    fn exact(value: f64) -> Self {
        DivergenceResult {
            value,
            witness: None,
            converged: true,
        }
    }
}

fn check_same_dim(p: &CMat, q: &CMat) -> Result<()> {
    if p.nrows() != q.nrows() {
        return Err(Error::Labeling(format!(
            "operators of dimension {} and {} in a divergence",
            p.nrows(),
            q.nrows()
        )));
    }
    Ok(())
}

/// `tr(Π_ker(q) p) / tr p`, the relative mass of `p` outside the support of `q`.
fn support_leak(p: &CMat, q: &CMat) -> f64 {
    let piq = linalg::support_projector(q);
    let d = p.nrows();
    let ker = linalg::eye(d) - piq;
    let leak = linalg::inner(&ker, p);
    let tp = linalg::trace_re(p).max(1e-300);
    leak / tp
}

const SUPPORT_TOL: f64 = 1e-9;

/// Quantum relative entropy `D(p‖q) = tr(p log p − p log q)/tr p`, `+∞` when
/// the support of `p` leaks out of the support of `q`.
pub fn relative_entropy(p: &QuantumState, q: &LabeledOperator) -> Result<DivergenceResult> {
    check_same_dim(p.matrix(), q.matrix())?;
    let tp = p.trace();
    if tp <= 0.0 {
        return Err(Error::Precondition(
            "relative entropy of a zero state".into(),
        ));
    }
    if support_leak(p.matrix(), q.matrix()) > SUPPORT_TOL {
        return Ok(DivergenceResult::exact(f64::INFINITY));
    }
    let (vals, _) = linalg::herm_eigen(p.matrix());
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let plogp: f64 = vals
        .iter()
        .filter(|&&v| v > KERNEL_CUTOFF * vmax && v > 0.0)
        .map(|&v| v * v.ln())
        .sum();
    let logq = linalg::psd_log(q.matrix());
    let plogq = linalg::inner(p.matrix(), &logq);
    Ok(DivergenceResult::exact((plogp - plogq) / tp))
}

/// Max-relative entropy `D_max(p‖q) = inf{λ : p ≤ e^λ q}`, computed as the
/// log of the largest eigenvalue of `q^{−1/2} p q^{−1/2}` on the support.
pub fn max_relative_entropy(p: &LabeledOperator, q: &LabeledOperator) -> Result<DivergenceResult> {
    check_same_dim(p.matrix(), q.matrix())?;
    if linalg::trace_re(p.matrix()) <= 0.0 {
        return Ok(DivergenceResult::exact(f64::NEG_INFINITY));
    }
    if support_leak(p.matrix(), q.matrix()) > SUPPORT_TOL {
        return Ok(DivergenceResult::exact(f64::INFINITY));
    }
    let qm = linalg::psd_power(q.matrix(), cr(-0.5));
    let m = &qm * p.matrix() * &qm;
    let lam = linalg::max_eigval(&m);
    Ok(DivergenceResult::exact(lam.max(0.0).ln()))
}

/// Sandwiched α-Rényi relative entropy for `α ∈ [1/2,1) ∪ (1,∞]`.
///
/// `α = ∞` delegates to [`max_relative_entropy`]; `|α−1| ≤ 1e-6` delegates to
/// [`relative_entropy`].
pub fn sandwiched_divergence(
    p: &QuantumState,
    q: &LabeledOperator,
    alpha: f64,
) -> Result<DivergenceResult> {
    check_same_dim(p.matrix(), q.matrix())?;
    if alpha.is_infinite() && alpha > 0.0 {
        return max_relative_entropy(p.op(), q);
    }
    if (alpha - 1.0).abs() <= 1e-6 {
        return relative_entropy(p, q);
    }
    if !(0.5..1.0).contains(&alpha) && alpha <= 1.0 {
        return Err(Error::Parameter(format!(
            "sandwiched divergence needs α in [1/2,1)∪(1,∞], got {alpha}"
        )));
    }
    let tp = p.trace();
    if tp <= 0.0 {
        return Err(Error::Precondition(
            "sandwiched divergence of a zero state".into(),
        ));
    }
    if alpha > 1.0 && support_leak(p.matrix(), q.matrix()) > SUPPORT_TOL {
        return Ok(DivergenceResult::exact(f64::INFINITY));
    }
    let alpha_prime = (alpha - 1.0) / alpha;
    let qp = linalg::psd_power(q.matrix(), cr(-alpha_prime / 2.0));
    let inner = &qp * p.matrix() * &qp;
    if alpha < 1.0 {
        // orthogonality test: P ⊥ Q iff the sandwich vanishes
        if linalg::trace_re(&inner) <= SUPPORT_TOL * tp {
            return Ok(DivergenceResult::exact(f64::INFINITY));
        }
    }
    let powered = linalg::psd_power(&inner, cr(alpha));
    let val = (linalg::trace_re(&powered) / tp).ln() / (alpha - 1.0);
    Ok(DivergenceResult::exact(val))
}

/// Measure `p` and `q` in the eigenbasis of `basis_of` and return the
/// classical relative entropy of the outcome distributions.
///
/// This is a valid lower bound on the measured relative entropy for any
/// basis choice; it doubles as the restricted-measurement oracle used to
/// validate the variational ascent.
pub fn eigenbasis_measured_divergence(
    p: &QuantumState,
    q: &LabeledOperator,
    basis_of: &CMat,
) -> Result<f64> {
    let (_, vecs) = linalg::herm_eigen(basis_of);
    let d = p.dim();
    let mut val = 0.0;
    for i in 0..d {
        let v = vecs.column(i);
        let pi = (v.adjoint() * p.matrix() * v)[(0, 0)].re.max(0.0);
        let qi = (v.adjoint() * q.matrix() * v)[(0, 0)].re.max(0.0);
        if pi > 1e-15 {
            if qi <= 1e-300 {
                return Ok(f64::INFINITY);
            }
            val += pi * (pi / qi).ln();
        }
    }
    Ok(val / p.trace())
}

/// Measured relative entropy `D_m(p‖q)` via its variational form
/// `sup_{ω>0} { tr(p log ω) + 1 − tr(q ω) }` with `ω = e^H`, maximized by
/// gradient ascent over Hermitian `H` with backtracking line search. The
/// gradient of `tr(q e^H)` uses the divided-difference contraction.
///
/// The returned value is a certified lower bound on `D_m`; the witness is ω.
pub fn measured_relative_entropy(
    p: &QuantumState,
    q: &LabeledOperator,
) -> Result<DivergenceResult> {
    check_same_dim(p.matrix(), q.matrix())?;
    if (p.trace() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(
            "measured relative entropy needs a normalized first argument".into(),
        ));
    }
    if support_leak(p.matrix(), q.matrix()) > SUPPORT_TOL {
        return Ok(DivergenceResult::exact(f64::INFINITY));
    }

    // restrict to the support of q
    let (qvals, qvecs) = linalg::herm_eigen(q.matrix());
    let d = p.dim();
    let qmax = qvals.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..d)
        .filter(|&i| qvals[i] > KERNEL_CUTOFF * qmax && qvals[i] > 0.0)
        .collect();
    let r = kept.len();
    if r == 0 {
        return Ok(DivergenceResult::exact(f64::INFINITY));
    }
    let mut u = CMat::zeros(d, r);
    for (c, &i) in kept.iter().enumerate() {
        u.set_column(c, &qvecs.column(i));
    }
    let ps = u.adjoint() * p.matrix() * &u;
    let qs = u.adjoint() * q.matrix() * &u;

    // start at log p − log q, pushed far down on the kernel of p; this is
    // exact for commuting pairs
    let logp = linalg::psd_log(&ps);
    let logq = linalg::psd_log(&qs);
    let pi_p = linalg::support_projector(&ps);
    let off_support = linalg::eye(r) - &pi_p;
    let mut h = &logp - &logq - &off_support * cr(40.0);

    let objective = |h: &CMat| -> f64 {
        let eh = linalg::herm_exp(h);
        linalg::inner(&ps, h) + 1.0 - linalg::inner(&qs, &eh)
    };

    let mut f = objective(&h);
    let mut converged = false;
    for _ in 0..500 {
        let grad = &ps - linalg::daleckii_krein(&h, &qs, f64::exp, f64::exp);
        let gnorm = linalg::frob_norm(&grad);
        if gnorm <= 1e-9 {
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let cand = &h + &grad * cr(step);
            let fc = objective(&cand);
            if fc > f + 0.25 * step * gnorm * gnorm {
                h = cand;
                f = fc;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            converged = gnorm <= 1e-6;
            break;
        }
    }

    let omega_small = linalg::herm_exp(&h);
    let omega = &u * omega_small * u.adjoint();
    let witness = LabeledOperator::new(p.space().clone(), omega, true)?;
    Ok(DivergenceResult {
        value: f,
        witness: Some(witness),
        converged,
    })
}

/// Lower-bound search for the observational divergence
/// `D_obs(p‖q) = sup { tr(Pρ) log(tr(Pρ)/tr(Pσ)) : 0 ≤ P ≤ I }`
/// over the Neyman–Pearson family `{p − tq > 0}` on a grid in `t` with local
/// refinement. The witness is the best test found.
pub fn observational_divergence(p: &QuantumState, q: &QuantumState) -> Result<DivergenceResult> {
    check_same_dim(p.matrix(), q.matrix())?;
    if p.dim() > 16 {
        return Err(Error::Unsupported(
            "observational divergence search is limited to dimension 16".into(),
        ));
    }
    if (p.trace() - 1.0).abs() > 1e-9 || (q.trace() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(
            "observational divergence needs normalized states".into(),
        ));
    }

    let score = |proj: &CMat| -> f64 {
        let a = linalg::inner(proj, p.matrix()).clamp(0.0, 1.0);
        let b = linalg::inner(proj, q.matrix()).max(0.0);
        if a <= 1e-13 {
            0.0
        } else if b <= 1e-300 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };

    let test_at = |t: f64| -> CMat {
        let diff = p.matrix() - q.matrix() * cr(t);
        let (_, sup) = linalg::positive_part(&diff);
        sup
    };

    let mut best_t = 0.0;
    let mut best_val = 0.0;
    let mut best_proj = linalg::eye(p.dim());
    let consider = |t: f64, best_t: &mut f64, best_val: &mut f64, best_proj: &mut CMat| {
        let proj = test_at(t);
        let v = score(&proj);
        if v > *best_val {
            *best_val = v;
            *best_t = t;
            *best_proj = proj;
        }
    };

    // the interesting range of t is bounded by the largest eigenvalue ratio
    let tmax = {
        let qm = linalg::psd_power(q.matrix(), cr(-0.5));
        let m = &qm * p.matrix() * &qm;
        linalg::max_eigval(&m).max(1.0) * 1.5
    };
    for k in 0..=80 {
        let t = tmax * k as f64 / 80.0;
        consider(t, &mut best_t, &mut best_val, &mut best_proj);
    }
    let mut width = tmax / 80.0;
    for _ in 0..2 {
        let lo = (best_t - width).max(0.0);
        let hi = best_t + width;
        for k in 0..=40 {
            let t = lo + (hi - lo) * k as f64 / 40.0;
            consider(t, &mut best_t, &mut best_val, &mut best_proj);
        }
        width /= 20.0;
    }

    let witness = LabeledOperator::new(p.space().clone(), best_proj, true)?;
    Ok(DivergenceResult {
        value: best_val,
        witness: Some(witness),
        converged: true,
    })
}

/// `x log x` with the convention `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Von Neumann entropy `−tr(m log m)` in nats of a PSD operator (no
/// normalization applied).
pub fn von_neumann_entropy(m: &CMat) -> f64 {
    let (vals, _) = linalg::herm_eigen(m);
    -vals.iter().map(|&v| xlogx(v.max(0.0))).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registers::RegisterSpace;
    use crate::C64;

    fn diag_state(l: &str, probs: &[f64]) -> QuantumState {
        let s = RegisterSpace::single(l, probs.len()).unwrap();
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(
            probs.iter().map(|&x| cr(x)).collect::<Vec<C64>>(),
        ));
        QuantumState::from_matrix(s, m, (probs.iter().sum::<f64>() - 1.0).abs() < 1e-12).unwrap()
    }

    fn random_state(l: &str, d: usize, seed: u64) -> QuantumState {
        let g = CMat::from_fn(d, d, |i, j| {
            let x = ((seed + 1) as f64 * 0.37 + (i * d + j) as f64 * 0.71).sin();
            let y = ((seed + 7) as f64 * 0.23 + (j * d + i) as f64 * 1.618).cos();
            C64::new(x, y)
        });
        let psd = &g * g.adjoint();
        let tr = linalg::trace_re(&psd);
        QuantumState::from_matrix(RegisterSpace::single(l, d).unwrap(), psd / cr(tr), true).unwrap()
    }

    #[test]
    fn relative_entropy_identity_is_zero() {
        let p = random_state("A", 3, 5);
        let d = relative_entropy(&p, p.op()).unwrap();
        assert!(d.value.abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_classical_value() {
        let p = diag_state("A", &[0.5, 0.5]);
        let q = diag_state("A", &[0.9, 0.1]);
        let d = relative_entropy(&p, q.op()).unwrap();
        // 0.5 log(0.5/0.9) + 0.5 log(0.5/0.1) = 0.5 log(25/9)
        let want = 0.5 * (25.0f64 / 9.0).ln();
        assert!((d.value - want).abs() < 1e-12);
        assert!((want - 0.51083).abs() < 1e-5);
    }

    #[test]
    fn relative_entropy_support_violation() {
        let p = diag_state("A", &[1.0, 0.0]);
        let q = diag_state("A", &[0.0, 1.0]);
        let d = relative_entropy(&p, q.op()).unwrap();
        assert!(d.value.is_infinite());
    }

    #[test]
    fn dmax_cases() {
        let p = random_state("A", 2, 3);
        assert!(max_relative_entropy(p.op(), p.op()).unwrap().value.abs() < 1e-9);

        let pp = diag_state("A", &[1.0, 0.0]);
        let half = diag_state("A", &[0.5, 0.5]);
        let d = max_relative_entropy(pp.op(), half.op()).unwrap();
        assert!((d.value - 2.0f64.ln()).abs() < 1e-10);

        let a = diag_state("A", &[0.5, 0.5]);
        let b = diag_state("A", &[0.9, 0.1]);
        let d2 = max_relative_entropy(a.op(), b.op()).unwrap();
        assert!((d2.value - 5.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn sandwiched_cases() {
        let p = random_state("A", 2, 11);
        assert!(sandwiched_divergence(&p, p.op(), 2.0).unwrap().value.abs() < 1e-9);

        // commuting α=2: log Σ p²/q
        let a = diag_state("A", &[0.5, 0.5]);
        let b = diag_state("A", &[0.9, 0.1]);
        let d = sandwiched_divergence(&a, b.op(), 2.0).unwrap();
        let want = (0.25 / 0.9 + 0.25 / 0.1f64).ln();
        assert!((d.value - want).abs() < 1e-10);
        assert!((want - 1.0217).abs() < 1e-3);

        // α = 100 close to and below Dmax
        let p1 = random_state("A", 2, 21);
        let q1 = random_state("A", 2, 22);
        let d100 = sandwiched_divergence(&p1, q1.op(), 100.0).unwrap().value;
        let dmax = max_relative_entropy(p1.op(), q1.op()).unwrap().value;
        assert!(d100 <= dmax + 1e-9);
        assert!(dmax - d100 < 0.05);
    }

    #[test]
    fn sandwiched_monotone_in_alpha() {
        let p = random_state("A", 3, 31);
        let q = random_state("A", 3, 32);
        let grid = [0.5, 0.75, 1.5, 2.0, 4.0, f64::INFINITY];
        let mut prev = f64::NEG_INFINITY;
        for &a in &grid {
            let v = sandwiched_divergence(&p, q.op(), a).unwrap().value;
            assert!(v >= prev - 1e-8, "α={a}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn measured_equals_relative_for_commuting() {
        let p = diag_state("A", &[0.5, 0.5]);
        let q = diag_state("A", &[0.9, 0.1]);
        let dm = measured_relative_entropy(&p, q.op()).unwrap();
        let d = relative_entropy(&p, q.op()).unwrap();
        assert!((dm.value - d.value).abs() < 1e-6);
        assert!(dm.converged);
    }

    #[test]
    fn measured_is_zero_on_equal_states() {
        let p = random_state("A", 3, 41);
        let dm = measured_relative_entropy(&p, p.op()).unwrap();
        assert!(dm.value.abs() < 1e-8);
    }

    #[test]
    fn measured_below_relative_and_above_eigenbasis_oracle() {
        for seed in 0..8u64 {
            let p = random_state("A", 2, 100 + seed);
            let q = random_state("A", 2, 200 + seed);
            let dm = measured_relative_entropy(&p, q.op()).unwrap();
            let d = relative_entropy(&p, q.op()).unwrap();
            assert!(dm.value <= d.value + 1e-8, "seed {seed}");
            let witness = dm.witness.as_ref().unwrap();
            let oracle = eigenbasis_measured_divergence(&p, q.op(), witness.matrix()).unwrap();
            assert!(
                dm.value >= oracle - 1e-7,
                "seed {seed}: {} < {}",
                dm.value,
                oracle
            );
        }
    }

    #[test]
    fn observational_cases() {
        let p = random_state("A", 2, 51);
        assert!(observational_divergence(&p, &p).unwrap().value.abs() < 1e-9);

        let a = diag_state("A", &[1.0, 0.0]);
        let b = diag_state("A", &[0.0, 1.0]);
        assert!(observational_divergence(&a, &b).unwrap().value.is_infinite());
    }

    #[test]
    fn observational_below_measured_plus_one() {
        for seed in 0..6u64 {
            let p = random_state("A", 2, 300 + seed);
            let q = random_state("A", 2, 400 + seed);
            let dobs = observational_divergence(&p, &q).unwrap().value;
            let dm = measured_relative_entropy(&p, q.op()).unwrap().value;
            assert!(dobs <= dm + 1.0 + 1e-8, "seed {seed}: {dobs} vs {dm}");
        }
    }

    #[test]
    fn data_processing_under_partial_trace() {
        let s = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        let g1 = CMat::from_fn(4, 4, |i, j| {
            C64::new(
                (i as f64 * 1.3 + j as f64).sin(),
                (i as f64 - 0.7 * j as f64).cos(),
            )
        });
        let g2 = CMat::from_fn(4, 4, |i, j| {
            C64::new(
                (i as f64 * 0.4 + 2.0 * j as f64).cos(),
                (1.9 * i as f64 + j as f64).sin(),
            )
        });
        let m1 = &g1 * g1.adjoint();
        let m2 = &g2 * g2.adjoint();
        let p =
            QuantumState::from_matrix(s.clone(), &m1 / cr(linalg::trace_re(&m1)), true).unwrap();
        let q = QuantumState::from_matrix(s, &m2 / cr(linalg::trace_re(&m2)), true).unwrap();
        let pa = p.marginal(&["A"]).unwrap();
        let qa = q.marginal(&["A"]).unwrap();
        let dj = relative_entropy(&p, q.op()).unwrap().value;
        let dm = relative_entropy(&pa, qa.op()).unwrap().value;
        assert!(dm <= dj + 1e-8);
        let xj = max_relative_entropy(p.op(), q.op()).unwrap().value;
        let xm = max_relative_entropy(pa.op(), qa.op()).unwrap().value;
        assert!(xm <= xj + 1e-8);
        let sj = sandwiched_divergence(&p, q.op(), 2.0).unwrap().value;
        let sm = sandwiched_divergence(&pa, qa.op(), 2.0).unwrap().value;
        assert!(sm <= sj + 1e-8);
    }
}
