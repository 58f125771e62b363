//! Unsmoothed conditional entropies with certificates.
//!
//! All entropies are in nats and defined for subnormalized states. The
//! min-entropy runs as a small semidefinite feasibility problem under a
//! bisection; the down-variants have closed forms; the max-entropy uses the
//! semidefinite representation of the fidelity. Certificates carry the
//! optimizing conditional state σ_B so values can be re-derived
//! independently of the solver path.

use crate::divergence::{self, von_neumann_entropy};
use crate::linalg::{self, cr};
use crate::operator::{LabeledOperator, QuantumState, TensorSplit};
use crate::registers::RegisterSpace;
use crate::solver::{BlockVec, Cone, ConicFeasibility, MinOptions};
use crate::{CMat, Error, Result};
use std::rc::Rc;

/// A conditional-entropy value with its achieving conditional state.
#[derive(Debug, Clone)]
pub struct EntropyCertificate {
    /// Entropy value in nats.
    pub value: f64,
    /// Optimizer σ_B where the entropy has one (min/max variants).
    pub optimizer_sigma_b: Option<QuantumState>,
    /// Exponent of the certifying operator inequality where applicable,
    /// otherwise equal to `value`.
    pub lambda: f64,
}

/// Which of the two Rényi conditional entropies to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenyiVariant {
    /// `H̃_α^↑`: maximized over conditional states σ_B.
    Up,
    /// `H̃_α^↓`: conditioned on the state's own marginal.
    Down,
}

pub(crate) fn check_partition(
    rho: &QuantumState,
    a_regs: &[&str],
    b_regs: &[&str],
) -> Result<()> {
    for a in a_regs {
        if b_regs.contains(a) {
            return Err(Error::Labeling(format!(
                "register {a} appears in both the target and conditioning sets"
            )));
        }
        if !rho.space().contains(a) {
            return Err(Error::Labeling(format!("unknown register {a}")));
        }
    }
    for b in b_regs {
        if !rho.space().contains(b) {
            return Err(Error::Labeling(format!("unknown register {b}")));
        }
    }
    if a_regs.len() + b_regs.len() != rho.space().num_registers() {
        return Err(Error::Labeling(
            "target and conditioning registers must cover the state; take a marginal first".into(),
        ));
    }
    Ok(())
}

/// Von Neumann conditional entropy `H(A|B) = H(AB) − H(B)` in nats.
///
/// For subnormalized input the state is normalized first.
pub fn conditional_entropy(rho: &QuantumState, a_regs: &[&str], b_regs: &[&str]) -> Result<f64> {
    check_partition(rho, a_regs, b_regs)?;
    let rho = if (rho.trace() - 1.0).abs() > 1e-12 {
        rho.normalize()?
    } else {
        rho.clone()
    };
    let h_ab = von_neumann_entropy(rho.matrix());
    if b_regs.is_empty() {
        return Ok(h_ab);
    }
    let rb = rho.marginal(b_regs)?;
    Ok(h_ab - von_neumann_entropy(rb.matrix()))
}

/// `e^{-λ(σ)}` evaluation: the exact exponent the witness σ_B certifies,
/// `λ(σ) = −D_max(ρ ‖ I_A ⊗ σ_B)`, with a tiny uniform floor mixed into σ so
/// kernel collisions cannot produce a spurious −∞.
fn lambda_of_sigma(rho: &QuantumState, split: &TensorSplit, sigma: &CMat) -> f64 {
    let d_b = sigma.nrows();
    let floored = sigma * cr(1.0 - 1e-11) + linalg::eye(d_b) * cr(1e-11 / d_b as f64);
    let q = split.embed_b(&floored);
    let qm = linalg::psd_power(&q, cr(-0.5));
    let m = &qm * rho.matrix() * &qm;
    -linalg::max_eigval(&m).max(1e-300).ln()
}

fn sigma_state_from_block(b_space: &RegisterSpace, block: &CMat) -> Result<QuantumState> {
    let tr = linalg::trace_re(block).max(1e-300);
    QuantumState::from_matrix_clipped(b_space.clone(), block / cr(tr), true)
}

/// Min-entropy `H_min(A|B) = max{λ : ∃ σ_B, ρ ≤ e^{−λ} I_A ⊗ σ_B}`, solved
/// as the semidefinite program `min tr σ̃` subject to `I_A ⊗ σ̃ ⪰ ρ` with
/// `λ = −log tr σ̃`. The certificate σ_B is returned and the reported value
/// is the exponent σ_B itself certifies.
pub fn h_min(rho: &QuantumState, a_regs: &[&str], b_regs: &[&str]) -> Result<EntropyCertificate> {
    check_partition(rho, a_regs, b_regs)?;
    let split = Rc::new(TensorSplit::new(rho.space(), b_regs)?);
    let d_b = split.b_dim();
    let b_space = rho.space().restrict(b_regs)?;

    let prob = {
        let split1 = split.clone();
        let split2 = split.clone();
        ConicFeasibility {
            u_cones: vec![Cone::Psd],
            v_cones: vec![Cone::Psd],
            u_init: BlockVec(vec![linalg::eye(d_b) * cr(1.0 / d_b as f64)]),
            offset: BlockVec(vec![-rho.matrix().clone()]),
            lin: Rc::new(move |u: &BlockVec| BlockVec(vec![split1.embed_b(&u.0[0])])),
            lin_adj: Rc::new(move |v: &BlockVec| BlockVec(vec![split2.ptrace_a(&v.0[0])])),
        }
    };
    let c = BlockVec(vec![linalg::eye(d_b)]);
    let out = prob.solve_min(&c, MinOptions::default());
    if !out.residual.is_finite() || out.residual > 1e-6 {
        return Err(Error::Solver(format!(
            "min-entropy program did not converge (residual {:.3e})",
            out.residual
        )));
    }
    let sigma = sigma_state_from_block(&b_space, &out.u.0[0])?;
    let lambda = lambda_of_sigma(rho, &split, sigma.matrix());
    let bisect_value = -out.objective.max(1e-300).ln();
    let value = if lambda.is_finite() && lambda >= bisect_value - 1e-5 {
        lambda
    } else {
        bisect_value
    };
    Ok(EntropyCertificate {
        value,
        optimizer_sigma_b: Some(sigma),
        lambda: value,
    })
}

/// Down-variant min-entropy, closed form
/// `H_min^↓(A|B) = −log ‖ρ_B^{−1/2} ρ_AB ρ_B^{−1/2}‖_∞` (pseudo-inverse).
pub fn h_min_down(
    rho: &QuantumState,
    a_regs: &[&str],
    b_regs: &[&str],
) -> Result<EntropyCertificate> {
    check_partition(rho, a_regs, b_regs)?;
    let split = TensorSplit::new(rho.space(), b_regs)?;
    let rb = split.ptrace_a(rho.matrix());
    let rbm = linalg::psd_power(&rb, cr(-0.5));
    let s = split.embed_b(&rbm);
    let m = &s * rho.matrix() * &s;
    let value = -linalg::max_eigval(&m).max(1e-300).ln();
    let b_space = rho.space().restrict(b_regs)?;
    let sigma = sigma_state_from_block(&b_space, &rb)?;
    Ok(EntropyCertificate {
        value,
        optimizer_sigma_b: Some(sigma),
        lambda: value,
    })
}

/// Max-entropy `H_max(A|B) = max_σ log F(ρ_AB, I_A ⊗ σ_B)` through the
/// semidefinite representation of the root fidelity
/// `‖√P√Q‖₁ = max{Re tr X : [[P, X],[X†, Q]] ⪰ 0}`, solved as
/// `min −Re tr X` over `(σ_B, X)`.
pub fn h_max(rho: &QuantumState, a_regs: &[&str], b_regs: &[&str]) -> Result<EntropyCertificate> {
    check_partition(rho, a_regs, b_regs)?;
    let split = Rc::new(TensorSplit::new(rho.space(), b_regs)?);
    let d = split.full_dim();
    let d_b = split.b_dim();
    let b_space = rho.space().restrict(b_regs)?;

    let mut g_off = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            g_off[(i, j)] = rho.matrix()[(i, j)];
        }
    }
    let prob = {
        let split1 = split.clone();
        let split2 = split.clone();
        let lin = move |u: &BlockVec| -> BlockVec {
            let sigma = &u.0[0];
            let x = &u.0[1];
            let q = split1.embed_b(sigma);
            let mut g = CMat::zeros(2 * d, 2 * d);
            for i in 0..d {
                for j in 0..d {
                    g[(i, d + j)] = x[(i, j)];
                    g[(d + i, j)] = x[(j, i)].conj();
                    g[(d + i, d + j)] = q[(i, j)];
                }
            }
            BlockVec(vec![g])
        };
        let lin_adj = move |v: &BlockVec| -> BlockVec {
            let g = &v.0[0];
            let mut q = CMat::zeros(d, d);
            let mut x = CMat::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    q[(i, j)] = g[(d + i, d + j)];
                    x[(i, j)] = g[(i, d + j)] + g[(d + j, i)].conj();
                }
            }
            let sig = split2.ptrace_a(&q);
            BlockVec(vec![sig, x])
        };
        ConicFeasibility {
            u_cones: vec![Cone::PsdTraceEq(1.0), Cone::Free],
            v_cones: vec![Cone::Psd],
            u_init: BlockVec(vec![
                linalg::eye(d_b) * cr(1.0 / d_b as f64),
                CMat::zeros(d, d),
            ]),
            offset: BlockVec(vec![g_off]),
            lin: Rc::new(lin),
            lin_adj: Rc::new(lin_adj),
        }
    };
    // maximize Re tr X  ⇔  minimize ⟨(0, −I), (σ, X)⟩
    let c = BlockVec(vec![CMat::zeros(d_b, d_b), -linalg::eye(d)]);
    let out = prob.solve_min(
        &c,
        MinOptions {
            max_iter: 2000,
            tol: 1e-7,
            ..MinOptions::default()
        },
    );
    if !out.residual.is_finite() || out.residual > 1e-3 {
        return Err(Error::Solver(format!(
            "max-entropy program did not converge (residual {:.3e})",
            out.residual
        )));
    }
    // polish by projected gradient ascent of the concave σ ↦ log F(ρ, I⊗σ);
    // the value is the exact fidelity at the final witness
    let sigma0 = linalg::project_psd_trace_eq(&out.u.0[0], 1.0);
    let sigma = polish_hmax_sigma(rho.matrix(), &split, &sigma0);
    let sigma = sigma_state_from_block(&b_space, &sigma)?;
    let q = split.embed_b(sigma.matrix());
    let fid = linalg::fidelity(rho.matrix(), &q);
    let value = fid.max(1e-300).ln();
    Ok(EntropyCertificate {
        value,
        optimizer_sigma_b: Some(sigma),
        lambda: value,
    })
}

/// Projected gradient ascent on the jointly concave `σ ↦ ‖√ρ √(I⊗σ)‖₁`
/// over the state simplex, starting from the semidefinite solve's iterate.
fn polish_hmax_sigma(rho_m: &CMat, split: &TensorSplit, sigma0: &CMat) -> CMat {
    let objective = |sigma: &CMat| -> f64 { linalg::root_fidelity(rho_m, &split.embed_b(sigma)) };
    let mut sigma = sigma0.clone();
    let mut f = objective(&sigma);
    for _ in 0..200 {
        let grad_q = linalg::root_fidelity_gradient(rho_m, &split.embed_b(&sigma));
        let grad = split.ptrace_a(&grad_q);
        let gn = linalg::frob_norm(&grad);
        if gn < 1e-12 {
            break;
        }
        let mut step = 0.5 / gn.max(1.0);
        let mut improved = false;
        for _ in 0..30 {
            let cand = linalg::project_psd_trace_eq(&(&sigma + &grad * cr(step)), 1.0);
            let fc = objective(&cand);
            if fc > f + 1e-15 {
                let moved = linalg::frob_norm(&(&cand - &sigma));
                sigma = cand;
                f = fc;
                improved = moved > 1e-12;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    sigma
}

/// Alternative max-entropy `H̄₀^↑(A|B) = log ‖Tr_A ρ⁰_AB‖_∞` via the support
/// projector.
pub fn h0_bar_up(
    rho: &QuantumState,
    a_regs: &[&str],
    b_regs: &[&str],
) -> Result<EntropyCertificate> {
    check_partition(rho, a_regs, b_regs)?;
    let split = TensorSplit::new(rho.space(), b_regs)?;
    let proj = linalg::support_projector(rho.matrix());
    let tb = split.ptrace_a(&proj);
    let value = linalg::max_eigval(&tb).max(1e-300).ln();
    Ok(EntropyCertificate {
        value,
        optimizer_sigma_b: None,
        lambda: value,
    })
}

/// Sandwiched Rényi conditional entropy `H̃_α` for a subnormalized state.
///
/// The down-variant is closed-form for every admissible α. The up-variant is
/// implemented for α ∈ {1/2, 1, 2, ∞} and the α ∈ (1, 2] range (projected
/// gradient descent over σ_B); other α raise an unsupported-parameter error.
pub fn renyi_conditional_entropy(
    rho: &QuantumState,
    a_regs: &[&str],
    b_regs: &[&str],
    alpha: f64,
    variant: RenyiVariant,
) -> Result<EntropyCertificate> {
    check_partition(rho, a_regs, b_regs)?;
    let admissible =
        (0.5..1.0).contains(&alpha) || alpha > 1.0 || (alpha - 1.0).abs() < 1e-12 || alpha.is_infinite();
    if !admissible {
        return Err(Error::Parameter(format!(
            "Rényi conditional entropy needs α ∈ [1/2,1)∪(1,∞] or α = 1, got {alpha}"
        )));
    }
    if (alpha - 1.0).abs() < 1e-12 {
        let value = conditional_entropy(rho, a_regs, b_regs)?;
        return Ok(EntropyCertificate {
            value,
            optimizer_sigma_b: None,
            lambda: value,
        });
    }
    match variant {
        RenyiVariant::Down => {
            let split = TensorSplit::new(rho.space(), b_regs)?;
            let rb = split.ptrace_a(rho.matrix());
            let q = split.embed_b(&rb);
            let qop = LabeledOperator::new(rho.space().clone(), q, true)?;
            let d = divergence::sandwiched_divergence(rho, &qop, alpha)?;
            Ok(EntropyCertificate {
                value: -d.value,
                optimizer_sigma_b: None,
                lambda: -d.value,
            })
        }
        RenyiVariant::Up => {
            if alpha.is_infinite() {
                return h_min(rho, a_regs, b_regs);
            }
            if (alpha - 0.5).abs() < 1e-12 {
                return h_max(rho, a_regs, b_regs);
            }
            if !(1.0..=2.0).contains(&alpha) {
                return Err(Error::Unsupported(format!(
                    "up-variant Rényi entropy implemented for α ∈ {{1/2,1,2,∞}} and (1,2], got {alpha}"
                )));
            }
            renyi_up_descent(rho, b_regs, alpha)
        }
    }
}

/// Projected gradient descent for `H̃_α^↑ = −min_σ D̃_α(ρ‖I⊗σ)`, α ∈ (1,2].
fn renyi_up_descent(rho: &QuantumState, b_regs: &[&str], alpha: f64) -> Result<EntropyCertificate> {
    let split = TensorSplit::new(rho.space(), b_regs)?;
    let d_b = split.b_dim();
    let b_space = rho.space().restrict(b_regs)?;
    let alpha_prime = (alpha - 1.0) / alpha;
    let tp = rho.trace();

    let objective = |sigma: &CMat| -> f64 {
        let q = split.embed_b(sigma);
        let qp = linalg::psd_power(&q, cr(-alpha_prime / 2.0));
        let s = &qp * rho.matrix() * &qp;
        let t = linalg::trace_re(&linalg::psd_power(&s, cr(alpha)));
        (t / tp).max(1e-300).ln() / (alpha - 1.0)
    };

    let gradient = |sigma: &CMat| -> CMat {
        let q = split.embed_b(sigma);
        let qp = linalg::psd_power(&q, cr(-alpha_prime / 2.0));
        let s = &qp * rho.matrix() * &qp;
        let t = linalg::trace_re(&linalg::psd_power(&s, cr(alpha))).max(1e-300);
        let s_am1 = linalg::psd_power(&s, cr(alpha - 1.0));
        let w = rho.matrix() * &qp * &s_am1 + &s_am1 * &qp * rho.matrix();
        let f = move |x: f64| {
            if x > 1e-14 {
                x.powf(-alpha_prime / 2.0)
            } else {
                0.0
            }
        };
        let df = move |x: f64| {
            if x > 1e-14 {
                (-alpha_prime / 2.0) * x.powf(-alpha_prime / 2.0 - 1.0)
            } else {
                0.0
            }
        };
        let dq = linalg::daleckii_krein(&q, &w, f, df);
        split.ptrace_a(&dq) * cr(alpha / ((alpha - 1.0) * t))
    };

    // mix toward uniform so the sandwich powers stay bounded at the start
    let rb = split.ptrace_a(rho.matrix());
    let trb = linalg::trace_re(&rb).max(1e-300);
    let mut sigma = &rb * cr(0.98 / trb) + linalg::eye(d_b) * cr(0.02 / d_b as f64);
    let mut f = objective(&sigma);
    for _ in 0..300 {
        let g = gradient(&sigma);
        let gunit = linalg::frob_norm(&g);
        if gunit < 1e-11 {
            break;
        }
        let mut step = 0.5 / (1.0 + gunit);
        let mut improved = false;
        for _ in 0..40 {
            let cand = linalg::project_psd_trace_eq(&(&sigma - &g * cr(step)), 1.0);
            let fc = objective(&cand);
            if fc < f - 1e-14 {
                let moved = linalg::frob_norm(&(&cand - &sigma));
                sigma = cand;
                f = fc;
                improved = true;
                if moved < 1e-11 {
                    improved = false;
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let sigma_state = sigma_state_from_block(&b_space, &sigma)?;
    let value = -f;
    Ok(EntropyCertificate {
        value,
        optimizer_sigma_b: Some(sigma_state),
        lambda: value,
    })
}

/// Guessing probability of a fully classical (diagonal) state: best guess of
/// the `A` outcome per conditioning outcome, `Σ_b p(b) max_a p(a|b)`.
/// Used as the cross-check oracle for the min-entropy SDP on cq instances.
pub fn classical_guessing_probability(
    rho: &QuantumState,
    a_regs: &[&str],
    b_regs: &[&str],
) -> Result<f64> {
    check_partition(rho, a_regs, b_regs)?;
    let split = TensorSplit::new(rho.space(), b_regs)?;
    let m = rho.matrix();
    // verify diagonality
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)].norm() > 1e-10 {
                return Err(Error::Precondition(
                    "guessing-probability oracle needs a diagonal state".into(),
                ));
            }
        }
    }
    let mut max_per_b = vec![0.0f64; split.b_dim()];
    for i in 0..m.nrows() {
        let p = m[(i, i)].re.max(0.0);
        let b = split.b_index_of(i);
        max_per_b[b] = max_per_b[b].max(p);
    }
    Ok(max_per_b.iter().sum())
}
