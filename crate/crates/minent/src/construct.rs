//! Explicit auxiliary states and projectors.
//!
//! This module holds the constructive core: the β₀ quadrature behind the
//! generalized Golden–Thompson inequality, the auxiliary chain state built
//! from rotated operator powers, conditional rebasing of approximating
//! states, uniform mixing, the good-projector algorithm, and the pinched and
//! damped projector chains.

use crate::divergence;
use crate::linalg::{self, c, cr, KERNEL_CUTOFF};
use crate::operator::{LabeledOperator, Projector, QuantumState};

use crate::{C64, CMat, Error, Result};

/// Nodes and weights for integrating against `β₀(t) = (π/2)(cosh(πt)+1)⁻¹`.
#[derive(Debug, Clone)]
pub struct QuadratureScheme {
    /// Gauss–Legendre nodes on `[−T, T]`, symmetric about 0.
    pub nodes: Vec<f64>,
    /// Gauss–Legendre weights multiplied by `β₀(t_i)`; all positive.
    pub weights: Vec<f64>,
    /// Truncation half-width `T`.
    pub truncation: f64,
    /// Analytic bound on the discarded mass `2∫_T^∞ β₀ ≤ 2e^{−πT}`.
    pub tail_bound: f64,
}

/// The density `β₀(t) = (π/2)(cosh(πt)+1)⁻¹`.
pub fn beta0(t: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / ((std::f64::consts::PI * t).cosh() + 1.0)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Build the β₀ quadrature on `[−T, T]` with `n_nodes` Gauss–Legendre nodes.
pub fn make_beta0_quadrature(truncation: f64, n_nodes: usize) -> Result<QuadratureScheme> {
    if truncation <= 0.0 {
        return Err(Error::Parameter("quadrature truncation must be positive".into()));
    }
    if n_nodes < 2 {
        return Err(Error::Parameter("quadrature needs at least 2 nodes".into()));
    }
    let (xs, ws) = gauss_legendre(n_nodes);
    let nodes: Vec<f64> = xs.iter().map(|&x| truncation * x).collect();
    let weights: Vec<f64> = nodes
        .iter()
        .zip(ws.iter())
        .map(|(&t, &w)| truncation * w * beta0(t))
        .collect();
    let tail_bound = 2.0 * (-std::f64::consts::PI * truncation).exp();
    Ok(QuadratureScheme {
        nodes,
        weights,
        truncation,
        tail_bound,
    })
}

/// Default scheme used throughout: `T = 12`, 400 nodes.
pub fn default_quadrature() -> QuadratureScheme {
    make_beta0_quadrature(12.0, 400).expect("fixed parameters are valid")
}

// ---------------------------------------------------------------------------
// auxiliary chain state
// ---------------------------------------------------------------------------

/// Diagnostics of the quadrature-built chain state.
#[derive(Debug, Clone)]
pub struct GtChainDiagnostics {
    /// Trace of σ; the continuum state is exactly normalized, so this is a
    /// direct measure of quadrature error.
    pub trace_sigma: f64,
    /// `½‖σ_B − ρ_B‖₁`.
    pub marginal_deviation: f64,
    /// Smallest eigenvalue among quadrature node terms (relative).
    pub min_node_eig: f64,
    /// Per-link partial states recomputed from the truncated products, for
    /// comparison against partial traces of σ.
    pub independent_partials: Vec<QuantumState>,
}

struct EigCache {
    vecs: CMat,
    vals: Vec<f64>,
    cut: f64,
}

impl EigCache {
    fn new(m: &CMat) -> EigCache {
        let (vals, vecs) = linalg::herm_eigen(m);
        let vmax = vals.iter().cloned().fold(0.0, f64::max);
        EigCache {
            vecs,
            vals: vals.iter().cloned().collect(),
            cut: KERNEL_CUTOFF * vmax,
        }
    }

    fn power(&self, z: C64) -> CMat {
        let n = self.vals.len();
        let mut d = CMat::zeros(n, n);
        for i in 0..n {
            if self.vals[i] > self.cut && self.vals[i] > 0.0 {
                d[(i, i)] = (z * cr(self.vals[i].ln())).exp();
            }
        }
        &self.vecs * d * self.vecs.adjoint()
    }
}

/// Build the chain state
/// `σ = ∫ dt β₀(t) M(t) ρ̄⁽ⁿ⁾ M(t)†` with
/// `M(t) = Π_k (ρ̄⁽ᵏ⁾)^{(1−it)/2} (ρ̄⁽ᵏ⁺¹⁾ marginal)^{−(1−it)/2}`.
///
/// `bars[k]` is ρ̄⁽ᵏ⁺¹⁾ on the registers of the first `k+1` links plus the
/// base; `links[k]` lists the registers added by link `k`. `rho_b` is the
/// base marginal (ρ̄⁽⁰⁾). Every ρ̄ must be full rank on its space.
pub fn gt_chain_state(
    rho_b: &QuantumState,
    bars: &[QuantumState],
    links: &[Vec<String>],
    quad: &QuadratureScheme,
) -> Result<(QuantumState, GtChainDiagnostics)> {
    let n = bars.len();
    if n == 0 {
        return Err(Error::Precondition("chain state needs at least one link".into()));
    }
    if links.len() != n {
        return Err(Error::Precondition(
            "need one register group per chain link".into(),
        ));
    }
    let full_space = bars[n - 1].space().clone();
    let d = full_space.total_dim();

    // check rank and collect the ladder of spaces
    let mut lower_labels: Vec<Vec<String>> = Vec::new(); // registers of A_1^k B
    let mut acc: Vec<String> = rho_b.space().labels().iter().map(|s| s.to_string()).collect();
    lower_labels.push(acc.clone());
    for link in links {
        acc.extend(link.iter().cloned());
        lower_labels.push(acc.clone());
    }

    let full_rank_check = |state: &QuantumState, what: &str| -> Result<()> {
        let (vals, _) = linalg::herm_eigen(state.matrix());
        let vmax = vals.iter().cloned().fold(0.0, f64::max);
        if vals[0] < 1e-13 * vmax.max(1e-300) {
            return Err(Error::Precondition(format!(
                "{what} is rank deficient (min eigenvalue {:.3e}); mix toward uniform first",
                vals[0]
            )));
        }
        Ok(())
    };
    for (k, bar) in bars.iter().enumerate() {
        full_rank_check(bar, &format!("chain state input {k}"))?;
    }

    // factors of M(t): for k = 0..n−1 the pair (ρ̄⁽ᵏ⁾, ρ̄⁽ᵏ⁺¹⁾ marginal),
    // both embedded in the full space; eigendecompose once
    let mut plus_factors: Vec<EigCache> = Vec::new(); // (ρ̄⁽ᵏ⁾) embedded
    let mut minus_factors: Vec<EigCache> = Vec::new(); // marginals embedded
    for k in 0..n {
        let lower: Vec<&str> = lower_labels[k].iter().map(|s| s.as_str()).collect();
        let lower_state = if k == 0 {
            rho_b.clone()
        } else {
            bars[k - 1].clone()
        };
        let embedded = lower_state.op().embed(&full_space)?;
        plus_factors.push(EigCache::new(embedded.matrix()));
        let marg = bars[k].op().marginal(&lower)?.embed(&full_space)?;
        minus_factors.push(EigCache::new(marg.matrix()));
    }
    let top = bars[n - 1].matrix().clone();

    let mut sigma = CMat::zeros(d, d);
    let mut min_node_eig = f64::INFINITY;
    let scale = linalg::op_norm(&top).max(1e-300);
    for (idx, (&t, &w)) in quad.nodes.iter().zip(quad.weights.iter()).enumerate() {
        let z = c(0.5, -0.5 * t); // (1−it)/2
        let mut m = linalg::eye(d);
        for k in 0..n {
            m = m * plus_factors[k].power(z) * minus_factors[k].power(-z);
        }
        let term = &m * &top * m.adjoint();
        if idx % 37 == 0 {
            let me = linalg::min_eigval(&term) / scale;
            min_node_eig = min_node_eig.min(me);
        }
        sigma += term * cr(w);
    }

    // independent per-link partial states from the truncated products
    let mut independent_partials = Vec::new();
    for k in 1..=n {
        let labels: Vec<&str> = lower_labels[k].iter().map(|s| s.as_str()).collect();
        let sub_space = full_space.restrict(&labels)?;
        let dk = sub_space.total_dim();
        let mut caches_p = Vec::new();
        let mut caches_m = Vec::new();
        for j in 0..k {
            let lower: Vec<&str> = lower_labels[j].iter().map(|s| s.as_str()).collect();
            let lower_state = if j == 0 { rho_b.clone() } else { bars[j - 1].clone() };
            caches_p.push(EigCache::new(lower_state.op().embed(&sub_space)?.matrix()));
            caches_m.push(EigCache::new(
                bars[j].op().marginal(&lower)?.embed(&sub_space)?.matrix(),
            ));
        }
        let topk = bars[k - 1].op().embed(&sub_space)?.matrix().clone();
        let mut sk = CMat::zeros(dk, dk);
        for (&t, &w) in quad.nodes.iter().zip(quad.weights.iter()) {
            let z = c(0.5, -0.5 * t);
            let mut m = linalg::eye(dk);
            for cache in caches_p.iter().zip(caches_m.iter()) {
                m = m * cache.0.power(z) * cache.1.power(-z);
            }
            sk += (&m * &topk * m.adjoint()) * cr(w);
        }
        independent_partials.push(QuantumState::from_matrix_clipped(
            sub_space, sk, false,
        )?);
    }

    let trace_sigma = linalg::trace_re(&sigma);
    let sigma_state = QuantumState::from_matrix_clipped(full_space, sigma, false)?;
    let sigma_b = sigma_state.marginal(&rho_b.space().labels())?;
    let marginal_deviation =
        0.5 * linalg::herm_trace_norm(&(sigma_b.matrix() - rho_b.matrix()));
    Ok((
        sigma_state,
        GtChainDiagnostics {
            trace_sigma,
            marginal_deviation,
            min_node_eig,
            independent_partials,
        },
    ))
}

// ---------------------------------------------------------------------------
// conditional rebase and uniform mixing
// ---------------------------------------------------------------------------

/// Rebase an approximating state onto a target marginal:
/// `η = ρ_B^{1/2} [U_B] ρ̃_B^{−1/2} ρ̃ ρ̃_B^{−1/2} [U_B†] ρ_B^{1/2}`
/// (Moore–Penrose powers). With `use_polar_unitary`, `U_B` is the adjoint of
/// the polar unitary of `ρ̃_B^{1/2} ρ_B^{1/2}`, which tightens the distance
/// bound from `(√2+1)ε` to `2ε`.
pub fn conditional_rebase(
    target_b: &QuantumState,
    tilde: &QuantumState,
    use_polar_unitary: bool,
) -> Result<QuantumState> {
    let b_labels = target_b.space().labels();
    for l in &b_labels {
        if !tilde.space().contains(l) {
            return Err(Error::Labeling(format!(
                "rebase target register {l} missing from the state"
            )));
        }
    }
    let tilde_b = tilde.marginal(&b_labels)?;
    let tb_mhalf = linalg::psd_power(tilde_b.matrix(), cr(-0.5));
    let rb_half = linalg::psd_power(target_b.matrix(), cr(0.5));
    let core = if use_polar_unitary {
        // ρ̃_B^{1/2} ρ_B^{1/2} = V |·|, take U = V†
        let m = linalg::psd_power(tilde_b.matrix(), cr(0.5)) * &rb_half;
        let svd = m.clone().svd(true, true);
        let w = svd.u.expect("svd u");
        let vt = svd.v_t.expect("svd v_t");
        let v = &w * &vt;
        &rb_half * v.adjoint() * &tb_mhalf
    } else {
        &rb_half * &tb_mhalf
    };
    let full = tilde.space();
    let core_op = LabeledOperator::new(target_b.space().clone(), core, false)?;
    let core_full = core_op.embed(full)?;
    let eta = core_full.matrix() * tilde.matrix() * core_full.matrix().adjoint();
    QuantumState::from_matrix_clipped(full.clone(), eta, false)
}

/// `ρ̄ = (1−δ)·ρ̃ + δ·τ_new ⊗ ρ_prev`, where `τ_new` is the completely mixed
/// state on the registers of `tilde` that `rho_prev` lacks.
pub fn mix_toward_uniform(
    tilde: &QuantumState,
    rho_prev: &QuantumState,
    delta: f64,
) -> Result<QuantumState> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Parameter(format!(
            "mixing weight must lie in [0,1), got {delta}"
        )));
    }
    let prev_labels = rho_prev.space().labels();
    let new_labels: Vec<String> = tilde.space().complement(&prev_labels);
    if new_labels.is_empty() {
        return Err(Error::Labeling(
            "the approximating state adds no registers over the previous one".into(),
        ));
    }
    let new_refs: Vec<&str> = new_labels.iter().map(|s| s.as_str()).collect();
    let new_space = tilde.space().restrict(&new_refs)?;
    let tau = QuantumState::maximally_mixed(new_space);
    let product = tau.op().tensor(rho_prev.op())?.embed(tilde.space())?;
    let m = tilde.matrix() * cr(1.0 - delta) + product.matrix() * cr(delta);
    QuantumState::from_matrix_clipped(tilde.space().clone(), m, false)
}

// ---------------------------------------------------------------------------
// good projector
// ---------------------------------------------------------------------------

/// `g₁(ε)` of the good-projector construction.
pub fn good_proj_g1(eps: f64) -> f64 {
    let e3 = eps.powf(1.0 / 3.0);
    let e23 = eps.powf(2.0 / 3.0);
    (8.0 / 3.0) * (1.0 + e3) * e3 * (1.0 / eps).ln() + (1.0 + e3 + e23) * e3
}

/// `g₂(ε)` of the good-projector construction.
pub fn good_proj_g2(eps: f64) -> f64 {
    let e3 = eps.powf(1.0 / 3.0);
    4.0 * (1.0 + e3) * e3 + 2.0 * eps
}

/// Per-bin bookkeeping of the good-projector algorithm.
#[derive(Debug, Clone)]
pub struct GoodProjectorDiagnostics {
    pub delta1: f64,
    pub delta2: f64,
    pub k_window: i64,
    /// Bin numbers that contain eigenvectors of σ.
    pub bin_numbers: Vec<i64>,
    /// Dimensions d_k per occupied bin.
    pub bin_dims: Vec<usize>,
    /// Masses μ_k = tr(Δ P_k) per occupied bin.
    pub bin_masses: Vec<f64>,
    /// ρ-mass discarded with the kernel of σ.
    pub discarded_trace: f64,
}

/// The good-projector algorithm: given subnormalized ρ, σ with
/// `½‖ρ−σ‖₁ ≤ ε`, produce an orthogonal projector Π with
/// `ΠρΠ ≤ (1+g₁(ε))σ` and `tr((I−Π)ρ) ≤ g₂(ε)`.
///
/// Eigenvectors of σ below the kernel cutoff form an extra bin on which Π
/// acts as zero; their ρ-mass is reported as `discarded_trace`.
pub fn good_projector(
    rho: &QuantumState,
    sigma: &QuantumState,
    eps: f64,
) -> Result<(Projector, GoodProjectorDiagnostics)> {
    if rho.space() != sigma.space() {
        return Err(Error::Labeling(
            "good projector needs both states on the same registers".into(),
        ));
    }
    let tv = 0.5 * linalg::herm_trace_norm(&(rho.matrix() - sigma.matrix()));
    if tv > eps + 1e-9 {
        return Err(Error::Precondition(format!(
            "trace distance {tv:.3e} exceeds the declared ε = {eps:.3e}"
        )));
    }
    let d = rho.dim();
    let space = rho.space().clone();

    if eps < 1e-12 {
        let proj = sigma.op().support_projector()?;
        let ker = linalg::eye(d) - proj.matrix();
        let discarded = linalg::inner(&ker, rho.matrix()).max(0.0);
        return Ok((
            proj,
            GoodProjectorDiagnostics {
                delta1: 0.0,
                delta2: 0.0,
                k_window: 0,
                bin_numbers: vec![],
                bin_dims: vec![],
                bin_masses: vec![],
                discarded_trace: discarded,
            },
        ));
    }

    let delta1 = eps.powf(1.0 / 3.0);
    let delta2 = eps.powf(2.0 / 3.0);
    let k_window = ((2.0 / delta1) * (1.0 / delta2).ln()).floor() as i64;

    // work in the eigenbasis of σ
    let (svals, svecs) = linalg::herm_eigen(sigma.matrix());
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    let cut = KERNEL_CUTOFF * smax;
    let rho_e = svecs.adjoint() * rho.matrix() * &svecs;
    let sigma_e = svecs.adjoint() * sigma.matrix() * &svecs;
    let (delta_full, _) = linalg::positive_part(&(&rho_e - &sigma_e));

    // bin assignment by eigenvalue: (1+δ₁)^{−(k+1)} < q ≤ (1+δ₁)^{−k}
    let log1p = (1.0 + delta1).ln();
    let mut bin_of = vec![-1i64; d]; // −1 marks the kernel bin
    for i in 0..d {
        let q = svals[i].min(1.0);
        if q <= cut || q <= 0.0 {
            continue;
        }
        let mut k = (-(q.ln()) / log1p).floor() as i64;
        if k < 0 {
            k = 0;
        }
        let pow = |k: i64| (1.0 + delta1).powi(-(k as i32));
        while k > 0 && q > pow(k) {
            k -= 1;
        }
        while q <= pow(k + 1) {
            k += 1;
        }
        bin_of[i] = k;
    }

    let mut bins: Vec<i64> = bin_of.iter().cloned().filter(|&k| k >= 0).collect();
    bins.sort_unstable();
    bins.dedup();

    let coords_of = |k: i64| -> Vec<usize> { (0..d).filter(|&i| bin_of[i] == k).collect() };

    let mut pi_e = CMat::zeros(d, d);
    let mut bin_dims = Vec::new();
    let mut bin_masses = Vec::new();
    for &k in &bins {
        let coords = coords_of(k);
        let dk = coords.len();
        bin_dims.push(dk);
        // Δ_k on the bin coordinates
        let mut delta_k = CMat::zeros(dk, dk);
        for (a, &i) in coords.iter().enumerate() {
            for (b, &j) in coords.iter().enumerate() {
                delta_k[(a, b)] = delta_full[(i, j)];
            }
        }
        bin_masses.push(linalg::trace_re(&delta_k).max(0.0));
        let (dvals, dvecs) = linalg::herm_eigen(&delta_k);
        let thresh = delta2 * (1.0 + delta1).powi(-((k + 1) as i32));
        let y_cols: Vec<usize> = (0..dk).filter(|&a| dvals[a] <= thresh).collect();
        if y_cols.is_empty() {
            continue;
        }
        let mut y_basis = CMat::zeros(dk, y_cols.len());
        for (cidx, &a) in y_cols.iter().enumerate() {
            y_basis.set_column(cidx, &dvecs.column(a));
        }
        // constraint rows: (P_j Δ) v = 0 for bins j ≤ k − K − 1
        let mut rows: Vec<usize> = Vec::new();
        for &j in &bins {
            if j <= k - k_window - 1 {
                rows.extend(coords_of(j));
            }
        }
        let z_basis = if rows.is_empty() {
            y_basis
        } else {
            let mut cmat = CMat::zeros(rows.len(), y_cols.len());
            for (r, &i) in rows.iter().enumerate() {
                for (col, &a) in coords.iter().enumerate() {
                    let _ = a;
                    let mut acc = C64::new(0.0, 0.0);
                    for (s, &i2) in coords.iter().enumerate() {
                        acc += delta_full[(i, i2)] * y_basis[(s, col.min(y_cols.len() - 1))];
                    }
                    let _ = acc;
                }
                // fill row properly below
                for colc in 0..y_cols.len() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (s, &i2) in coords.iter().enumerate() {
                        acc += delta_full[(i, i2)] * y_basis[(s, colc)];
                    }
                    cmat[(r, colc)] = acc;
                }
            }
            let null = linalg::null_space(&cmat, 1e-10);
            if null.ncols() == 0 {
                continue;
            }
            &y_basis * null
        };
        // accumulate Z_k Z_k† into the σ-eigenbasis projector
        for cidx in 0..z_basis.ncols() {
            for (a, &i) in coords.iter().enumerate() {
                for (b, &j) in coords.iter().enumerate() {
                    pi_e[(i, j)] += z_basis[(a, cidx)] * z_basis[(b, cidx)].conj();
                }
            }
        }
    }

    let pi = &svecs * &pi_e * svecs.adjoint();
    let proj = Projector::new(LabeledOperator::new(space, pi, true)?)?;

    let mut discarded = 0.0;
    for i in 0..d {
        if bin_of[i] < 0 {
            discarded += rho_e[(i, i)].re.max(0.0);
        }
    }
    Ok((
        proj,
        GoodProjectorDiagnostics {
            delta1,
            delta2,
            k_window,
            bin_numbers: bins,
            bin_dims,
            bin_masses,
            discarded_trace: discarded,
        },
    ))
}

// ---------------------------------------------------------------------------
// pinched and damped chains
// ---------------------------------------------------------------------------

/// Sequential asymmetric pinching
/// `σ = 𝒫_√δ[Π₁] ∘ ⋯ ∘ 𝒫_√δ[Πₙ](ρ)` (the last projector acts first).
/// Projectors may live on subspaces of ρ's registers; they are embedded.
pub fn pinched_chain_state(
    rho: &QuantumState,
    good_projectors: &[Projector],
    delta: f64,
) -> Result<QuantumState> {
    if !(0.0..1.0).contains(&delta) && delta != 1.0 {
        return Err(Error::Parameter(format!(
            "pinching parameter must lie in (0,1], got {delta}"
        )));
    }
    let sqrt_delta = delta.sqrt();
    let mut m = rho.matrix().clone();
    let space = rho.space().clone();
    for pk in good_projectors.iter().rev() {
        let p = pk.embed(&space)?;
        let d = space.total_dim();
        let pperp = linalg::eye(d) - p.matrix();
        m = p.matrix() * &m * p.matrix() + (&pperp * &m * &pperp) * cr(sqrt_delta);
    }
    QuantumState::from_matrix_clipped(space, m, false)
}

/// Quadrature-built damped projector chain
/// `η = ∫ dt β₀(t) N(t) ρ N(t)†` with
/// `N(t) = Π_k (δ^{(1−it)/2} P_bad⁽ᵏ⁾ + P_good⁽ᵏ⁾)`, first factor leftmost.
pub fn damped_gt_projector_state(
    rho: &QuantumState,
    good_projectors: &[Projector],
    delta: f64,
    quad: &QuadratureScheme,
) -> Result<QuantumState> {
    if !(0.0 < delta && delta <= 1.0) {
        return Err(Error::Parameter(format!(
            "damping parameter must lie in (0,1], got {delta}"
        )));
    }
    let space = rho.space().clone();
    let d = space.total_dim();
    let embedded: Vec<CMat> = good_projectors
        .iter()
        .map(|p| p.embed(&space).map(|e| e.matrix().clone()))
        .collect::<Result<_>>()?;
    let mut eta = CMat::zeros(d, d);
    let ln_delta = delta.ln();
    for (&t, &w) in quad.nodes.iter().zip(quad.weights.iter()) {
        let phase = (c(0.5, -0.5 * t) * cr(ln_delta)).exp(); // δ^{(1−it)/2}
        let mut nmat = linalg::eye(d);
        for p in &embedded {
            let bad = linalg::eye(d) - p;
            let factor = p + bad * phase;
            nmat = nmat * factor;
        }
        eta += (&nmat * rho.matrix() * nmat.adjoint()) * cr(w);
    }
    QuantumState::from_matrix_clipped(space, eta, false)
}

/// Evaluate both sides of the generalized Golden–Thompson inequality for a
/// family of Hermitian matrices: returns `(lhs, rhs)` with
/// `lhs = tr exp(Σ H_k)` and the β₀-weighted integral of rotated products on
/// the right.
pub fn golden_thompson_sides(hs: &[CMat], quad: &QuadratureScheme) -> Result<(f64, f64)> {
    if hs.is_empty() {
        return Err(Error::Precondition("need at least one Hermitian matrix".into()));
    }
    let d = hs[0].nrows();
    let mut sum = CMat::zeros(d, d);
    for h in hs {
        if h.nrows() != d {
            return Err(Error::Labeling("dimension mismatch".into()));
        }
        sum += h;
    }
    let lhs = linalg::trace_re(&linalg::herm_exp(&sum));
    let caches: Vec<EigCache> = hs.iter().map(EigCache::new_spectral).collect();
    let mut rhs = 0.0;
    for (&t, &w) in quad.nodes.iter().zip(quad.weights.iter()) {
        // ‖ Π_k exp((1+it)/2 H_k) ‖₂²
        let z = c(0.5, 0.5 * t);
        let mut m = linalg::eye(d);
        for cache in &caches {
            m = m * cache.exp_scaled(z);
        }
        rhs += w * linalg::frob_norm(&m).powi(2);
    }
    Ok((lhs, rhs))
}

impl EigCache {
    /// Cache for matrix exponentials of a general Hermitian matrix (no
    /// kernel cutoff).
    fn new_spectral(m: &CMat) -> EigCache {
        let (vals, vecs) = linalg::herm_eigen(m);
        EigCache {
            vecs,
            vals: vals.iter().cloned().collect(),
            cut: f64::NEG_INFINITY,
        }
    }

    fn exp_scaled(&self, z: C64) -> CMat {
        let n = self.vals.len();
        let mut d = CMat::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = (z * cr(self.vals[i])).exp();
        }
        &self.vecs * d * self.vecs.adjoint()
    }
}

/// Convenience: `D_m(ρ‖σ) ≤ n·max_k D(ρ_k‖ρ̄⁽ᵏ⁾)` check inputs — the
/// per-link relative entropies of the original state against the mixed
/// approximants.
pub fn per_link_relative_entropies(
    rho: &QuantumState,
    bars: &[QuantumState],
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for bar in bars {
        let labels = bar.space().labels();
        let marg = rho.marginal(&labels)?;
        out.push(divergence::relative_entropy(&marg, bar.op())?.value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::measured_relative_entropy;
    use crate::registers::RegisterSpace;
    use crate::operator::purified_distance;

    fn random_state(space: RegisterSpace, seed: u64) -> QuantumState {
        let d = space.total_dim();
        let g = CMat::from_fn(d, d, |i, j| {
            C64::new(
                ((seed * 31 + 7) as f64 * 0.11 + (i * d + j) as f64 * 0.73).sin(),
                ((seed * 17 + 3) as f64 * 0.19 + (j * d + i) as f64 * 1.11).cos(),
            )
        });
        let psd = &g * g.adjoint();
        let tr = linalg::trace_re(&psd);
        QuantumState::from_matrix(space, psd / cr(tr), true).unwrap()
    }

    #[test]
    fn beta0_quadrature_properties() {
        let q = make_beta0_quadrature(12.0, 400).unwrap();
        let total: f64 = q.weights.iter().sum();
        assert!(total <= 1.0 + 1e-12);
        assert!(total >= 1.0 - q.tail_bound - 1e-10, "total {total}");
        assert!(q.tail_bound < 1e-16);
        assert!((beta0(0.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        // symmetry of nodes
        let n = q.nodes.len();
        for i in 0..n / 2 {
            assert!((q.nodes[i] + q.nodes[n - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_thompson_commuting_is_tight() {
        let quad = default_quadrature();
        let h1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(0.3), cr(-0.7)]));
        let h2 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(-0.2), cr(0.5)]));
        let h3 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(0.9), cr(0.1)]));
        let (lhs, rhs) = golden_thompson_sides(&[h1, h2, h3], &quad).unwrap();
        assert!((lhs - rhs).abs() < 1e-8 * lhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn golden_thompson_random_triples() {
        let quad = default_quadrature();
        for seed in 0..10u64 {
            let hs: Vec<CMat> = (0..3)
                .map(|k| {
                    let g = CMat::from_fn(4, 4, |i, j| {
                        C64::new(
                            ((seed * 13 + k * 5 + (i * 4 + j) as u64) as f64 * 0.7).sin(),
                            ((seed * 7 + k * 3 + (j * 4 + i) as u64) as f64 * 1.1).cos(),
                        )
                    });
                    let h = linalg::hermitian_part(&g);
                    // normalize spectrum into [−1, 1]
                    let norm = linalg::op_norm(&h).max(1e-9);
                    h / cr(norm)
                })
                .collect();
            let (lhs, rhs) = golden_thompson_sides(&hs, &quad).unwrap();
            assert!(
                rhs >= lhs - 1e-6 * lhs.abs().max(1.0),
                "seed {seed}: lhs {lhs} rhs {rhs}"
            );
        }
    }

    #[test]
    fn chain_state_classical_single_link() {
        // all diagonal: σ equals the conditional product p_B q_{A|B}
        let sb = RegisterSpace::single("B", 2).unwrap();
        let sab = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho_b = QuantumState::from_matrix(
            sb,
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(0.6), cr(0.4)])),
            true,
        )
        .unwrap();
        let bar = QuantumState::from_matrix(
            sab.clone(),
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
                cr(0.35),
                cr(0.25),
                cr(0.15),
                cr(0.25),
            ])),
            true,
        )
        .unwrap();
        let quad = default_quadrature();
        let (sigma, diag) =
            gt_chain_state(&rho_b, &[bar.clone()], &[vec!["A".into()]], &quad).unwrap();
        // expected: p_B(b) q(a|b): q_B = (0.6, 0.4) marginal of bar is (0.5, 0.5)
        // per (a,b): bar(a,b)/bar_B(b) * rho_B(b)
        let bar_b = [0.35 + 0.15, 0.25 + 0.25];
        let expect = [
            0.35 / bar_b[0] * 0.6,
            0.25 / bar_b[1] * 0.4,
            0.15 / bar_b[0] * 0.6,
            0.25 / bar_b[1] * 0.4,
        ];
        for i in 0..4 {
            assert!(
                (sigma.matrix()[(i, i)].re - expect[i]).abs() < 1e-8,
                "entry {i}: {} vs {}",
                sigma.matrix()[(i, i)].re,
                expect[i]
            );
        }
        assert!((diag.trace_sigma - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chain_state_two_links_normalized_marginal() {
        // random two-link qubit chain built from mixed approximants
        let s1 = RegisterSpace::new(vec![("A1", 2), ("B", 2)]).unwrap();
        let s2 = RegisterSpace::new(vec![("A1", 2), ("A2", 2), ("B", 2)]).unwrap();
        let rho = random_state(s2.clone(), 5);
        let rho_b = rho.marginal(&["B"]).unwrap();
        let tilde1 = random_state(s1, 11);
        let tilde2 = random_state(s2, 12);
        let delta = 0.05;
        let rho_prev1 = rho_b.clone();
        let bar1 = mix_toward_uniform(&tilde1, &rho_prev1, delta).unwrap();
        let rho_prev2 = rho.marginal(&["A1", "B"]).unwrap();
        let bar2 = mix_toward_uniform(&tilde2, &rho_prev2, delta).unwrap();
        let quad = default_quadrature();
        let (sigma, diag) = gt_chain_state(
            &rho_b,
            &[bar1.clone(), bar2.clone()],
            &[vec!["A1".into()], vec!["A2".into()]],
            &quad,
        )
        .unwrap();
        assert!((diag.trace_sigma - 1.0).abs() < 1e-6, "tr {}", diag.trace_sigma);
        assert!(diag.marginal_deviation < 1e-6, "dev {}", diag.marginal_deviation);
        assert!(diag.min_node_eig > -1e-10);
        // partial states from the truncated formula match partial traces
        let s_ab = sigma.marginal(&["A1", "B"]).unwrap();
        let dev = 0.5
            * linalg::herm_trace_norm(
                &(s_ab.matrix() - diag.independent_partials[0].matrix()),
            );
        assert!(dev < 1e-6, "partial dev {dev}");

        // measured relative entropy bound D_m(ρ‖σ) ≤ n·max_k D(ρ_k‖ρ̄_k)
        let links = per_link_relative_entropies(&rho, &[bar1, bar2]).unwrap();
        let eps_link = links.iter().cloned().fold(0.0, f64::max);
        let dm = measured_relative_entropy(&rho, sigma.op()).unwrap();
        assert!(
            dm.value <= 2.0 * eps_link + 1e-6,
            "Dm {} vs 2·{eps_link}",
            dm.value
        );
    }

    #[test]
    fn rebase_identity_when_tilde_is_reference() {
        let s = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = random_state(s, 21);
        let rho_b = rho.marginal(&["B"]).unwrap();
        let eta = conditional_rebase(&rho_b, &rho, false).unwrap();
        assert!(linalg::frob_norm(&(eta.matrix() - rho.matrix())) < 1e-9);
        let eta_u = conditional_rebase(&rho_b, &rho, true).unwrap();
        assert!(linalg::frob_norm(&(eta_u.matrix() - rho.matrix())) < 1e-9);
    }

    #[test]
    fn rebase_distance_bounds() {
        let s = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        for seed in 0..6u64 {
            let rho = random_state(s.clone(), 100 + seed);
            let noise = random_state(s.clone(), 200 + seed);
            let t = 0.02;
            let tilde = QuantumState::from_matrix(
                s.clone(),
                rho.matrix() * cr(1.0 - t) + noise.matrix() * cr(t),
                true,
            )
            .unwrap();
            let eps = purified_distance(&rho, &tilde).unwrap();
            let rho_b = rho.marginal(&["B"]).unwrap();
            let eta = conditional_rebase(&rho_b, &tilde, false).unwrap();
            let d_eta = purified_distance(&rho, &eta).unwrap();
            assert!(
                d_eta <= (2f64.sqrt() + 1.0) * eps + 1e-9,
                "seed {seed}: {d_eta} vs (√2+1)·{eps}"
            );
            // marginal is restored
            let eta_b = eta.marginal(&["B"]).unwrap();
            assert!(linalg::frob_norm(&(eta_b.matrix() - rho_b.matrix())) < 1e-8);

            let eta_u = conditional_rebase(&rho_b, &tilde, true).unwrap();
            let d_eta_u = purified_distance(&rho, &eta_u).unwrap();
            assert!(
                d_eta_u <= 2.0 * eps + 1e-9,
                "seed {seed}: {d_eta_u} vs 2·{eps}"
            );
        }
    }

    #[test]
    fn mix_fixed_point_and_tv() {
        let s_prev = RegisterSpace::single("B", 2).unwrap();
        let s = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        let prev = random_state(s_prev.clone(), 31);
        let tau_prod = {
            let tau = QuantumState::maximally_mixed(RegisterSpace::single("A", 2).unwrap());
            QuantumState::new(tau.op().tensor(prev.op()).unwrap().embed(&s).unwrap(), true)
                .unwrap()
        };
        let out = mix_toward_uniform(&tau_prod, &prev, 0.3).unwrap();
        assert!(linalg::frob_norm(&(out.matrix() - tau_prod.matrix())) < 1e-10);

        // TV bound: ½‖ρ − ρ̄‖₁ ≤ ε + δ when ½‖ρ − ρ̃‖₁ ≤ ε
        let rho = random_state(s.clone(), 32);
        let tilde = random_state(s.clone(), 33);
        let eps_tv = 0.5 * linalg::herm_trace_norm(&(rho.matrix() - tilde.matrix()));
        let delta = 0.05;
        let bar = mix_toward_uniform(&tilde, &rho.marginal(&["B"]).unwrap(), delta).unwrap();
        let tv = 0.5 * linalg::herm_trace_norm(&(rho.matrix() - bar.matrix()));
        assert!(tv <= eps_tv + delta + 1e-10);

        // operator floor (δ/|A|)·I ⊗ ρ_prev ≤ ρ̄
        let prev_embedded = {
            let i_a = LabeledOperator::identity(RegisterSpace::single("A", 2).unwrap());
            i_a.tensor(rho.marginal(&["B"]).unwrap().op())
                .unwrap()
                .embed(&s)
                .unwrap()
        };
        let gap = bar.matrix() - prev_embedded.matrix() * cr(delta / 2.0);
        assert!(linalg::min_eigval(&gap) > -1e-10);
    }

    #[test]
    fn good_projector_equal_states() {
        let s = RegisterSpace::single("A", 3).unwrap();
        let rho = random_state(s, 41);
        let (pi, diag) = good_projector(&rho, &rho, 0.0).unwrap();
        // support of a full-rank state is everything
        assert_eq!(pi.rank(), 3);
        assert!(diag.discarded_trace < 1e-10);
    }

    #[test]
    fn good_projector_engineered_pair() {
        for (dim, eps) in [(4usize, 1e-2f64), (8, 1e-2), (8, 1e-3)] {
            let s = RegisterSpace::single("A", dim).unwrap();
            let sigma = random_state(s.clone(), 51 + dim as u64);
            let noise = random_state(s.clone(), 77 + dim as u64);
            // engineered: ρ = (1−t)σ + t·noise has ½‖ρ−σ‖₁ ≤ t
            let t = eps * 0.9;
            let rho = QuantumState::from_matrix(
                s,
                sigma.matrix() * cr(1.0 - t) + noise.matrix() * cr(t),
                true,
            )
            .unwrap();
            let (pi, diag) = good_projector(&rho, &sigma, eps).unwrap();
            // Eq. good_proj1: (1+g₁(ε))σ − ΠρΠ ⪰ 0
            let lhs = sigma.matrix() * cr(1.0 + good_proj_g1(eps))
                - pi.matrix() * rho.matrix() * pi.matrix();
            assert!(
                linalg::min_eigval(&lhs) >= -1e-8,
                "dim {dim} eps {eps}: min eig {}",
                linalg::min_eigval(&lhs)
            );
            // Eq. good_proj2
            let kept = linalg::inner(pi.matrix(), rho.matrix());
            assert!(1.0 - kept <= good_proj_g2(eps) + 1e-8);
            // mass bookkeeping: Σ μ_k ≤ 2ε
            let mass: f64 = diag.bin_masses.iter().sum();
            assert!(mass <= 2.0 * eps + 1e-10, "mass {mass}");
            // Π commutes with σ's bins: ΠσΠ ≤ (1+δ₁)σ
            let lhs2 = sigma.matrix() * cr(1.0 + diag.delta1)
                - pi.matrix() * sigma.matrix() * pi.matrix();
            assert!(linalg::min_eigval(&lhs2) >= -1e-9);
        }
    }

    #[test]
    fn pinched_chain_identity_and_expansion() {
        let s = RegisterSpace::new(vec![("A1", 2), ("A2", 2)]).unwrap();
        let rho = random_state(s.clone(), 61);
        // all projectors identity: unchanged
        let ident = vec![
            Projector::identity(RegisterSpace::single("A1", 2).unwrap()),
            Projector::identity(s.clone()),
        ];
        let out = pinched_chain_state(&rho, &ident, 0.25).unwrap();
        assert!(linalg::frob_norm(&(out.matrix() - rho.matrix())) < 1e-10);

        // expansion oracle for n=2 with nontrivial projectors
        let p1 = {
            let m = CMat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { cr(1.0) } else { cr(0.0) });
            Projector::new(
                LabeledOperator::new(RegisterSpace::single("A1", 2).unwrap(), m, true).unwrap(),
            )
            .unwrap()
        };
        let p2 = {
            let rnd = random_state(s.clone(), 62);
            rnd.op().support_projector().unwrap() // full rank → identity
        };
        let delta = 0.25;
        let projs = vec![p1.clone(), p2.clone()];
        let got = pinched_chain_state(&rho, &projs, delta).unwrap();
        // oracle: sum over labels l ∈ {g,b}² with weight δ^{ω_b/2}
        let e1 = p1.embed(&s).unwrap();
        let e2 = p2.embed(&s).unwrap();
        let d = 4;
        let mut oracle = CMat::zeros(d, d);
        for l1 in 0..2 {
            for l2 in 0..2 {
                let q1 = if l1 == 0 {
                    e1.matrix().clone()
                } else {
                    linalg::eye(d) - e1.matrix()
                };
                let q2 = if l2 == 0 {
                    e2.matrix().clone()
                } else {
                    linalg::eye(d) - e2.matrix()
                };
                let weight = delta.powf(0.5 * (l1 + l2) as f64);
                oracle += (&q1 * &q2 * rho.matrix() * &q2 * &q1) * cr(weight);
            }
        }
        assert!(linalg::frob_norm(&(got.matrix() - &oracle)) < 1e-10);
    }

    #[test]
    fn damped_chain_cases() {
        let s = RegisterSpace::new(vec![("A1", 2), ("A2", 2)]).unwrap();
        let rho = random_state(s.clone(), 71);
        let quad = default_quadrature();
        // identity projectors → ρ unchanged
        let ident = vec![Projector::identity(s.clone()), Projector::identity(s.clone())];
        let out = damped_gt_projector_state(&rho, &ident, 0.3, &quad).unwrap();
        assert!(linalg::frob_norm(&(out.matrix() - rho.matrix())) < 1e-8);
        // δ = 1 → no damping
        let p1 = {
            let m = CMat::from_fn(2, 2, |i, j| if i == j && i == 0 { cr(1.0) } else { cr(0.0) });
            Projector::new(
                LabeledOperator::new(RegisterSpace::single("A1", 2).unwrap(), m, true).unwrap(),
            )
            .unwrap()
        };
        let out1 = damped_gt_projector_state(&rho, &[p1.clone()], 1.0, &quad).unwrap();
        assert!(linalg::frob_norm(&(out1.matrix() - rho.matrix())) < 1e-8);

        // η ≤ (1+√δ)ⁿ pinched_chain_state
        let delta = 0.2;
        let projs = vec![p1.clone(), p1.embed(&s).unwrap()];
        let eta = damped_gt_projector_state(&rho, &projs, delta, &quad).unwrap();
        assert!(eta.trace() <= 1.0 + 1e-9);
        let pinched = pinched_chain_state(&rho, &projs, delta).unwrap();
        let gap = pinched.matrix() * cr((1.0 + delta.sqrt()).powi(2)) - eta.matrix();
        assert!(linalg::min_eigval(&gap) >= -1e-8);
    }

    #[test]
    fn asymmetric_pinching_and_switching_inequalities() {
        let s = RegisterSpace::single("A", 4).unwrap();
        let x = {
            let r = random_state(s.clone(), 81);
            r.matrix() * cr(4.0)
        };
        let p = {
            let r = random_state(s.clone(), 82);
            let (vals, vecs) = linalg::herm_eigen(r.matrix());
            let _ = vals;
            let mut m = CMat::zeros(4, 4);
            for k in 2..4 {
                let col = vecs.column(k);
                for i in 0..4 {
                    for j in 0..4 {
                        m[(i, j)] += col[i] * col[j].conj();
                    }
                }
            }
            m
        };
        let pperp = linalg::eye(4) - &p;
        for t in [0.1, 1.0, 10.0] {
            let rhs = (&p * &x * &p) * cr(1.0 + t) + (&pperp * &x * &pperp) * cr(1.0 + 1.0 / t);
            assert!(linalg::min_eigval(&(rhs - &x)) >= -1e-9);
        }
        // projector switching: Π⊥ X Π⊥ ≤ 2X + 2ΠXΠ
        let lhs = &pperp * &x * &pperp;
        let rhs = &x * cr(2.0) + (&p * &x * &p) * cr(2.0);
        assert!(linalg::min_eigval(&(rhs - lhs)) >= -1e-9);
    }
}
