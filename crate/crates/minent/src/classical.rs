//! Classical distributions, conditional kernels, and the classical
//! chain-rule pipelines.
//!
//! Everything here works on mass tables over products of finite alphabets.
//! The smoothing achievers reuse the diagonal path of [`crate::smooth`], so
//! the classical and quantum pipelines share one solver and one tolerance
//! regime.

use crate::divergence::xlogx;
use crate::linalg::cr;
use crate::operator::QuantumState;
use crate::registers::RegisterSpace;
use crate::smooth::{smooth_entropy, SmoothKind};
use crate::{CMat, Error, Result};

/// Nonnegative mass function over a product of finite alphabets, total ≤ 1.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    space: RegisterSpace,
    mass: Vec<f64>,
}

impl JointDistribution {
    pub fn new(space: RegisterSpace, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != space.total_dim() {
            return Err(Error::Labeling(format!(
                "mass table has {} entries, alphabets span {}",
                mass.len(),
                space.total_dim()
            )));
        }
        let mut total = 0.0;
        for &m in &mass {
            if m < -1e-12 {
                return Err(Error::Domain(format!("negative mass {m}")));
            }
            total += m;
        }
        if total > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("total mass {total} exceeds 1")));
        }
        Ok(JointDistribution {
            space,
            mass: mass.into_iter().map(|m| m.max(0.0)).collect(),
        })
    }

    pub fn uniform(space: RegisterSpace) -> Self {
        let d = space.total_dim();
        JointDistribution {
            space,
            mass: vec![1.0 / d as f64; d],
        }
    }

    pub fn space(&self) -> &RegisterSpace {
        &self.space
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn prob(&self, multi: &[usize]) -> f64 {
        self.mass[self.space.flatten(multi)]
    }

    /// Marginal over the given labels (kept in their original order).
    pub fn marginal(&self, keep: &[&str]) -> Result<JointDistribution> {
        let keep_space = self.space.restrict(keep)?;
        let mut out = vec![0.0; keep_space.total_dim()];
        let positions: Vec<usize> = keep_space
            .labels()
            .iter()
            .map(|l| self.space.index_of(l).unwrap())
            .collect();
        for (i, &m) in self.mass.iter().enumerate() {
            let multi = self.space.unflatten(i);
            let sub: Vec<usize> = positions.iter().map(|&p| multi[p]).collect();
            out[keep_space.flatten(&sub)] += m;
        }
        JointDistribution::new(keep_space, out)
    }

    /// Reorder alphabets.
    pub fn permute(&self, order: &[&str]) -> Result<JointDistribution> {
        let new_space = self.space.restrict(order)?;
        if new_space.num_registers() != self.space.num_registers() {
            return Err(Error::Labeling("permutation must list every alphabet".into()));
        }
        let new_space = RegisterSpace::new(
            order
                .iter()
                .map(|l| (l.to_string(), self.space.dim_of(l).unwrap()))
                .collect(),
        )?;
        let positions: Vec<usize> = new_space
            .labels()
            .iter()
            .map(|l| self.space.index_of(l).unwrap())
            .collect();
        let mut out = vec![0.0; self.mass.len()];
        for (i, &m) in self.mass.iter().enumerate() {
            let multi = self.space.unflatten(i);
            let sub: Vec<usize> = positions.iter().map(|&p| multi[p]).collect();
            out[new_space.flatten(&sub)] = m;
        }
        JointDistribution::new(new_space, out)
    }

    /// Total-variation distance `½‖p − q‖₁` (alphabets must match).
    pub fn tv_distance(&self, other: &JointDistribution) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Labeling("distributions on different alphabets".into()));
        }
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(other.mass.iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Classical relative entropy `D(p‖q)` in nats, `+∞` on support leak.
    pub fn relative_entropy(&self, other: &JointDistribution) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Labeling("distributions on different alphabets".into()));
        }
        let tp = self.total();
        if tp <= 0.0 {
            return Err(Error::Precondition("relative entropy of a zero mass".into()));
        }
        let mut acc = 0.0;
        for (&p, &q) in self.mass.iter().zip(other.mass.iter()) {
            if p > 1e-300 {
                if q <= 1e-300 {
                    return Ok(f64::INFINITY);
                }
                acc += p * (p / q).ln();
            }
        }
        Ok(acc / tp)
    }

    /// Embed as a diagonal quantum state on the same registers.
    pub fn to_diagonal_state(&self) -> Result<QuantumState> {
        let d = self.space.total_dim();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = cr(self.mass[i]);
        }
        QuantumState::from_matrix(self.space.clone(), m, (self.total() - 1.0).abs() < 1e-10)
    }

    /// Read a diagonal quantum state back into a mass table.
    pub fn from_diagonal_state(state: &QuantumState) -> Result<JointDistribution> {
        let d = state.dim();
        let mut mass = vec![0.0; d];
        for i in 0..d {
            mass[i] = state.matrix()[(i, i)].re.max(0.0);
        }
        let tot: f64 = mass.iter().sum();
        if tot > 1.0 {
            for m in mass.iter_mut() {
                *m /= tot;
            }
        }
        JointDistribution::new(state.space().clone(), mass)
    }
}

/// Conditional probability table: one row per conditioning outcome.
#[derive(Debug, Clone)]
pub struct ConditionalKernel {
    target_space: RegisterSpace,
    given_space: RegisterSpace,
    /// `rows[given][target]`, each row sums to 1.
    rows: Vec<Vec<f64>>,
}

impl ConditionalKernel {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn target_space(&self) -> &RegisterSpace {
        &self.target_space
    }

    pub fn given_space(&self) -> &RegisterSpace {
        &self.given_space
    }

    /// Largest entry: `max_{a,c} k(a|c)`.
    pub fn max_entry(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().cloned())
            .fold(0.0, f64::max)
    }

    /// Smallest entry.
    pub fn min_entry(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().cloned())
            .fold(f64::INFINITY, f64::min)
    }

    /// `(1−δ)·k + δ·uniform` on the target alphabet.
    pub fn mix_with_uniform(&self, delta: f64) -> ConditionalKernel {
        let u = 1.0 / self.target_space.total_dim() as f64;
        ConditionalKernel {
            target_space: self.target_space.clone(),
            given_space: self.given_space.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&x| (1.0 - delta) * x + delta * u).collect())
                .collect(),
        }
    }
}

/// Conditional distribution `p(target|given)`; zero-mass conditioning rows
/// become uniform.
pub fn make_conditional(
    p: &JointDistribution,
    target: &[&str],
    given: &[&str],
) -> Result<ConditionalKernel> {
    for t in target {
        if given.contains(t) {
            return Err(Error::Labeling(format!(
                "label {t} on both sides of a conditional"
            )));
        }
    }
    let target_space = p.space().restrict(target)?;
    let given_space = p.space().restrict(given)?;
    let dt = target_space.total_dim();
    let dg = given_space.total_dim();
    let t_pos: Vec<usize> = target_space
        .labels()
        .iter()
        .map(|l| p.space().index_of(l).unwrap())
        .collect();
    let g_pos: Vec<usize> = given_space
        .labels()
        .iter()
        .map(|l| p.space().index_of(l).unwrap())
        .collect();
    let mut joint = vec![vec![0.0; dt]; dg];
    for (i, &m) in p.mass().iter().enumerate() {
        let multi = p.space().unflatten(i);
        let ti: Vec<usize> = t_pos.iter().map(|&q| multi[q]).collect();
        let gi: Vec<usize> = g_pos.iter().map(|&q| multi[q]).collect();
        joint[given_space.flatten(&gi)][target_space.flatten(&ti)] += m;
    }
    let rows = joint
        .into_iter()
        .map(|row| {
            let tot: f64 = row.iter().sum();
            if tot > 1e-300 {
                row.into_iter().map(|x| x / tot).collect()
            } else {
                vec![1.0 / dt as f64; dt]
            }
        })
        .collect();
    Ok(ConditionalKernel {
        target_space,
        given_space,
        rows,
    })
}

/// Product `q_B(b)·k(a|b)` as a joint distribution over `given ∪ target`
/// (given alphabets first).
pub fn compose_kernel(q_b: &JointDistribution, k: &ConditionalKernel) -> Result<JointDistribution> {
    if q_b.space() != k.given_space() {
        return Err(Error::Labeling(
            "kernel conditioning alphabets mismatch the base distribution".into(),
        ));
    }
    let out_space = k.given_space().join(k.target_space())?;
    let dt = k.target_space().total_dim();
    let mut mass = vec![0.0; out_space.total_dim()];
    for (g, &qb) in q_b.mass().iter().enumerate() {
        for t in 0..dt {
            mass[g * dt + t] = qb * k.rows()[g][t];
        }
    }
    JointDistribution::new(out_space, mass)
}

/// Binary entropy in nats: `h(x) = −x log x − (1−x) log(1−x)`, `h(0)=h(1)=0`.
pub fn binary_entropy(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NAN;
    }
    -xlogx(x) - xlogx(1.0 - x)
}

/// The chain-rule constant of the relative-entropy comparison:
/// `z(ε_tv, δ) = (ε_tv + δ)/(1 − δ/|A|²) · log(|A|²/δ)`.
pub fn z_mixture(eps_tv: f64, delta: f64, dim_a: usize) -> f64 {
    let a2 = (dim_a * dim_a) as f64;
    (eps_tv + delta) / (1.0 - delta / a2) * (a2 / delta).ln()
}

/// The approximate-chain-rule constant
/// `z(ε, δ) = h(2ε) + 6ε log(1/δ) + 4ε log|A|`.
pub fn z_approx_chain(eps: f64, delta: f64, dim_a: usize) -> f64 {
    binary_entropy(2.0 * eps) + 6.0 * eps * (1.0 / delta).ln() + 4.0 * eps * (dim_a as f64).ln()
}

/// Closed-form classical conditional min-entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalEntropyKind {
    /// `−log Σ_b p(b) max_a p(a|b)`.
    Min,
    /// `−log max_{a,b} p(a|b)`.
    MinDown,
}

/// Evaluate the classical min-entropy closed forms.
pub fn classical_entropies(
    p: &JointDistribution,
    target: &[&str],
    given: &[&str],
    kind: ClassicalEntropyKind,
) -> Result<f64> {
    let pb = p.marginal(given)?;
    let kernel = make_conditional(p, target, given)?;
    match kind {
        ClassicalEntropyKind::Min => {
            let mut acc = 0.0;
            for (g, &m) in pb.mass().iter().enumerate() {
                let best = kernel.rows()[g].iter().cloned().fold(0.0, f64::max);
                acc += m * best;
            }
            Ok(-acc.max(1e-300).ln())
        }
        ClassicalEntropyKind::MinDown => {
            let mut worst: f64 = 0.0;
            for (g, &m) in pb.mass().iter().enumerate() {
                if m > 1e-300 {
                    worst = worst.max(kernel.rows()[g].iter().cloned().fold(0.0, f64::max));
                }
            }
            Ok(-worst.max(1e-300).ln())
        }
    }
}

/// Output of the §-style classical chain construction.
#[derive(Debug)]
pub struct ClassicalChain {
    /// Per-link smoothing achiever conditionals `q⁽ᵏ⁾(a_k | a_1^{k−1} b)`.
    pub q_kernels: Vec<ConditionalKernel>,
    /// The uniform-mixed kernels `r⁽ᵏ⁾ = (1−δ)q⁽ᵏ⁾ + δu`.
    pub r_kernels: Vec<ConditionalKernel>,
    /// The auxiliary distribution `r = p_B Π_k r⁽ᵏ⁾` (alphabets ordered as
    /// in the input).
    pub r: JointDistribution,
    /// `½‖p_{A_1^k B} − p_{A_1^{k−1} B} r⁽ᵏ⁾‖₁` per link.
    pub per_link_distance: Vec<f64>,
    /// Smoothed per-link exponents `λ_k = −log max q⁽ᵏ⁾`.
    pub lambdas: Vec<f64>,
}

/// Build the auxiliary chain distribution from down-variant smoothing
/// achievers: per link, smooth `H_min^{↓,ε}` of `p_{A_1^k B}`, extract the
/// achiever's conditional kernel, mix it toward uniform with weight δ, and
/// multiply the kernels onto `p_B`.
pub fn classical_chain_construction(
    p: &JointDistribution,
    a_labels: &[&str],
    b_labels: &[&str],
    eps: f64,
    delta: f64,
) -> Result<ClassicalChain> {
    if !(0.0..1.0).contains(&eps) || !(0.0 < delta && delta < 1.0) {
        return Err(Error::Parameter(
            "chain construction needs ε ∈ [0,1), δ ∈ (0,1)".into(),
        ));
    }
    let n = a_labels.len();
    let mut q_kernels = Vec::with_capacity(n);
    let mut r_kernels = Vec::with_capacity(n);
    let mut per_link_distance = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n);

    for k in 0..n {
        let kept: Vec<&str> = a_labels[..=k].iter().cloned().chain(b_labels.iter().cloned()).collect();
        let p_k = p.marginal(&kept)?;
        let achiever = if eps == 0.0 {
            p_k.clone()
        } else {
            let state = p_k.to_diagonal_state()?;
            let sm = smooth_entropy(&state, &[a_labels[k]],
                &kept.iter().cloned().filter(|l| *l != a_labels[k]).collect::<Vec<_>>(),
                SmoothKind::MinDown, eps)?;
            JointDistribution::from_diagonal_state(&sm.witness_state)?
        };
        let given: Vec<&str> = kept
            .iter()
            .cloned()
            .filter(|l| *l != a_labels[k])
            .collect();
        let qk = make_conditional(&achiever, &[a_labels[k]], &given)?;
        lambdas.push(-qk.max_entry().max(1e-300).ln());
        let rk = qk.mix_with_uniform(delta);

        // distance ½‖p_{A_1^k B} − p_{A_1^{k−1} B} r⁽ᵏ⁾‖₁
        let prev = p.marginal(&given)?;
        let composed = compose_kernel(&prev, &rk)?.permute(&kept)?;
        per_link_distance.push(p_k.tv_distance(&composed)?);

        q_kernels.push(qk);
        r_kernels.push(rk);
    }

    // r = p_B Π_k r⁽ᵏ⁾, assembled link by link (aligning register order to
    // each kernel's conditioning order)
    let mut r = p.marginal(b_labels)?;
    for rk in r_kernels.iter() {
        let order = rk.given_space().labels();
        r = compose_kernel(&r.permute(&order)?, rk)?;
    }
    // reorder to the input's alphabet order
    let order = p.space().labels();
    let r = r.permute(&order)?;
    Ok(ClassicalChain {
        q_kernels,
        r_kernels,
        r,
        per_link_distance,
        lambdas,
    })
}

/// Indicator tables of the per-link bad sets and their membership count.
#[derive(Debug, Clone)]
pub struct BadSetStructure {
    /// `sets[k][x]` marks elements where `p(a_k|·) > (1+√(2ε)) q⁽ᵏ⁾(a_k|·)`.
    pub sets: Vec<Vec<bool>>,
    /// `L(x) = Σ_k 1[x ∈ B_k]`.
    pub l_table: Vec<u32>,
}

/// Report of the exponentially damped auxiliary distribution.
#[derive(Debug)]
pub struct DampedDistribution {
    pub bad_sets: BadSetStructure,
    /// `q(x) = δ^{L(x)} p(x)` (subnormalized).
    pub q_damped: JointDistribution,
    /// `Pr_p(B_k)` per link.
    pub bad_probabilities: Vec<f64>,
    /// `E_p[L]`.
    pub expected_l: f64,
    /// `D(p‖q_damped)`, equal to `E_p[L]·log(1/δ)` by construction.
    pub relative_entropy: f64,
    /// `max_x q(x) / (p(b) Π_k (1+√(2ε)) e^{−λ_k})` over the support.
    pub product_bound_ratio: f64,
}

/// Build the damped distribution `q = δ^L p` from per-link kernels, with the
/// `(1+√(2ε))` threshold defining the bad sets.
pub fn damped_distribution(
    p: &JointDistribution,
    q_kernels: &[ConditionalKernel],
    a_labels: &[&str],
    b_labels: &[&str],
    eps: f64,
    delta: f64,
) -> Result<DampedDistribution> {
    let n = a_labels.len();
    if q_kernels.len() != n {
        return Err(Error::Precondition("one kernel per link required".into()));
    }
    let dim_a = p.space().dim_of(a_labels[0])?;
    if !(0.0 < delta && delta < 1.0 / dim_a as f64) {
        return Err(Error::Precondition(format!(
            "damping weight must lie in (0, 1/|A|) = (0, {:.3}), got {delta}",
            1.0 / dim_a as f64
        )));
    }
    let threshold = 1.0 + (2.0 * eps).sqrt();
    let d = p.space().total_dim();
    let lambdas: Vec<f64> = q_kernels
        .iter()
        .map(|k| -k.max_entry().max(1e-300).ln())
        .collect();

    let mut sets = vec![vec![false; d]; n];
    let mut l_table = vec![0u32; d];
    for k in 0..n {
        let kept: Vec<&str> = a_labels[..=k]
            .iter()
            .cloned()
            .chain(b_labels.iter().cloned())
            .collect();
        let given: Vec<&str> = kept
            .iter()
            .cloned()
            .filter(|l| *l != a_labels[k])
            .collect();
        let p_cond = make_conditional(&p.marginal(&kept)?, &[a_labels[k]], &given)?;
        let qk = &q_kernels[k];
        let g_space = p_cond.given_space().clone();
        let t_space = p_cond.target_space().clone();
        let g_pos: Vec<usize> = g_space
            .labels()
            .iter()
            .map(|l| p.space().index_of(l).unwrap())
            .collect();
        let t_pos: Vec<usize> = t_space
            .labels()
            .iter()
            .map(|l| p.space().index_of(l).unwrap())
            .collect();
        for x in 0..d {
            let multi = p.space().unflatten(x);
            let g: Vec<usize> = g_pos.iter().map(|&q| multi[q]).collect();
            let t: Vec<usize> = t_pos.iter().map(|&q| multi[q]).collect();
            let gi = g_space.flatten(&g);
            let ti = t_space.flatten(&t);
            if p_cond.rows()[gi][ti] > threshold * qk.rows()[gi][ti] {
                sets[k][x] = true;
                l_table[x] += 1;
            }
        }
    }

    let mut q_mass = vec![0.0; d];
    let mut expected_l = 0.0;
    for x in 0..d {
        q_mass[x] = delta.powi(l_table[x] as i32) * p.mass()[x];
        expected_l += l_table[x] as f64 * p.mass()[x];
    }
    let q_damped = JointDistribution::new(p.space().clone(), q_mass)?;
    let relative_entropy = expected_l * (1.0 / delta).ln();

    let bad_probabilities: Vec<f64> = (0..n)
        .map(|k| {
            sets[k]
                .iter()
                .zip(p.mass().iter())
                .filter(|(is_bad, _)| **is_bad)
                .map(|(_, &m)| m)
                .sum()
        })
        .collect();

    // product bound: q(a,b) ≤ p(b) Π_k (1+√(2ε)) e^{−λ_k}
    let pb = p.marginal(b_labels)?;
    let b_pos: Vec<usize> = pb
        .space()
        .labels()
        .iter()
        .map(|l| p.space().index_of(l).unwrap())
        .collect();
    let cap: f64 = lambdas.iter().map(|l| threshold * (-l).exp()).product();
    let mut ratio: f64 = 0.0;
    for x in 0..d {
        if q_damped.mass()[x] > 1e-300 {
            let multi = p.space().unflatten(x);
            let b: Vec<usize> = b_pos.iter().map(|&q| multi[q]).collect();
            let pbv = pb.mass()[pb.space().flatten(&b)];
            if pbv > 1e-300 {
                ratio = ratio.max(q_damped.mass()[x] / (pbv * cap));
            } else {
                ratio = f64::INFINITY;
            }
        }
    }

    Ok(DampedDistribution {
        bad_sets: BadSetStructure { sets, l_table },
        q_damped,
        bad_probabilities,
        expected_l,
        relative_entropy,
        product_bound_ratio: ratio,
    })
}

/// Report of one approximate-chain-rule evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ApproxChainReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub z: f64,
}

/// Evaluate the approximate chain rule for the relative entropy:
/// `D(p_AB‖q_AB) ≤ D(p_B‖q_B) + D(p'_AB‖p'_B q_{A|B}) + z(ε,δ)` with
/// `z(ε,δ) = h(2ε) + 6ε log(1/δ) + 4ε log|A|`, requiring `q(a|b) ≥ δ` and
/// `½‖p − p'‖₁ ≤ ε < 1/2`.
pub fn approx_d_chain_check(
    p: &JointDistribution,
    p_prime: &JointDistribution,
    q: &JointDistribution,
    a_labels: &[&str],
    b_labels: &[&str],
    eps: f64,
    delta: f64,
) -> Result<ApproxChainReport> {
    let tv = p.tv_distance(p_prime)?;
    if tv > eps + 1e-12 {
        return Err(Error::Precondition(format!(
            "½‖p−p'‖₁ = {tv:.3e} exceeds ε = {eps:.3e}"
        )));
    }
    if eps >= 0.5 {
        return Err(Error::Precondition("the chain rule needs ε < 1/2".into()));
    }
    let q_cond = make_conditional(q, a_labels, b_labels)?;
    if q_cond.min_entry() < delta - 1e-12 {
        return Err(Error::Precondition(format!(
            "conditional floor {:.3e} below δ = {delta:.3e}",
            q_cond.min_entry()
        )));
    }
    let dim_a: usize = a_labels
        .iter()
        .map(|l| p.space().dim_of(l).unwrap())
        .product();

    let lhs = p.relative_entropy(q)?;
    let db = p
        .marginal(b_labels)?
        .relative_entropy(&q.marginal(b_labels)?)?;
    let p_prime_b = p_prime.marginal(b_labels)?;
    let mixed = compose_kernel(&p_prime_b, &q_cond)?.permute(&p.space().labels())?;
    let dprime = p_prime.relative_entropy(&mixed)?;
    let z = z_approx_chain(eps, delta, dim_a);
    let rhs = db + dprime + z;
    Ok(ApproxChainReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        z,
    })
}

/// The introductory counterexample distribution: a uniform bit `B`; when
/// `B = 0` the string `A_1^n` is all zeros, when `B = 1` it is uniform.
pub fn footnote_distribution(n: usize) -> Result<JointDistribution> {
    let mut regs: Vec<(String, usize)> = (1..=n).map(|k| (format!("A{k}"), 2)).collect();
    regs.push(("B".into(), 2));
    let space = RegisterSpace::new(regs)?;
    let d = space.total_dim();
    let mut mass = vec![0.0; d];
    for i in 0..d {
        let multi = space.unflatten(i);
        let b = multi[n];
        if b == 0 {
            if multi[..n].iter().all(|&a| a == 0) {
                mass[i] = 0.5;
            }
        } else {
            mass[i] = 0.5 / (1 << n) as f64;
        }
    }
    JointDistribution::new(space, mass)
}
