//! Register-labeled operators, states and projectors.
//!
//! A [`LabeledOperator`] is a complex square matrix together with the
//! [`RegisterSpace`] it acts on. All tensor bookkeeping (products, partial
//! traces, embeddings, permutations) happens here, so the entropy and
//! construction modules never touch raw indices.

use crate::linalg::{self, cr, KERNEL_CUTOFF};
use crate::registers::RegisterSpace;
use crate::{C64, CMat, Error, Result};

/// A complex square matrix over an ordered list of named registers.
#[derive(Debug, Clone)]
pub struct LabeledOperator {
    space: RegisterSpace,
    matrix: CMat,
    hermitian: bool,
}

impl LabeledOperator {
    /// Wrap a matrix over a register space. If `hermitian` is set, the matrix
    /// must be Hermitian to within `1e-12` of its operator norm; it is then
    /// symmetrized to scrub rounding noise.
    pub fn new(space: RegisterSpace, matrix: CMat, hermitian: bool) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Labeling(format!(
                "matrix is {}x{} but the register space has total dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                d
            )));
        }
        let matrix = if hermitian {
            let defect = linalg::hermiticity_defect(&matrix);
            let scale = linalg::op_norm(&matrix).max(1e-300);
            if defect > 1e-12 * scale.max(1.0) {
                return Err(Error::Domain(format!(
                    "matrix marked hermitian deviates from its adjoint by {defect:.3e}"
                )));
            }
            linalg::hermitian_part(&matrix)
        } else {
            matrix
        };
        Ok(LabeledOperator {
            space,
            matrix,
            hermitian,
        })
    }

    /// Identity on a space.
    pub fn identity(space: RegisterSpace) -> Self {
        let d = space.total_dim();
        LabeledOperator {
            space,
            matrix: linalg::eye(d),
            hermitian: true,
        }
    }

    /// Zero operator on a space.
    pub fn zeros(space: RegisterSpace, hermitian: bool) -> Self {
        let d = space.total_dim();
        LabeledOperator {
            space,
            matrix: CMat::zeros(d, d),
            hermitian,
        }
    }

    pub fn space(&self) -> &RegisterSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    /// Replace the matrix, keeping space and flag.
    pub fn with_matrix(&self, matrix: CMat) -> Result<Self> {
        LabeledOperator::new(self.space.clone(), matrix, self.hermitian)
    }

    /// Tensor product: Kronecker product on the concatenated register list.
    pub fn tensor(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        let space = self.space.join(&other.space)?;
        let matrix = linalg::kron(&self.matrix, &other.matrix);
        Ok(LabeledOperator {
            space,
            matrix,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    /// Reorder registers to the given label order (must be a permutation of
    /// the current labels).
    pub fn permute(&self, order: &[&str]) -> Result<LabeledOperator> {
        let labels = self.space.labels();
        if order.len() != labels.len() {
            return Err(Error::Labeling(format!(
                "permutation has {} labels, space has {}",
                order.len(),
                labels.len()
            )));
        }
        let mut perm = Vec::with_capacity(order.len());
        for l in order {
            match self.space.index_of(l) {
                Some(i) => perm.push(i),
                None => return Err(Error::Labeling(format!("unknown register {l}"))),
            }
        }
        {
            let mut seen = vec![false; perm.len()];
            for &p in &perm {
                if seen[p] {
                    return Err(Error::Labeling("repeated register in permutation".into()));
                }
                seen[p] = true;
            }
        }
        let new_space = RegisterSpace::new(
            perm.iter()
                .map(|&i| {
                    let r = &self.space.registers()[i];
                    (r.label.clone(), r.dim)
                })
                .collect(),
        )?;
        let d = self.dim();
        // map each flat index of the new layout to the old flat index
        let mut map = vec![0usize; d];
        for new_idx in 0..d {
            let new_multi = new_space.unflatten(new_idx);
            let mut old_multi = vec![0usize; perm.len()];
            for (pos, &old_reg) in perm.iter().enumerate() {
                old_multi[old_reg] = new_multi[pos];
            }
            map[new_idx] = self.space.flatten(&old_multi);
        }
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self.matrix[(map[i], map[j])];
            }
        }
        Ok(LabeledOperator {
            space: new_space,
            matrix: out,
            hermitian: self.hermitian,
        })
    }

    /// Partial trace over the given register labels. The result lives on the
    /// remaining registers in their original order; trace is preserved.
    pub fn partial_trace(&self, discard: &[&str]) -> Result<LabeledOperator> {
        for l in discard {
            if !self.space.contains(l) {
                return Err(Error::Labeling(format!("unknown register {l}")));
            }
        }
        let keep: Vec<String> = self.space.complement(discard);
        let keep_refs: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
        let keep_space = self.space.restrict(&keep_refs)?;
        let dk = keep_space.total_dim();
        let dims = self.space.dims();
        let nregs = dims.len();
        let keep_idx: Vec<usize> = keep_refs
            .iter()
            .map(|l| self.space.index_of(l).unwrap())
            .collect();
        let disc_idx: Vec<usize> = discard
            .iter()
            .map(|l| self.space.index_of(l).unwrap())
            .collect();
        let dd: usize = disc_idx.iter().map(|&i| dims[i]).product();
        let disc_space_dims: Vec<usize> = disc_idx.iter().map(|&i| dims[i]).collect();

        let mut out = CMat::zeros(dk, dk);
        let mut multi_row = vec![0usize; nregs];
        let mut multi_col = vec![0usize; nregs];
        for i in 0..dk {
            let mi = keep_space.unflatten(i);
            for j in 0..dk {
                let mj = keep_space.unflatten(j);
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..dd {
                    let mut rem = t;
                    for (pos, &d_) in disc_space_dims.iter().enumerate().rev() {
                        multi_row[disc_idx[pos]] = rem % d_;
                        multi_col[disc_idx[pos]] = rem % d_;
                        rem /= d_;
                    }
                    for (pos, &ki) in keep_idx.iter().enumerate() {
                        multi_row[ki] = mi[pos];
                        multi_col[ki] = mj[pos];
                    }
                    acc += self.matrix
                        [(self.space.flatten(&multi_row), self.space.flatten(&multi_col))];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(LabeledOperator {
            space: keep_space,
            matrix: out,
            hermitian: self.hermitian,
        })
    }

    /// Marginal on the given labels (traces out everything else), keeping the
    /// original register order.
    pub fn marginal(&self, keep: &[&str]) -> Result<LabeledOperator> {
        let discard = self.space.complement(keep);
        let discard_refs: Vec<&str> = discard.iter().map(|s| s.as_str()).collect();
        self.partial_trace(&discard_refs)
    }

    /// Embed into a larger space by tensoring the identity on the missing
    /// registers and permuting to the target register order.
    pub fn embed(&self, target: &RegisterSpace) -> Result<LabeledOperator> {
        for r in self.space.registers() {
            match target.index_of(&r.label) {
                Some(i) if target.registers()[i].dim == r.dim => {}
                Some(_) => {
                    return Err(Error::Labeling(format!(
                        "register {} has a different dimension in the target space",
                        r.label
                    )))
                }
                None => {
                    return Err(Error::Labeling(format!(
                        "target space lacks register {}",
                        r.label
                    )))
                }
            }
        }
        let missing: Vec<(String, usize)> = target
            .registers()
            .iter()
            .filter(|r| !self.space.contains(&r.label))
            .map(|r| (r.label.clone(), r.dim))
            .collect();
        let mut big = self.clone();
        if !missing.is_empty() {
            let id_space = RegisterSpace::new(missing)?;
            big = big.tensor(&LabeledOperator::identity(id_space))?;
        }
        let order = target.labels();
        big.permute(&order)
    }

    /// Complex power `a^z` of a PSD operator (Moore–Penrose on the kernel).
    pub fn complex_power(&self, z: C64) -> Result<LabeledOperator> {
        self.require_psd("complex_power")?;
        let m = linalg::psd_power(&self.matrix, z);
        let hermitian = z.im == 0.0;
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: m,
            hermitian,
        })
    }

    /// `(x)⁺` together with the projector onto the strictly positive
    /// eigenspace of a Hermitian operator.
    pub fn positive_part_and_support(&self) -> Result<(LabeledOperator, Projector)> {
        if !self.hermitian {
            return Err(Error::Domain(
                "positive part needs a hermitian operator".into(),
            ));
        }
        let (pos, sup) = linalg::positive_part(&self.matrix);
        let pos_op = LabeledOperator {
            space: self.space.clone(),
            matrix: pos,
            hermitian: true,
        };
        let proj = Projector::new(LabeledOperator {
            space: self.space.clone(),
            matrix: sup,
            hermitian: true,
        })?;
        Ok((pos_op, proj))
    }

    /// Projector onto the support of a PSD operator.
    pub fn support_projector(&self) -> Result<Projector> {
        self.require_psd("support_projector")?;
        Projector::new(LabeledOperator {
            space: self.space.clone(),
            matrix: linalg::support_projector(&self.matrix),
            hermitian: true,
        })
    }

    fn require_psd(&self, what: &str) -> Result<()> {
        if !self.hermitian {
            return Err(Error::Domain(format!("{what} needs a PSD operator")));
        }
        let min = linalg::min_eigval(&self.matrix);
        let scale = linalg::op_norm(&self.matrix).max(1e-300);
        if min < -1e-9 * scale.max(1.0) {
            return Err(Error::Domain(format!(
                "{what}: operator has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    /// Asymmetric pinching `Π x Π + δ Π⊥ x Π⊥`.
    pub fn pinch(&self, pi: &Projector, delta: f64) -> Result<LabeledOperator> {
        if pi.op().space() != &self.space {
            return Err(Error::Labeling(
                "pinch projector lives on a different register space".into(),
            ));
        }
        let p = pi.op().matrix();
        let d = self.dim();
        let pperp = linalg::eye(d) - p;
        let m = p * &self.matrix * p + (&pperp * &self.matrix * &pperp) * cr(delta);
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: m,
            hermitian: self.hermitian,
        })
    }
}

/// Positive-semidefinite labeled operator with trace at most one.
#[derive(Debug, Clone)]
pub struct QuantumState {
    op: LabeledOperator,
    normalized: bool,
}

impl QuantumState {
    /// Validate a Hermitian PSD operator with trace in `[0, 1 + 1e-10]`.
    /// `normalized` additionally requires `|tr − 1| ≤ 1e-10`.
    pub fn new(op: LabeledOperator, normalized: bool) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::Domain("states must be hermitian".into()));
        }
        let scale = linalg::op_norm(op.matrix()).max(1e-300);
        let min = linalg::min_eigval(op.matrix());
        if min < -1e-10 * scale.max(1.0) {
            return Err(Error::Domain(format!(
                "state has negative eigenvalue {min:.3e}"
            )));
        }
        let tr = op.trace().re;
        if !(0.0..=1.0 + 1e-10).contains(&tr) {
            return Err(Error::Domain(format!("state trace {tr} outside [0,1]")));
        }
        if normalized && (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "state marked normalized has trace {tr}"
            )));
        }
        Ok(QuantumState { op, normalized })
    }

    /// Build from a space and raw matrix. The matrix must already satisfy the
    /// state invariants.
    pub fn from_matrix(space: RegisterSpace, matrix: CMat, normalized: bool) -> Result<Self> {
        QuantumState::new(LabeledOperator::new(space, matrix, true)?, normalized)
    }

    /// Like [`QuantumState::from_matrix`] but clips small negative
    /// eigenvalues to zero first. Numerical pipelines produce such dust.
    pub fn from_matrix_clipped(
        space: RegisterSpace,
        matrix: CMat,
        normalized: bool,
    ) -> Result<Self> {
        let m = linalg::herm_fn(&matrix, |x| x.max(0.0));
        QuantumState::new(LabeledOperator::new(space, m, true)?, normalized)
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn space(&self) -> &RegisterSpace {
        self.op.space()
    }

    pub fn is_normalized_flagged(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Marginal state on the given labels.
    pub fn marginal(&self, keep: &[&str]) -> Result<QuantumState> {
        let m = self.op.marginal(keep)?;
        QuantumState::new(m, self.normalized)
    }

    /// Partial trace over the given labels.
    pub fn partial_trace(&self, discard: &[&str]) -> Result<QuantumState> {
        QuantumState::new(self.op.partial_trace(discard)?, self.normalized)
    }

    /// Reorder registers.
    pub fn permute(&self, order: &[&str]) -> Result<QuantumState> {
        QuantumState::new(self.op.permute(order)?, self.normalized)
    }

    /// Normalize to unit trace.
    pub fn normalize(&self) -> Result<QuantumState> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::Domain("cannot normalize a zero state".into()));
        }
        QuantumState::from_matrix(self.space().clone(), self.matrix() / cr(tr), true)
    }

    /// Completely mixed state on a space.
    pub fn maximally_mixed(space: RegisterSpace) -> QuantumState {
        let d = space.total_dim();
        let m = linalg::eye(d) / cr(d as f64);
        QuantumState {
            op: LabeledOperator {
                space,
                matrix: m,
                hermitian: true,
            },
            normalized: true,
        }
    }

    /// Pure normalized state from an amplitude vector (normalized internally).
    pub fn pure(space: RegisterSpace, amps: &[C64]) -> Result<QuantumState> {
        let d = space.total_dim();
        if amps.len() != d {
            return Err(Error::Labeling(format!(
                "amplitude vector has length {}, space has dimension {d}",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("zero amplitude vector".into()));
        }
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = amps[i] * amps[j].conj() / cr(norm * norm);
            }
        }
        QuantumState::from_matrix(space, m, true)
    }

    /// Purify into a fresh register with the given label. The purifying
    /// register gets dimension equal to the rank of the state (at least 1);
    /// a subnormalized state purifies to a subnormalized pure state.
    pub fn purify(&self, purifier_label: &str) -> Result<QuantumState> {
        if self.space().contains(purifier_label) {
            return Err(Error::Labeling(format!(
                "purifier label {purifier_label} already present"
            )));
        }
        let (vals, vecs) = linalg::herm_eigen(self.matrix());
        let d = self.dim();
        let vmax = vals.iter().cloned().fold(0.0, f64::max);
        let cut = KERNEL_CUTOFF * vmax;
        let kept: Vec<usize> = (0..d).filter(|&i| vals[i] > cut && vals[i] > 0.0).collect();
        if kept.is_empty() {
            return Err(Error::Domain("cannot purify the zero state".into()));
        }
        let r = kept.len();
        let pur_space = self
            .space()
            .join(&RegisterSpace::single(purifier_label, r)?)?;
        // |psi> = sum_k sqrt(l_k) |v_k>|k>, carries the state's total mass
        let mut amps = vec![C64::new(0.0, 0.0); d * r];
        for (k, &ei) in kept.iter().enumerate() {
            let w = cr(vals[ei].sqrt());
            for i in 0..d {
                amps[i * r + k] = vecs[(i, ei)] * w;
            }
        }
        let mut m = CMat::zeros(d * r, d * r);
        for i in 0..d * r {
            for j in 0..d * r {
                m[(i, j)] = amps[i] * amps[j].conj();
            }
        }
        QuantumState::from_matrix_clipped(pur_space, m, self.normalized)
    }
}

/// Precomputed index maps for the split of a register space into an `A` part
/// and a `B` part. Gives allocation-light `σ_B ↦ I_A ⊗ σ_B` (in the full
/// space's register order) and its adjoint `M ↦ Tr_A M`, which the
/// feasibility solver calls in its inner loop.
#[derive(Debug, Clone)]
pub struct TensorSplit {
    full_dim: usize,
    b_dim: usize,
    /// per full index: index into the B-subspace
    b_of: Vec<usize>,
    /// per full index: index into the A-subspace
    a_of: Vec<usize>,
    /// flat lookup `idx[b * a_dim + a] = full index`
    idx: Vec<usize>,
    a_dim: usize,
}

impl TensorSplit {
    /// Split `space` into `b_labels` (kept) and the rest (`A`, traced/identity).
    pub fn new(space: &RegisterSpace, b_labels: &[&str]) -> Result<TensorSplit> {
        for l in b_labels {
            if !space.contains(l) {
                return Err(Error::Labeling(format!("unknown register {l}")));
            }
        }
        let b_space = space.restrict(b_labels)?;
        let a_labels = space.complement(b_labels);
        let a_refs: Vec<&str> = a_labels.iter().map(|s| s.as_str()).collect();
        let a_space = space.restrict(&a_refs)?;
        let full_dim = space.total_dim();
        let b_dim = b_space.total_dim();
        let a_dim = a_space.total_dim();
        let b_pos: Vec<usize> = b_space
            .labels()
            .iter()
            .map(|l| space.index_of(l).unwrap())
            .collect();
        let a_pos: Vec<usize> = a_space
            .labels()
            .iter()
            .map(|l| space.index_of(l).unwrap())
            .collect();
        let mut b_of = vec![0usize; full_dim];
        let mut a_of = vec![0usize; full_dim];
        let mut idx = vec![0usize; full_dim];
        for i in 0..full_dim {
            let multi = space.unflatten(i);
            let bm: Vec<usize> = b_pos.iter().map(|&p| multi[p]).collect();
            let am: Vec<usize> = a_pos.iter().map(|&p| multi[p]).collect();
            let bi = b_space.flatten(&bm);
            let ai = a_space.flatten(&am);
            b_of[i] = bi;
            a_of[i] = ai;
            idx[bi * a_dim + ai] = i;
        }
        Ok(TensorSplit {
            full_dim,
            b_dim,
            b_of,
            a_of,
            idx,
            a_dim,
        })
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn b_dim(&self) -> usize {
        self.b_dim
    }

    pub fn a_dim(&self) -> usize {
        self.a_dim
    }

    /// B-subspace index of a full-space index.
    pub fn b_index_of(&self, full_index: usize) -> usize {
        self.b_of[full_index]
    }

    /// A-subspace index of a full-space index.
    pub fn a_index_of(&self, full_index: usize) -> usize {
        self.a_of[full_index]
    }

    /// Full-space index of a `(b, a)` index pair.
    pub fn full_index_of(&self, b: usize, a: usize) -> usize {
        self.idx[b * self.a_dim + a]
    }

    /// `σ_B ↦ I_A ⊗ σ_B` in the full space's register order.
    pub fn embed_b(&self, sigma: &CMat) -> CMat {
        let mut out = CMat::zeros(self.full_dim, self.full_dim);
        for i in 0..self.full_dim {
            let (bi, ai) = (self.b_of[i], self.a_of[i]);
            for bj in 0..self.b_dim {
                let j = self.idx[bj * self.a_dim + ai];
                out[(i, j)] = sigma[(bi, bj)];
            }
        }
        out
    }

    /// Adjoint of [`TensorSplit::embed_b`]: partial trace over the A part.
    pub fn ptrace_a(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(self.b_dim, self.b_dim);
        for bi in 0..self.b_dim {
            for bj in 0..self.b_dim {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..self.a_dim {
                    acc += m[(self.idx[bi * self.a_dim + a], self.idx[bj * self.a_dim + a])];
                }
                out[(bi, bj)] = acc;
            }
        }
        out
    }
}

/// Idempotent Hermitian labeled operator.
#[derive(Debug, Clone)]
pub struct Projector {
    op: LabeledOperator,
}

impl Projector {
    /// Validate `‖Π² − Π‖_∞ ≤ 1e-10` and eigenvalues within `1e-10` of {0,1}.
    pub fn new(op: LabeledOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::Domain("projectors must be hermitian".into()));
        }
        let m = op.matrix();
        let defect = linalg::op_norm(&(m * m - m));
        if defect > 1e-10 {
            return Err(Error::Domain(format!(
                "projector fails idempotence by {defect:.3e}"
            )));
        }
        let (vals, _) = linalg::herm_eigen(m);
        for v in vals.iter() {
            if v.abs() > 1e-10 && (v - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!(
                    "projector eigenvalue {v} not in {{0,1}}"
                )));
            }
        }
        Ok(Projector { op })
    }

    pub fn identity(space: RegisterSpace) -> Self {
        Projector {
            op: LabeledOperator::identity(space),
        }
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn rank(&self) -> usize {
        self.op.trace().re.round() as usize
    }

    /// Complement `I − Π`.
    pub fn complement(&self) -> Projector {
        let d = self.op.dim();
        Projector {
            op: LabeledOperator {
                space: self.op.space().clone(),
                matrix: linalg::eye(d) - self.op.matrix(),
                hermitian: true,
            },
        }
    }

    /// Embed into a larger space (Π ⊗ I stays a projector).
    pub fn embed(&self, target: &RegisterSpace) -> Result<Projector> {
        Ok(Projector {
            op: self.op.embed(target)?,
        })
    }
}

/// Distances and overlaps between two (sub)normalized states on the same
/// register space.
#[derive(Debug, Clone, Copy)]
pub struct DistanceSuite {
    /// Uhlmann fidelity `F = ‖√ρ√σ‖₁²`.
    pub fidelity: f64,
    /// Generalized fidelity `F* = (√F + √((1−tr ρ)(1−tr σ)))²`.
    pub generalized_fidelity: f64,
    /// Purified distance `P = √(1−F*)`.
    pub purified_distance: f64,
    /// Half trace distance `½‖ρ−σ‖₁`.
    pub half_trace_distance: f64,
}

/// Compute the full distance suite between two states on the same space.
pub fn distance_suite(rho: &QuantumState, sigma: &QuantumState) -> Result<DistanceSuite> {
    if rho.space() != sigma.space() {
        return Err(Error::Labeling(
            "distance between states on different register spaces".into(),
        ));
    }
    let f = linalg::fidelity(rho.matrix(), sigma.matrix()).clamp(0.0, 1.0 + 1e-9);
    let dr = (1.0 - rho.trace()).max(0.0);
    let ds = (1.0 - sigma.trace()).max(0.0);
    let gf = (f.sqrt() + (dr * ds).sqrt()).powi(2).clamp(0.0, 1.0 + 1e-9);
    let p = (1.0 - gf).max(0.0).sqrt();
    let htd = 0.5 * linalg::herm_trace_norm(&(rho.matrix() - sigma.matrix()));
    Ok(DistanceSuite {
        fidelity: f.min(1.0),
        generalized_fidelity: gf.min(1.0),
        purified_distance: p,
        half_trace_distance: htd,
    })
}

/// Purified distance, shorthand for `distance_suite(..).purified_distance`.
pub fn purified_distance(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    Ok(distance_suite(rho, sigma)?.purified_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frob_norm};

    fn qubit_space(l: &str) -> RegisterSpace {
        RegisterSpace::single(l, 2).unwrap()
    }

    fn ket0(l: &str) -> QuantumState {
        QuantumState::pure(qubit_space(l), &[cr(1.0), cr(0.0)]).unwrap()
    }

    fn ket1(l: &str) -> QuantumState {
        QuantumState::pure(qubit_space(l), &[cr(0.0), cr(1.0)]).unwrap()
    }

    fn ket_plus(l: &str) -> QuantumState {
        QuantumState::pure(qubit_space(l), &[cr(1.0), cr(1.0)]).unwrap()
    }

    fn bell(a: &str, b: &str) -> QuantumState {
        let s = RegisterSpace::new(vec![(a, 2), (b, 2)]).unwrap();
        QuantumState::pure(s, &[cr(1.0), cr(0.0), cr(0.0), cr(1.0)]).unwrap()
    }

    #[test]
    fn tensor_identities() {
        let i2a = LabeledOperator::identity(qubit_space("A"));
        let i2b = LabeledOperator::identity(qubit_space("B"));
        let i4 = i2a.tensor(&i2b).unwrap();
        assert_eq!(i4.dim(), 4);
        assert!(frob_norm(&(i4.matrix() - linalg::eye(4))) < 1e-15);
    }

    #[test]
    fn tensor_computational_basis() {
        let p = ket0("A").op().tensor(ket1("B").op()).unwrap();
        // |01><01| = diag(0,1,0,0)
        for i in 0..4 {
            let want = if i == 1 { 1.0 } else { 0.0 };
            assert!((p.matrix()[(i, i)].re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn tensor_rejects_duplicate_label() {
        let a = LabeledOperator::identity(qubit_space("A"));
        assert!(a
            .tensor(&LabeledOperator::identity(qubit_space("A")))
            .is_err());
    }

    #[test]
    fn tensor_matches_entrywise_kron_oracle() {
        // direct 4-index loop oracle on a random 2x2 pair
        let am = CMat::from_fn(2, 2, |i, j| {
            c(0.3 * i as f64 - 0.2 * j as f64, 0.1 + (i * j) as f64)
        });
        let bm = CMat::from_fn(2, 2, |i, j| c(1.0 - 0.7 * i as f64, 0.4 * j as f64));
        let a = LabeledOperator::new(qubit_space("A"), am.clone(), false).unwrap();
        let b = LabeledOperator::new(qubit_space("B"), bm.clone(), false).unwrap();
        let t = a.tensor(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let got = t.matrix()[(2 * i + k, 2 * j + l)];
                        let want = am[(i, j)] * bm[(k, l)];
                        assert!((got - want).norm() < 1e-14);
                    }
                }
            }
        }
        assert!((t.trace() - am.trace() * bm.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_product_state() {
        let rho = ket_plus("A");
        let sigma = ket1("B");
        let joint = rho.op().tensor(sigma.op()).unwrap();
        let back = joint.partial_trace(&["A"]).unwrap();
        assert!(frob_norm(&(back.matrix() - sigma.matrix())) < 1e-13);
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let b = bell("A", "B");
        let ma = b.marginal(&["A"]).unwrap();
        assert!(frob_norm(&(ma.matrix() - linalg::eye(2) * cr(0.5))) < 1e-13);
    }

    #[test]
    fn partial_trace_matches_index_oracle() {
        // random 2x3 system, explicit double-loop oracle
        let s = RegisterSpace::new(vec![("A", 2), ("B", 3)]).unwrap();
        let m = CMat::from_fn(6, 6, |i, j| {
            c((i * 7 + j) as f64 * 0.013, (i as f64 - j as f64) * 0.02)
        });
        let x = LabeledOperator::new(s, m.clone(), false).unwrap();
        let tb = x.partial_trace(&["B"]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..3 {
                    acc += m[(i * 3 + k, j * 3 + k)];
                }
                assert!((tb.matrix()[(i, j)] - acc).norm() < 1e-13);
            }
        }
        let ta = x.partial_trace(&["A"]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    acc += m[(k * 3 + i, k * 3 + j)];
                }
                assert!((ta.matrix()[(i, j)] - acc).norm() < 1e-13);
            }
        }
        assert!((tb.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn permute_roundtrip() {
        let s = RegisterSpace::new(vec![("A", 2), ("B", 3), ("C", 2)]).unwrap();
        let m = CMat::from_fn(12, 12, |i, j| {
            c((i + 3 * j) as f64 * 0.01, (2 * i + j) as f64 * 0.003)
        });
        let x = LabeledOperator::new(s, m.clone(), false).unwrap();
        let y = x.permute(&["C", "A", "B"]).unwrap();
        let z = y.permute(&["A", "B", "C"]).unwrap();
        assert!(frob_norm(&(z.matrix() - &m)) < 1e-14);
    }

    #[test]
    fn embed_then_marginal_recovers_factor() {
        let target = RegisterSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = ket_plus("A");
        let e = rho.op().embed(&target).unwrap();
        // Tr_B(rho ⊗ I_B) = 2 rho
        let back = e.partial_trace(&["B"]).unwrap();
        assert!(frob_norm(&(back.matrix() - rho.matrix() * cr(2.0))) < 1e-13);
    }

    #[test]
    fn complex_power_identity_and_diag() {
        let i = LabeledOperator::identity(qubit_space("A"));
        let p = i.complex_power(c(0.3, -1.1)).unwrap();
        assert!(frob_norm(&(p.matrix() - linalg::eye(2))) < 1e-13);
        let d = LabeledOperator::new(
            qubit_space("A"),
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(4.0), cr(9.0)])),
            true,
        )
        .unwrap();
        let h = d.complex_power(cr(0.5)).unwrap();
        assert!((h.matrix()[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((h.matrix()[(1, 1)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn positive_part_diagonal() {
        let d = LabeledOperator::new(
            qubit_space("A"),
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(3.0), cr(-2.0)])),
            true,
        )
        .unwrap();
        let (pos, sup) = d.positive_part_and_support().unwrap();
        assert!((pos.matrix()[(0, 0)].re - 3.0).abs() < 1e-13);
        assert!(pos.matrix()[(1, 1)].norm() < 1e-13);
        assert!((sup.matrix()[(0, 0)].re - 1.0).abs() < 1e-13);
        assert!(sup.matrix()[(1, 1)].norm() < 1e-13);
    }

    #[test]
    fn distance_suite_cases() {
        let r0 = ket0("A");
        let d = distance_suite(&r0, &r0).unwrap();
        assert!((d.fidelity - 1.0).abs() < 1e-12);
        assert!(d.purified_distance < 1e-6);

        let d01 = distance_suite(&ket0("A"), &ket1("A")).unwrap();
        assert!(d01.fidelity < 1e-12);
        assert!((d01.purified_distance - 1.0).abs() < 1e-12);

        let dp = distance_suite(&ket0("A"), &ket_plus("A")).unwrap();
        assert!((dp.fidelity - 0.5).abs() < 1e-10);
        assert!((dp.purified_distance - 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn pinch_full_projector_is_identity_map() {
        let b = bell("A", "B");
        let pi = Projector::identity(b.space().clone());
        let out = b.op().pinch(&pi, 0.3).unwrap();
        assert!(frob_norm(&(out.matrix() - b.matrix())) < 1e-13);
    }

    #[test]
    fn pinch_lower_bound_ineq() {
        // x ≤ (2/δ) pinch(x) for rank-1 Π, δ=0.25
        let g = CMat::from_fn(3, 3, |i, j| {
            c((i as f64 + 1.0) * 0.3 - j as f64 * 0.1, (i * j) as f64 * 0.07)
        });
        let x = &g * g.adjoint();
        let s = RegisterSpace::single("A", 3).unwrap();
        let xop = LabeledOperator::new(s.clone(), x.clone(), true).unwrap();
        let mut pm = CMat::zeros(3, 3);
        pm[(0, 0)] = cr(1.0);
        let pi = Projector::new(LabeledOperator::new(s, pm, true).unwrap()).unwrap();
        let delta = 0.25;
        let pinched = xop.pinch(&pi, delta).unwrap();
        let gap = pinched.matrix() * cr(2.0 / delta) - &x;
        assert!(linalg::min_eigval(&gap) > -1e-9 * linalg::op_norm(&x));
    }

    #[test]
    fn tensor_split_matches_labeled_ops() {
        let s = RegisterSpace::new(vec![("A1", 2), ("B", 3), ("A2", 2)]).unwrap();
        let split = TensorSplit::new(&s, &["B"]).unwrap();
        let sigma = CMat::from_fn(3, 3, |i, j| c((i + j) as f64 * 0.2, (i as f64 - j as f64) * 0.1));
        let sig_op = LabeledOperator::new(RegisterSpace::single("B", 3).unwrap(), sigma.clone(), false)
            .unwrap();
        let embedded_ref = sig_op.embed(&s).unwrap();
        let embedded = split.embed_b(&sigma);
        assert!(frob_norm(&(embedded_ref.matrix() - &embedded)) < 1e-13);

        let m = CMat::from_fn(12, 12, |i, j| c((i * 5 + j) as f64 * 0.01, (i + 2 * j) as f64 * 0.02));
        let mop = LabeledOperator::new(s.clone(), m.clone(), false).unwrap();
        let pt_ref = mop.partial_trace(&["A1", "A2"]).unwrap();
        let pt = split.ptrace_a(&m);
        assert!(frob_norm(&(pt_ref.matrix() - &pt)) < 1e-13);

        // adjointness
        let lhs = linalg::inner(&embedded, &m);
        let rhs = linalg::inner(&sigma, &pt);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn purify_reproduces_marginal() {
        let s = RegisterSpace::single("A", 3).unwrap();
        let g = CMat::from_fn(3, 3, |i, j| {
            c((i + j) as f64 * 0.21 + 0.05, (i as f64 - j as f64) * 0.11)
        });
        let psd = &g * g.adjoint();
        let tr = linalg::trace_re(&psd);
        let rho = QuantumState::from_matrix(s, psd / cr(tr), true).unwrap();
        let pure = rho.purify("R").unwrap();
        let back = pure.marginal(&["A"]).unwrap();
        assert!(frob_norm(&(back.matrix() - rho.matrix())) < 1e-10);
        // purity of the purification
        let m = pure.matrix();
        assert!(frob_norm(&(m * m - m)) < 1e-9);
    }
}
