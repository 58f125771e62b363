//! Self-contained convex feasibility engine.
//!
//! Every entropy program in this crate reduces to deciding feasibility of an
//! intersection of two convex sets over blocks of complex matrices:
//!
//! - an affine subspace `{(u, v) : v = L(u) + c}` tying variable blocks `u`
//!   to derived blocks `v`, and
//! - a product of simple cones (PSD, PSD with trace constraints, entrywise
//!   nonnegative, free) on all blocks.
//!
//! Feasibility is decided by Douglas–Rachford splitting between the two
//! projections. The affine projection solves its normal equations by
//! conjugate gradients on the user-supplied linear map and adjoint; the cone
//! projection is spectral. A scalar bisection driver on top turns feasibility
//! into the sup/inf programs the entropy modules need.

use crate::linalg::{self, cr};
use crate::CMat;
use std::rc::Rc;

/// Simple cone constraint on one block.
#[derive(Debug, Clone, Copy)]
pub enum Cone {
    /// No constraint.
    Free,
    /// Hermitian positive semidefinite.
    Psd,
    /// PSD with `tr = t`.
    PsdTraceEq(f64),
    /// PSD with `tr ≤ t`.
    PsdTraceLe(f64),
    /// Entrywise real and nonnegative (used for scalar slacks).
    NonNeg,
    /// Pinned to zero.
    Zero,
}

fn project_cone(m: &CMat, cone: &Cone) -> CMat {
    match cone {
        Cone::Free => m.clone(),
        Cone::Psd => linalg::project_psd(m),
        Cone::PsdTraceEq(t) => linalg::project_psd_trace_eq(m, *t),
        Cone::PsdTraceLe(t) => linalg::project_psd_trace_le(m, *t),
        Cone::NonNeg => m.map(|z| cr(z.re.max(0.0))),
        Cone::Zero => CMat::zeros(m.nrows(), m.ncols()),
    }
}

/// Block vector over complex matrices.
#[derive(Debug, Clone)]
pub struct BlockVec(pub Vec<CMat>);

impl BlockVec {
    pub fn zeros_like(other: &BlockVec) -> BlockVec {
        BlockVec(
            other
                .0
                .iter()
                .map(|m| CMat::zeros(m.nrows(), m.ncols()))
                .collect(),
        )
    }

    fn axpy(&mut self, a: f64, x: &BlockVec) {
        for (s, xm) in self.0.iter_mut().zip(x.0.iter()) {
            *s += xm * cr(a);
        }
    }

    fn scale(&mut self, a: f64) {
        for s in self.0.iter_mut() {
            *s *= cr(a);
        }
    }

    fn inner(&self, other: &BlockVec) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| linalg::inner(a, b))
            .sum()
    }

    fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    fn sub(&self, other: &BlockVec) -> BlockVec {
        BlockVec(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    fn add(&self, other: &BlockVec) -> BlockVec {
        BlockVec(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

type LinMap = Rc<dyn Fn(&BlockVec) -> BlockVec>;

/// Conic feasibility problem: find `(u, v)` with `v = L(u) + c`, `u_i` in
/// their cones, `v_j` in theirs.
pub struct ConicFeasibility {
    pub u_cones: Vec<Cone>,
    pub v_cones: Vec<Cone>,
    /// Template blocks fixing each u shape (also the cold-start point).
    pub u_init: BlockVec,
    /// Constant offset `c` (also fixes v shapes).
    pub offset: BlockVec,
    /// Linear part `L`.
    pub lin: LinMap,
    /// Adjoint of `L` w.r.t. `Re tr(a†b)`.
    pub lin_adj: LinMap,
}

/// Options for the Douglas–Rachford loop.
#[derive(Debug, Clone, Copy)]
pub struct FeasOptions {
    /// Relative residual below which the problem is declared feasible.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FeasOptions {
    fn default() -> Self {
        FeasOptions {
            tol: 1e-8,
            max_iter: 4000,
        }
    }
}

/// Reusable iterate for warm starts across bisection probes.
#[derive(Debug, Clone)]
pub struct DrState {
    z: BlockVec,
}

/// Outcome of one feasibility solve.
pub struct FeasOutcome {
    pub feasible: bool,
    /// Cone-feasible point (u-blocks and derived v-blocks); the affine
    /// defect at this point is folded into `residual`.
    pub u: BlockVec,
    pub v: BlockVec,
    pub residual: f64,
    pub iterations: usize,
}

impl ConicFeasibility {
    fn apply(&self, u: &BlockVec) -> BlockVec {
        (self.lin)(u).add(&self.offset)
    }

    /// Projection onto the graph `{(u,v) : v = L(u) + c}` via CG on the
    /// normal equations `(I + L†L) u = u0 + L†(v0 − c)`.
    fn project_affine(
        &self,
        u0: &BlockVec,
        v0: &BlockVec,
        warm: &BlockVec,
    ) -> (BlockVec, BlockVec) {
        let rhs = u0.add(&(self.lin_adj)(&v0.sub(&self.offset)));
        let apply = |x: &BlockVec| -> BlockVec { x.add(&(self.lin_adj)(&(self.lin)(x))) };

        let mut x = warm.clone();
        let mut r = rhs.sub(&apply(&x));
        let mut p = r.clone();
        let mut rs = r.inner(&r);
        let rhs_norm = rhs.norm().max(1e-300);
        for _ in 0..400 {
            if rs.sqrt() <= 1e-12 * rhs_norm {
                break;
            }
            let ap = apply(&p);
            let alpha = rs / p.inner(&ap).max(1e-300);
            x.axpy(alpha, &p);
            r.axpy(-alpha, &ap);
            let rs_new = r.inner(&r);
            let beta = rs_new / rs.max(1e-300);
            rs = rs_new;
            let mut pn = r.clone();
            pn.axpy(beta, &p);
            p = pn;
        }
        let v = self.apply(&x);
        (x, v)
    }

    fn project_cones(&self, u: &BlockVec, v: &BlockVec) -> (BlockVec, BlockVec) {
        let pu = BlockVec(
            u.0.iter()
                .zip(self.u_cones.iter())
                .map(|(m, c)| project_cone(m, c))
                .collect(),
        );
        let pv = BlockVec(
            v.0.iter()
                .zip(self.v_cones.iter())
                .map(|(m, c)| project_cone(m, c))
                .collect(),
        );
        (pu, pv)
    }

    /// Douglas–Rachford feasibility solve.
    pub fn solve(&self, opts: FeasOptions, warm: Option<DrState>) -> (FeasOutcome, DrState) {
        let u0 = self.u_init.clone();
        let v0 = self.apply(&u0);
        let n_u = u0.0.len();

        let stack = |u: &BlockVec, v: &BlockVec| -> BlockVec {
            let mut blocks = u.0.clone();
            blocks.extend(v.0.iter().cloned());
            BlockVec(blocks)
        };
        let unstack = |z: &BlockVec| -> (BlockVec, BlockVec) {
            (BlockVec(z.0[..n_u].to_vec()), BlockVec(z.0[n_u..].to_vec()))
        };

        let mut z = match warm {
            Some(s) if s.z.0.len() == n_u + v0.0.len() => s.z,
            _ => stack(&u0, &v0),
        };
        let mut cg_warm = u0.clone();

        let mut best_residual = f64::INFINITY;
        let mut best_point: Option<(BlockVec, BlockVec)> = None;
        let mut iterations = 0;
        let mut plateau_ref = f64::INFINITY;

        for it in 0..opts.max_iter {
            iterations = it + 1;
            let (zu, zv) = unstack(&z);
            let (au, av) = self.project_affine(&zu, &zv, &cg_warm);
            cg_warm = au.clone();

            // reflect through the affine set, project on cones, average
            let ru = {
                let mut t = au.clone();
                t.scale(2.0);
                t.sub(&zu)
            };
            let rv = {
                let mut t = av.clone();
                t.scale(2.0);
                t.sub(&zv)
            };
            let (cu, cv) = self.project_cones(&ru, &rv);
            let mut znew = stack(&cu, &cv).sub(&stack(&au, &av));
            znew = znew.add(&z);
            z = znew;

            // candidate: cone projection of the affine-feasible point
            let (ku, kv) = self.project_cones(&au, &av);
            let affine_res = {
                let want = self.apply(&ku);
                want.sub(&kv).norm()
            };
            let cone_res = stack(&ku, &kv).sub(&stack(&au, &av)).norm();
            let scale = 1.0 + stack(&au, &av).norm();
            let residual = affine_res.max(cone_res) / scale;
            if residual < best_residual {
                best_residual = residual;
                best_point = Some((ku, kv));
            }
            if best_residual <= opts.tol {
                break;
            }
            // infeasible problems plateau at the positive gap between the
            // two sets; stop once the residual stops moving well above tol
            if it % 100 == 99 {
                if best_residual > 100.0 * opts.tol && best_residual > 0.995 * plateau_ref {
                    break;
                }
                plateau_ref = best_residual;
            }
        }

        let (u, v) = best_point.unwrap_or_else(|| {
            let (zu, zv) = unstack(&z);
            self.project_cones(&zu, &zv)
        });
        (
            FeasOutcome {
                feasible: best_residual <= opts.tol,
                u,
                v,
                residual: best_residual,
                iterations,
            },
            DrState { z },
        )
    }
}

/// Options for the linear-objective solve.
#[derive(Debug, Clone, Copy)]
pub struct MinOptions {
    /// Proximal step applied to the objective.
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the feasibility residual is below `tol` and the objective
    /// has stopped moving at scale `tol_obj` over a checkpoint window.
    pub tol: f64,
    pub tol_obj: f64,
}

impl Default for MinOptions {
    fn default() -> Self {
        MinOptions {
            step: std::env::var("MINENT_STEP").ok().and_then(|s| s.parse().ok()).unwrap_or(1.0),
            max_iter: std::env::var("MINENT_ITER").ok().and_then(|s| s.parse().ok()).unwrap_or(6000),
            tol: 1e-9,
            tol_obj: 1e-9,
        }
    }
}

/// Outcome of a linear-objective solve.
pub struct MinOutcome {
    /// Objective value `⟨c, u⟩` at the returned point.
    pub objective: f64,
    /// Cone-feasible point; affine defect is folded into `residual`.
    pub u: BlockVec,
    pub v: BlockVec,
    pub residual: f64,
    pub iterations: usize,
}

impl ConicFeasibility {
    /// Minimize `⟨c, u⟩` over the intersection (Douglas–Rachford with the
    /// objective folded into the affine proximal step).
    ///
    /// `c` has one block per u-block (zero blocks for unconstrained slots).
    pub fn solve_min(&self, c: &BlockVec, opts: MinOptions) -> MinOutcome {
        let u0 = self.u_init.clone();
        let v0 = self.apply(&u0);
        let n_u = u0.0.len();
        let c_norm = c.norm().max(1e-12);
        let t = opts.step / c_norm;

        let stack = |u: &BlockVec, v: &BlockVec| -> BlockVec {
            let mut blocks = u.0.clone();
            blocks.extend(v.0.iter().cloned());
            BlockVec(blocks)
        };
        let unstack = |z: &BlockVec| -> (BlockVec, BlockVec) {
            (BlockVec(z.0[..n_u].to_vec()), BlockVec(z.0[n_u..].to_vec()))
        };

        let mut z = stack(&u0, &v0);
        let mut cg_warm = u0.clone();

        let mut best: Option<(f64, BlockVec, BlockVec, f64)> = None;
        let mut last_checkpoint_obj = f64::INFINITY;
        let mut iterations = 0;

        for it in 0..opts.max_iter {
            iterations = it + 1;
            let (zu, zv) = unstack(&z);
            // prox of ⟨c,u⟩ + Ind_affine: shift by t·c, project on the graph
            let mut shifted = zu.clone();
            shifted.axpy(-t, c);
            let (au, av) = self.project_affine(&shifted, &zv, &cg_warm);
            cg_warm = au.clone();

            let ru = {
                let mut s = au.clone();
                s.scale(2.0);
                s.sub(&zu)
            };
            let rv = {
                let mut s = av.clone();
                s.scale(2.0);
                s.sub(&zv)
            };
            let (cu, cv) = self.project_cones(&ru, &rv);
            let mut znew = stack(&cu, &cv).sub(&stack(&au, &av));
            znew = znew.add(&z);
            z = znew;

            if it % 25 == 24 || it + 1 == opts.max_iter {
                let (ku, kv) = self.project_cones(&au, &av);
                let affine_res = self.apply(&ku).sub(&kv).norm();
                let cone_res = stack(&ku, &kv).sub(&stack(&au, &av)).norm();
                let scale = 1.0 + stack(&au, &av).norm();
                let residual = affine_res.max(cone_res) / scale;
                let obj = ku.inner(c);
                let better = match &best {
                    Some((bo, _, _, br)) => {
                        residual <= opts.tol.max(*br) && (obj < *bo || *br > opts.tol)
                    }
                    None => true,
                };
                if better {
                    best = Some((obj, ku, kv, residual));
                }
                if it % 200 == 199 {
                    if let Some((bo, _, _, br)) = &best {
                        if *br <= opts.tol && (last_checkpoint_obj - bo).abs() <= opts.tol_obj {
                            break;
                        }
                        last_checkpoint_obj = *bo;
                    }
                }
            }
        }

        let (objective, u, v, residual) = best.unwrap_or_else(|| {
            let (zu, zv) = unstack(&z);
            let (ku, kv) = self.project_cones(&zu, &zv);
            let obj = ku.inner(c);
            (obj, ku, kv, f64::INFINITY)
        });
        MinOutcome {
            objective,
            u,
            v,
            residual,
            iterations,
        }
    }
}

/// Result of a monotone bisection.
pub struct BisectOutcome {
    /// Largest value classified feasible.
    pub value: f64,
    /// Witness u-blocks at that value.
    pub witness: BlockVec,
    pub v_witness: BlockVec,
    /// True when the upper end of the initial interval was itself feasible
    /// (the reported value is then a clipped lower bound).
    pub clipped_high: bool,
    pub residual: f64,
}

/// Maximize `x` over `[lo, hi]` subject to a monotone feasibility predicate
/// (feasible below, infeasible above), to absolute width `tol_x`.
///
/// `build` constructs the feasibility problem at a probe point; probes are
/// warm-started from the previous Douglas–Rachford iterate. Returns `None`
/// when even `lo` is infeasible.
pub fn bisect_sup(
    lo: f64,
    hi: f64,
    tol_x: f64,
    opts: FeasOptions,
    mut build: impl FnMut(f64) -> ConicFeasibility,
) -> Option<BisectOutcome> {
    // warm-start only from feasible probes: the iterate of an infeasible
    // probe has drifted toward the gap direction and poisons later solves
    let mut state: Option<DrState> = None;
    let mut probe = |x: f64, state: &mut Option<DrState>| -> Option<(BlockVec, BlockVec, f64)> {
        let prob = build(x);
        let (out, st) = prob.solve(opts, state.clone());
        if out.feasible {
            *state = Some(st);
            Some((out.u, out.v, out.residual))
        } else {
            None
        }
    };

    let at_lo = probe(lo, &mut state)?;
    let mut best = (lo, at_lo.0, at_lo.1, at_lo.2);
    if let Some(w) = probe(hi, &mut state) {
        return Some(BisectOutcome {
            value: hi,
            witness: w.0,
            v_witness: w.1,
            clipped_high: true,
            residual: w.2,
        });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol_x {
        let mid = 0.5 * (a + b);
        match probe(mid, &mut state) {
            Some(w) => {
                best = (mid, w.0, w.1, w.2);
                a = mid;
            }
            None => {
                b = mid;
            }
        }
    }
    // push phase: near the boundary the splitting slows down and probes get
    // misclassified as infeasible; retry upward with a deeper budget, capped
    let deep = FeasOptions {
        tol: opts.tol,
        max_iter: opts.max_iter * 4,
    };
    let mut deep_probe = |x: f64, state: &mut Option<DrState>| -> Option<(BlockVec, BlockVec, f64)> {
        let prob = build(x);
        let (out, st) = prob.solve(deep, state.clone());
        if out.feasible {
            *state = Some(st);
            Some((out.u, out.v, out.residual))
        } else {
            None
        }
    };
    let mut step = (8.0 * tol_x).max(1e-4 * (1.0 + best.0.abs()));
    let mut budget = 8usize;
    while step > tol_x && budget > 0 {
        let cand = best.0 + step;
        if cand >= hi {
            step *= 0.25;
            continue;
        }
        budget -= 1;
        match deep_probe(cand, &mut state) {
            Some(w) => {
                best = (cand, w.0, w.1, w.2);
            }
            None => {
                step *= 0.25;
            }
        }
    }
    Some(BisectOutcome {
        value: best.0,
        witness: best.1,
        v_witness: best.2,
        clipped_high: false,
        residual: best.3,
    })
}

/// Debug helper: verify that `lin_adj` really is the adjoint of `lin` on a
/// pseudorandom pair. Returns the relative defect.
pub fn adjoint_defect(prob: &ConicFeasibility) -> f64 {
    let mut u = prob.u_init.clone();
    let mut seed = 0x9e3779b97f4a7c15u64;
    let mut rnd = || {
        seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    for m in u.0.iter_mut() {
        *m = CMat::from_fn(m.nrows(), m.ncols(), |_, _| crate::C64::new(rnd(), rnd()));
    }
    let mut v = prob.offset.clone();
    for m in v.0.iter_mut() {
        *m = CMat::from_fn(m.nrows(), m.ncols(), |_, _| crate::C64::new(rnd(), rnd()));
    }
    let lu = (prob.lin)(&u);
    let av = (prob.lin_adj)(&v);
    let lhs = lu.inner(&v);
    let rhs = u.inner(&av);
    (lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs()))
}
