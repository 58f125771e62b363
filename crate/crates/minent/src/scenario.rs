//! Scenario-driven batch verification: seeded instance generation, flat
//! scenario files, campaign running, and report emission.
//!
//! Scenarios are flat `key = value` files, one scenario per file; unknown
//! keys are errors. All randomness is drawn from ChaCha12 keyed by the
//! 64-bit seed (little-endian in the first eight key bytes, zero elsewhere),
//! with the trial index as the stream number, so campaigns are reproducible
//! bit for bit across machines and, given the documented generator, across
//! implementations.

use crate::classical::{self, ClassicalEntropyKind, JointDistribution};
use crate::construct::default_quadrature;
use crate::eat::{Channel, Event, MinTradeoffFunction, TestingChannel};
use crate::entropy;
use crate::linalg::{self, cr};
use crate::operator::QuantumState;
use crate::registers::RegisterSpace;
use crate::verify::{self, BoundConstants, ChainRuleReport, EatInstance, EatTestingInstance, Intermediate, PrimitiveCheck};
use crate::{C64, CMat, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::io::Write as _;

/// Instance source for a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceSource {
    /// Seeded random family (the default for most checks).
    Random,
    /// Named builtin: `footnote-distribution`, `bell`, `ghz`.
    Builtin(String),
    /// Explicit instance file written by `gen`.
    File(String),
}

/// A parsed scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub check: String,
    pub instance: InstanceSource,
    pub dims: Vec<usize>,
    pub n: usize,
    pub eps: f64,
    pub delta: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub trials: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            check: String::new(),
            instance: InstanceSource::Random,
            dims: vec![2, 2],
            n: 2,
            eps: 0.1,
            delta: None,
            eps1: None,
            eps2: None,
            alpha: None,
            seed: 0,
            trials: 1,
        }
    }
}

/// The check names the runner understands.
pub const CHECKS: &[&str] = &[
    "triangle",
    "triangle_alpha",
    "substate",
    "gt",
    "audenaert",
    "audenaert_corollary",
    "unsmoothed_chain_rule",
    "universal_chain_rule",
    "dual_chain_rule",
    "appendix_b",
    "alternative_chain_rule",
    "approx_eat",
    "approx_eat_testing",
    "classical_chain",
    "classical_damped",
    "approx_d_chain",
    "footnote_entropy",
    "good_projector",
];

/// Parse a flat `key = value` scenario document. Unknown keys are errors.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut sc = Scenario::default();
    let mut saw_check = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Scenario(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let parse_f = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Scenario(format!("line {}: bad number `{v}`", lineno + 1)))
        };
        match key {
            "check" => {
                if !CHECKS.contains(&value) {
                    return Err(Error::Scenario(format!(
                        "unknown check `{value}`; see `list-checks`"
                    )));
                }
                sc.check = value.to_string();
                saw_check = true;
            }
            "instance" => {
                sc.instance = if value == "random" {
                    InstanceSource::Random
                } else if let Some(path) = value.strip_prefix("file:") {
                    InstanceSource::File(path.to_string())
                } else {
                    InstanceSource::Builtin(value.to_string())
                };
            }
            "dims" => {
                sc.dims = value
                    .split(',')
                    .map(|d| {
                        d.trim().parse::<usize>().map_err(|_| {
                            Error::Scenario(format!("line {}: bad dimension `{d}`", lineno + 1))
                        })
                    })
                    .collect::<Result<_>>()?;
            }
            "n" => {
                sc.n = value
                    .parse()
                    .map_err(|_| Error::Scenario(format!("line {}: bad n", lineno + 1)))?;
            }
            "eps" => sc.eps = parse_f(value)?,
            "delta" => sc.delta = Some(parse_f(value)?),
            "eps1" => sc.eps1 = Some(parse_f(value)?),
            "eps2" => sc.eps2 = Some(parse_f(value)?),
            "alpha" => sc.alpha = Some(parse_f(value)?),
            "seed" => {
                sc.seed = value
                    .parse()
                    .map_err(|_| Error::Scenario(format!("line {}: bad seed", lineno + 1)))?;
            }
            "trials" => {
                sc.trials = value
                    .parse()
                    .map_err(|_| Error::Scenario(format!("line {}: bad trials", lineno + 1)))?;
            }
            other => {
                return Err(Error::Scenario(format!(
                    "line {}: unknown key `{other}`",
                    lineno + 1
                )))
            }
        }
    }
    if !saw_check {
        return Err(Error::Scenario("scenario is missing `check = ...`".into()));
    }
    Ok(sc)
}

// ---------------------------------------------------------------------------
// seeded generation
// ---------------------------------------------------------------------------

/// The documented campaign generator: ChaCha12 with the seed little-endian
/// in the first key bytes and the trial index as the stream.
pub fn campaign_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

fn std_normal(rng: &mut ChaCha12Rng) -> f64 {
    // Box–Muller on uniform draws keeps the byte stream portable
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn ginibre(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(std_normal(rng), std_normal(rng)))
}

/// Ginibre-induced density matrix `GG†/tr`.
pub fn ginibre_mixed(space: RegisterSpace, rng: &mut ChaCha12Rng) -> Result<QuantumState> {
    let d = space.total_dim();
    let g = ginibre(rng, d, d);
    let psd = &g * g.adjoint();
    let tr = linalg::trace_re(&psd);
    QuantumState::from_matrix(space, psd / cr(tr), true)
}

/// Haar-ish pure state from a normalized Gaussian vector.
pub fn haar_pure(space: RegisterSpace, rng: &mut ChaCha12Rng) -> Result<QuantumState> {
    let d = space.total_dim();
    let amps: Vec<C64> = (0..d)
        .map(|_| C64::new(std_normal(rng), std_normal(rng)))
        .collect();
    QuantumState::pure(space, &amps)
}

/// Random channel from a QR-orthonormalized isometry with environment
/// dimension `d_env`.
pub fn random_channel(
    input_space: RegisterSpace,
    output_space: RegisterSpace,
    d_env: usize,
    rng: &mut ChaCha12Rng,
) -> Result<Channel> {
    let d_in = input_space.total_dim();
    let d_out = output_space.total_dim();
    let g = ginibre(rng, d_out * d_env, d_in);
    let q = g.qr().q();
    let kraus: Vec<CMat> = (0..d_env)
        .map(|e| CMat::from_fn(d_out, d_in, |r, c| q[(e * d_out + r, c)]))
        .collect();
    Channel::new(kraus, input_space, output_space)
}

/// Random full-support mass function (normalized exponential weights).
pub fn random_classical(space: RegisterSpace, rng: &mut ChaCha12Rng) -> Result<JointDistribution> {
    let d = space.total_dim();
    let mut mass: Vec<f64> = (0..d)
        .map(|_| -(rng.gen_range(f64::MIN_POSITIVE..1.0)).ln())
        .collect();
    let tot: f64 = mass.iter().sum();
    for m in mass.iter_mut() {
        *m /= tot;
    }
    JointDistribution::new(space, mass)
}

/// Bell pair on registers `A`, `B`.
pub fn bell_state() -> Result<QuantumState> {
    let s = RegisterSpace::new(vec![("A", 2), ("B", 2)])?;
    QuantumState::pure(s, &[cr(1.0), cr(0.0), cr(0.0), cr(1.0)])
}

/// GHZ state on registers `A`, `B`, `C`.
pub fn ghz_state() -> Result<QuantumState> {
    let s = RegisterSpace::new(vec![("A", 2), ("B", 2), ("C", 2)])?;
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    amps[0] = cr(1.0);
    amps[7] = cr(1.0);
    QuantumState::pure(s, &amps)
}

fn chain_space(n: usize, dim_a: usize, dim_b: usize) -> Result<RegisterSpace> {
    let mut regs: Vec<(String, usize)> = (1..=n).map(|k| (format!("A{k}"), dim_a)).collect();
    regs.push(("B".into(), dim_b));
    RegisterSpace::new(regs)
}

/// A perturbed sequential accumulation instance: measure-and-prepare round
/// channels with constant side information, driven by a correlated history,
/// with the final state mixed with noise of strength `eps`.
pub fn sequential_eat_instance(
    n: usize,
    eps: f64,
    seed: u64,
    trial: u64,
    with_testing: bool,
) -> Result<EatInstance> {
    let mut rng = campaign_rng(seed, trial);
    let theta: Vec<QuantumState> = (1..=n)
        .map(|k| {
            ginibre_mixed(RegisterSpace::single(format!("B{k}b"), 2)?, &mut rng)
        })
        .collect::<Result<_>>()?;

    // round channel k: measure R_k, output a correlated classical A_k and
    // the constant θ on B_k
    let mut channels = Vec::new();
    for k in 1..=n {
        let amix: f64 = 0.05 + 0.9 * rng.gen_range(0.0..1.0);
        let prepared: Vec<QuantumState> = (0..2)
            .map(|r| {
                let pa = if r == 0 { amix } else { 1.0 - amix };
                let a = QuantumState::from_matrix(
                    RegisterSpace::single(format!("A{k}a"), 2)?,
                    CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
                        cr(pa),
                        cr(1.0 - pa),
                    ])),
                    true,
                )?;
                QuantumState::new(a.op().tensor(theta[k - 1].op())?, true)
            })
            .collect::<Result<_>>()?;
        channels.push(Channel::measure_prepare(
            RegisterSpace::single(format!("R{k}"), 2)?,
            &prepared,
        )?);
    }

    // drive the rounds sequentially from a correlated (E, R₁) input,
    // adjoining a fresh correlated input register before each later round;
    // the pre-round states double as the approximating inputs
    let mut approx_inputs = Vec::new();
    let mut state = {
        let joint = RegisterSpace::new(vec![("E".to_string(), 2), ("R1".to_string(), 2)])?;
        ginibre_mixed(joint, &mut rng)?
    };
    for k in 1..=n {
        let with_next = if k < n {
            let next = RegisterSpace::single(format!("R{}", k + 1), 2)?;
            let fresh = ginibre_mixed(next, &mut rng)?;
            QuantumState::new(state.op().tensor(fresh.op())?, true)?
        } else {
            state.clone()
        };
        approx_inputs.push(with_next.clone());
        state = crate::eat::channel_apply(&channels[k - 1], &with_next)?;
    }
    let ideal = state;

    // perturb the final state by eps toward an uncorrelated product
    let rho = if eps > 0.0 {
        let tau = QuantumState::maximally_mixed(ideal.space().clone());
        QuantumState::from_matrix_clipped(
            ideal.space().clone(),
            ideal.matrix() * cr(1.0 - eps) + tau.matrix() * cr(eps),
            true,
        )?
    } else {
        ideal
    };

    let testing = if with_testing {
        // computational-basis tests with a binary outcome x = a
        let mut tests = Vec::new();
        for _ in 1..=n {
            let p0 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(1.0), cr(0.0)]));
            let p1 = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![cr(0.0), cr(1.0)]));
            tests.push(TestingChannel::new(
                vec![p0.clone(), p1.clone()],
                vec![p0, p1],
                vec![vec![0, 0], vec![1, 1]],
                2,
            )?);
        }
        // constant-free affine tradeoff: f below every per-round entropy
        let f = MinTradeoffFunction::new(vec![0.0, 0.0]);
        let omega = Event::all_pass(1 << n);
        Some(EatTestingInstance {
            testing: tests,
            f,
            h: 0.0,
            omega,
        })
    } else {
        None
    };

    Ok(EatInstance {
        rho,
        channels,
        approx_inputs,
        e_regs: vec!["E".into()],
        eps: (eps + 1e-9).max(1e-9),
        testing,
    })
}

// ---------------------------------------------------------------------------
// running
// ---------------------------------------------------------------------------

fn random_chain_state(
    n: usize,
    dim_a: usize,
    dim_b: usize,
    rng: &mut ChaCha12Rng,
) -> Result<QuantumState> {
    ginibre_mixed(chain_space(n, dim_a, dim_b)?, rng)
}

/// Run one trial of a scenario.
pub fn run_trial(sc: &Scenario, trial: u64) -> Result<ChainRuleReport> {
    let quad = default_quadrature();
    let mut rng = campaign_rng(sc.seed, trial);
    let seed = sc.seed ^ trial;
    let dim = *sc.dims.first().unwrap_or(&2);
    let dim_b = *sc.dims.get(1).unwrap_or(&2);

    match sc.check.as_str() {
        "triangle" => {
            let s = RegisterSpace::new(vec![("A", dim), ("B", dim_b)])?;
            let rho = ginibre_mixed(s.clone(), &mut rng)?;
            let eta = ginibre_mixed(s, &mut rng)?;
            verify::check_primitive_inequality(
                &PrimitiveCheck::Triangle {
                    rho: &rho,
                    eta: &eta,
                    a_regs: vec!["A"],
                    b_regs: vec!["B"],
                    eps: sc.eps,
                },
                &quad,
                seed,
            )
        }
        "triangle_alpha" => {
            let s = RegisterSpace::new(vec![("A", dim), ("B", dim_b)])?;
            let rho = ginibre_mixed(s.clone(), &mut rng)?;
            let eta = ginibre_mixed(s, &mut rng)?;
            verify::check_primitive_inequality(
                &PrimitiveCheck::TriangleAlpha {
                    rho: &rho,
                    eta: &eta,
                    a_regs: vec!["A"],
                    b_regs: vec!["B"],
                    eps: sc.eps,
                    delta: sc.delta.unwrap_or(0.1),
                    alpha: sc.alpha.unwrap_or(1.5),
                },
                &quad,
                seed,
            )
        }
        "substate" => {
            let s = RegisterSpace::single("A", dim)?;
            let rho = ginibre_mixed(s.clone(), &mut rng)?;
            let sigma = ginibre_mixed(s, &mut rng)?;
            verify::check_primitive_inequality(
                &PrimitiveCheck::Substate {
                    rho: &rho,
                    sigma: &sigma,
                    eps: sc.eps,
                },
                &quad,
                seed,
            )
        }
        "gt" => {
            let hs: Vec<CMat> = (0..3)
                .map(|_| {
                    let g = ginibre(&mut rng, dim, dim);
                    let h = linalg::hermitian_part(&g);
                    let norm = linalg::op_norm(&h).max(1e-12);
                    h / cr(norm)
                })
                .collect();
            verify::check_primitive_inequality(&PrimitiveCheck::Gt { hs }, &quad, seed)
        }
        "audenaert" => {
            let s = RegisterSpace::single("A", dim)?;
            let rho = ginibre_mixed(s.clone(), &mut rng)?;
            let sigma = ginibre_mixed(s, &mut rng)?;
            verify::check_primitive_inequality(
                &PrimitiveCheck::Audenaert {
                    rho: &rho,
                    sigma: &sigma,
                    delta: sc.delta.unwrap_or(0.1),
                },
                &quad,
                seed,
            )
        }
        "audenaert_corollary" => {
            let s = RegisterSpace::new(vec![("A", dim), ("B", dim_b)])?;
            let rho = ginibre_mixed(s.clone(), &mut rng)?;
            let noise = ginibre_mixed(s.clone(), &mut rng)?;
            let delta = sc.delta.unwrap_or(0.1);
            let split = crate::operator::TensorSplit::new(rho.space(), &["B"])?;
            let floor = split.embed_b(&split.ptrace_a(rho.matrix())) * cr(1.0 / dim as f64);
            let sigma = QuantumState::from_matrix_clipped(
                s,
                noise.matrix() * cr(1.0 - delta) + floor * cr(delta),
                true,
            )?;
            verify::check_primitive_inequality(
                &PrimitiveCheck::AudenaertCorollary {
                    rho: &rho,
                    sigma: &sigma,
                    a_regs: vec!["A"],
                    b_regs: vec!["B"],
                    delta,
                },
                &quad,
                seed,
            )
        }
        "unsmoothed_chain_rule" => {
            let rho = random_chain_state(sc.n, dim, dim_b, &mut rng)?;
            let a_links: Vec<String> = (1..=sc.n).map(|k| format!("A{k}")).collect();
            let joint_a: Vec<&str> = a_links.iter().map(|s| s.as_str()).collect();
            let lhs = entropy::h_min_down(&rho, &joint_a, &["B"])?.value;
            let mut rhs = 0.0;
            let mut hist: Vec<&str> = vec!["B"];
            for a_k in &joint_a {
                let mut kept = vec![*a_k];
                kept.extend(hist.iter().cloned());
                let rk = rho.marginal(&kept)?;
                rhs += entropy::h_min_down(&rk, &[a_k], &hist)?.value;
                hist.push(a_k);
            }
            Ok(report_simple("unsmoothed_chain_rule", lhs, rhs, 1e-8, seed))
        }
        "universal_chain_rule" => {
            let rho = random_chain_state(sc.n, dim, dim_b, &mut rng)?;
            let a_links: Vec<String> = (1..=sc.n).map(|k| format!("A{k}")).collect();
            let refs: Vec<&str> = a_links.iter().map(|s| s.as_str()).collect();
            verify::check_universal_chain_rule(&rho, &refs, &["B"], sc.eps, &quad, seed)
        }
        "dual_chain_rule" => {
            let rho = random_chain_state(sc.n, dim, dim_b, &mut rng)?;
            let a_links: Vec<String> = (1..=sc.n).map(|k| format!("A{k}")).collect();
            let refs: Vec<&str> = a_links.iter().map(|s| s.as_str()).collect();
            verify::check_dual_chain_rule(&rho, &refs, &["B"], sc.eps, seed)
        }
        "appendix_b" => {
            let da = *sc.dims.first().unwrap_or(&3);
            let db = *sc.dims.get(1).unwrap_or(&2);
            let dc = *sc.dims.get(2).unwrap_or(&2);
            let s = RegisterSpace::new(vec![("A", da), ("B", db), ("C", dc)])?;
            let rho = ginibre_mixed(s, &mut rng)?;
            verify::check_appendix_b(
                &rho,
                &["A"],
                &["B"],
                &["C"],
                sc.eps1.unwrap_or(sc.eps),
                sc.eps2.unwrap_or(sc.eps),
                seed,
            )
        }
        "alternative_chain_rule" => {
            let rho = random_chain_state(sc.n, dim, dim_b, &mut rng)?;
            let a_links: Vec<String> = (1..=sc.n).map(|k| format!("A{k}")).collect();
            let refs: Vec<&str> = a_links.iter().map(|s| s.as_str()).collect();
            verify::check_alternative_chain_rule(&rho, &refs, &["B"], sc.eps, sc.delta, &quad, seed)
        }
        "approx_eat" => {
            let inst = sequential_eat_instance(sc.n, sc.eps, sc.seed, trial, false)?;
            verify::check_approx_eat(&inst, false, &quad, seed)
        }
        "approx_eat_testing" => {
            let inst = sequential_eat_instance(sc.n, sc.eps, sc.seed, trial, true)?;
            verify::check_approx_eat(&inst, true, &quad, seed)
        }
        "classical_chain" => {
            let space = chain_space(sc.n, dim, dim_b)?;
            let p = random_classical(space, &mut rng)?;
            let a_links: Vec<String> = (1..=sc.n).map(|k| format!("A{k}")).collect();
            let refs: Vec<&str> = a_links.iter().map(|s| s.as_str()).collect();
            let delta = sc.delta.unwrap_or(0.05);
            let chain = classical::classical_chain_construction(&p, &refs, &["B"], sc.eps, delta)?;
            let d = p.relative_entropy(&chain.r)?;
            let bound = sc.n as f64 * classical::z_mixture(2.0 * sc.eps, delta, dim);
            let mut intermediates = Vec::new();
            for (k, &dist) in chain.per_link_distance.iter().enumerate() {
                intermediates.push(Intermediate {
                    name: format!("per_link_distance_{}", k + 1),
                    slack: 2.0 * sc.eps + delta - dist,
                    tolerance: 1e-9,
                });
            }
            Ok(ChainRuleReport {
                name: "classical_chain".into(),
                lhs: bound,
                rhs: d,
                slack: bound - d,
                tolerance: 1e-9,
                constants: BoundConstants {
                    eps: Some(sc.eps),
                    delta: Some(delta),
                    z: Some(classical::z_mixture(2.0 * sc.eps, delta, dim)),
                    mu_in_range: true,
                    ..Default::default()
                },
                intermediates: intermediates.clone(),
                passed: bound - d >= -1e-9 && intermediates.iter().all(|i| i.slack >= -i.tolerance),
                seed,
                notes: vec![],
            })
        }
        "classical_damped" => {
            let space = chain_space(sc.n, dim, dim_b)?;
            let p = random_classical(space, &mut rng)?;
            let a_links: Vec<String> = (1..=sc.n).map(|k| format!("A{k}")).collect();
            let refs: Vec<&str> = a_links.iter().map(|s| s.as_str()).collect();
            let delta = sc.delta.unwrap_or(0.2);
            let chain = classical::classical_chain_construction(&p, &refs, &["B"], sc.eps, 0.05)?;
            let out =
                classical::damped_distribution(&p, &chain.q_kernels, &refs, &["B"], sc.eps, delta)?;
            let d = p.relative_entropy(&out.q_damped)?;
            let bound = 3.0 * sc.n as f64 * sc.eps.sqrt() * (1.0 / delta).ln();
            let mut intermediates = vec![Intermediate {
                name: "divergence_identity".into(),
                slack: 1e-10 - (d - out.relative_entropy).abs(),
                tolerance: 0.0,
            }];
            intermediates.push(Intermediate {
                name: "product_bound".into(),
                slack: 1.0 + 1e-10 - out.product_bound_ratio,
                tolerance: 0.0,
            });
            for (k, &pr) in out.bad_probabilities.iter().enumerate() {
                intermediates.push(Intermediate {
                    name: format!("bad_probability_{}", k + 1),
                    slack: 3.0 * sc.eps.sqrt() - pr,
                    tolerance: 1e-9,
                });
            }
            Ok(ChainRuleReport {
                name: "classical_damped".into(),
                lhs: bound,
                rhs: d,
                slack: bound - d,
                tolerance: 1e-9,
                constants: BoundConstants {
                    eps: Some(sc.eps),
                    delta: Some(delta),
                    mu_in_range: true,
                    ..Default::default()
                },
                intermediates: intermediates.clone(),
                passed: bound - d >= -1e-9 && intermediates.iter().all(|i| i.slack >= -i.tolerance),
                seed,
                notes: vec![],
            })
        }
        "approx_d_chain" => {
            let s = RegisterSpace::new(vec![("A", dim), ("B", dim_b)])?;
            let p = random_classical(s.clone(), &mut rng)?;
            let noise = random_classical(s.clone(), &mut rng)?;
            let t = 2.0 * sc.eps.min(0.45);
            let mass: Vec<f64> = p
                .mass()
                .iter()
                .zip(noise.mass().iter())
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect();
            let p_prime = JointDistribution::new(s.clone(), mass)?;
            let eps = p.tv_distance(&p_prime)?.max(1e-12);
            let delta = sc.delta.unwrap_or(0.05);
            let q = {
                let base = random_classical(RegisterSpace::new(vec![("B", dim_b)])?, &mut rng)?;
                let k = classical::make_conditional(&random_classical(s.clone(), &mut rng)?, &["A"], &["B"])?
                    .mix_with_uniform((delta * dim as f64).min(0.9));
                classical::compose_kernel(&base, &k)?.permute(&["A", "B"])?
            };
            let rep = classical::approx_d_chain_check(&p, &p_prime, &q, &["A"], &["B"], eps, delta)?;
            Ok(report_simple("approx_d_chain", rep.rhs, rep.lhs, 1e-9, seed))
        }
        "footnote_entropy" => {
            let n = sc.n.min(4);
            let p = classical::footnote_distribution(n)?;
            let want = (4.0f64 / 3.0).ln();
            let mut worst: f64 = 0.0;
            let mut intermediates = Vec::new();
            for k in 1..=n {
                let target = format!("A{k}");
                let given: Vec<String> = (1..k)
                    .map(|j| format!("A{j}"))
                    .chain(std::iter::once("B".to_string()))
                    .collect();
                let given_refs: Vec<&str> = given.iter().map(|s| s.as_str()).collect();
                let kept: Vec<&str> = std::iter::once(target.as_str())
                    .chain(given_refs.iter().cloned())
                    .collect();
                let pk = p.marginal(&kept)?;
                let h_cl = classical::classical_entropies(
                    &pk,
                    &[target.as_str()],
                    &given_refs,
                    ClassicalEntropyKind::Min,
                )?;
                let h_q = entropy::h_min(&pk.to_diagonal_state()?, &[target.as_str()], &given_refs)?
                    .value;
                worst = worst.max((h_cl - want).abs()).max((h_q - want).abs());
                intermediates.push(Intermediate {
                    name: format!("closed_form_{k}"),
                    slack: 1e-9 - (h_cl - want).abs(),
                    tolerance: 0.0,
                });
                intermediates.push(Intermediate {
                    name: format!("sdp_{k}"),
                    slack: 1e-6 - (h_q - want).abs(),
                    tolerance: 0.0,
                });
            }
            let passed = intermediates.iter().all(|i| i.slack >= -i.tolerance);
            Ok(ChainRuleReport {
                name: "footnote_entropy".into(),
                lhs: want,
                rhs: want + worst,
                slack: -worst,
                tolerance: 1e-6,
                constants: BoundConstants {
                    mu_in_range: true,
                    ..Default::default()
                },
                intermediates,
                passed,
                seed,
                notes: vec![],
            })
        }
        "good_projector" => {
            let s = RegisterSpace::single("A", dim)?;
            let sigma = ginibre_mixed(s.clone(), &mut rng)?;
            let noise = ginibre_mixed(s.clone(), &mut rng)?;
            let t = sc.eps * 0.9;
            let rho = QuantumState::from_matrix_clipped(
                s,
                sigma.matrix() * cr(1.0 - t) + noise.matrix() * cr(t),
                true,
            )?;
            let (pi, diag) = crate::construct::good_projector(&rho, &sigma, sc.eps)?;
            let g1 = crate::construct::good_proj_g1(sc.eps);
            let g2 = crate::construct::good_proj_g2(sc.eps);
            let lhs_m = sigma.matrix() * cr(1.0 + g1) - pi.matrix() * rho.matrix() * pi.matrix();
            let kept = linalg::inner(pi.matrix(), rho.matrix());
            let intermediates = vec![
                Intermediate {
                    name: "compression".into(),
                    slack: linalg::min_eigval(&lhs_m),
                    tolerance: 1e-8,
                },
                Intermediate {
                    name: "retained_mass".into(),
                    slack: g2 + 1e-8 - (1.0 - kept),
                    tolerance: 0.0,
                },
                Intermediate {
                    name: "bin_mass".into(),
                    slack: 2.0 * sc.eps + 1e-10 - diag.bin_masses.iter().sum::<f64>(),
                    tolerance: 0.0,
                },
            ];
            let passed = intermediates.iter().all(|i| i.slack >= -i.tolerance);
            Ok(ChainRuleReport {
                name: "good_projector".into(),
                lhs: g2,
                rhs: 1.0 - kept,
                slack: g2 - (1.0 - kept),
                tolerance: 1e-8,
                constants: BoundConstants {
                    eps: Some(sc.eps),
                    goodproj_g1: Some(g1),
                    goodproj_g2: Some(g2),
                    mu_in_range: true,
                    ..Default::default()
                },
                intermediates,
                passed,
                seed,
                notes: vec![],
            })
        }
        other => Err(Error::Scenario(format!("check `{other}` is not runnable"))),
    }
}

fn report_simple(name: &str, lhs: f64, rhs: f64, tol: f64, seed: u64) -> ChainRuleReport {
    ChainRuleReport {
        name: name.into(),
        lhs,
        rhs,
        slack: lhs - rhs,
        tolerance: tol,
        constants: BoundConstants {
            mu_in_range: true,
            ..Default::default()
        },
        intermediates: vec![],
        passed: lhs - rhs >= -tol,
        seed,
        notes: vec![],
    }
}

/// Run every trial of a scenario. Trials are independent and deterministic
/// from `(seed, trial)`; with `MINENT_THREADS > 1` they run in parallel and
/// are reported in trial order regardless of completion order.
pub fn run_scenario(sc: &Scenario) -> Result<Vec<ChainRuleReport>> {
    let threads: usize = std::env::var("MINENT_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);
    if sc.trials == 0 {
        return Ok(vec![]);
    }
    if threads <= 1 || sc.trials == 1 {
        (0..sc.trials as u64).map(|t| run_trial(sc, t)).collect()
    } else {
        let mut out: Vec<Option<Result<ChainRuleReport>>> = Vec::new();
        out.resize_with(sc.trials, || None);
        let chunk = sc.trials.div_ceil(threads);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for (c, slots) in out.chunks_mut(chunk).enumerate() {
                let sc = sc.clone();
                handles.push(scope.spawn(move || {
                    for (i, slot) in slots.iter_mut().enumerate() {
                        *slot = Some(run_trial(&sc, (c * chunk + i) as u64));
                    }
                }));
            }
            for h in handles {
                let _ = h.join();
            }
        });
        out.into_iter().map(|r| r.expect("trial ran")).collect()
    }
}

// ---------------------------------------------------------------------------
// report emission
// ---------------------------------------------------------------------------

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "\"inf\"".into()
        } else {
            "\"-inf\"".into()
        }
    } else {
        // 17 significant digits round-trip every f64
        format!("{x:.16e}")
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn constants_json(c: &BoundConstants) -> String {
    let mut fields = Vec::new();
    let mut push = |name: &str, v: Option<f64>| {
        if let Some(x) = v {
            fields.push(format!("{}: {}", json_string(name), fmt_f64(x)));
        }
    };
    push("eps", c.eps);
    push("delta", c.delta);
    push("z", c.z);
    push("mu", c.mu);
    push("mu_prime", c.mu_prime);
    push("g1_tri", c.g1_tri);
    push("goodproj_g1", c.goodproj_g1);
    push("goodproj_g2", c.goodproj_g2);
    push("g2_eat", c.g2_eat);
    push("V", c.v);
    push("k_terms", c.k_terms);
    fields.push(format!(
        "\"mu_in_range\": {}",
        if c.mu_in_range { "true" } else { "false" }
    ));
    format!("{{{}}}", fields.join(", "))
}

/// Serialize one report as a JSON object with 17-significant-digit numbers.
pub fn report_json(r: &ChainRuleReport) -> String {
    let intermediates: Vec<String> = r
        .intermediates
        .iter()
        .map(|i| {
            format!(
                "{{\"name\": {}, \"slack\": {}}}",
                json_string(&i.name),
                fmt_f64(i.slack)
            )
        })
        .collect();
    let params = format!(
        "{{\"tolerance\": {}, \"notes\": [{}]}}",
        fmt_f64(r.tolerance),
        r.notes
            .iter()
            .map(|n| json_string(n))
            .collect::<Vec<_>>()
            .join(", ")
    );
    format!(
        "{{\"check\": {}, \"seed\": {}, \"params\": {}, \"lhs\": {}, \"rhs\": {}, \"slack\": {}, \"constants\": {}, \"intermediates\": [{}], \"passed\": {}}}",
        json_string(&r.name),
        r.seed,
        params,
        fmt_f64(r.lhs),
        fmt_f64(r.rhs),
        fmt_f64(r.slack),
        constants_json(&r.constants),
        intermediates.join(", "),
        if r.passed { "true" } else { "false" }
    )
}

/// Emit reports as a JSON array or a human-readable table.
pub fn emit_report(reports: &[ChainRuleReport], format: &str, out: &mut dyn std::io::Write) -> Result<()> {
    match format {
        "json" => {
            let body: Vec<String> = reports.iter().map(report_json).collect();
            writeln!(out, "[{}]", body.join(",\n "))?;
            Ok(())
        }
        "table" => {
            writeln!(
                out,
                "{:<24} {:>6} {:>14} {:>14} {:>12}  {}",
                "check", "seed", "lhs", "rhs", "slack", "status"
            )?;
            for r in reports {
                writeln!(
                    out,
                    "{:<24} {:>6} {:>14.6e} {:>14.6e} {:>12.3e}  {}{}",
                    r.name,
                    r.seed,
                    r.lhs,
                    r.rhs,
                    r.slack,
                    if r.passed { "pass" } else { "FAIL" },
                    if r.notes.is_empty() {
                        String::new()
                    } else {
                        format!("  [{}]", r.notes.join("; "))
                    }
                )?;
                for i in &r.intermediates {
                    writeln!(
                        out,
                        "    {:<40} {:>12.3e}  {}",
                        i.name,
                        i.slack,
                        if i.slack >= -i.tolerance { "pass" } else { "FAIL" }
                    )?;
                }
            }
            Ok(())
        }
        other => Err(Error::Scenario(format!("unknown format `{other}`"))),
    }
}

/// Write a generated instance to a small JSON file (`gen` subcommand).
pub fn write_instance_file(
    family: &str,
    dims: &[usize],
    seed: u64,
    path: &str,
) -> Result<()> {
    let mut rng = campaign_rng(seed, 0);
    let regs: Vec<(String, usize)> = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| (format!("X{}", i + 1), d))
        .collect();
    let space = RegisterSpace::new(regs)?;
    let state = match family {
        "ginibre_mixed" => ginibre_mixed(space, &mut rng)?,
        "haar_pure" => haar_pure(space, &mut rng)?,
        "random_classical" => random_classical(space, &mut rng)?.to_diagonal_state()?,
        "footnote-distribution" => classical::footnote_distribution(dims.len().max(1))?
            .to_diagonal_state()?,
        "bell" => bell_state()?,
        "ghz" => ghz_state()?,
        other => {
            return Err(Error::Scenario(format!(
                "unknown family `{other}` (expected ginibre_mixed, haar_pure, random_classical, footnote-distribution, bell, ghz)"
            )))
        }
    };
    let d = state.dim();
    let mut re_rows = Vec::new();
    let mut im_rows = Vec::new();
    for i in 0..d {
        let re: Vec<String> = (0..d).map(|j| fmt_f64(state.matrix()[(i, j)].re)).collect();
        let im: Vec<String> = (0..d).map(|j| fmt_f64(state.matrix()[(i, j)].im)).collect();
        re_rows.push(format!("[{}]", re.join(", ")));
        im_rows.push(format!("[{}]", im.join(", ")));
    }
    let labels: Vec<String> = state
        .space()
        .labels()
        .iter()
        .map(|l| json_string(l))
        .collect();
    let dims_s: Vec<String> = state
        .space()
        .dims()
        .iter()
        .map(|d| d.to_string())
        .collect();
    let body = format!(
        "{{\"family\": {}, \"seed\": {}, \"labels\": [{}], \"dims\": [{}],\n \"re\": [{}],\n \"im\": [{}]}}\n",
        json_string(family),
        seed,
        labels.join(", "),
        dims_s.join(", "),
        re_rows.join(",\n  "),
        im_rows.join(",\n  ")
    );
    let mut f = std::fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}
