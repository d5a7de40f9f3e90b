//! Randomized property suites tying every in-scope statement to an
//! executable check, with brute-force oracles and reproducible seeds.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::limits::{symmetric_functional, sandwich_check, EstimatorSpec};
use crate::scalar::{Prec, Rat, RatInterval};
use crate::seq::{Base, InjectionSpec, Sequence, Tail};
use crate::spaces::{norm, psi_axiom_report, NormResult, PsiSpec, SpaceSpec};
use crate::witness::{garling_witness, oscillating_construct, oscillating_verify};

// -- generators ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    FiniteSmall,
    FiniteLarge,
    Blocks,
    Periodic,
    Nonneg,
    Permutation(u64),
}

#[derive(Debug, Clone)]
pub enum Generated {
    Seq(Sequence<Rat>),
    Perm(Vec<u64>),
}

fn rand_rat(rng: &mut ChaCha8Rng, max: i64, nonneg: bool) -> Rat {
    let lo = if nonneg { 0 } else { -max };
    Rat::new(BigInt::from(rng.gen_range(lo..=max)), BigInt::from(rng.gen_range(1..=max)))
}

fn rand_finite(rng: &mut ChaCha8Rng, max_support: u64, index_range: u64, nonneg: bool) -> Sequence<Rat> {
    let k = rng.gen_range(0..=max_support);
    let mut entries = std::collections::BTreeMap::new();
    for _ in 0..k {
        let idx = rng.gen_range(1..=index_range);
        let v = rand_rat(rng, 1000, nonneg);
        if !v.is_zero() {
            entries.insert(idx, v);
        }
    }
    Sequence::finite(entries.into_iter().collect()).expect("sorted nonzero entries")
}

/// Deterministic input generation from a seed.
pub fn gen_inputs(seed: u64, profile: &Profile) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match profile {
        Profile::FiniteSmall => Generated::Seq(rand_finite(&mut rng, 16, 24, false)),
        Profile::FiniteLarge => Generated::Seq(rand_finite(&mut rng, 200, 400, false)),
        Profile::Nonneg => Generated::Seq(rand_finite(&mut rng, 16, 24, true)),
        Profile::Periodic => {
            let len = rng.gen_range(1..=6usize);
            let pat: Vec<Rat> = (0..len).map(|_| rand_rat(&mut rng, 40, false)).collect();
            Generated::Seq(Sequence::periodic(pat).expect("nonempty pattern"))
        }
        Profile::Blocks => {
            let nb = rng.gen_range(1..=5usize);
            let blocks: Vec<(Rat, BigUint)> = (0..nb)
                .map(|_| {
                    (rand_rat(&mut rng, 40, false), BigUint::from(rng.gen_range(1..=50u64)))
                })
                .collect();
            let tail = if rng.gen_bool(0.5) {
                Tail::Zero
            } else {
                let len = rng.gen_range(1..=3usize);
                Tail::Periodic((0..len).map(|_| rand_rat(&mut rng, 40, false)).collect())
            };
            Generated::Seq(Sequence::from_parts(Vec::new(), Base::Blocks { blocks, tail }))
        }
        Profile::Permutation(k) => {
            let mut v: Vec<u64> = (1..=*k).collect();
            for i in (1..v.len()).rev() {
                let j = rng.gen_range(0..=i);
                v.swap(i, j);
            }
            Generated::Perm(v)
        }
    }
}

fn gen_seq(seed: u64, profile: &Profile) -> Sequence<Rat> {
    match gen_inputs(seed, profile) {
        Generated::Seq(s) => s,
        Generated::Perm(_) => unreachable!("sequence profile"),
    }
}

fn gen_perm(seed: u64, k: u64) -> Vec<u64> {
    match gen_inputs(seed, &Profile::Permutation(k)) {
        Generated::Perm(p) => p,
        Generated::Seq(_) => unreachable!("permutation profile"),
    }
}

// -- rearrangement oracle -----------------------------------------------------

/// Direct evaluation of the inf-sup definition
/// x*_n = inf { sup_{k not in J} |x_k| : |J| < n }:
/// removing an optimal J deletes the n-1 largest occurrences that exceed
/// the essential sup (the largest value recurring infinitely often, which
/// no finite J can mask). Only the finitely-occurring values above it and
/// the essential sup itself matter, and for harmonic tails the top 64
/// base values all dominate every excluded index, so truncation is sound.
pub fn rearrangement_oracle(x: &Sequence<Rat>, n_max: u64) -> Result<Vec<Rat>> {
    if n_max > 64 {
        return Err(Error::InvalidInput("oracle prefixes are capped at N = 64".into()));
    }
    let zero = <Rat as Zero>::zero();
    let patch = x.patch();

    // essential sup and the finitely-occurring |values| above it
    let mut finite_vals: Vec<Rat> = Vec::new();
    let ess: Rat = match x.base() {
        Base::Zero => {
            for (_, v) in patch {
                finite_vals.push(Signed::abs(v));
            }
            zero.clone()
        }
        Base::Periodic(p) => {
            let ess = p.iter().map(Signed::abs).max().unwrap();
            for (_, v) in patch {
                finite_vals.push(Signed::abs(v));
            }
            ess
        }
        Base::Harmonic { offset, .. } => {
            // materialize enough leading indices to dominate the excluded tail
            let m = 64 + patch.len() as u64 + patch.last().map(|(i, _)| *i).unwrap_or(0);
            let _ = offset;
            for n in 1..=m {
                finite_vals.push(Signed::abs(&x.value_at(n)));
            }
            zero.clone()
        }
        Base::Blocks { blocks, tail } => {
            let ess = match tail {
                Tail::Zero => zero.clone(),
                Tail::Periodic(p) => p.iter().map(Signed::abs).max().unwrap(),
            };
            // block occurrences, with patched positions displaced
            let mut dec = vec![BigUint::zero(); blocks.len()];
            let total: BigUint = blocks.iter().map(|(_, c)| c.clone()).sum();
            for (i, _) in patch {
                let pos = BigUint::from(*i - 1);
                if pos >= total {
                    continue; // patch inside the recurring tail: masked by ess
                }
                let mut rem = pos;
                for (k, (_, c)) in blocks.iter().enumerate() {
                    if &rem < c {
                        dec[k] += BigUint::one();
                        break;
                    }
                    rem -= c;
                }
            }
            for (k, (v, c)) in blocks.iter().enumerate() {
                let cnt = (c - &dec[k]).min(BigUint::from(64u32)).to_u64().unwrap();
                for _ in 0..cnt {
                    finite_vals.push(Signed::abs(v));
                }
            }
            for (i, v) in patch {
                if BigUint::from(*i - 1) < total {
                    finite_vals.push(Signed::abs(v));
                }
            }
            ess
        }
    };
    // patch entries beyond the blocks extent were pushed above only for
    // Blocks; for Zero/Periodic bases every patch entry was pushed, and for
    // Harmonic the materialized prefix already includes them.
    finite_vals.retain(|v| *v > ess);
    finite_vals.sort();
    finite_vals.reverse();

    let mut out = Vec::with_capacity(n_max as usize);
    for n in 0..n_max as usize {
        out.push(finite_vals.get(n).cloned().unwrap_or_else(|| ess.clone()));
    }
    Ok(out)
}

// -- reports ------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Failure {
    pub seed: u64,
    pub digest: String,
    pub residual: String,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub suite: String,
    pub trials: u64,
    pub failures: Vec<Failure>,
    pub max_residual: Option<Rat>,
    pub millis: u128,
    /// Inverted suites pass only when a violation is exhibited.
    pub inverted: bool,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteParams {
    pub trials: u64,
    pub n: u64,
    pub seed: u64,
    pub space: Option<SpaceSpec>,
    pub psi: Option<PsiSpec>,
    pub prec: Prec,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            trials: 1000,
            n: 64,
            seed: 1,
            space: None,
            psi: None,
            prec: Prec::DEFAULT,
        }
    }
}

fn digest(x: &Sequence<Rat>) -> String {
    let s = format!("{:?} {:?}", x.patch(), x.base());
    let mut h: u64 = 5381;
    for b in s.bytes() {
        h = h.wrapping_mul(33) ^ b as u64;
    }
    format!("{h:016x}")
}

pub const SUITES: &[&str] = &[
    "REARR-PROPS",
    "SYMM-NORM",
    "THM1-EQ",
    "CLOSE-UP",
    "INCLUSIONS",
    "SANDWICH",
    "PSI-DOUBLING",
    "GAMMA-SYMM",
    "GARLING-ASYM",
    "OSC-WITNESS",
    "ORACLE-EQ",
];

/// Certified equality of norm results: equal divergence flags and, for
/// finite values, identical intervals (exact paths) or intersecting
/// intervals within the width cap.
fn norm_eq(a: &NormResult, b: &NormResult, width_cap: &Rat) -> bool {
    match (&a.value, &b.value) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            x == y
                || (x.intersects(y) && x.width() <= *width_cap && y.width() <= *width_cap)
        }
        _ => false,
    }
}

/// Certified inequality: disjoint intervals or differing divergence.
fn norm_ne(a: &NormResult, b: &NormResult) -> bool {
    match (&a.value, &b.value) {
        (Some(x), Some(y)) => !x.intersects(y),
        (None, None) => false,
        _ => true,
    }
}

fn residual_of(a: &NormResult, b: &NormResult) -> Rat {
    match (&a.value, &b.value) {
        (Some(x), Some(y)) => {
            let d = x.sub(y).abs();
            d.hi
        }
        _ => Rat::from_integer(BigInt::from(-1)),
    }
}

pub fn run_suite(id: &str, params: &SuiteParams) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut failures: Vec<Failure> = Vec::new();
    let mut max_residual: Option<Rat> = None;
    let mut trials_run = params.trials;
    let prec = params.prec;
    let width_cap = Rat::new(BigInt::one(), BigInt::from(10u64).pow(30));

    let note_residual = |max_residual: &mut Option<Rat>, r: Rat| {
        *max_residual = Some(match max_residual.take() {
            None => r,
            Some(m) => m.max(r),
        });
    };

    let space = params.space.clone().unwrap_or(SpaceSpec::Lp(Rat::from_integer(BigInt::from(2))));
    let inverted = matches!(id, "SYMM-NORM" | "THM1-EQ")
        && !space.claims_symmetric();

    match id {
        "REARR-PROPS" => {
            for t in 0..params.trials {
                let seed = params.seed.wrapping_add(t);
                let x = gen_seq(seed, &Profile::FiniteSmall);
                let z = gen_seq(seed ^ 0x9e3779b97f4a7c15, &Profile::FiniteSmall);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);

                // (i) dominance: |x| <= |x| + |z| implies x* <= (|x|+|z|)*
                let y = x.abs().add(&z.abs())?;
                let rx = x.decreasing_rearrangement()?;
                let ry = y.decreasing_rearrangement()?;
                let mut bad = None;
                for n in 1..=params.n.min(64) {
                    if rx.value_at(n) > ry.value_at(n) {
                        bad = Some(format!("dominance at n={n}"));
                        break;
                    }
                }

                // (ii) idempotence: (x*)* = x*
                if bad.is_none() && !rx.decreasing_rearrangement()?.seq_eq(&rx) {
                    bad = Some("idempotence".into());
                }

                // (iii) uniform perturbation: |x - y|_inf <= eps implies
                // |x*_n - y*_n| <= eps
                if bad.is_none() {
                    let eps = Rat::new(BigInt::one(), BigInt::from(rng.gen_range(2..=100u64)));
                    let entries: Vec<(u64, Rat)> = (1..=16u64)
                        .filter_map(|i| {
                            let num = rng.gen_range(-100i64..=100);
                            if num == 0 {
                                return None;
                            }
                            Some((i, &eps * Rat::new(BigInt::from(num), BigInt::from(100))))
                        })
                        .collect();
                    let e = Sequence::finite(entries)?;
                    let xp = x.add(&e)?;
                    let rp = xp.decreasing_rearrangement()?;
                    for n in 1..=params.n.min(64) {
                        let d = Signed::abs(&(rx.value_at(n) - rp.value_at(n)));
                        if d > eps {
                            bad = Some(format!("perturbation at n={n}: {d} > {eps}"));
                            break;
                        }
                    }
                }
                if let Some(msg) = bad {
                    failures.push(Failure { seed, digest: digest(&x), residual: msg });
                }
            }
        }

        "SYMM-NORM" | "THM1-EQ" => {
            let perms_per_input = 100u64.min(params.trials.max(1));
            let inputs = params.trials.div_ceil(perms_per_input).max(1);
            trials_run = inputs * perms_per_input;
            let mut violation_found = false;
            for t in 0..inputs {
                let seed = params.seed.wrapping_add(t);
                let x = gen_seq(seed, &Profile::FiniteSmall);
                let nx = norm(&space, &x, prec)?;
                if id == "THM1-EQ" && !inverted {
                    let xs = x.decreasing_rearrangement()?;
                    let ns = norm(&space, &xs, prec)?;
                    if !norm_eq(&nx, &ns, &width_cap) {
                        failures.push(Failure {
                            seed,
                            digest: digest(&x),
                            residual: format!("|x*| != |x|: {}", residual_of(&nx, &ns)),
                        });
                        note_residual(&mut max_residual, residual_of(&nx, &ns));
                        continue;
                    }
                }
                for p in 0..perms_per_input {
                    let pseed = seed.wrapping_mul(1000).wrapping_add(p);
                    let sigma = InjectionSpec::FinitePermutation(gen_perm(pseed, 32));
                    let xp = x.apply_map(&sigma)?;
                    let np = norm(&space, &xp, prec)?;
                    if inverted {
                        if norm_ne(&nx, &np) {
                            violation_found = true;
                        }
                    } else if !norm_eq(&nx, &np, &width_cap) {
                        failures.push(Failure {
                            seed: pseed,
                            digest: digest(&x),
                            residual: format!("|x_sigma| != |x|: {}", residual_of(&nx, &np)),
                        });
                        note_residual(&mut max_residual, residual_of(&nx, &np));
                    }
                }
            }
            if inverted {
                // the canonical minimal witness: support size 2
                if !violation_found {
                    match &space {
                        SpaceSpec::Garling => {
                            let w = garling_witness(2, prec)?;
                            violation_found = w.distinct;
                        }
                        SpaceSpec::WeightedL1(_) => {
                            let e1: Sequence<Rat> = Sequence::unit(1);
                            let e2: Sequence<Rat> = Sequence::unit(2);
                            violation_found =
                                norm_ne(&norm(&space, &e1, prec)?, &norm(&space, &e2, prec)?);
                        }
                        _ => {}
                    }
                }
                if !violation_found {
                    failures.push(Failure {
                        seed: params.seed,
                        digest: "-".into(),
                        residual: "no symmetry violation exhibited".into(),
                    });
                }
            }
        }

        "CLOSE-UP" => {
            for t in 0..params.trials {
                let seed = params.seed.wrapping_add(t);
                let x = gen_seq(seed, &Profile::FiniteSmall);
                let xc = x.closing_up()?;
                let nx = norm(&space, &x, prec)?;
                let nc = norm(&space, &xc, prec)?;
                let ok = match &space {
                    // membership is closing-up invariant everywhere; norm
                    // equality holds for symmetric spaces and Garling
                    SpaceSpec::WeightedL1(_) => nx.divergent == nc.divergent,
                    _ => norm_eq(&nx, &nc, &width_cap),
                };
                if !ok {
                    failures.push(Failure {
                        seed,
                        digest: digest(&x),
                        residual: format!("closing-up changed the norm: {}", residual_of(&nx, &nc)),
                    });
                    continue;
                }
                if space.claims_symmetric() {
                    // injections never increase the norm (equality for
                    // permutation-type maps)
                    for inj in [
                        InjectionSpec::Shift(3),
                        InjectionSpec::InterleaveWithZeros,
                        InjectionSpec::FinitePermutation(gen_perm(seed ^ 0xabc, 32)),
                    ] {
                        let xp = x.apply_map(&inj)?;
                        let np = norm(&space, &xp, prec)?;
                        let le = match (&np.value, &nx.value) {
                            (Some(a), Some(b)) => !(a.lo > b.hi),
                            (None, None) => true,
                            (None, Some(_)) => false,
                            (Some(_), None) => true,
                        };
                        if !le {
                            failures.push(Failure {
                                seed,
                                digest: digest(&x),
                                residual: format!("injection increased the norm ({inj:?})"),
                            });
                        }
                    }
                }
            }
        }

        "INCLUSIONS" => {
            // norm-one inclusions: p <= q gives |x|_q <= |x|_p, and
            // |x|_inf <= every |x|_p
            let ps: Vec<Rat> = [(1, 1), (3, 2), (2, 1), (3, 1)]
                .iter()
                .map(|&(a, b)| Rat::new(BigInt::from(a), BigInt::from(b)))
                .collect();
            for t in 0..params.trials {
                let seed = params.seed.wrapping_add(t);
                let x = gen_seq(seed, &Profile::FiniteSmall);
                let mut chain: Vec<RatInterval> = Vec::new();
                for p in &ps {
                    chain.push(norm(&SpaceSpec::Lp(p.clone()), &x, prec)?.value.unwrap());
                }
                let ninf = norm(&SpaceSpec::Linf, &x, prec)?.value.unwrap();
                let mut bad = None;
                for w in chain.windows(2) {
                    // later p is larger: norm must not increase
                    if w[1].lo > w[0].hi {
                        bad = Some("lp chain violated".to_string());
                    }
                }
                if ninf.lo > chain.last().unwrap().hi {
                    bad = Some("linf above lp".to_string());
                }
                if let Some(msg) = bad {
                    failures.push(Failure { seed, digest: digest(&x), residual: msg });
                }
            }
        }

        "SANDWICH" => {
            for t in 0..params.trials {
                let seed = params.seed.wrapping_add(t);
                let x = gen_seq(seed, &Profile::Nonneg);
                let y = gen_seq(seed ^ 0x5bd1e995, &Profile::Nonneg);
                let rep = sandwich_check(&x, &y, params.n)?;
                if !rep.holds {
                    failures.push(Failure {
                        seed,
                        digest: digest(&x),
                        residual: format!("{} violations", rep.violations),
                    });
                }
            }
        }

        "PSI-DOUBLING" => {
            let psi = params.psi.clone().unwrap_or_else(PsiSpec::log2);
            let rep = psi_axiom_report(&psi, 1 << 20, prec)?;
            trials_run = rep.doubling.len() as u64;
            for (i, (n, ratio)) in rep.doubling.iter().enumerate() {
                if ratio.hi < <Rat as One>::one() {
                    failures.push(Failure {
                        seed: *n,
                        digest: format!("n={n}"),
                        residual: "doubling ratio certified below 1".into(),
                    });
                }
                if i + 1 < rep.doubling.len() {
                    let next = &rep.doubling[i + 1].1;
                    if next.lo > ratio.hi {
                        failures.push(Failure {
                            seed: *n,
                            digest: format!("n={n}"),
                            residual: "doubling ratio not nonincreasing along dyadic n".into(),
                        });
                    }
                }
            }
            // convergence to 1 at finite scale: final ratio within
            // ln 2 / ln(n+1) of 1 (analytic bound for log-type psi)
            let (n_last, last) = rep.doubling.last().unwrap();
            let excess = last.sub(&RatInterval::one()).hi;
            note_residual(&mut max_residual, excess.clone());
            let ln2 = crate::spaces::ln_nat_cached(&BigUint::from(2u32), prec)?;
            let ln_n = crate::spaces::ln_nat_cached(&BigUint::from(*n_last + 1), prec)?;
            let bound = &ln2.hi / &ln_n.lo;
            if excess > bound {
                failures.push(Failure {
                    seed: *n_last,
                    digest: format!("n={n_last}"),
                    residual: format!("doubling excess {excess} above coarse bound {bound}"),
                });
            }
        }

        "GAMMA-SYMM" => {
            let psi = params.psi.clone().unwrap_or_else(PsiSpec::log_e);
            let est = EstimatorSpec::Cesaro { window: 1_000_000, offset: 0 };
            for t in 0..params.trials {
                let seed = params.seed.wrapping_add(t);
                let x = gen_seq(seed, &Profile::FiniteSmall);
                let g = symmetric_functional(&psi, &est, &x, prec)?;
                let xs = x.decreasing_rearrangement()?;
                let gs = symmetric_functional(&psi, &est, &xs.abs(), prec)?;
                let sigma = InjectionSpec::FinitePermutation(gen_perm(seed ^ 0x77, 32));
                let gp = symmetric_functional(&psi, &est, &x.apply_map(&sigma)?, prec)?;
                // finite inputs: all three are exactly zero
                let ok = g.exact
                    && gp.exact
                    && g.value == gp.value
                    && g.value.abs().hi.is_zero() == gs.value.abs().hi.is_zero();
                if !ok {
                    failures.push(Failure {
                        seed,
                        digest: digest(&x),
                        residual: format!("gamma mismatch: {} vs {}", g.value, gp.value),
                    });
                }
                // positivity on the nonnegative cone
                let nn = gen_seq(seed ^ 0x1234, &Profile::Nonneg);
                let gn = symmetric_functional(&psi, &est, &nn, prec)?;
                if gn.value.lo.is_negative() {
                    failures.push(Failure {
                        seed,
                        digest: digest(&nn),
                        residual: "gamma negative on nonnegative input".into(),
                    });
                }
            }
            // interval-level symmetry on a harmonic-type member
            let h: Sequence<Rat> = Sequence::harmonic();
            let gh = symmetric_functional(&psi, &est, &h, prec)?;
            let sigma = InjectionSpec::FinitePermutation(gen_perm(params.seed, 8));
            let ghp = symmetric_functional(&psi, &est, &h.apply_map(&sigma)?, prec)?;
            if !gh.value.intersects(&ghp.value) {
                failures.push(Failure {
                    seed: params.seed,
                    digest: "harmonic".into(),
                    residual: format!("gamma(h_sigma)={} disjoint from gamma(h)={}", ghp.value, gh.value),
                });
            }
        }

        "GARLING-ASYM" => {
            let mut ms: Vec<u64> = vec![2, 4];
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            for _ in 0..params.trials.min(12) {
                ms.push(rng.gen_range(2..=24));
            }
            ms.sort();
            ms.dedup();
            trials_run = ms.len() as u64;
            for m in ms {
                let w = garling_witness(m, prec)?;
                if !(w.norm_x_matches && w.upper_holds && w.distinct) {
                    failures.push(Failure {
                        seed: m,
                        digest: format!("m={m}"),
                        residual: format!(
                            "witness facts failed: matches={} upper={} distinct={}",
                            w.norm_x_matches, w.upper_holds, w.distinct
                        ),
                    });
                }
            }
        }

        "OSC-WITNESS" => {
            let stages = params.n.clamp(2, 6) as u32;
            trials_run = 1;
            let w = oscillating_construct(stages, &PsiSpec::log_e(), prec)?;
            let rep = oscillating_verify(&w, 8, prec)?;
            for msg in rep.failures {
                failures.push(Failure { seed: params.seed, digest: "witness".into(), residual: msg });
            }
        }

        "ORACLE-EQ" => {
            let profiles = [
                Profile::FiniteSmall,
                Profile::FiniteLarge,
                Profile::Blocks,
                Profile::Periodic,
                Profile::Nonneg,
            ];
            for t in 0..params.trials {
                let seed = params.seed.wrapping_add(t);
                let profile = &profiles[(t % profiles.len() as u64) as usize];
                let x = gen_seq(seed, profile);
                let n = params.n.min(64);
                let oracle = rearrangement_oracle(&x, n)?;
                let fast = x.decreasing_rearrangement()?;
                for (i, v) in oracle.iter().enumerate() {
                    let f = fast.value_at(i as u64 + 1);
                    if f != *v {
                        failures.push(Failure {
                            seed,
                            digest: digest(&x),
                            residual: format!("mismatch at n={}: fast {f} oracle {v}", i + 1),
                        });
                        break;
                    }
                }
            }
        }

        _ => return Err(Error::UnknownSuite(id.to_string())),
    }

    let passed = failures.is_empty();
    Ok(VerificationReport {
        suite: id.to_string(),
        trials: trials_run,
        failures,
        max_residual,
        millis: start.elapsed().as_millis(),
        inverted,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rat;

    fn r(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    fn quick(id: &str, trials: u64) -> VerificationReport {
        let params = SuiteParams { trials, n: 64, ..Default::default() };
        run_suite(id, &params).unwrap()
    }

    #[test]
    fn generators_are_deterministic() {
        for profile in [Profile::FiniteSmall, Profile::Blocks, Profile::Periodic] {
            let a = gen_inputs(1, &profile);
            let b = gen_inputs(1, &profile);
            match (a, b) {
                (Generated::Seq(x), Generated::Seq(y)) => assert!(x.seq_eq(&y)),
                _ => panic!(),
            }
        }
        assert_eq!(gen_perm(1, 8).len(), 8);
        let mut p = gen_perm(1, 8);
        p.sort();
        assert_eq!(p, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn oracle_examples() {
        let x = Sequence::finite(vec![(1, r("1")), (2, r("2"))]).unwrap();
        assert_eq!(rearrangement_oracle(&x, 2).unwrap(), vec![r("2"), r("1")]);
        let y = Sequence::periodic(vec![r("1"), r("2")]).unwrap();
        assert_eq!(rearrangement_oracle(&y, 3).unwrap(), vec![r("2"), r("2"), r("2")]);
        let h: Sequence<Rat> = Sequence::harmonic();
        assert_eq!(rearrangement_oracle(&h, 3).unwrap(), vec![r("1"), r("1/2"), r("1/3")]);
    }

    #[test]
    fn suites_smoke() {
        for id in ["REARR-PROPS", "CLOSE-UP", "INCLUSIONS", "SANDWICH", "ORACLE-EQ"] {
            let rep = quick(id, 50);
            assert!(rep.passed, "{id}: {:?}", rep.failures.first());
        }
    }

    #[test]
    fn symm_norm_passes_on_l2_and_inverts_on_garling() {
        let rep = quick("SYMM-NORM", 200);
        assert!(rep.passed && !rep.inverted);

        let params = SuiteParams {
            trials: 200,
            space: Some(SpaceSpec::Garling),
            ..Default::default()
        };
        let rep = run_suite("SYMM-NORM", &params).unwrap();
        assert!(rep.inverted);
        assert!(rep.passed, "inverted suite must exhibit a violation");
    }

    #[test]
    fn thm1_marcinkiewicz() {
        let params = SuiteParams {
            trials: 100,
            space: Some(SpaceSpec::Marcinkiewicz(PsiSpec::log2())),
            ..Default::default()
        };
        let rep = run_suite("THM1-EQ", &params).unwrap();
        assert!(rep.passed, "{:?}", rep.failures.first());
    }

    #[test]
    fn psi_doubling_and_gamma() {
        let rep = quick("PSI-DOUBLING", 1);
        assert!(rep.passed, "{:?}", rep.failures.first());
        let rep = quick("GAMMA-SYMM", 20);
        assert!(rep.passed, "{:?}", rep.failures.first());
    }

    #[test]
    fn garling_and_osc_suites() {
        let rep = quick("GARLING-ASYM", 4);
        assert!(rep.passed, "{:?}", rep.failures.first());
        let params = SuiteParams { trials: 1, n: 4, ..Default::default() };
        let rep = run_suite("OSC-WITNESS", &params).unwrap();
        assert!(rep.passed, "{:?}", rep.failures.first());
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(matches!(quick_err("NOPE"), Error::UnknownSuite(_)));
    }

    fn quick_err(id: &str) -> Error {
        run_suite(id, &SuiteParams::default()).unwrap_err()
    }
}
