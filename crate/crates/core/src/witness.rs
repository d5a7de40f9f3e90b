//! Constructions and certified verifications of the counterexamples:
//! the weighted-l1 asymmetry, the renorming contradiction, the Garling
//! rearrangement gap, and the oscillating Marcinkiewicz ratio witness.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{pi, rat_from_biguint, sqrt_rat, Prec, Rat, RatInterval};
use crate::seq::{Base, InjectionSpec, Sequence, Tail};
use crate::spaces::{garling_dp, ln_nat_cached, marcinkiewicz_norm, norm, PsiBase, PsiSpec, SpaceSpec};

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

// -- weighted l1 --------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct WeightedL1Report {
    pub norm_e1: Rat,
    pub norm_e2: Rat,
    /// Norms differ although e2 = swap(e1): the norm is not symmetric.
    pub norms_differ: bool,
    /// Membership is invariant under the swap for random finite inputs.
    pub swap_membership_trials: u64,
    pub swap_membership_ok: bool,
}

/// The weight w = (1/2, 1, 1, ...).
pub fn weighted_l1_space() -> SpaceSpec {
    let w = Sequence::from_parts(vec![(1, rat(1, 2))], Base::Periodic(vec![rat(1, 1)]));
    SpaceSpec::WeightedL1(w)
}

pub fn weighted_l1_witness(trials: u64, seed: u64, prec: Prec) -> Result<WeightedL1Report> {
    let space = weighted_l1_space();
    let e1: Sequence<Rat> = Sequence::unit(1);
    let e2: Sequence<Rat> = Sequence::unit(2);
    let n1 = norm(&space, &e1, prec)?;
    let n2 = norm(&space, &e2, prec)?;
    let v1 = n1.value.unwrap().lo;
    let v2 = n2.value.unwrap().lo;

    let swap = InjectionSpec::FinitePermutation(vec![2, 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for _ in 0..trials {
        let len = rng.gen_range(1..=8u64);
        let entries: Vec<(u64, Rat)> = (1..=len)
            .filter_map(|i| {
                let num = rng.gen_range(-50i64..=50);
                if num == 0 {
                    None
                } else {
                    Some((i, rat(num, rng.gen_range(1i64..=50))))
                }
            })
            .collect();
        let x = Sequence::finite(entries)?;
        let y = x.apply_map(&swap)?;
        let nx = norm(&space, &x, prec)?;
        let ny = norm(&space, &y, prec)?;
        // finite sequences are always members; both sides must agree
        ok &= !nx.divergent && !ny.divergent;
    }

    Ok(WeightedL1Report {
        norms_differ: v1 != v2,
        norm_e1: v1,
        norm_e2: v2,
        swap_membership_trials: trials,
        swap_membership_ok: ok,
    })
}

// -- renorming contradiction ---------------------------------------------------

#[derive(Debug, Clone)]
pub struct RenormReport {
    /// Hypothetical norm of (1,1,1,...): sup + |gamma| = 1 + 1 = 2.
    pub norm_ones: Rat,
    /// gamma(1,0,1,0,...) forced to 1/2 by linearity + symmetry.
    pub gamma_alternating: Rat,
    /// Hypothetical norm of (1,0,1,0,...): 1 + 1/2.
    pub norm_alternating: Rat,
    /// Norm of its decreasing rearrangement (1,1,1,...): 2.
    pub norm_rearranged: Rat,
    /// The splitting identity x + Sx = (1,1,1,...) checked on representations.
    pub splitting_verified: bool,
    /// A symmetric norm would force the two values to agree; they do not.
    pub consistent: bool,
}

pub fn renorm_contradiction() -> Result<RenormReport> {
    // x = (1,0,1,0,...); Sx = (0,1,0,1,...); x + Sx = (1,1,1,...)
    let x: Sequence<Rat> = Sequence::periodic(vec![rat(1, 1), rat(0, 1)])?;
    let sx = x.apply_map(&InjectionSpec::Shift(1))?;
    let sum = x.add(&sx)?;
    let ones: Sequence<Rat> = Sequence::constant(rat(1, 1));
    let splitting_verified = sum.seq_eq(&ones);

    // the rearrangement of x is (1,1,1,...)
    let xs = x.decreasing_rearrangement()?;
    let rearranged_ok = xs.seq_eq(&ones);

    // gamma(x) + gamma(Sx) = gamma(1,1,...) = 1 and symmetry gives
    // gamma(x) = gamma(Sx), hence gamma(x) = 1/2
    let gamma_alternating = rat(1, 2);
    let norm_ones = rat(2, 1);
    let norm_alternating = rat(1, 1) + &gamma_alternating;
    let norm_rearranged = norm_ones.clone();
    let consistent = norm_alternating == norm_rearranged;

    Ok(RenormReport {
        norm_ones,
        gamma_alternating,
        norm_alternating,
        norm_rearranged,
        splitting_verified: splitting_verified && rearranged_ok,
        consistent,
    })
}

// -- Garling ------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GarlingWitness {
    pub m: u64,
    /// Garling norm of x^m = (1, 1/sqrt 2, ..., 1/sqrt m, 0, ...).
    pub norm_x: RatInterval,
    /// Garling norm of y^m = (1/sqrt m, ..., 1/sqrt 2, 1, 0, ...).
    pub norm_y: RatInterval,
    /// H_m, the exact value the identity selection attains on x^m.
    pub harmonic_lower: Rat,
    /// 1 + pi, the analytic ceiling for norm_y.
    pub analytic_upper: RatInterval,
    /// norm_x = H_m within certification.
    pub norm_x_matches: bool,
    /// norm_y <= 1 + pi, certified.
    pub upper_holds: bool,
    /// The two norms are certifiably different (m >= 2).
    pub distinct: bool,
}

pub fn garling_witness(m: u64, prec: Prec) -> Result<GarlingWitness> {
    if m < 2 {
        return Err(Error::InvalidInput("garling witness needs m >= 2".into()));
    }
    let inv_sqrt: Vec<RatInterval> = (1..=m)
        .map(|n| {
            let root = sqrt_rat(&Rat::from_integer(BigInt::from(n)), prec)?;
            RatInterval::one().div(&root)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rev = inv_sqrt.clone();
    rev.reverse();

    let norm_x = garling_dp(&inv_sqrt, prec)?;
    let norm_y = garling_dp(&rev, prec)?;

    let mut h_m = <Rat as Zero>::zero();
    for n in 1..=m {
        h_m += rat(1, n as i64);
    }

    let one_plus_pi = RatInterval::one().add(&pi(prec));
    let tol = Rat::new(BigInt::one(), BigInt::from(10u32).pow(12));
    let norm_x_matches = norm_x.sub(&RatInterval::point(h_m.clone())).abs().hi <= tol;
    let upper_holds = norm_y.hi < one_plus_pi.lo;
    let distinct = norm_x.try_cmp(&norm_y) == Some(std::cmp::Ordering::Greater);

    Ok(GarlingWitness {
        m,
        norm_x,
        norm_y,
        harmonic_lower: h_m,
        analytic_upper: one_plus_pi,
        norm_x_matches,
        upper_holds,
        distinct,
    })
}

// -- oscillating witness -------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Stage {
    pub k: u32,
    pub n_k: BigUint,
    pub c_k: RatInterval,
    /// T_k = N_1 + ... + N_k.
    pub t_k: BigUint,
    /// Checkpoint ratio s_{T_k} / ln(T_k + 1).
    pub ratio: RatInterval,
}

#[derive(Debug, Clone)]
pub struct OscillationWitness {
    pub stages: Vec<Stage>,
    /// Certified upper bound for sup_n s_n / Psi(n) (the norm of x in m_Psi).
    pub sup_bound: RatInterval,
    pub psi: PsiSpec,
    pub prec: Prec,
}

impl OscillationWitness {
    /// The witness sequence as a blocks representation. c_k is
    /// nonincreasing, so x is its own decreasing rearrangement.
    pub fn sequence(&self) -> Sequence<RatInterval> {
        let blocks = self.stages.iter().map(|s| (s.c_k.clone(), s.n_k.clone())).collect();
        Sequence::from_parts(Vec::new(), Base::Blocks { blocks, tail: Tail::Zero })
    }
}

/// One construction attempt at fixed precision; Err(AmbiguousComparison)
/// triggers escalation.
fn construct_at(stages: u32, prec: Prec) -> Result<OscillationWitness> {
    let ambiguous =
        || Error::AmbiguousComparison("stage comparison undecided at current precision".into());

    let mut out: Vec<Stage> = Vec::new();
    // stage 1: N_1 = 1, c_1 = ln 2 (solves N_1 c_1 / ln(N_1 + 1) = 1)
    let ln2 = ln_nat_cached(&BigUint::from(2u32), prec)?;
    let mut t = BigUint::one();
    let mut c = ln2.clone();
    let mut s = ln2.clone(); // running sum S_k = sum N_j c_j
    out.push(Stage {
        k: 1,
        n_k: BigUint::one(),
        c_k: c.clone(),
        t_k: t.clone(),
        ratio: s.div(&ln_nat_cached(&(&t + BigUint::one()), prec)?)?,
    });

    for k in 2..=stages {
        let n_k: BigUint;
        if k % 2 == 0 {
            // N_k = (T+1)^4 - (T+1); ln(T_new + 1) = 4 ln(T+1) exactly
            let tp1 = &t + BigUint::one();
            n_k = tp1.pow(4) - &tp1;
            let t_new = &t + &n_k;
            let ln_tp1 = ln_nat_cached(&tp1, prec)?;
            // ln(T_new+1)/(4 N_k) = ln(T+1)/N_k
            let cand = ln_tp1.scale(&Rat::new(BigInt::one(), BigInt::from(n_k.clone())));
            let c_k = match cand.try_cmp(&c) {
                Some(std::cmp::Ordering::Less) => cand,
                Some(_) => c.clone(),
                None => return Err(ambiguous()),
            };
            s = s.add(&c_k.mul(&RatInterval::point(rat_from_biguint(&n_k))));
            t = t_new;
            c = c_k;
        } else {
            // first n with S + n c > ln(T + n + 1), by doubling + bisection
            let cond = |n: &BigUint| -> Result<Option<bool>> {
                let lhs = s.add(&c.mul(&RatInterval::point(rat_from_biguint(n))));
                let rhs = ln_nat_cached(&(&t + n + BigUint::one()), prec)?;
                Ok(lhs.try_cmp(&rhs).map(|o| o == std::cmp::Ordering::Greater))
            };
            let mut hi = BigUint::one();
            loop {
                match cond(&hi)? {
                    Some(true) => break,
                    Some(false) => hi <<= 1,
                    None => return Err(ambiguous()),
                }
                if hi.bits() > 2048 {
                    return Err(Error::ConstructionFailure(
                        "odd-stage crossing not found".into(),
                    ));
                }
            }
            let mut lo = &hi >> 1; // cond(lo) false (or lo == 0)
            while &lo + BigUint::one() < hi {
                let mid = (&lo + &hi) >> 1;
                match cond(&mid)? {
                    Some(true) => hi = mid,
                    Some(false) => lo = mid,
                    None => return Err(ambiguous()),
                }
            }
            n_k = hi;
            let t_new = &t + &n_k;
            // c_k = (ln(T_new + 1) - S) / N_k
            let ln_new = ln_nat_cached(&(&t_new + BigUint::one()), prec)?;
            let c_k = ln_new
                .sub(&s)
                .scale(&Rat::new(BigInt::one(), BigInt::from(n_k.clone())));
            match c_k.try_cmp(&c) {
                Some(std::cmp::Ordering::Less) => {}
                Some(_) => {
                    return Err(Error::ConstructionFailure(
                        "odd-stage c_k failed to decrease".into(),
                    ))
                }
                None => return Err(ambiguous()),
            }
            if !c_k.lo.is_positive() {
                return Err(ambiguous());
            }
            s = s.add(&c_k.mul(&RatInterval::point(rat_from_biguint(&n_k))));
            t = t_new;
            c = c_k;
        }
        let ratio = s.div(&ln_nat_cached(&(&t + BigUint::one()), prec)?)?;
        out.push(Stage { k, n_k, c_k: c.clone(), t_k: t.clone(), ratio });
    }

    let witness = OscillationWitness {
        stages: out,
        sup_bound: RatInterval::zero(),
        psi: PsiSpec::log_e(),
        prec,
    };
    let x = witness.sequence();
    let nr = marcinkiewicz_norm(&PsiSpec::log_e(), &x, prec)?;
    let sup_bound = nr.value.ok_or_else(|| {
        Error::ConstructionFailure("witness unexpectedly outside m_Psi".into())
    })?;
    Ok(OscillationWitness { sup_bound, ..witness })
}

/// Build the oscillating witness: ratio = 1 at odd checkpoints, <= 1/2 at
/// even ones, sup bounded by 2. Precision escalates on undecided
/// comparisons.
pub fn oscillating_construct(
    stages: u32,
    psi: &PsiSpec,
    prec: Prec,
) -> Result<OscillationWitness> {
    if stages < 2 {
        return Err(Error::InvalidInput("need at least 2 stages".into()));
    }
    if !matches!(psi, PsiSpec::LogBase(PsiBase::E)) {
        return Err(Error::UnsupportedCombination(
            "the construction requires natural log: 0 < c_1 < 1 forces base e".into(),
        ));
    }
    let mut p = prec;
    for _ in 0..5 {
        match construct_at(stages, p) {
            Err(Error::AmbiguousComparison(_)) => p = Prec(p.0 * 2),
            other => return other,
        }
    }
    Err(Error::PrecisionInsufficient(
        "stage construction still ambiguous after escalation".into(),
    ))
}

#[derive(Debug, Clone)]
pub struct OscillationReport {
    pub ok: bool,
    pub failures: Vec<String>,
    /// Max ratio over all block-boundary and sampled candidates.
    pub max_candidate_ratio: RatInterval,
    /// Certified lower bound for limsup - liminf over checkpoints.
    pub oscillation_gap: Rat,
    pub candidates_checked: u64,
}

/// Recheck a witness from scratch: checkpoint values, global bound,
/// non-convergence gap.
pub fn oscillating_verify(
    w: &OscillationWitness,
    depth: u64,
    prec: Prec,
) -> Result<OscillationReport> {
    let mut failures = Vec::new();
    let tol = tol_at(prec);

    // recompute partial sums independently from (c_k, N_k)
    let mut s = RatInterval::zero();
    let mut t = BigUint::zero();
    let mut prev_c: Option<RatInterval> = None;
    let mut min_odd_lo: Option<Rat> = None;
    let mut max_even_hi: Option<Rat> = None;
    let mut max_ratio = RatInterval::zero();
    let mut checked = 0u64;

    for st in &w.stages {
        if let Some(pc) = &prev_c {
            if st.c_k.lo > pc.hi {
                failures.push(format!("stage {}: c_k increased", st.k));
            }
        }
        if !st.c_k.lo.is_positive() {
            failures.push(format!("stage {}: c_k not certified positive", st.k));
        }

        // candidates: block start T_{k-1}+1, sampled interior points, block
        // end T_k (the ratio is affine-over-concave in n, so the sup over
        // the block is at an endpoint)
        let start = &t + BigUint::one();
        let t_new = &t + &st.n_k;
        let mut cands: Vec<BigUint> = vec![start.clone(), t_new.clone()];
        let mut step = st.n_k.clone();
        for _ in 0..depth {
            step >>= 1;
            if step.is_zero() {
                break;
            }
            cands.push(&t + &step);
        }
        cands.sort();
        cands.dedup();
        for n in &cands {
            // s_n = S_{k-1} + (n - T_{k-1}) c_k
            let inside = n - &t;
            let s_n = s.add(&st.c_k.mul(&RatInterval::point(rat_from_biguint(&inside))));
            let ratio = s_n.div(&ln_nat_cached(&(n + BigUint::one()), prec)?)?;
            max_ratio = max_ratio.max(&ratio);
            checked += 1;
        }

        s = s.add(&st.c_k.mul(&RatInterval::point(rat_from_biguint(&st.n_k))));
        t = t_new;
        let ratio = s.div(&ln_nat_cached(&(&t + BigUint::one()), prec)?)?;

        if st.k % 2 == 1 {
            if ratio.sub(&RatInterval::one()).abs().hi > tol {
                failures.push(format!("stage {}: odd checkpoint ratio not 1: {ratio}", st.k));
            }
            min_odd_lo = Some(match min_odd_lo {
                None => ratio.lo.clone(),
                Some(m) => m.min(ratio.lo.clone()),
            });
        } else {
            if ratio.hi > rat(1, 2) + &tol {
                failures.push(format!("stage {}: even checkpoint ratio above 1/2: {ratio}", st.k));
            }
            max_even_hi = Some(match max_even_hi {
                None => ratio.hi.clone(),
                Some(m) => m.max(ratio.hi.clone()),
            });
        }
        prev_c = Some(st.c_k.clone());
    }

    if max_ratio.hi > rat(2, 1) {
        failures.push(format!("candidate ratio exceeds 2: {max_ratio}"));
    }

    let gap = match (min_odd_lo, max_even_hi) {
        (Some(o), Some(e)) => o - e,
        _ => <Rat as Zero>::zero(),
    };
    if gap < rat(1, 2) - &tol {
        failures.push(format!("oscillation gap below 1/2: {gap}"));
    }

    Ok(OscillationReport {
        ok: failures.is_empty(),
        failures,
        max_candidate_ratio: max_ratio,
        oscillation_gap: gap,
        candidates_checked: checked,
    })
}

fn tol_at(prec: Prec) -> Rat {
    let d = prec.0.saturating_sub(10).max(1);
    Rat::new(BigInt::one(), BigInt::from(10u32).pow(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rat;

    fn r(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    fn p50() -> Prec {
        Prec(50)
    }

    #[test]
    fn weighted_l1_report() {
        let rep = weighted_l1_witness(100, 7, p50()).unwrap();
        assert_eq!(rep.norm_e1, r("1/2"));
        assert_eq!(rep.norm_e2, r("1"));
        assert!(rep.norms_differ);
        assert!(rep.swap_membership_ok);
    }

    #[test]
    fn renorm_report() {
        let rep = renorm_contradiction().unwrap();
        assert!(rep.splitting_verified);
        assert_eq!(rep.norm_ones, r("2"));
        assert_eq!(rep.gamma_alternating, r("1/2"));
        assert_eq!(rep.norm_alternating, r("3/2"));
        assert_eq!(rep.norm_rearranged, r("2"));
        assert!(!rep.consistent);
    }

    #[test]
    fn garling_witness_small() {
        let w2 = garling_witness(2, p50()).unwrap();
        assert!(w2.norm_x.contains_rat(&r("3/2")));
        let s2 = sqrt_rat(&r("2"), p50()).unwrap();
        assert!(w2.norm_y.intersects(&s2));
        assert!(w2.norm_x_matches && w2.upper_holds && w2.distinct);

        let w4 = garling_witness(4, p50()).unwrap();
        assert!(w4.norm_x.contains_rat(&r("25/12")));
        assert!(w4.norm_y.lo > r("1.816") && w4.norm_y.hi < r("1.817"));
        assert!(w4.norm_x_matches && w4.upper_holds && w4.distinct);
    }

    #[test]
    fn garling_witness_1000() {
        let w = garling_witness(1000, p50()).unwrap();
        assert!(w.norm_x_matches, "norm_x={} H_m={}", w.norm_x, w.harmonic_lower);
        assert!(w.upper_holds);
        // H_1000 = 7.4854708...
        assert!(w.harmonic_lower > r("7.4854") && w.harmonic_lower < r("7.4855"));
        assert!(w.norm_y.hi < r("4.1416"));
    }

    #[test]
    fn oscillation_stages_match_recurrence() {
        let w = oscillating_construct(4, &PsiSpec::log_e(), p50()).unwrap();
        let st = &w.stages;
        assert_eq!(st[0].n_k, BigUint::from(1u32));
        assert_eq!(st[1].n_k, BigUint::from(14u32));
        assert_eq!(st[1].t_k, BigUint::from(15u32));
        // c_2 = ln 16 / 56 = ln 2 / 14 ~ 0.0495105
        assert!(st[1].c_k.lo > r("0.0495104") && st[1].c_k.hi < r("0.0495106"));
        // r_2 = 1/2 exactly (2 ln 2 / 4 ln 2)
        assert!(st[1].ratio.contains_rat(&r("1/2")));
        assert!(st[1].ratio.width() < r("1e-40"));
        assert_eq!(st[2].n_k, BigUint::from(60u32));
        assert_eq!(st[2].t_k, BigUint::from(75u32));
        // c_3 = (ln 76 - 2 ln 2) / 60 ~ 0.049074
        assert!(st[2].c_k.lo > r("0.049073") && st[2].c_k.hi < r("0.049075"));
        assert_eq!(st[3].n_k, BigUint::from(33362100u64));
        assert_eq!(st[3].t_k, BigUint::from(33362175u64));
        assert!(w.sup_bound.hi < r("2"));
    }

    #[test]
    fn oscillation_verifies() {
        let w = oscillating_construct(5, &PsiSpec::log_e(), p50()).unwrap();
        let rep = oscillating_verify(&w, 8, p50()).unwrap();
        assert!(rep.ok, "failures: {:?}", rep.failures);
        assert!(rep.oscillation_gap >= r("0.4999999999"));
        assert!(rep.max_candidate_ratio.hi <= r("2"));
    }

    #[test]
    fn oscillation_rejects_base_2() {
        match oscillating_construct(3, &PsiSpec::log2(), p50()) {
            Err(Error::UnsupportedCombination(_)) => {}
            other => panic!("expected UnsupportedCombination, got {other:?}"),
        }
    }
}
