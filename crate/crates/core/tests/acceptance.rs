//! Acceptance gate: eight end-to-end criteria, one printed pass/fail line
//! each. Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines on success; on failure the harness prints them anyway.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqspace_core::limits::{
    axiom_residuals, dilation_averaged_estimate, estimate_limit, symmetric_functional,
    EstimatorSpec, MultiplierSpec,
};
use seqspace_core::scalar::{parse_rat, Prec, Rat, RatInterval};
use seqspace_core::seq::{InjectionSpec, Sequence};
use seqspace_core::spaces::{garling_dp, garling_exhaustive, norm, PsiSpec};
use seqspace_core::verify::{run_suite, SuiteParams};
use seqspace_core::witness::{garling_witness, oscillating_construct, oscillating_verify};
use seqspace_core::Error;

/// Independent fixed-point oracle for the oscillation recurrence. Written
/// against the recurrence definition alone: its logarithm is a from-scratch
/// atanh series over scaled BigInt, sharing no code with the library's
/// interval evaluator.
mod oracle {
    use super::*;

    /// Scale: values are BigInt multiples of 2^-BITS.
    pub const BITS: u64 = 400;

    fn fixed_one() -> BigInt {
        BigInt::one() << BITS
    }

    /// atanh(t) = sum t^(2i+1)/(2i+1) for |t| < 1 in fixed point.
    fn atanh_fixed(t: &BigInt) -> BigInt {
        let tt = (t * t) >> BITS;
        let mut term = t.clone();
        let mut acc = t.clone();
        let mut i: u64 = 1;
        loop {
            term = (&term * &tt) >> BITS;
            let contrib = &term / BigInt::from(2 * i + 1);
            if contrib.is_zero() {
                return acc;
            }
            acc += contrib;
            i += 1;
        }
    }

    /// ln 2 = 2 atanh(1/3).
    fn ln2_fixed() -> BigInt {
        let third = fixed_one() / BigInt::from(3);
        atanh_fixed(&third) * 2
    }

    /// ln n for a positive integer: n = m 2^k with m in [1,2),
    /// ln n = k ln 2 + 2 atanh((m-1)/(m+1)).
    pub fn ln_fixed(n: &BigUint) -> BigInt {
        assert!(!n.is_zero());
        let k = n.bits() - 1;
        let m: BigInt = (BigInt::from(n.clone()) << BITS) >> k;
        let one = fixed_one();
        let t = ((&m - &one) << BITS) / (&m + &one);
        BigInt::from(k) * ln2_fixed() + atanh_fixed(&t) * 2
    }

    pub struct Stage {
        pub n_k: BigUint,
        pub c_k: BigInt,
        pub t_k: BigUint,
        /// Checkpoint ratio S_k / ln(T_k + 1) in fixed point.
        pub ratio: BigInt,
    }

    /// The construction: N_1 = 1, c_1 = ln 2; at even k append
    /// N_k = (T+1)^4 - (T+1) copies of min(ln(T_new+1)/(4 N_k), c_{k-1});
    /// at odd k stop at the first n with S + n c_{k-1} > ln(T+n+1) and set
    /// c_k = (ln(T+n+1) - S)/n.
    pub fn construct(stages: u32) -> Vec<Stage> {
        let mut out = Vec::new();
        let mut t = BigUint::one();
        let mut c = ln2_fixed();
        let mut s = c.clone();
        out.push(Stage { n_k: BigUint::one(), c_k: c.clone(), t_k: t.clone(), ratio: fixed_one() });
        for k in 2..=stages {
            let n_k: BigUint;
            if k % 2 == 0 {
                let tp1 = &t + BigUint::one();
                n_k = tp1.pow(4) - &tp1;
                let cand = ln_fixed(&tp1) / BigInt::from(n_k.clone());
                if cand < c {
                    c = cand;
                }
            } else {
                // doubling + bisection for the crossing, then an explicit
                // check that n-1 fails and n succeeds
                let crosses = |n: &BigUint| -> bool {
                    &s + &c * BigInt::from(n.clone()) > ln_fixed(&(&t + n + BigUint::one()))
                };
                let mut hi = BigUint::one();
                while !crosses(&hi) {
                    hi <<= 1;
                }
                let mut lo = &hi >> 1;
                while &lo + BigUint::one() < hi {
                    let mid = (&lo + &hi) >> 1;
                    if crosses(&mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                assert!(crosses(&hi) && (hi.is_one() || !crosses(&(&hi - BigUint::one()))));
                n_k = hi;
                let c_k = (ln_fixed(&(&t + &n_k + BigUint::one())) - &s)
                    / BigInt::from(n_k.clone());
                assert!(c_k < c, "odd-stage c_k must decrease");
                c = c_k;
            }
            s += &c * BigInt::from(n_k.clone());
            t += &n_k;
            let ln_t = ln_fixed(&(&t + BigUint::one()));
            let ratio = (&s << BITS) / ln_t;
            out.push(Stage { n_k, c_k: c.clone(), t_k: t.clone(), ratio });
        }
        out
    }

    /// |interval midpoint - fixed| as a rational.
    pub fn fixed_to_rat(v: &BigInt) -> Rat {
        Rat::new(v.clone(), BigInt::one() << BITS)
    }
}

const P50: Prec = Prec(50);

fn r(s: &str) -> Rat {
    parse_rat(s).unwrap()
}

fn point(v: &RatInterval) -> Option<&Rat> {
    if v.is_point() {
        Some(&v.lo)
    } else {
        None
    }
}

type Check = std::result::Result<String, String>;

// 1. Weighted-l1: ||e_1|| = 1/2 and ||e_n|| = 1 for n = 2..10, exact, < 1 ms.
fn criterion_1() -> Check {
    let space = seqspace_core::witness::weighted_l1_space();
    let start = Instant::now();
    for n in 1..=10u64 {
        let res = norm(&space, &Sequence::<Rat>::unit(n), P50)
            .map_err(|e| format!("norm(e_{n}) failed: {e}"))?;
        let v = res.value.as_ref().and_then(point).ok_or("norm must be a point")?;
        let want = if n == 1 { r("1/2") } else { r("1") };
        if !res.exact || *v != want {
            return Err(format!("||e_{n}|| = {v}, want {want} exactly"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_millis(1) {
        return Err(format!("took {elapsed:?}, budget 1 ms"));
    }
    Ok(format!("||e_1|| = 1/2, ||e_n|| = 1 for n = 2..10, exact, in {elapsed:?}"))
}

// 2. Garling witness: norm matches H_m within 1e-12, y-norm <= 1 + pi,
//    norms distinct, DP == exhaustive for m <= 12; m=1000 < 2 s, m=2000 < 10 s.
fn criterion_2() -> Check {
    for m in [2u64, 4, 100, 1000] {
        let w = garling_witness(m, P50).map_err(|e| format!("m={m}: {e}"))?;
        if !w.norm_x_matches {
            return Err(format!("m={m}: ||x^m|| does not match H_m within 1e-12"));
        }
        if !w.upper_holds {
            return Err(format!("m={m}: ||y^m|| > 1 + pi"));
        }
        if !w.distinct {
            return Err(format!("m={m}: norms not certified distinct"));
        }
    }
    // DP vs exhaustive on seeded rational vectors
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for m in 2..=12usize {
        let vals: Vec<Rat> = (0..m)
            .map(|_| Rat::new(BigInt::from(rng.gen_range(-999i64..=999)), BigInt::from(rng.gen_range(1i64..=99))))
            .collect();
        let ivs: Vec<RatInterval> = vals.iter().map(|v| RatInterval::point(v.clone())).collect();
        let dp = garling_dp(&ivs, P50).map_err(|e| e.to_string())?;
        let ex = garling_exhaustive(&vals, P50).map_err(|e| e.to_string())?;
        let width = &dp.hi - &dp.lo;
        if !dp.intersects(&ex) || width > r("1e-12") {
            return Err(format!("m={m}: dp {dp} vs exhaustive {ex}"));
        }
    }
    let t1 = Instant::now();
    garling_witness(1000, P50).map_err(|e| e.to_string())?;
    let d1000 = t1.elapsed();
    let t2 = Instant::now();
    garling_witness(2000, P50).map_err(|e| e.to_string())?;
    let d2000 = t2.elapsed();
    if d1000 >= Duration::from_secs(2) || d2000 >= Duration::from_secs(10) {
        return Err(format!("m=1000 took {d1000:?} (budget 2 s), m=2000 took {d2000:?} (budget 10 s)"));
    }
    Ok(format!(
        "H_m match, 1+pi ceiling, asymmetry for m in {{2,4,100,1000}}; DP = exhaustive for m <= 12; m=1000 in {d1000:?}, m=2000 in {d2000:?}"
    ))
}

// 3. Oscillation witness vs the independent fixed-point oracle.
fn criterion_3() -> Check {
    let oracle_stages = oracle::construct(5);
    if oracle_stages[1].n_k != BigUint::from(14u32)
        || oracle_stages[2].n_k != BigUint::from(60u32)
        || oracle_stages[3].n_k != BigUint::from(33_362_100u64)
    {
        return Err("oracle recurrence disagrees with N_2 = 14, N_3 = 60, N_4 = 33362100".into());
    }

    let w = oscillating_construct(5, &PsiSpec::log_e(), P50).map_err(|e| e.to_string())?;
    let tol_c = r("1e-38");
    let tol_ratio = r("1e-40");
    for (stage, orc) in w.stages.iter().zip(&oracle_stages) {
        if stage.n_k != orc.n_k {
            return Err(format!(
                "stage {}: N_k = {} but oracle says {}",
                stage.k, stage.n_k, orc.n_k
            ));
        }
        if stage.t_k != orc.t_k {
            return Err(format!("stage {}: T_k differs from oracle", stage.k));
        }
        let oc = oracle::fixed_to_rat(&orc.c_k);
        if (&stage.c_k.lo - &oc).abs() > tol_c || (&stage.c_k.hi - &oc).abs() > tol_c {
            return Err(format!("stage {}: c_k differs from oracle beyond 1e-38", stage.k));
        }
        // odd checkpoints = 1 within 1e-40, even checkpoints <= 1/2
        if stage.k % 2 == 1 {
            if (&stage.ratio.lo - r("1")).abs() > tol_ratio
                || (&stage.ratio.hi - r("1")).abs() > tol_ratio
            {
                return Err(format!("stage {}: odd checkpoint not 1 within 1e-40", stage.k));
            }
        } else if stage.ratio.hi > r("1/2") + &tol_ratio {
            return Err(format!("stage {}: even checkpoint exceeds 1/2", stage.k));
        }
        let or = oracle::fixed_to_rat(&orc.ratio);
        if (&stage.ratio.lo - &or).abs() > tol_c {
            return Err(format!("stage {}: checkpoint ratio differs from oracle", stage.k));
        }
    }

    let rep = oscillating_verify(&w, 8, P50).map_err(|e| e.to_string())?;
    if !rep.ok {
        return Err(format!("independent recheck failed: {:?}", rep.failures));
    }
    if rep.max_candidate_ratio.hi > r("2") {
        return Err("a candidate ratio exceeds 2".into());
    }
    if rep.oscillation_gap < r("1/2") - r("1e-40") {
        return Err("limsup - liminf gap below 1/2".into());
    }
    let t6 = Instant::now();
    let w6 = oscillating_construct(6, &PsiSpec::log_e(), P50).map_err(|e| e.to_string())?;
    oscillating_verify(&w6, 8, P50).map_err(|e| e.to_string())?;
    let d6 = t6.elapsed();
    if d6 >= Duration::from_secs(10) {
        return Err(format!("S=6 took {d6:?}, budget 10 s"));
    }
    Ok(format!(
        "N_2..N_4 = 14, 60, 33362100 match the oracle; odd checkpoints = 1 (1e-40), even <= 1/2, ratios <= 2, gap >= 1/2; S=6 in {d6:?}"
    ))
}

// 4. Banach-limit estimator: exact periodic mean, dilation residual bound,
//    product rule residual at window 1e5.
fn criterion_4() -> Check {
    let x = Sequence::<Rat>::periodic(vec![r("1"), r("0")]).unwrap();
    let e = estimate_limit(&EstimatorSpec::Cesaro { window: 1000, offset: 0 }, &x, P50)
        .map_err(|e| e.to_string())?;
    if !e.exact || point(&e.value) != Some(&r("1/2")) {
        return Err(format!("Periodic([1,0]) -> {:?}, want exactly 1/2", e.value));
    }
    for stages in 0..=20u32 {
        let d = dilation_averaged_estimate(stages, 2048, &x, P50).map_err(|e| e.to_string())?;
        let (res, bound) = (d.residual.unwrap(), d.residual_bound.unwrap());
        if res > bound {
            return Err(format!("stages {stages}: residual {res} exceeds bound {bound}"));
        }
    }
    let mult = MultiplierSpec::ConstantPlusHarmonic { constant: r("1"), coeff: r("1"), offset: 0 };
    let rep = axiom_residuals(
        &EstimatorSpec::Cesaro { window: 100_000, offset: 0 },
        &x,
        Some(&mult),
        P50,
    )
    .map_err(|e| e.to_string())?;
    let pr = rep.product_rule_residual.ok_or("no product-rule residual")?;
    if pr > r("1e-4") {
        return Err(format!("product-rule residual {pr} > 1e-4 at window 1e5"));
    }
    Ok(format!(
        "Periodic([1,0]) -> 1/2 exact; dilation residual within 2 sup|x|/(n+1) for n <= 20; product-rule residual <= 1e-4"
    ))
}

// 5. Sandwich lemma on 1e4 seeded nonnegative finite pairs, all n <= 100.
fn criterion_5() -> Check {
    let start = Instant::now();
    let rep = run_suite(
        "SANDWICH",
        &SuiteParams { trials: 10_000, n: 100, seed: 1, ..SuiteParams::default() },
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !rep.passed || !rep.failures.is_empty() {
        return Err(format!("{} violations", rep.failures.len()));
    }
    if elapsed >= Duration::from_secs(30) {
        return Err(format!("took {elapsed:?}, budget 30 s"));
    }
    Ok(format!("10^4 pairs, n <= 100, zero violations, in {elapsed:?}"))
}

// 6. THM1-EQ suite: symmetric spaces pass with zero failures; Garling and
//    WeightedL1 exhibit violations (inverted pass).
fn criterion_6() -> Check {
    use seqspace_core::spaces::SpaceSpec;
    let symmetric = [
        SpaceSpec::Lp(r("1")),
        SpaceSpec::Lp(r("2")),
        SpaceSpec::Linf,
        SpaceSpec::Marcinkiewicz(PsiSpec::log2()),
    ];
    for space in symmetric {
        let id = space.id();
        let rep = run_suite(
            "THM1-EQ",
            &SuiteParams { trials: 1000, seed: 1, space: Some(space), ..SuiteParams::default() },
        )
        .map_err(|e| format!("{id}: {e}"))?;
        if rep.inverted || !rep.passed || !rep.failures.is_empty() {
            return Err(format!("{id}: {} failures", rep.failures.len()));
        }
    }
    for space in [SpaceSpec::Garling, seqspace_core::witness::weighted_l1_space()] {
        let id = space.id();
        let rep = run_suite(
            "THM1-EQ",
            &SuiteParams { trials: 1000, seed: 1, space: Some(space), ..SuiteParams::default() },
        )
        .map_err(|e| format!("{id}: {e}"))?;
        if !rep.inverted || !rep.passed {
            return Err(format!("{id}: expected an exhibited violation"));
        }
    }
    Ok("10^3 inputs x 10^2 permutations: zero failures on Lp(1), Lp(2), Linf, Marcinkiewicz(log2); violations exhibited on Garling and WeightedL1".into())
}

// 7. Gamma functional: exact zero on finite supports, gamma(harmonic) ~ 1,
//    permutation invariance, (1,1,1,...) rejected.
fn criterion_7() -> Check {
    let psi = PsiSpec::log_e();
    let est = EstimatorSpec::Cesaro { window: 1000, offset: 0 };
    for n in 1..=100u64 {
        let g = symmetric_functional(&psi, &est, &Sequence::<Rat>::unit(n), P50)
            .map_err(|e| e.to_string())?;
        if !g.exact || point(&g.value) != Some(&r("0")) {
            return Err(format!("gamma(e_{n}) != 0 exactly"));
        }
    }
    let big = EstimatorSpec::Cesaro { window: 1_000_000, offset: 0 };
    let g = symmetric_functional(&psi, &big, &Sequence::<Rat>::harmonic(), P50)
        .map_err(|e| e.to_string())?;
    let width = &g.value.hi - &g.value.lo;
    if !g.value.contains_rat(&r("1")) || width > r("1e-3") {
        return Err(format!("gamma(harmonic) = {}, want 1 within width 1e-3", g.value));
    }
    // permutation invariance on seeded finite supports
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let entries: Vec<(u64, Rat)> = (1..=8u64)
            .map(|i| {
                let num = loop {
                    let v = rng.gen_range(-99i64..=99);
                    if v != 0 {
                        break v;
                    }
                };
                (i, Rat::new(BigInt::from(num), BigInt::from(rng.gen_range(1i64..=9))))
            })
            .collect();
        let x = Sequence::finite(entries).unwrap();
        let mut map: Vec<u64> = (1..=8).collect();
        for i in (1..map.len()).rev() {
            map.swap(i, rng.gen_range(0..=i));
        }
        let y = x.apply_map(&InjectionSpec::FinitePermutation(map)).unwrap();
        let gx = symmetric_functional(&psi, &est, &x, P50).map_err(|e| e.to_string())?;
        let gy = symmetric_functional(&psi, &est, &y, P50).map_err(|e| e.to_string())?;
        if !(gx.exact && gy.exact && gx.value.lo == gy.value.lo) {
            return Err("gamma not permutation-invariant on a finite support".into());
        }
    }
    match symmetric_functional(&psi, &est, &Sequence::constant(r("1")), P50) {
        Err(Error::NonMember(_)) => {}
        other => return Err(format!("(1,1,1,...) not rejected as NonMember: {other:?}")),
    }
    Ok("gamma(e_n) = 0 exactly for n <= 100; gamma(harmonic) contains 1, width <= 1e-3; permutation-invariant on finite supports; (1,1,...) rejected".into())
}

// 8. Fast rearrangement vs the inf-sup oracle on 1e4 seeded sequences.
fn criterion_8() -> Check {
    let start = Instant::now();
    let rep = run_suite(
        "ORACLE-EQ",
        &SuiteParams { trials: 10_000, n: 64, seed: 1, ..SuiteParams::default() },
    )
    .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !rep.passed || !rep.failures.is_empty() {
        return Err(format!("{} mismatches", rep.failures.len()));
    }
    if elapsed >= Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}, budget 60 s"));
    }
    Ok(format!("10^4 sequences, prefixes N <= 64, exact agreement, in {elapsed:?}"))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("1 weighted-l1 norms", criterion_1),
        ("2 garling witness", criterion_2),
        ("3 oscillation vs oracle", criterion_3),
        ("4 banach-limit estimator", criterion_4),
        ("5 sandwich lemma", criterion_5),
        ("6 norm-symmetry suite", criterion_6),
        ("7 gamma functional", criterion_7),
        ("8 rearrangement oracle", criterion_8),
    ];
    let mut failed = false;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("ACCEPTANCE {name}: PASS — {detail}"),
            Err(why) => {
                failed = true;
                println!("ACCEPTANCE {name}: FAIL — {why}");
            }
        }
    }
    assert!(!failed, "one or more acceptance criteria failed");
}
