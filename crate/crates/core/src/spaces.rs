//! Norm evaluation and membership decisions for the sequence spaces under
//! study, with certified interval results.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::fixed::{Fx, FxCtx};
use crate::scalar::{
    ln_nat, ln_rat, nth_root_rat, rat_from_biguint, sqrt_rat, Prec, Rat, RatInterval,
};
use crate::seq::{Base, Coeff, Sequence, Tail};

/// Base of the logarithm in a LogBase Psi.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiBase {
    /// Natural logarithm.
    E,
    /// Rational base > 1.
    Rational(Rat),
}

/// Psi(n), the normalizing growth function of a Marcinkiewicz space.
#[derive(Debug, Clone, PartialEq)]
pub enum PsiSpec {
    /// Psi(n) = log_b(n+1).
    LogBase(PsiBase),
    /// Psi(n) = values[n-1] on a finite evaluable range.
    Table(Vec<Rat>),
}

static LN_CACHE: Lazy<Mutex<HashMap<(Vec<u8>, u32), RatInterval>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Cached ln of a natural number at a given precision.
pub fn ln_nat_cached(n: &BigUint, prec: Prec) -> Result<RatInterval> {
    let key = (n.to_bytes_le(), prec.0);
    if let Some(v) = LN_CACHE.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = ln_nat(n, prec)?;
    LN_CACHE.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

impl PsiSpec {
    pub fn log2() -> Self {
        PsiSpec::LogBase(PsiBase::Rational(Rat::from_integer(BigInt::from(2))))
    }

    pub fn log_e() -> Self {
        PsiSpec::LogBase(PsiBase::E)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PsiSpec::LogBase(PsiBase::Rational(b)) => {
                if *b <= <Rat as One>::one() {
                    return Err(Error::InvalidInput("log base must exceed 1".into()));
                }
                Ok(())
            }
            PsiSpec::LogBase(PsiBase::E) => Ok(()),
            PsiSpec::Table(values) => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("psi table must be nonempty".into()));
                }
                for w in values.windows(2) {
                    if w[1] < w[0] {
                        return Err(Error::InvalidInput("psi table must be nondecreasing".into()));
                    }
                }
                if !values[0].is_positive() {
                    return Err(Error::InvalidInput("psi(1) must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// ln of the base (None for base e, where the divisor is 1).
    fn ln_base(&self, prec: Prec) -> Result<Option<RatInterval>> {
        match self {
            PsiSpec::LogBase(PsiBase::E) => Ok(None),
            PsiSpec::LogBase(PsiBase::Rational(b)) => Ok(Some(ln_rat(b, prec)?)),
            PsiSpec::Table(_) => Err(Error::InvalidInput("table psi has no base".into())),
        }
    }

    /// Psi(n) as a certified interval (exact point when n+1 is an exact
    /// power of an integer base, or for Table entries).
    pub fn eval(&self, n: &BigUint, prec: Prec) -> Result<RatInterval> {
        if n.is_zero() {
            return Err(Error::InvalidInput("psi is evaluated at n >= 1".into()));
        }
        match self {
            PsiSpec::Table(values) => {
                let idx = n.to_usize().filter(|&i| i <= values.len()).ok_or(
                    Error::TableTooShort { needed: n.to_u64().unwrap_or(u64::MAX), have: values.len() as u64 },
                )?;
                Ok(RatInterval::point(values[idx - 1].clone()))
            }
            PsiSpec::LogBase(base) => {
                let np1 = n + BigUint::one();
                if let PsiBase::Rational(b) = base {
                    if let Some(k) = exact_log(&np1, b) {
                        return Ok(RatInterval::point(Rat::from_integer(BigInt::from(k))));
                    }
                }
                let num = ln_nat_cached(&np1, prec)?;
                match self.ln_base(prec)? {
                    None => Ok(num),
                    Some(den) => num.div(&den),
                }
            }
        }
    }

    /// Largest n the spec can evaluate (None = unbounded).
    pub fn max_n(&self) -> Option<usize> {
        match self {
            PsiSpec::Table(v) => Some(v.len()),
            PsiSpec::LogBase(_) => None,
        }
    }

    pub fn is_log(&self) -> bool {
        matches!(self, PsiSpec::LogBase(_))
    }

    pub fn id(&self) -> String {
        match self {
            PsiSpec::LogBase(PsiBase::E) => "log(e)".into(),
            PsiSpec::LogBase(PsiBase::Rational(b)) => format!("log({b})"),
            PsiSpec::Table(v) => format!("table[{}]", v.len()),
        }
    }
}

/// If m = b^k exactly for a rational b > 1, returns k.
fn exact_log(m: &BigUint, b: &Rat) -> Option<u64> {
    if !b.is_integer() {
        return None;
    }
    let b = b.to_integer().magnitude().clone();
    if b <= BigUint::one() {
        return None;
    }
    let mut cur = m.clone();
    let mut k = 0u64;
    while cur > BigUint::one() {
        let (q, r) = cur.div_rem(&b);
        if !r.is_zero() {
            return None;
        }
        cur = q;
        k += 1;
    }
    Some(k)
}

/// Report of the Psi axioms checked at finite scale.
#[derive(Debug, Clone)]
pub struct PsiAxiomReport {
    pub psi1: RatInterval,
    /// Max certified violation of monotonicity on [1, N] (0 when provably
    /// monotone).
    pub monotonicity_violation: Rat,
    pub monotone_certified: bool,
    /// (n, Psi(n)/n) at dyadic n.
    pub decay: Vec<(u64, RatInterval)>,
    /// (n, Psi(2n)/Psi(n)) at dyadic n.
    pub doubling: Vec<(u64, RatInterval)>,
    /// Whether Psi(n) -> infinity holds (analytically for LogBase; flagged
    /// false for constant-looking Tables).
    pub tends_to_infinity: bool,
}

pub fn psi_axiom_report(psi: &PsiSpec, n_max: u64, prec: Prec) -> Result<PsiAxiomReport> {
    psi.validate()?;
    if n_max < 4 {
        return Err(Error::InvalidInput("psi report needs N >= 4".into()));
    }
    if let Some(len) = psi.max_n() {
        if (len as u64) < n_max {
            return Err(Error::TableTooShort { needed: n_max, have: len as u64 });
        }
    }
    let psi1 = psi.eval(&BigUint::one(), prec)?;

    // monotonicity: ln is monotone, so LogBase is certified; Tables are
    // checked exactly
    let (violation, certified) = match psi {
        PsiSpec::LogBase(_) => (<Rat as Zero>::zero(), true),
        PsiSpec::Table(values) => {
            let mut worst = <Rat as Zero>::zero();
            let upto = (n_max as usize).min(values.len());
            for w in values[..upto].windows(2) {
                let d = &w[0] - &w[1];
                if d > worst {
                    worst = d;
                }
            }
            (worst, true)
        }
    };

    let mut decay = Vec::new();
    let mut doubling = Vec::new();
    let mut n = 1u64;
    while n <= n_max {
        let pn = psi.eval(&BigUint::from(n), prec)?;
        decay.push((n, pn.scale(&Rat::new(BigInt::one(), BigInt::from(n)))));
        if 2 * n <= psi.max_n().map(|l| l as u64).unwrap_or(u64::MAX) {
            let p2n = psi.eval(&BigUint::from(2 * n), prec)?;
            doubling.push((n, p2n.div(&pn)?));
        }
        n *= 2;
    }

    let tends_to_infinity = match psi {
        PsiSpec::LogBase(_) => true,
        PsiSpec::Table(values) => values.len() >= 2 && values.last().unwrap() > &values[0],
    };

    Ok(PsiAxiomReport {
        psi1,
        monotonicity_violation: violation,
        monotone_certified: certified,
        decay,
        doubling,
        tends_to_infinity,
    })
}

/// Which norm to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSpec {
    /// p in [1, infinity) as an exact rational.
    Lp(Rat),
    Linf,
    WeightedL1(Sequence<Rat>),
    Marcinkiewicz(PsiSpec),
    Garling,
}

impl SpaceSpec {
    pub fn claims_symmetric(&self) -> bool {
        matches!(self, SpaceSpec::Lp(_) | SpaceSpec::Linf | SpaceSpec::Marcinkiewicz(_))
    }

    pub fn id(&self) -> String {
        match self {
            SpaceSpec::Lp(p) => format!("lp({p})"),
            SpaceSpec::Linf => "linf".into(),
            SpaceSpec::WeightedL1(_) => "wl1".into(),
            SpaceSpec::Marcinkiewicz(psi) => format!("marcinkiewicz[{}]", psi.id()),
            SpaceSpec::Garling => "garling".into(),
        }
    }
}

/// A certified norm value.
#[derive(Debug, Clone)]
pub struct NormResult {
    pub space: String,
    /// None exactly when divergent.
    pub value: Option<RatInterval>,
    pub exact: bool,
    pub divergent: bool,
    pub certificate: String,
}

impl NormResult {
    fn finite(space: String, value: RatInterval, certificate: String) -> Self {
        let exact = value.is_point();
        NormResult { space, value: Some(value), exact, divergent: false, certificate }
    }

    fn divergent(space: String, certificate: String) -> Self {
        NormResult { space, value: None, exact: false, divergent: true, certificate }
    }

    pub fn interval(&self) -> Option<&RatInterval> {
        self.value.as_ref()
    }
}

#[derive(Debug, Clone)]
pub enum Membership {
    Member(NormResult),
    NonMember(String),
    Unknown(RatInterval),
}

/// Does any single value recur infinitely often with a nonzero value?
fn recurring_nonzero<T: Coeff>(x: &Sequence<T>) -> bool {
    match x.base() {
        Base::Zero | Base::Harmonic { .. } => false,
        Base::Periodic(p) => p.iter().any(|v| !v.is_zero()),
        Base::Blocks { tail, .. } => match tail {
            Tail::Zero => false,
            Tail::Periodic(p) => p.iter().any(|v| !v.is_zero()),
        },
    }
}

/// Dispatch a norm evaluation.
pub fn norm<T: Coeff>(space: &SpaceSpec, x: &Sequence<T>, prec: Prec) -> Result<NormResult> {
    match space {
        SpaceSpec::Lp(_) | SpaceSpec::Linf | SpaceSpec::WeightedL1(_) => {
            elementary_norm(space, x, prec)
        }
        SpaceSpec::Marcinkiewicz(psi) => marcinkiewicz_norm(psi, x, prec),
        SpaceSpec::Garling => garling_norm(x, prec),
    }
}

pub fn membership<T: Coeff>(
    space: &SpaceSpec,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<Membership> {
    let r = norm(space, x, prec)?;
    if r.divergent {
        Ok(Membership::NonMember(r.certificate))
    } else {
        Ok(Membership::Member(r))
    }
}

// -- elementary norms ---------------------------------------------------------

pub fn elementary_norm<T: Coeff>(
    space: &SpaceSpec,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<NormResult> {
    let id = space.id();
    match space {
        SpaceSpec::Linf => Ok(NormResult::finite(
            id,
            x.sup_abs(),
            "sup of |values| over the finite representation".into(),
        )),
        SpaceSpec::Lp(p) => lp_norm(p, x, prec),
        SpaceSpec::WeightedL1(w) => weighted_l1_norm(w, x, prec),
        _ => Err(Error::InvalidInput("not an elementary space".into())),
    }
}

/// x^k for an interval with a nonnegative lower endpoint.
fn interval_pow_nat(x: &RatInterval, k: u64) -> RatInterval {
    fn pow(r: &Rat, k: u64) -> Rat {
        let mut acc = <Rat as One>::one();
        let mut base = r.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        acc
    }
    RatInterval::new(pow(&x.lo, k), pow(&x.hi, k))
}

/// x^(a/b) for a nonnegative interval.
fn interval_pow_rat(x: &RatInterval, a: u64, b: u64, prec: Prec) -> Result<RatInterval> {
    debug_assert!(!x.lo.is_negative());
    let xa = interval_pow_nat(x, a);
    if b == 1 {
        return Ok(xa);
    }
    let lo = nth_root_rat(&xa.lo, b as u32, prec)?.lo;
    let hi = nth_root_rat(&xa.hi, b as u32, prec)?.hi;
    Ok(RatInterval::new(lo, hi))
}

fn p_parts(p: &Rat) -> Result<(u64, u64)> {
    if *p < <Rat as One>::one() {
        return Err(Error::InvalidInput("lp requires p >= 1".into()));
    }
    let a = p.numer().to_u64();
    let b = p.denom().to_u64();
    match (a, b) {
        (Some(a), Some(b)) if a <= 1 << 20 && b <= 1 << 20 => Ok((a, b)),
        _ => Err(Error::InvalidInput("p is too large to evaluate".into())),
    }
}

fn lp_norm<T: Coeff>(p: &Rat, x: &Sequence<T>, prec: Prec) -> Result<NormResult> {
    let id = format!("lp({p})");
    let (a, b) = p_parts(p)?;

    if recurring_nonzero(x) {
        return Ok(NormResult::divergent(
            id,
            "a nonzero value recurs infinitely often, so the p-th power series diverges".into(),
        ));
    }

    if let Base::Harmonic { coeff, offset } = x.base() {
        if *p == <Rat as One>::one() {
            return Ok(NormResult::divergent(
                id,
                "harmonic-type sequences are not absolutely summable".into(),
            ));
        }
        // scan + integral tail bound for sum_{n>N} (c/(n+o))^p
        let c = coeff.to_interval().abs();
        let patch_max = x.patch().last().map(|(i, _)| *i).unwrap_or(0);
        let n0 = 512u64.max(patch_max);
        let mut s = RatInterval::zero();
        for n in 1..=n0 {
            let v = x.value_at(n).to_interval().abs();
            s = s.add(&interval_pow_rat(&v, a, b, prec)?);
        }
        // tail <= c^p * (N+o)^{1-p} / (p-1); (N+o)^{1-p} = 1/(N+o)^{p-1}
        let cp = interval_pow_rat(&c, a, b, prec)?;
        let base = RatInterval::point(Rat::from_integer(BigInt::from(n0 + offset)));
        // p-1 = (a-b)/b
        let np = interval_pow_rat(&base, a - b, b, prec)?;
        let pm1 = p - <Rat as One>::one();
        let tail_hi = (&cp.hi / &np.lo) / &pm1;
        let s_tail = RatInterval::new(s.lo.clone(), &s.hi + &tail_hi);
        let value = interval_pow_rat(&s_tail, b, a, prec)?;
        return Ok(NormResult::finite(
            id,
            value,
            format!("scan to n={n0} with integral tail bound for the p-th power series"),
        ));
    }

    // finite support: exact p-th power sum over the value multiset
    let mut s = RatInterval::zero();
    let mut exact_sum = true;
    let mut add_term = |v: &T, count: &BigUint| -> Result<()> {
        let av = v.to_interval().abs();
        let t = interval_pow_rat(&av, a, b, prec)?;
        let t = t.scale(&rat_from_biguint(count));
        if !t.is_point() {
            exact_sum = false;
        }
        s = s.add(&t);
        Ok(())
    };
    for (_, v) in x.patch() {
        if !v.is_zero() {
            add_term(v, &BigUint::one())?;
        }
    }
    if let Base::Blocks { blocks, .. } = x.base() {
        // patched positions inside blocks were counted once in the patch;
        // remove the displaced block occurrence
        let mut dec = vec![BigUint::zero(); blocks.len()];
        for (i, _) in x.patch() {
            let mut pos = BigUint::from(*i - 1);
            for (k, (_, c)) in blocks.iter().enumerate() {
                if &pos < c {
                    dec[k] += BigUint::one();
                    break;
                }
                pos -= c;
            }
        }
        for (k, (v, c)) in blocks.iter().enumerate() {
            let c = c - &dec[k];
            if !v.is_zero() && !c.is_zero() {
                add_term(v, &c)?;
            }
        }
    }
    let _ = exact_sum;
    let value = interval_pow_rat(&s, b, a, prec)?;
    Ok(NormResult::finite(id, value, "exact p-th power sum over the finite support".into()))
}

fn weighted_l1_norm<T: Coeff>(
    w: &Sequence<Rat>,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<NormResult> {
    validate_weights(w)?;
    let id = "wl1".to_string();
    // |x| .* w, then the plain l1 norm of the product
    let wx: Sequence<T> = convert_seq(w);
    match x.abs().pointwise_mul(&wx) {
        Ok(prod) => l1_of(&prod, id, prec),
        Err(Error::UnsupportedCombination(_))
            if matches!(x.base(), Base::Harmonic { .. }) && weights_bounded_below(w) =>
        {
            Ok(NormResult::divergent(
                id,
                "weights are bounded below and |x| has a harmonic tail, so the weighted series \
                 diverges"
                    .into(),
            ))
        }
        Err(e) => Err(e),
    }
}

fn l1_of<T: Coeff>(prod: &Sequence<T>, id: String, _prec: Prec) -> Result<NormResult> {
    if recurring_nonzero(prod) {
        return Ok(NormResult::divergent(
            id,
            "a nonzero weighted value recurs infinitely often".into(),
        ));
    }
    if matches!(prod.base(), Base::Harmonic { .. }) {
        return Ok(NormResult::divergent(id, "harmonic tail is not absolutely summable".into()));
    }
    // finite support: exact sum via the symbolic prefix sum at the support end
    let total = prod.abs().support_extent();
    let s = prod.abs().prefix_sum_at(&total)?;
    Ok(NormResult::finite(id, s.to_interval(), "exact weighted sum over the support".into()))
}

fn validate_weights(w: &Sequence<Rat>) -> Result<()> {
    let ok = |v: &Rat| v.is_positive();
    let mut all = true;
    for (_, v) in w.patch() {
        all &= ok(v);
    }
    match w.base() {
        Base::Zero => all = false,
        Base::Periodic(p) => all &= p.iter().all(ok),
        Base::Harmonic { coeff, .. } => all &= coeff.is_positive(),
        Base::Blocks { blocks, tail } => {
            all &= blocks.iter().all(|(v, _)| ok(v));
            match tail {
                Tail::Zero => all = false,
                Tail::Periodic(p) => all &= p.iter().all(ok),
            }
        }
    }
    if all {
        Ok(())
    } else {
        Err(Error::InvalidInput("weights must be positive everywhere".into()))
    }
}

fn weights_bounded_below(w: &Sequence<Rat>) -> bool {
    // validated weight sequences are positive everywhere, and any eventual
    // class other than harmonic takes finitely many values, so the infimum
    // over the tail is positive
    validate_weights(w).is_ok() && !matches!(w.base(), Base::Harmonic { .. })
}

fn convert_seq<T: Coeff>(w: &Sequence<Rat>) -> Sequence<T> {
    let patch = w.patch().iter().map(|(i, v)| (*i, T::from_rat(v.clone()))).collect();
    let base = match w.base() {
        Base::Zero => Base::Zero,
        Base::Periodic(p) => Base::Periodic(p.iter().cloned().map(T::from_rat).collect()),
        Base::Harmonic { coeff, offset } => {
            Base::Harmonic { coeff: T::from_rat(coeff.clone()), offset: *offset }
        }
        Base::Blocks { blocks, tail } => Base::Blocks {
            blocks: blocks.iter().map(|(v, c)| (T::from_rat(v.clone()), c.clone())).collect(),
            tail: match tail {
                Tail::Zero => Tail::Zero,
                Tail::Periodic(p) => {
                    Tail::Periodic(p.iter().cloned().map(T::from_rat).collect())
                }
            },
        },
    };
    Sequence::from_parts(patch, base)
}

// -- Marcinkiewicz ------------------------------------------------------------

/// sup_n s_n(x)/Psi(n) with certified candidates.
pub fn marcinkiewicz_norm<T: Coeff>(
    psi: &PsiSpec,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<NormResult> {
    psi.validate()?;
    let id = format!("marcinkiewicz[{}]", psi.id());
    let r = x.decreasing_rearrangement()?;

    if r.is_zero_seq() {
        return Ok(NormResult::finite(id, RatInterval::zero(), "zero sequence".into()));
    }

    if recurring_nonzero(&r) {
        if psi.is_log() {
            return Ok(NormResult::divergent(
                id,
                "x* has a nonzero constant tail, so s_n grows linearly while Psi(n)/n -> 0"
                    .into(),
            ));
        }
        return Err(Error::UnsupportedCombination(
            "table Psi cannot certify divergence on an infinite candidate range".into(),
        ));
    }

    if let Base::Harmonic { coeff, offset } = r.base() {
        return marcinkiewicz_harmonic(psi, &r, coeff, *offset, id, prec);
    }

    // finite support: candidates are block boundaries (plus the positions
    // just after each boundary; for LogBase Psi the within-block ratio is
    // endpoint-maximal, and Tables are scanned when small)
    let mut candidates: Vec<BigUint> = Vec::new();
    if let Base::Blocks { blocks, .. } = r.base() {
        let mut t = BigUint::zero();
        for (_, c) in blocks {
            candidates.push(&t + BigUint::one());
            t += c;
            candidates.push(t.clone());
        }
    }
    for k in 1..=r.patch().len() as u64 {
        candidates.push(BigUint::from(k));
    }
    if !psi.is_log() {
        // exhaustive scan over the table range intersected with the support
        let total = r.support_extent();
        let len = psi.max_n().unwrap() as u64;
        if BigUint::from(len) < total {
            return Err(Error::TableTooShort {
                needed: total.to_u64().unwrap_or(u64::MAX),
                have: len,
            });
        }
        let total = total.to_u64().unwrap();
        candidates = (1..=total).map(BigUint::from).collect();
    }
    candidates.sort();
    candidates.dedup();
    candidates.retain(|n| !n.is_zero());

    let mut best: Option<RatInterval> = None;
    for n in &candidates {
        let s = r.prefix_sum_at(n)?.to_interval();
        let psi_n = psi.eval(n, prec)?;
        let ratio = s.div(&psi_n)?;
        best = Some(match best {
            None => ratio,
            Some(b) => b.max(&ratio),
        });
    }
    let value = best.expect("nonzero sequence has candidates");
    Ok(NormResult::finite(
        id,
        value,
        format!("sup over {} certified candidate positions (block boundaries)", candidates.len()),
    ))
}

fn marcinkiewicz_harmonic<T: Coeff>(
    psi: &PsiSpec,
    r: &Sequence<T>,
    coeff: &T,
    offset: u64,
    id: String,
    prec: Prec,
) -> Result<NormResult> {
    if !psi.is_log() {
        return Err(Error::UnsupportedCombination(
            "table Psi cannot bound a harmonic tail".into(),
        ));
    }
    let c = coeff.to_interval().abs();
    let patch_max = r.patch().last().map(|(i, _)| *i).unwrap_or(0);
    let n0 = 1024u64.max(patch_max);

    let mut s = T::zero();
    let mut best: Option<RatInterval> = None;
    for n in 1..=n0 {
        s = s.add(&r.value_at(n));
        let ratio = s.to_interval().div(&psi.eval(&BigUint::from(n), prec)?)?;
        best = Some(match best {
            None => ratio,
            Some(b) => b.max(&ratio),
        });
    }
    let scan = best.unwrap();

    // tail bound for n > n0, using ln(m+1) <= H_m <= 1 + ln(m):
    //   s_n <= s_{n0} + c (1 + ln(n+o) - ln(n0+o+1))
    //   ratio <= ln(b) * (B + c ln(1+o)) / ln(n+1) + c ln(b)
    // with B = s_{n0} + c - c ln(n0+o+1); the 1/ln(n+1) factor is largest
    // at n = n0 + 1.
    let ln_b = match psi.ln_base(prec)? {
        None => RatInterval::one(),
        Some(l) => l,
    };
    let ln_n0o1 = ln_nat_cached(&BigUint::from(n0 + offset + 1), prec)?;
    let b_term = s.to_interval().add(&c).sub(&c.mul(&ln_n0o1));
    let ln_1o = ln_nat_cached(&BigUint::from(1 + offset), prec)?;
    let top = b_term.add(&c.mul(&ln_1o));
    let ln_n0p2 = ln_nat_cached(&BigUint::from(n0 + 2), prec)?;
    let clnb = c.mul(&ln_b);
    let tail_hi = if top.hi.is_positive() {
        (&ln_b.hi * &top.hi) / &ln_n0p2.lo + &clnb.hi
    } else {
        clnb.hi.clone()
    };
    let value = RatInterval::new(scan.lo.clone(), scan.hi.clone().max(tail_hi));
    Ok(NormResult::finite(
        id,
        value,
        format!("scan to n={n0} plus analytic harmonic tail bound (H_m <= 1 + ln m)"),
    ))
}

// -- Garling ------------------------------------------------------------------

/// Dynamic program for the Garling norm over ordered nonzero values:
/// best(i, j) = max(best(i+1, j), v_i/sqrt(j) + best(i+1, j+1)).
/// Computed in directed fixed-point arithmetic.
pub fn garling_dp(values: &[RatInterval], _prec: Prec) -> Result<RatInterval> {
    let m = values.len();
    if m == 0 {
        return Ok(RatInterval::zero());
    }
    // result <= vmax * sum 1/sqrt(j) <= vmax * 2 sqrt(m)
    let mut vmax = <Rat as Zero>::zero();
    for v in values {
        let h = v.hi.clone().max(-v.lo.clone());
        if h > vmax {
            vmax = h;
        }
    }
    let bound = vmax * Rat::from_integer(BigInt::from(2 * (m as u64 + 1)));
    let ctx = FxCtx::for_magnitude(&bound)?;

    let vx: Vec<Fx> = values
        .iter()
        .map(|v| ctx.from_interval(&v.abs()))
        .collect::<Result<Vec<_>>>()?;
    let isq: Vec<Fx> = (1..=m as u64).map(|j| ctx.inv_sqrt(j)).collect();

    let mut next = vec![ctx.zero(); m + 2];
    let mut cur = vec![ctx.zero(); m + 2];
    for i in (0..m).rev() {
        for j in 0..m {
            let take = ctx.add(ctx.mul(vx[i], isq[j])?, next[j + 1]);
            cur[j] = ctx.max(next[j], take);
        }
        cur[m] = next[m];
        std::mem::swap(&mut next, &mut cur);
    }
    Ok(ctx.to_interval(next[0]))
}

/// Exhaustive reference for small supports: enumerate all nonempty
/// increasing selections.
pub fn garling_exhaustive(values: &[Rat], prec: Prec) -> Result<RatInterval> {
    let m = values.len();
    if m > 20 {
        return Err(Error::InvalidInput("exhaustive enumeration capped at 20 items".into()));
    }
    let mut best = RatInterval::zero();
    for mask in 1u32..(1 << m) {
        let mut total = RatInterval::zero();
        let mut slot = 0u32;
        for (i, v) in values.iter().enumerate() {
            if mask & (1 << i) != 0 {
                slot += 1;
                let root = sqrt_rat(&Rat::from_integer(BigInt::from(slot)), prec)?;
                let term = RatInterval::point(Signed::abs(v)).div(&root)?;
                total = total.add(&term);
            }
        }
        best = best.max(&total);
    }
    Ok(best)
}

pub fn garling_norm<T: Coeff>(x: &Sequence<T>, prec: Prec) -> Result<NormResult> {
    let id = "garling".to_string();
    if recurring_nonzero(x) {
        return Ok(NormResult::divergent(
            id,
            "a nonzero value recurs infinitely often; the identity selection already diverges \
             like sum v/sqrt(n)"
                .into(),
        ));
    }
    match x.base() {
        Base::Zero => {
            let values: Vec<RatInterval> =
                x.patch().iter().map(|(_, v)| v.to_interval()).collect();
            let value = garling_dp(&values, prec)?;
            Ok(NormResult::finite(
                id,
                value,
                format!("dynamic program over {} ordered support values", values.len()),
            ))
        }
        Base::Blocks { blocks, .. } => {
            let total: BigUint = blocks.iter().map(|(_, c)| c.clone()).sum();
            let cap = BigUint::from(4096u32);
            if total > cap {
                return Err(Error::UnsupportedCombination(
                    "garling: block support too large to materialize".into(),
                ));
            }
            let t = total.to_u64().unwrap().max(x.patch().last().map(|(i, _)| *i).unwrap_or(0));
            let values: Vec<RatInterval> =
                (1..=t).map(|n| x.value_at(n).to_interval()).collect();
            let value = garling_dp(&values, prec)?;
            Ok(NormResult::finite(
                id,
                value,
                format!("dynamic program over {t} materialized values"),
            ))
        }
        Base::Harmonic { coeff, offset: _ } => {
            let c = coeff.to_interval().abs();
            let patch_max = x.patch().last().map(|(i, _)| *i).unwrap_or(0);
            let m = 4096u64.max(patch_max);
            let values: Vec<RatInterval> =
                (1..=m).map(|n| x.value_at(n).to_interval()).collect();
            let head = garling_dp(&values, prec)?;
            // remaining items have value < c/m; any selection adds at most
            // sum_k c/(m+k)/sqrt(k) <= 4c/sqrt(m)
            let sqrt_m = sqrt_rat(&Rat::from_integer(BigInt::from(m)), prec)?;
            let tail = c.scale(&Rat::from_integer(BigInt::from(4))).div(&sqrt_m)?;
            let value = RatInterval::new(head.lo.clone(), &head.hi + &tail.hi);
            Ok(NormResult::finite(
                id,
                value,
                format!("dynamic program over the first {m} values plus 4c/sqrt(M) tail bound"),
            ))
        }
        Base::Periodic(_) => unreachable!("recurring_nonzero handled periodic bases"),
    }
}

// support extent helper: largest index that can hold a nonzero entry
trait SupportExtent {
    fn support_extent(&self) -> BigUint;
}

impl<T: Coeff> SupportExtent for Sequence<T> {
    fn support_extent(&self) -> BigUint {
        let mut total = BigUint::zero();
        if let Base::Blocks { blocks, .. } = self.base() {
            total = blocks.iter().map(|(_, c)| c.clone()).sum();
        }
        let patch_max = self.patch().last().map(|(i, _)| *i).unwrap_or(0);
        total.max(BigUint::from(patch_max))
    }
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

    fn rfin(entries: &[(u64, &str)]) -> Sequence<Rat> {
        Sequence::finite(entries.iter().map(|(i, s)| (*i, r(s))).collect()).unwrap()
    }

    #[test]
    fn psi_log2_exact_at_powers() {
        let psi = PsiSpec::log2();
        assert_eq!(psi.eval(&BigUint::from(1u32), p50()).unwrap(), RatInterval::point(r("1")));
        assert_eq!(psi.eval(&BigUint::from(3u32), p50()).unwrap(), RatInterval::point(r("2")));
        let v = psi.eval(&BigUint::from(2u32), p50()).unwrap();
        // log2(3) = 1.58496...
        assert!(v.contains_rat(&r("1.5849625007")) || v.lo < r("1.585") && v.hi > r("1.5849"));
    }

    #[test]
    fn psi_report_log_e() {
        let psi = PsiSpec::log_e();
        let rep = psi_axiom_report(&psi, 1 << 10, p50()).unwrap();
        // Psi(1) = ln 2
        assert!(rep.psi1.lo > r("0.693147180559945") && rep.psi1.hi < r("0.693147180559946"));
        assert!(rep.monotone_certified);
        assert!(rep.tends_to_infinity);
        // doubling ratio at n = 1024: ln(2049)/ln(1025) ~ 1.09991
        let (n, ratio) = rep.doubling.last().unwrap();
        assert_eq!(*n, 1024);
        assert!(ratio.lo > r("1.0999") && ratio.hi < r("1.1"));
    }

    #[test]
    fn weighted_l1_example() {
        // w = (1/2, 1, 1, ...)
        let w = Sequence::from_parts(vec![(1, r("1/2"))], Base::Periodic(vec![r("1")]));
        let space = SpaceSpec::WeightedL1(w);
        let e1: Sequence<Rat> = Sequence::unit(1);
        let e2: Sequence<Rat> = Sequence::unit(2);
        let n1 = norm(&space, &e1, p50()).unwrap();
        let n2 = norm(&space, &e2, p50()).unwrap();
        assert_eq!(n1.value.unwrap(), RatInterval::point(r("1/2")));
        assert!(n1.exact);
        assert_eq!(n2.value.unwrap(), RatInterval::point(r("1")));
    }

    #[test]
    fn linf_and_l1_basics() {
        let x = Sequence::periodic(vec![r("1"), r("0")]).unwrap();
        let ninf = norm(&SpaceSpec::Linf, &x, p50()).unwrap();
        assert_eq!(ninf.value.unwrap(), RatInterval::point(r("1")));
        let n1 = norm(&SpaceSpec::Lp(r("1")), &x, p50()).unwrap();
        assert!(n1.divergent);
    }

    #[test]
    fn l2_norm_finite() {
        let x = rfin(&[(1, "3"), (5, "4")]);
        let n = norm(&SpaceSpec::Lp(r("2")), &x, p50()).unwrap();
        let v = n.value.unwrap();
        // sqrt(9+16) = 5 exactly representable; interval must contain it tightly
        assert!(v.contains_rat(&r("5")));
        assert!(v.width() < r("1e-30"));
    }

    #[test]
    fn lp_harmonic_converges_above_one() {
        let x: Sequence<Rat> = Sequence::harmonic();
        let n = norm(&SpaceSpec::Lp(r("2")), &x, p50()).unwrap();
        let v = n.value.unwrap();
        // sqrt(pi^2/6) = 1.28254...
        assert!(v.lo < r("1.2826") && v.hi > r("1.2825"));
        assert!(v.hi < r("1.2835"));
        let n1 = norm(&SpaceSpec::Lp(r("1")), &x, p50()).unwrap();
        assert!(n1.divergent);
    }

    #[test]
    fn marcinkiewicz_examples() {
        let psi2 = PsiSpec::log2();
        let e1: Sequence<Rat> = Sequence::unit(1);
        let n = marcinkiewicz_norm(&psi2, &e1, p50()).unwrap();
        // sup is at n=1 where Psi(1)=1 exactly
        assert!(n.value.unwrap().contains_rat(&r("1")));

        let two_ones = rfin(&[(1, "1"), (2, "1")]);
        let n = marcinkiewicz_norm(&psi2, &two_ones, p50()).unwrap();
        let v = n.value.unwrap();
        // 2/log2(3) = 1.26186...
        assert!(v.lo > r("1.2618") && v.hi < r("1.2619"));

        let ones = Sequence::constant(r("1"));
        let n = marcinkiewicz_norm(&psi2, &ones, p50()).unwrap();
        assert!(n.divergent);
    }

    #[test]
    fn marcinkiewicz_harmonic_member() {
        let psi = PsiSpec::log_e();
        let x: Sequence<Rat> = Sequence::harmonic();
        let n = marcinkiewicz_norm(&psi, &x, p50()).unwrap();
        let v = n.value.unwrap();
        // sup at n=1: 1/ln2 = 1.442695...
        assert!(v.lo > r("1.4426") && v.lo < r("1.4427"));
        assert!(v.hi < r("1.45"), "tail bound should stay below the n=1 candidate: {v}");
    }

    #[test]
    fn garling_dp_matches_exhaustive_small() {
        let vals = [r("1"), r("1/3"), r("2"), r("1/2"), r("5/4")];
        let ivals: Vec<RatInterval> = vals.iter().cloned().map(RatInterval::point).collect();
        let dp = garling_dp(&ivals, p50()).unwrap();
        let ex = garling_exhaustive(&vals, p50()).unwrap();
        assert!(dp.intersects(&ex), "dp={dp} exhaustive={ex}");
        assert!(dp.width() < r("1e-12"));
    }

    #[test]
    fn garling_x2_y2() {
        let s2 = sqrt_rat(&r("2"), p50()).unwrap();
        let inv_s2 = RatInterval::one().div(&s2).unwrap();
        // x2 = (1, 1/sqrt 2): norm 3/2; y2 = (1/sqrt 2, 1): norm sqrt 2
        let x2 = vec![RatInterval::one(), inv_s2.clone()];
        let y2 = vec![inv_s2, RatInterval::one()];
        let nx = garling_dp(&x2, p50()).unwrap();
        let ny = garling_dp(&y2, p50()).unwrap();
        assert!(nx.contains_rat(&r("3/2")), "nx={nx}");
        assert!(ny.intersects(&s2), "ny={ny}");
        assert!(nx.width() < r("1e-12") && ny.width() < r("1e-12"));
        // certified difference
        assert!(nx.try_cmp(&ny) == Some(std::cmp::Ordering::Greater));
    }

    #[test]
    fn garling_closing_up_invariance() {
        let x = rfin(&[(2, "1"), (5, "-2"), (9, "1/3")]);
        let y = x.closing_up().unwrap();
        let nx = garling_norm(&x, p50()).unwrap().value.unwrap();
        let ny = garling_norm(&y, p50()).unwrap().value.unwrap();
        assert_eq!(nx, ny);
    }

    #[test]
    fn membership_examples() {
        let psi = PsiSpec::log_e();
        let h: Sequence<Rat> = Sequence::harmonic();
        match membership(&SpaceSpec::Marcinkiewicz(psi.clone()), &h, p50()).unwrap() {
            Membership::Member(n) => {
                let v = n.value.unwrap();
                assert!(v.lo < r("1.4427") && v.hi > r("1.4426"));
            }
            _ => panic!("harmonic should be a member"),
        }
        let ones = Sequence::periodic(vec![r("1"), r("1")]).unwrap();
        match membership(&SpaceSpec::Marcinkiewicz(psi), &ones, p50()).unwrap() {
            Membership::NonMember(_) => {}
            _ => panic!("(1,1,1,...) must be rejected"),
        }
    }
}
