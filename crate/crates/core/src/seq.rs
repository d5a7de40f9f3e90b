//! Finitely-describable infinite real sequences and the pointwise /
//! rearrangement operators on them.
//!
//! A sequence is a structured base (zero, run-length blocks with an
//! eventually-periodic tail, periodic, or harmonic-type) plus a finite
//! patch of index overrides. The patch is what keeps the family closed
//! under finite permutations and finite-support addition.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Rat, RatInterval};

/// Materialization cap for representational fallbacks.
pub const MAT_CAP: u64 = 1 << 16;

/// Scalar coefficients a sequence can carry: exact rationals or certified
/// rational intervals.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rat(r: Rat) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    /// max{v, 0}
    fn pos_part(&self) -> Self;
    /// max{-v, 0}
    fn neg_part(&self) -> Self;
    fn mul_nat(&self, n: &BigUint) -> Self;
    fn div_nat(&self, n: &BigUint) -> Self;
    /// Certified comparison; `None` when undecidable at this precision.
    fn try_cmp(&self, o: &Self) -> Option<Ordering>;
    fn to_interval(&self) -> RatInterval;
    fn as_rat(&self) -> Option<&Rat>;
}

impl Coeff for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn one() -> Self {
        <Rat as One>::one()
    }
    fn from_rat(r: Rat) -> Self {
        r
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn pos_part(&self) -> Self {
        if self.is_positive() {
            self.clone()
        } else {
            Zero::zero()
        }
    }
    fn neg_part(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            Zero::zero()
        }
    }
    fn mul_nat(&self, n: &BigUint) -> Self {
        self * Rat::from_integer(BigInt::from(n.clone()))
    }
    fn div_nat(&self, n: &BigUint) -> Self {
        self / Rat::from_integer(BigInt::from(n.clone()))
    }
    fn try_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
    fn to_interval(&self) -> RatInterval {
        RatInterval::point(self.clone())
    }
    fn as_rat(&self) -> Option<&Rat> {
        Some(self)
    }
}

impl Coeff for RatInterval {
    fn zero() -> Self {
        RatInterval::zero()
    }
    fn one() -> Self {
        RatInterval::one()
    }
    fn from_rat(r: Rat) -> Self {
        RatInterval::point(r)
    }
    fn is_zero(&self) -> bool {
        self.is_point() && Zero::is_zero(&self.lo)
    }
    fn add(&self, o: &Self) -> Self {
        RatInterval::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        RatInterval::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        RatInterval::mul(self, o)
    }
    fn neg(&self) -> Self {
        RatInterval::neg(self)
    }
    fn abs(&self) -> Self {
        RatInterval::abs(self)
    }
    fn pos_part(&self) -> Self {
        let z = <Rat as Zero>::zero();
        RatInterval::new(self.lo.clone().max(z.clone()), self.hi.clone().max(z))
    }
    fn neg_part(&self) -> Self {
        Coeff::pos_part(&RatInterval::neg(self))
    }
    fn mul_nat(&self, n: &BigUint) -> Self {
        let f = Rat::from_integer(BigInt::from(n.clone()));
        self.scale(&f)
    }
    fn div_nat(&self, n: &BigUint) -> Self {
        let f = Rat::new(BigInt::one(), BigInt::from(n.clone()));
        self.scale(&f)
    }
    fn try_cmp(&self, o: &Self) -> Option<Ordering> {
        RatInterval::try_cmp(self, o)
    }
    fn to_interval(&self) -> RatInterval {
        self.clone()
    }
    fn as_rat(&self) -> Option<&Rat> {
        if self.is_point() {
            Some(&self.lo)
        } else {
            None
        }
    }
}

/// Eventual behaviour of a block representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Tail<T> {
    Zero,
    /// Constant tails are length-1 patterns.
    Periodic(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Base<T> {
    Zero,
    Blocks { blocks: Vec<(T, BigUint)>, tail: Tail<T> },
    Periodic(Vec<T>),
    /// x_n = coeff / (n + offset)
    Harmonic { coeff: T, offset: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<T> {
    /// Sorted by index (1-based); overrides the base pointwise.
    patch: Vec<(u64, T)>,
    base: Base<T>,
}

/// Index maps defining pullbacks y_n = x_{pi(n)}.
#[derive(Debug, Clone, PartialEq)]
pub enum InjectionSpec {
    /// map[i-1] = sigma(i), a bijection of {1..K}; identity beyond K.
    FinitePermutation(Vec<u64>),
    /// map[i-1] = pi(i), injective into {1,2,...}; positions beyond the
    /// domain read 0 (intended for finite-support targets).
    FiniteInjection(Vec<u64>),
    /// y_n = x_{n+k}
    Shift(u64),
    /// y_n = x_{ceil(n/2)}
    Dilation2,
    /// y_n = x_{2n}
    EvensToAll,
    /// y_n = x_{2n-1}
    OddsToAll,
    /// y_{2n} = x_n, y_{2n-1} = 0
    InterleaveWithZeros,
}

impl InjectionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            InjectionSpec::FinitePermutation(map) => {
                let k = map.len() as u64;
                let mut seen = vec![false; map.len()];
                for &v in map {
                    if v < 1 || v > k || seen[(v - 1) as usize] {
                        return Err(Error::InvalidInput(
                            "finite permutation map is not a bijection of {1..K}".into(),
                        ));
                    }
                    seen[(v - 1) as usize] = true;
                }
                Ok(())
            }
            InjectionSpec::FiniteInjection(map) => {
                let mut sorted: Vec<u64> = map.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != map.len() || map.iter().any(|&v| v < 1) {
                    return Err(Error::InvalidInput(
                        "finite injection map is not injective on {1..K}".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IndexSetSpec {
    Explicit(Vec<u64>),
    Evens,
    Odds,
    ComplementOfExplicit(Vec<u64>),
}

fn lcm_usize(a: usize, b: usize) -> usize {
    a / a.gcd(&b) * b
}

fn minimal_period<T: PartialEq + Clone>(p: &[T]) -> Vec<T> {
    let l = p.len();
    for d in 1..=l {
        if l % d != 0 {
            continue;
        }
        if (0..l).all(|i| p[i] == p[i % d]) {
            return p[..d].to_vec();
        }
    }
    p.to_vec()
}

fn rotate_left<T: Clone>(p: &[T], k: usize) -> Vec<T> {
    let l = p.len();
    let k = k % l;
    (0..l).map(|i| p[(i + k) % l].clone()).collect()
}

fn biguint_mod_usize(n: &BigUint, m: usize) -> usize {
    (n % BigUint::from(m)).to_usize().unwrap()
}

impl<T: Coeff> Tail<T> {
    fn value_at_phase(&self, phase: usize) -> T {
        match self {
            Tail::Zero => T::zero(),
            Tail::Periodic(p) => p[phase % p.len()].clone(),
        }
    }

    fn pattern_len(&self) -> usize {
        match self {
            Tail::Zero => 1,
            Tail::Periodic(p) => p.len(),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Tail::Zero => true,
            Tail::Periodic(p) => p.iter().all(|v| v.is_zero()),
        }
    }
}

impl<T: Coeff> Base<T> {
    fn value_at(&self, n: u64) -> T {
        debug_assert!(n >= 1);
        match self {
            Base::Zero => T::zero(),
            Base::Periodic(p) => p[((n - 1) as usize) % p.len()].clone(),
            Base::Harmonic { coeff, offset } => coeff.div_nat(&BigUint::from(n + offset)),
            Base::Blocks { blocks, tail } => {
                let mut pos = BigUint::from(n - 1); // 0-based offset
                for (v, c) in blocks {
                    if &pos < c {
                        return v.clone();
                    }
                    pos -= c;
                }
                tail.value_at_phase(biguint_mod_usize(&pos, tail.pattern_len()))
            }
        }
    }
}

#[derive(Clone)]
enum Avail {
    Count(BigUint),
    Unbounded,
    One,
}

/// Pointwise merge of two block-plus-eventually-periodic representations.
fn merge_blockish<T: Coeff, F: Fn(&T, &T) -> T>(
    ab: &[(T, BigUint)],
    at: &Tail<T>,
    bb: &[(T, BigUint)],
    bt: &Tail<T>,
    op: &F,
) -> Result<(Vec<(T, BigUint)>, Tail<T>)> {
    let ta: BigUint = ab.iter().map(|(_, c)| c.clone()).sum();
    let tb: BigUint = bb.iter().map(|(_, c)| c.clone()).sum();

    let side = |blocks: &[(T, BigUint)],
                tail: &Tail<T>,
                idx: usize,
                off: &BigUint,
                tstart: &BigUint,
                pos: &BigUint|
     -> (T, Avail) {
        if idx < blocks.len() {
            (blocks[idx].0.clone(), Avail::Count(&blocks[idx].1 - off))
        } else {
            match tail {
                Tail::Zero => (T::zero(), Avail::Unbounded),
                Tail::Periodic(p) if p.len() == 1 => (p[0].clone(), Avail::Unbounded),
                Tail::Periodic(p) => {
                    let phase = biguint_mod_usize(&(pos - tstart), p.len());
                    (p[phase].clone(), Avail::One)
                }
            }
        }
    };

    let mut out: Vec<(T, BigUint)> = Vec::new();
    let mut a_idx = 0usize;
    let mut a_off = BigUint::zero();
    let mut b_idx = 0usize;
    let mut b_off = BigUint::zero();
    let mut pos = BigUint::zero(); // positions emitted so far (0-based cursor)
    let mut materialized: u64 = 0;

    while a_idx < ab.len() || b_idx < bb.len() {
        let (av, aa) = side(ab, at, a_idx, &a_off, &ta, &pos);
        let (bv, ba) = side(bb, bt, b_idx, &b_off, &tb, &pos);
        let chunk: BigUint = match (&aa, &ba) {
            (Avail::Count(ca), Avail::Count(cb)) => ca.clone().min(cb.clone()),
            (Avail::Count(c), Avail::Unbounded) | (Avail::Unbounded, Avail::Count(c)) => c.clone(),
            _ => {
                materialized += 1;
                if materialized > MAT_CAP {
                    return Err(Error::UnsupportedCombination(
                        "pointwise merge would materialize more positions than the cap allows"
                            .into(),
                    ));
                }
                BigUint::one()
            }
        };
        out.push((op(&av, &bv), chunk.clone()));
        if a_idx < ab.len() {
            a_off += &chunk;
            if a_off == ab[a_idx].1 {
                a_idx += 1;
                a_off = BigUint::zero();
            }
        }
        if b_idx < bb.len() {
            b_off += &chunk;
            if b_off == bb[b_idx].1 {
                b_idx += 1;
                b_off = BigUint::zero();
            }
        }
        pos += &chunk;
    }

    // both sides are in their tails from position `pos` onward
    let tail = if matches!(at, Tail::Zero) && matches!(bt, Tail::Zero) {
        Tail::Zero
    } else {
        let l = lcm_usize(at.pattern_len(), bt.pattern_len());
        let mut pat = Vec::with_capacity(l);
        for j in 0..l {
            let gp = &pos + BigUint::from(j);
            let va = at.value_at_phase(biguint_mod_usize(&(&gp - &ta), at.pattern_len()));
            let vb = bt.value_at_phase(biguint_mod_usize(&(&gp - &tb), bt.pattern_len()));
            pat.push(op(&va, &vb));
        }
        Tail::Periodic(pat)
    };
    Ok((out, tail))
}

/// Sorts (value, multiplicity) pairs by decreasing value, merging equal
/// values. Errors when a comparison is not certified.
fn sort_desc_grouped<T: Coeff>(items: Vec<(T, BigUint)>) -> Result<Vec<(T, BigUint)>> {
    let mut out: Vec<(T, BigUint)> = Vec::new();
    'item: for (v, c) in items {
        if c.is_zero() {
            continue;
        }
        for k in 0..out.len() {
            match v.try_cmp(&out[k].0) {
                Some(Ordering::Equal) => {
                    out[k].1 += c;
                    continue 'item;
                }
                Some(Ordering::Greater) => {
                    out.insert(k, (v, c));
                    continue 'item;
                }
                Some(Ordering::Less) => {}
                None => {
                    return Err(Error::AmbiguousComparison(
                        "cannot order values for rearrangement at this precision".into(),
                    ))
                }
            }
        }
        out.push((v, c));
    }
    Ok(out)
}

impl<T: Coeff> Sequence<T> {
    // -- constructors --------------------------------------------------------

    pub fn zero() -> Self {
        Sequence { patch: Vec::new(), base: Base::Zero }
    }

    /// Finite-support sequence from (index, value) entries.
    pub fn finite(entries: Vec<(u64, T)>) -> Result<Self> {
        let mut last = 0u64;
        for (i, v) in &entries {
            if *i < 1 || *i <= last {
                return Err(Error::InvalidInput(
                    "finite entries must have strictly increasing indices >= 1".into(),
                ));
            }
            if v.is_zero() {
                return Err(Error::InvalidInput("finite entries must be nonzero".into()));
            }
            last = *i;
        }
        Ok(Sequence { patch: entries, base: Base::Zero }.normalize())
    }

    pub fn blocks(blocks: Vec<(T, BigUint)>, tail: Tail<T>) -> Result<Self> {
        if blocks.iter().any(|(_, c)| c.is_zero()) {
            return Err(Error::InvalidInput("block counts must be >= 1".into()));
        }
        if let Tail::Periodic(p) = &tail {
            if p.is_empty() {
                return Err(Error::InvalidInput("tail pattern must be nonempty".into()));
            }
        }
        Ok(Sequence { patch: Vec::new(), base: Base::Blocks { blocks, tail } }.normalize())
    }

    pub fn constant(v: T) -> Self {
        Sequence { patch: Vec::new(), base: Base::Periodic(vec![v]) }.normalize()
    }

    pub fn periodic(pattern: Vec<T>) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::InvalidInput("periodic pattern must be nonempty".into()));
        }
        Ok(Sequence { patch: Vec::new(), base: Base::Periodic(pattern) }.normalize())
    }

    pub fn harmonic() -> Self {
        Sequence { patch: Vec::new(), base: Base::Harmonic { coeff: T::one(), offset: 0 } }
    }

    pub fn harmonic_like(coeff: T, offset: u64) -> Self {
        Sequence { patch: Vec::new(), base: Base::Harmonic { coeff, offset } }.normalize()
    }

    pub fn unit(n: u64) -> Self {
        Sequence::finite(vec![(n, T::one())]).expect("unit vector")
    }

    pub fn from_parts(patch: Vec<(u64, T)>, base: Base<T>) -> Self {
        Sequence { patch, base }.normalize()
    }

    pub fn patch(&self) -> &[(u64, T)] {
        &self.patch
    }

    pub fn base(&self) -> &Base<T> {
        &self.base
    }

    // -- normalization -------------------------------------------------------

    fn normalize(mut self) -> Self {
        self.base = match self.base {
            Base::Zero => Base::Zero,
            Base::Periodic(p) => {
                let p = minimal_period(&p);
                if p.iter().all(|v| v.is_zero()) {
                    Base::Zero
                } else {
                    Base::Periodic(p)
                }
            }
            Base::Harmonic { coeff, offset } => {
                if coeff.is_zero() {
                    Base::Zero
                } else {
                    Base::Harmonic { coeff, offset }
                }
            }
            Base::Blocks { blocks, tail } => {
                let tail = match tail {
                    Tail::Zero => Tail::Zero,
                    Tail::Periodic(p) => {
                        let p = minimal_period(&p);
                        if p.iter().all(|v| v.is_zero()) {
                            Tail::Zero
                        } else {
                            Tail::Periodic(p)
                        }
                    }
                };
                let mut out: Vec<(T, BigUint)> = Vec::new();
                for (v, c) in blocks {
                    if c.is_zero() {
                        continue;
                    }
                    if let Some((lv, lc)) = out.last_mut() {
                        if *lv == v {
                            *lc += c;
                            continue;
                        }
                    }
                    out.push((v, c));
                }
                // absorb trailing blocks into a constant or zero tail
                loop {
                    let absorb = match (out.last(), &tail) {
                        (Some((lv, _)), Tail::Zero) => lv.is_zero(),
                        (Some((lv, _)), Tail::Periodic(p)) => p.len() == 1 && *lv == p[0],
                        (None, _) => false,
                    };
                    if absorb {
                        out.pop();
                    } else {
                        break;
                    }
                }
                if out.is_empty() {
                    match tail {
                        Tail::Zero => Base::Zero,
                        Tail::Periodic(p) => Base::Periodic(p),
                    }
                } else {
                    Base::Blocks { blocks: out, tail }
                }
            }
        };
        self.patch.sort_by_key(|(i, _)| *i);
        self.patch.dedup_by(|a, b| a.0 == b.0);
        let base = &self.base;
        self.patch.retain(|(i, v)| *v != base.value_at(*i));
        self
    }

    /// Puts small finite-support block forms into pure patch form; used by
    /// structural equality, not by serialization.
    pub fn canonical(&self) -> Sequence<T> {
        if let Base::Blocks { blocks, tail: Tail::Zero } = &self.base {
            let total: BigUint = blocks.iter().map(|(_, c)| c.clone()).sum();
            if total <= BigUint::from(MAT_CAP) {
                let total = total.to_u64().unwrap();
                let mut entries = Vec::new();
                for n in 1..=total {
                    let v = self.value_at(n);
                    if !v.is_zero() {
                        entries.push((n, v));
                    }
                }
                for (i, v) in &self.patch {
                    if *i > total && !v.is_zero() {
                        entries.push((*i, v.clone()));
                    }
                }
                entries.sort_by_key(|(i, _)| *i);
                return Sequence { patch: entries, base: Base::Zero };
            }
        }
        self.clone()
    }

    /// Structural equality after normalization (block form and patch form of
    /// the same finite-support sequence compare equal).
    pub fn seq_eq(&self, other: &Sequence<T>) -> bool {
        self.canonical() == other.canonical()
    }

    // -- evaluation ----------------------------------------------------------

    pub fn value_at(&self, n: u64) -> T {
        match self.patch.binary_search_by_key(&n, |(i, _)| *i) {
            Ok(k) => self.patch[k].1.clone(),
            Err(_) => self.base.value_at(n),
        }
    }

    pub fn eval_prefix(&self, n: u64) -> Vec<T> {
        (1..=n).map(|i| self.value_at(i)).collect()
    }

    /// Sum of the first n values (of the raw sequence, not its
    /// rearrangement), computed symbolically so n may be astronomically
    /// large.
    pub fn prefix_sum_at(&self, n: &BigUint) -> Result<T> {
        let mut sum = match &self.base {
            Base::Zero => T::zero(),
            Base::Periodic(p) => periodic_prefix_sum(p, n),
            Base::Harmonic { .. } => {
                return Err(Error::UnsupportedCombination(
                    "symbolic prefix sums of harmonic-type sequences are not closed-form".into(),
                ))
            }
            Base::Blocks { blocks, tail } => {
                let mut rem = n.clone();
                let mut s = T::zero();
                for (v, c) in blocks {
                    if rem.is_zero() {
                        break;
                    }
                    let take = rem.clone().min(c.clone());
                    s = s.add(&v.mul_nat(&take));
                    rem -= &take;
                }
                if !rem.is_zero() {
                    if let Tail::Periodic(p) = tail {
                        s = s.add(&periodic_prefix_sum(p, &rem));
                    }
                }
                s
            }
        };
        for (i, v) in &self.patch {
            if BigUint::from(*i) <= *n {
                sum = sum.add(&v.sub(&self.base.value_at(*i)));
            }
        }
        Ok(sum)
    }

    /// Total support size; `None` when the support is infinite.
    pub fn support_total(&self) -> Option<BigUint> {
        let base_total: Option<BigUint> = match &self.base {
            Base::Zero => Some(BigUint::zero()),
            Base::Periodic(_) | Base::Harmonic { .. } => None,
            Base::Blocks { blocks, tail } => {
                if tail.is_zero() {
                    Some(
                        blocks
                            .iter()
                            .filter(|(v, _)| !v.is_zero())
                            .map(|(_, c)| c.clone())
                            .sum(),
                    )
                } else {
                    None
                }
            }
        };
        let mut total = base_total?;
        for (i, v) in &self.patch {
            let was = self.base.value_at(*i);
            match (was.is_zero(), v.is_zero()) {
                (true, false) => total += BigUint::one(),
                (false, true) => total -= BigUint::one(),
                _ => {}
            }
        }
        Some(total)
    }

    /// An enclosure of sup_n |x_n| (a point for exact coefficients).
    pub fn sup_abs(&self) -> RatInterval {
        let mut out = RatInterval::zero();
        let mut push = |v: &T| {
            let c = v.to_interval().abs();
            out = out.max(&c);
        };
        for (_, v) in &self.patch {
            push(v);
        }
        match &self.base {
            Base::Zero => {}
            Base::Periodic(p) => p.iter().for_each(&mut push),
            Base::Harmonic { coeff, offset } => {
                push(&coeff.div_nat(&BigUint::from(1 + offset)));
            }
            Base::Blocks { blocks, tail } => {
                for (v, _) in blocks {
                    push(v);
                }
                if let Tail::Periodic(p) = tail {
                    p.iter().for_each(&mut push);
                }
            }
        }
        out
    }

    pub fn is_finite_kind(&self) -> bool {
        matches!(self.base, Base::Zero)
    }

    pub fn is_zero_seq(&self) -> bool {
        matches!(self.base, Base::Zero) && self.patch.is_empty()
    }

    // -- pointwise algebra ---------------------------------------------------

    fn map_values<F: Fn(&T) -> T>(&self, f: F) -> Sequence<T> {
        let patch = self.patch.iter().map(|(i, v)| (*i, f(v))).collect();
        let base = match &self.base {
            Base::Zero => Base::Zero,
            Base::Periodic(p) => Base::Periodic(p.iter().map(&f).collect()),
            Base::Harmonic { coeff, offset } => {
                Base::Harmonic { coeff: f(coeff), offset: *offset }
            }
            Base::Blocks { blocks, tail } => Base::Blocks {
                blocks: blocks.iter().map(|(v, c)| (f(v), c.clone())).collect(),
                tail: match tail {
                    Tail::Zero => Tail::Zero,
                    Tail::Periodic(p) => Tail::Periodic(p.iter().map(&f).collect()),
                },
            },
        };
        Sequence { patch, base }.normalize()
    }

    /// |x| pointwise. Valid on every base: |c/(n+o)| = |c|/(n+o).
    pub fn abs(&self) -> Sequence<T> {
        self.map_values(|v| v.abs())
    }

    pub fn negate(&self) -> Sequence<T> {
        self.map_values(|v| v.neg())
    }

    /// Positive part. On a harmonic base the sign of the coefficient decides
    /// the whole tail, so mapping the coefficient is exact.
    pub fn pos_part(&self) -> Sequence<T> {
        self.map_values(|v| v.pos_part())
    }

    pub fn neg_part(&self) -> Sequence<T> {
        self.map_values(|v| v.neg_part())
    }

    pub fn scale(&self, factor: &T) -> Sequence<T> {
        self.map_values(|v| v.mul(factor))
    }

    fn blockish(&self) -> Option<(Vec<(T, BigUint)>, Tail<T>)> {
        match &self.base {
            Base::Zero => Some((Vec::new(), Tail::Zero)),
            Base::Periodic(p) => Some((Vec::new(), Tail::Periodic(p.clone()))),
            Base::Blocks { blocks, tail } => Some((blocks.clone(), tail.clone())),
            Base::Harmonic { .. } => None,
        }
    }

    fn binary_pointwise<F: Fn(&T, &T) -> T>(
        &self,
        other: &Sequence<T>,
        op: F,
        opname: &str,
    ) -> Result<Sequence<T>> {
        let base = if matches!(self.base, Base::Zero) {
            other.base.clone()
        } else if matches!(other.base, Base::Zero) {
            self.base.clone()
        } else {
            match (&self.base, &other.base) {
                (
                    Base::Harmonic { coeff: c1, offset: o1 },
                    Base::Harmonic { coeff: c2, offset: o2 },
                ) => {
                    if o1 != o2 {
                        return Err(Error::UnsupportedCombination(format!(
                            "{opname}: harmonic bases with different offsets"
                        )));
                    }
                    Base::Harmonic { coeff: op(c1, c2), offset: *o1 }
                }
                (Base::Harmonic { .. }, _) | (_, Base::Harmonic { .. }) => {
                    return Err(Error::UnsupportedCombination(format!(
                        "{opname}: a harmonic base combines only with finite-support sequences"
                    )));
                }
                _ => {
                    let (ab, at) = self.blockish().expect("non-harmonic base");
                    let (bb, bt) = other.blockish().expect("non-harmonic base");
                    let (blocks, tail) = merge_blockish(&ab, &at, &bb, &bt, &op)?;
                    if blocks.is_empty() {
                        match tail {
                            Tail::Zero => Base::Zero,
                            Tail::Periodic(p) => Base::Periodic(p),
                        }
                    } else {
                        Base::Blocks { blocks, tail }
                    }
                }
            }
        };
        // patch overrides recomputed from the full operand values
        let mut idxs: Vec<u64> =
            self.patch.iter().chain(other.patch.iter()).map(|(i, _)| *i).collect();
        idxs.sort_unstable();
        idxs.dedup();
        let patch = idxs
            .into_iter()
            .map(|i| (i, op(&self.value_at(i), &other.value_at(i))))
            .collect();
        Ok(Sequence { patch, base }.normalize())
    }

    pub fn add(&self, other: &Sequence<T>) -> Result<Sequence<T>> {
        self.binary_pointwise(other, |a, b| a.add(b), "add")
    }

    pub fn sub(&self, other: &Sequence<T>) -> Result<Sequence<T>> {
        self.binary_pointwise(other, |a, b| a.sub(b), "sub")
    }

    pub fn pointwise_mul(&self, other: &Sequence<T>) -> Result<Sequence<T>> {
        // finite-support shortcut: the product has finite support
        if self.is_finite_kind() || other.is_finite_kind() {
            let (fin, oth) = if self.is_finite_kind() { (self, other) } else { (other, self) };
            let patch =
                fin.patch.iter().map(|(i, v)| (*i, v.mul(&oth.value_at(*i)))).collect();
            return Ok(Sequence { patch, base: Base::Zero }.normalize());
        }
        if matches!(self.base, Base::Harmonic { .. })
            || matches!(other.base, Base::Harmonic { .. })
        {
            return Err(Error::UnsupportedCombination(
                "mul: products involving harmonic bases are not representable".into(),
            ));
        }
        self.binary_pointwise(other, |a, b| a.mul(b), "mul")
    }

    // -- rearrangement -------------------------------------------------------

    /// The decreasing rearrangement x*, in representable form.
    pub fn decreasing_rearrangement(&self) -> Result<Sequence<T>> {
        if let Base::Harmonic { coeff, offset } = &self.base {
            return rearrange_patched_harmonic(&self.patch, coeff, *offset);
        }

        // finite-multiplicity values: patch overrides plus block contents,
        // with block occurrences displaced by the patch removed
        let mut finite: Vec<(T, BigUint)> = Vec::new();
        for (_, v) in &self.patch {
            let a = v.abs();
            if !a.is_zero() {
                finite.push((a, BigUint::one()));
            }
        }
        match &self.base {
            Base::Zero | Base::Periodic(_) => {}
            Base::Blocks { blocks, .. } => {
                // per-block decrements for patched positions inside blocks
                let mut dec = vec![BigUint::zero(); blocks.len()];
                for (i, _) in &self.patch {
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
                    let a = v.abs();
                    let c = c - &dec[k];
                    if !a.is_zero() && !c.is_zero() {
                        finite.push((a, c));
                    }
                }
            }
            Base::Harmonic { .. } => unreachable!(),
        }

        // values of infinite multiplicity (periodic pattern or periodic tail)
        let tail_pattern: Option<&Vec<T>> = match &self.base {
            Base::Periodic(p) => Some(p),
            Base::Blocks { tail: Tail::Periodic(p), .. } => Some(p),
            _ => None,
        };
        let mut inf_values: Vec<T> = Vec::new();
        if let Some(p) = tail_pattern {
            for v in p {
                let a = v.abs();
                if !a.is_zero() && !inf_values.contains(&a) {
                    inf_values.push(a);
                }
            }
        }

        let grouped = sort_desc_grouped(finite)?;
        if inf_values.is_empty() {
            return Sequence::blocks(grouped, Tail::Zero);
        }

        // the largest recurring value forms the constant tail and suppresses
        // every value below it
        let mut vmax = inf_values[0].clone();
        for v in &inf_values[1..] {
            match v.try_cmp(&vmax) {
                Some(Ordering::Greater) => vmax = v.clone(),
                Some(_) => {}
                None => {
                    return Err(Error::AmbiguousComparison(
                        "cannot order recurring values for rearrangement".into(),
                    ))
                }
            }
        }
        let mut kept: Vec<(T, BigUint)> = Vec::new();
        for (v, c) in grouped {
            match v.try_cmp(&vmax) {
                Some(Ordering::Greater) => kept.push((v, c)),
                Some(_) => {}
                None => {
                    return Err(Error::AmbiguousComparison(
                        "cannot compare value against recurring tail value".into(),
                    ))
                }
            }
        }
        Sequence::blocks(kept, Tail::Periodic(vec![vmax]))
    }

    /// Cumulative sums of the decreasing rearrangement.
    pub fn partial_sums(&self, n: u64) -> Result<Vec<T>> {
        let r = self.decreasing_rearrangement()?;
        let mut out = Vec::with_capacity(n as usize);
        let mut acc = T::zero();
        for i in 1..=n {
            acc = acc.add(&r.value_at(i));
            out.push(acc.clone());
        }
        Ok(out)
    }

    // -- closing up ----------------------------------------------------------

    /// Deletes all zero entries and closes up the gaps, preserving the order
    /// of the nonzero entries.
    pub fn closing_up(&self) -> Result<Sequence<T>> {
        if let Base::Harmonic { coeff, offset } = &self.base {
            // the base itself is never zero; only patched positions can be
            if self.patch.is_empty() {
                return Ok(self.clone());
            }
            let max_i = self.patch.last().unwrap().0;
            if max_i > MAT_CAP {
                return Err(Error::UnsupportedCombination(
                    "closing up: patch extent exceeds the materialization cap".into(),
                ));
            }
            let mut entries: Vec<(u64, T)> = Vec::new();
            let mut h = 0u64;
            for n in 1..=max_i {
                let v = self.value_at(n);
                if !v.is_zero() {
                    h += 1;
                    entries.push((h, v));
                }
            }
            let zeros = max_i - h;
            return Ok(Sequence {
                patch: entries,
                base: Base::Harmonic { coeff: coeff.clone(), offset: offset + zeros },
            }
            .normalize());
        }

        if matches!(self.base, Base::Zero) {
            // sparse finite support: reindex directly, no materialization
            let mut entries: Vec<(u64, T)> = Vec::new();
            let mut h = 0u64;
            for (_, v) in &self.patch {
                if !v.is_zero() {
                    h += 1;
                    entries.push((h, v.clone()));
                }
            }
            return Ok(Sequence { patch: entries, base: Base::Zero });
        }

        let p_max = self.patch.last().map(|(i, _)| *i).unwrap_or(0);
        if p_max > MAT_CAP {
            return Err(Error::UnsupportedCombination(
                "closing up: patch extent exceeds the materialization cap".into(),
            ));
        }

        let (blocks, tail) = self.blockish().expect("non-harmonic base");
        let total: BigUint = blocks.iter().map(|(_, c)| c.clone()).sum();

        // head: patched region, materialized position by position
        let mut head: Vec<(T, BigUint)> = Vec::new();
        for n in 1..=p_max {
            let v = self.value_at(n);
            if !v.is_zero() {
                head.push((v, BigUint::one()));
            }
        }

        // remainder of the blocks past the patched region
        let mut rem_blocks: Vec<(T, BigUint)> = Vec::new();
        let mut consumed = BigUint::from(p_max);
        for (v, c) in &blocks {
            if consumed >= *c {
                consumed -= c;
                continue;
            }
            let take = c - &consumed;
            consumed = BigUint::zero();
            if !v.is_zero() {
                rem_blocks.push((v.clone(), take));
            }
        }

        // the nonzero subsequence of a periodic tail is periodic; if the
        // patched region reaches into the tail, rotate its phase first
        let closed_tail = match &tail {
            Tail::Zero => Tail::Zero,
            Tail::Periodic(p) => {
                let pm = BigUint::from(p_max);
                let shift =
                    if pm > total { biguint_mod_usize(&(&pm - &total), p.len()) } else { 0 };
                let rot = rotate_left(p, shift);
                let nz: Vec<T> = rot.into_iter().filter(|v| !v.is_zero()).collect();
                if nz.is_empty() {
                    Tail::Zero
                } else {
                    Tail::Periodic(nz)
                }
            }
        };

        head.extend(rem_blocks);
        Sequence::blocks(head, closed_tail)
    }

    // -- index maps ----------------------------------------------------------

    /// Pullback y with y_n = x_{pi(n)} for the given structured map.
    pub fn apply_map(&self, spec: &InjectionSpec) -> Result<Sequence<T>> {
        spec.validate()?;
        match spec {
            InjectionSpec::FinitePermutation(map) => {
                let mut patch: Vec<(u64, T)> = (1..=map.len() as u64)
                    .map(|n| (n, self.value_at(map[(n - 1) as usize])))
                    .collect();
                // untouched positions retain the original patch
                for (i, v) in &self.patch {
                    if *i > map.len() as u64 {
                        patch.push((*i, v.clone()));
                    }
                }
                Ok(Sequence { patch, base: self.base.clone() }.normalize())
            }
            InjectionSpec::FiniteInjection(map) => {
                let entries: Vec<(u64, T)> = (1..=map.len() as u64)
                    .map(|n| (n, self.value_at(map[(n - 1) as usize])))
                    .collect();
                Ok(Sequence { patch: entries, base: Base::Zero }.normalize())
            }
            InjectionSpec::Shift(k) => self.shift(*k),
            InjectionSpec::Dilation2 => self.dilation2(),
            InjectionSpec::EvensToAll => self.parity_subsequence(true),
            InjectionSpec::OddsToAll => self.parity_subsequence(false),
            InjectionSpec::InterleaveWithZeros => self.interleave_with_zeros(),
        }
    }

    fn shift(&self, k: u64) -> Result<Sequence<T>> {
        let base = match &self.base {
            Base::Zero => Base::Zero,
            Base::Periodic(p) => Base::Periodic(rotate_left(p, (k % p.len() as u64) as usize)),
            Base::Harmonic { coeff, offset } => {
                Base::Harmonic { coeff: coeff.clone(), offset: offset + k }
            }
            Base::Blocks { blocks, tail } => {
                let mut rem = BigUint::from(k);
                let mut out: Vec<(T, BigUint)> = Vec::new();
                let mut entered_blocks = false;
                for (bi, (v, c)) in blocks.iter().enumerate() {
                    if rem >= *c {
                        rem -= c;
                        continue;
                    }
                    out.push((v.clone(), c - &rem));
                    out.extend(blocks[bi + 1..].iter().cloned());
                    entered_blocks = true;
                    break;
                }
                if entered_blocks {
                    Base::Blocks { blocks: out, tail: tail.clone() }
                } else {
                    // the shift consumed all blocks and part of the tail
                    match tail {
                        Tail::Zero => Base::Zero,
                        Tail::Periodic(p) => {
                            Base::Periodic(rotate_left(p, biguint_mod_usize(&rem, p.len())))
                        }
                    }
                }
            }
        };
        let patch: Vec<(u64, T)> = self
            .patch
            .iter()
            .filter(|(i, _)| *i > k)
            .map(|(i, v)| (*i - k, v.clone()))
            .collect();
        Ok(Sequence { patch, base }.normalize())
    }

    fn dilation2(&self) -> Result<Sequence<T>> {
        let double = |p: &[T]| -> Vec<T> {
            let mut q = Vec::with_capacity(2 * p.len());
            for v in p {
                q.push(v.clone());
                q.push(v.clone());
            }
            q
        };
        let base = match &self.base {
            Base::Zero => Base::Zero,
            Base::Periodic(p) => Base::Periodic(double(p)),
            Base::Harmonic { .. } => {
                return Err(Error::UnsupportedCombination(
                    "dilation of a harmonic base is not representable in this family".into(),
                ))
            }
            Base::Blocks { blocks, tail } => {
                let two = BigUint::from(2u32);
                let blocks = blocks.iter().map(|(v, c)| (v.clone(), c * &two)).collect();
                let tail = match tail {
                    Tail::Zero => Tail::Zero,
                    Tail::Periodic(p) => Tail::Periodic(double(p)),
                };
                Base::Blocks { blocks, tail }
            }
        };
        let mut patch: Vec<(u64, T)> = Vec::new();
        for (i, v) in &self.patch {
            patch.push((2 * i - 1, v.clone()));
            patch.push((2 * i, v.clone()));
        }
        Ok(Sequence { patch, base }.normalize())
    }

    /// evens = true: y_n = x_{2n}; evens = false: y_n = x_{2n-1}.
    fn parity_subsequence(&self, evens: bool) -> Result<Sequence<T>> {
        let base = match &self.base {
            Base::Zero => Base::Zero,
            Base::Periodic(p) => {
                let l = p.len();
                let q: Vec<T> = (0..l)
                    .map(|i| p[(2 * i + if evens { 1 } else { 0 }) % l].clone())
                    .collect();
                Base::Periodic(q)
            }
            Base::Harmonic { coeff, offset } => {
                // x_{2n+off} = (c/2)/(n + off/2) needs matching parity
                let ok = if evens { offset % 2 == 0 } else { offset % 2 == 1 };
                if !ok {
                    return Err(Error::UnsupportedCombination(
                        "parity subsequence of this harmonic base is not representable".into(),
                    ));
                }
                let half = T::from_rat(Rat::new(BigInt::one(), BigInt::from(2)));
                let new_off = if evens { offset / 2 } else { (offset - 1) / 2 };
                Base::Harmonic { coeff: coeff.mul(&half), offset: new_off }
            }
            Base::Blocks { blocks, tail } => {
                let two = BigUint::from(2u32);
                let mut out: Vec<(T, BigUint)> = Vec::new();
                let mut a = BigUint::zero(); // positions consumed so far
                for (v, c) in blocks {
                    let end = &a + c;
                    // indices of the wanted parity in (a, a+c]
                    let cnt = if evens {
                        &end / &two - &a / &two
                    } else {
                        (&end + BigUint::one()) / &two - (&a + BigUint::one()) / &two
                    };
                    if !cnt.is_zero() {
                        out.push((v.clone(), cnt));
                    }
                    a = end;
                }
                let tail = match tail {
                    Tail::Zero => Tail::Zero,
                    Tail::Periodic(p) => {
                        let l = p.len();
                        let t_par = biguint_mod_usize(&a, 2);
                        let q: Vec<T> = (0..l)
                            .map(|i| {
                                let idx = if evens {
                                    (2 * i + 1 + 2 * l - t_par) % l
                                } else {
                                    (2 * i + t_par) % l
                                };
                                p[idx].clone()
                            })
                            .collect();
                        Tail::Periodic(q)
                    }
                };
                Base::Blocks { blocks: out, tail }
            }
        };
        let patch: Vec<(u64, T)> = self
            .patch
            .iter()
            .filter_map(|(i, v)| {
                if evens {
                    (i % 2 == 0).then(|| (i / 2, v.clone()))
                } else {
                    (i % 2 == 1).then(|| (i / 2 + 1, v.clone()))
                }
            })
            .collect();
        Ok(Sequence { patch, base }.normalize())
    }

    fn interleave_with_zeros(&self) -> Result<Sequence<T>> {
        let interleave = |p: &[T]| -> Vec<T> {
            let mut q = Vec::with_capacity(2 * p.len());
            for v in p {
                q.push(T::zero());
                q.push(v.clone());
            }
            q
        };
        let base = match &self.base {
            Base::Zero => Base::Zero,
            Base::Periodic(p) => Base::Periodic(interleave(p)),
            Base::Harmonic { .. } => {
                return Err(Error::UnsupportedCombination(
                    "interleaving a harmonic base with zeros is not representable".into(),
                ))
            }
            Base::Blocks { blocks, tail } => {
                let total: BigUint = blocks.iter().map(|(_, c)| c.clone()).sum();
                if total > BigUint::from(MAT_CAP) {
                    return Err(Error::UnsupportedCombination(
                        "interleave: block extent exceeds the materialization cap".into(),
                    ));
                }
                let t = total.to_u64().unwrap();
                let mut out: Vec<(T, BigUint)> = Vec::new();
                for n in 1..=t {
                    out.push((T::zero(), BigUint::one()));
                    out.push((self.base.value_at(n), BigUint::one()));
                }
                let tail = match tail {
                    Tail::Zero => Tail::Zero,
                    Tail::Periodic(p) => Tail::Periodic(interleave(p)),
                };
                Base::Blocks { blocks: out, tail }
            }
        };
        let patch: Vec<(u64, T)> =
            self.patch.iter().map(|(i, v)| (2 * i, v.clone())).collect();
        Ok(Sequence { patch, base }.normalize())
    }

    // -- restriction ---------------------------------------------------------

    /// x restricted to an index set (entries outside the set become 0).
    pub fn restrict(&self, set: &IndexSetSpec) -> Result<Sequence<T>> {
        match set {
            IndexSetSpec::Explicit(idxs) => {
                let mut idxs = idxs.clone();
                idxs.sort_unstable();
                idxs.dedup();
                if idxs.first().is_some_and(|&i| i < 1) {
                    return Err(Error::InvalidInput("index sets are 1-based".into()));
                }
                let entries: Vec<(u64, T)> =
                    idxs.into_iter().map(|i| (i, self.value_at(i))).collect();
                Ok(Sequence { patch: entries, base: Base::Zero }.normalize())
            }
            IndexSetSpec::ComplementOfExplicit(idxs) => {
                if idxs.iter().any(|&i| i < 1) {
                    return Err(Error::InvalidInput("index sets are 1-based".into()));
                }
                let mut patch = self.patch.clone();
                for &i in idxs {
                    match patch.binary_search_by_key(&i, |(j, _)| *j) {
                        Ok(k) => patch[k].1 = T::zero(),
                        Err(k) => patch.insert(k, (i, T::zero())),
                    }
                }
                Ok(Sequence { patch, base: self.base.clone() }.normalize())
            }
            IndexSetSpec::Evens => self.parity_restrict(true),
            IndexSetSpec::Odds => self.parity_restrict(false),
        }
    }

    fn parity_restrict(&self, keep_evens: bool) -> Result<Sequence<T>> {
        let keep = |n: u64| (n % 2 == 0) == keep_evens;
        let base = match &self.base {
            Base::Zero => Base::Zero,
            Base::Harmonic { .. } => {
                return Err(Error::UnsupportedCombination(
                    "parity restriction of a harmonic base is not representable".into(),
                ))
            }
            Base::Periodic(p) => {
                let l = lcm_usize(p.len(), 2);
                let q: Vec<T> = (0..l)
                    .map(|i| {
                        if keep(i as u64 + 1) {
                            p[i % p.len()].clone()
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                Base::Periodic(q)
            }
            Base::Blocks { blocks, tail } => {
                let total: BigUint = blocks.iter().map(|(_, c)| c.clone()).sum();
                if total > BigUint::from(MAT_CAP) {
                    return Err(Error::UnsupportedCombination(
                        "parity restriction: block extent exceeds the materialization cap"
                            .into(),
                    ));
                }
                let t = total.to_u64().unwrap();
                let mut out: Vec<(T, BigUint)> = Vec::new();
                for n in 1..=t {
                    let v = if keep(n) { self.base.value_at(n) } else { T::zero() };
                    out.push((v, BigUint::one()));
                }
                let tail = match tail {
                    Tail::Zero => Tail::Zero,
                    Tail::Periodic(p) => {
                        let l = lcm_usize(p.len(), 2);
                        let q: Vec<T> = (0..l)
                            .map(|j| {
                                // global index of tail slot j is t + j + 1
                                if keep(t + j as u64 + 1) {
                                    p[j % p.len()].clone()
                                } else {
                                    T::zero()
                                }
                            })
                            .collect();
                        Tail::Periodic(q)
                    }
                };
                Base::Blocks { blocks: out, tail }
            }
        };
        let patch: Vec<(u64, T)> = self
            .patch
            .iter()
            .filter(|(i, _)| keep(*i))
            .map(|(i, v)| (*i, v.clone()))
            .collect();
        Ok(Sequence { patch, base }.normalize())
    }
}

fn periodic_prefix_sum<T: Coeff>(p: &[T], n: &BigUint) -> T {
    let l = BigUint::from(p.len());
    let full = n / &l;
    let rem = biguint_mod_usize(n, p.len());
    let mut period_sum = T::zero();
    for v in p {
        period_sum = period_sum.add(v);
    }
    let mut s = period_sum.mul_nat(&full);
    for v in &p[..rem] {
        s = s.add(v);
    }
    s
}

/// Rearrangement of a harmonic base with finitely many overrides: the head
/// (overrides plus displaced base values down to a certified cut) is sorted
/// exactly, and the untouched part of the base slides up to follow it.
fn rearrange_patched_harmonic<T: Coeff>(
    patch: &[(u64, T)],
    coeff: &T,
    offset: u64,
) -> Result<Sequence<T>> {
    let ac = coeff.abs();
    if patch.is_empty() {
        return Ok(Sequence::harmonic_like(ac, offset));
    }
    let max_i = patch.iter().map(|(i, _)| *i).max().unwrap();

    // cut M: beyond it every base value is certifiably below every
    // (nonzero) override, so the tail is untouched by the sort
    let mut m = max_i;
    let aci = ac.to_interval();
    for (_, v) in patch {
        let av = v.abs();
        if av.is_zero() {
            continue;
        }
        let avi = av.to_interval();
        if !avi.lo.is_positive() {
            return Err(Error::AmbiguousComparison(
                "override value is not certifiably nonzero".into(),
            ));
        }
        // need ac/(n+offset) < av, i.e. n > ac/av - offset
        let q = &aci.hi / &avi.lo;
        let bound = q.floor().to_integer() + BigInt::one() - BigInt::from(offset);
        let bound = bound.max(<BigInt as Zero>::zero()).to_u64().ok_or_else(|| {
            Error::UnsupportedCombination("rearrangement cut does not fit in u64".into())
        })?;
        m = m.max(bound);
    }
    if m > MAT_CAP {
        return Err(Error::UnsupportedCombination(
            "rearrangement head exceeds the materialization cap".into(),
        ));
    }

    // materialize |x| on 1..=M and sort
    let seq = Sequence {
        patch: patch.to_vec(),
        base: Base::Harmonic { coeff: coeff.clone(), offset },
    };
    let mut head: Vec<(T, BigUint)> = Vec::new();
    for n in 1..=m {
        let a = seq.value_at(n).abs();
        if !a.is_zero() {
            head.push((a, BigUint::one()));
        }
    }
    let grouped = sort_desc_grouped(head)?;
    let h: BigUint = grouped.iter().map(|(_, c)| c.clone()).sum();
    let h = h.to_u64().unwrap();

    // certify the junction: smallest head value >= first tail value
    let first_tail = ac.div_nat(&BigUint::from(m + 1 + offset));
    if let Some((last, _)) = grouped.last() {
        match last.try_cmp(&first_tail) {
            Some(Ordering::Less) | None => {
                return Err(Error::AmbiguousComparison(
                    "cannot certify the head/tail junction of the rearrangement".into(),
                ))
            }
            _ => {}
        }
    }

    let mut entries: Vec<(u64, T)> = Vec::new();
    let mut pos = 0u64;
    for (v, c) in grouped {
        let c = c.to_u64().unwrap();
        for _ in 0..c {
            pos += 1;
            entries.push((pos, v.clone()));
        }
    }
    Ok(Sequence {
        patch: entries,
        base: Base::Harmonic { coeff: ac, offset: offset + m - h },
    }
    .normalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rat;

    fn r(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    fn rfin(entries: &[(u64, &str)]) -> Sequence<Rat> {
        Sequence::finite(entries.iter().map(|(i, s)| (*i, r(s))).collect()).unwrap()
    }

    #[test]
    fn value_at_patched_periodic() {
        let x = Sequence::from_parts(
            vec![(2, r("7"))],
            Base::Periodic(vec![r("1"), r("0"), r("-1")]),
        );
        assert_eq!(x.value_at(1), r("1"));
        assert_eq!(x.value_at(2), r("7"));
        assert_eq!(x.value_at(3), r("-1"));
        assert_eq!(x.value_at(4), r("1"));
        assert_eq!(x.value_at(5), r("0"));
    }

    #[test]
    fn normalization_merges_and_reduces() {
        let x = Sequence::blocks(
            vec![(r("2"), 1u32.into()), (r("2"), 2u32.into()), (r("0"), 3u32.into())],
            Tail::Zero,
        )
        .unwrap();
        assert_eq!(
            x.base(),
            &Base::Blocks { blocks: vec![(r("2"), 3u32.into())], tail: Tail::Zero }
        );
        let y = Sequence::periodic(vec![r("1"), r("2"), r("1"), r("2")]).unwrap();
        assert_eq!(y.base(), &Base::Periodic(vec![r("1"), r("2")]));
    }

    #[test]
    fn add_finite_to_harmonic() {
        let h: Sequence<Rat> = Sequence::harmonic();
        let f = rfin(&[(1, "1"), (3, "-1/3")]);
        let s = h.add(&f).unwrap();
        assert_eq!(s.value_at(1), r("2"));
        assert_eq!(s.value_at(2), r("1/2"));
        assert_eq!(s.value_at(3), r("0"));
        assert_eq!(s.value_at(4), r("1/4"));
    }

    #[test]
    fn add_periodic_periodic_lcm() {
        let a = Sequence::periodic(vec![r("1"), r("0")]).unwrap();
        let b = Sequence::periodic(vec![r("0"), r("0"), r("1")]).unwrap();
        let s = a.add(&b).unwrap();
        for n in 1..=12u64 {
            let want = if n % 2 == 1 { r("1") } else { r("0") }
                + if n % 3 == 0 { r("1") } else { r("0") };
            assert_eq!(s.value_at(n), want, "n={n}");
        }
    }

    #[test]
    fn add_blocks_with_tails() {
        let a = Sequence::blocks(
            vec![(r("5"), 2u32.into())],
            Tail::Periodic(vec![r("1"), r("2")]),
        )
        .unwrap();
        let b = Sequence::blocks(vec![(r("1"), 3u32.into())], Tail::Zero).unwrap();
        let s = a.add(&b).unwrap();
        // a = 5 5 1 2 1 2 ... ; b = 1 1 1 0 0 ... ; s = 6 6 2 2 1 2 1 ...
        let want = [r("6"), r("6"), r("2"), r("2"), r("1"), r("2"), r("1")];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(&s.value_at(k as u64 + 1), w, "n={}", k + 1);
        }
    }

    #[test]
    fn rearrangement_finite() {
        let x = rfin(&[(1, "-3"), (2, "1"), (5, "2")]);
        let xs = x.decreasing_rearrangement().unwrap();
        assert!(xs.seq_eq(&rfin(&[(1, "3"), (2, "2"), (3, "1")])));
    }

    #[test]
    fn rearrangement_recurring_value_suppresses_smaller() {
        // x = (3, 1/2, 0, 1, 0, 1, ...) with recurring 1s
        let x = Sequence::from_parts(
            vec![(1, r("3")), (2, r("1/2"))],
            Base::Periodic(vec![r("0"), r("1")]),
        );
        let xs = x.decreasing_rearrangement().unwrap();
        // the 1/2 and the 0s disappear below the constant tail of 1s
        assert_eq!(xs.value_at(1), r("3"));
        for n in 2..=10 {
            assert_eq!(xs.value_at(n), r("1"), "n={n}");
        }
    }

    #[test]
    fn rearrangement_patched_harmonic() {
        // harmonic with x_2 zeroed out and a large value placed at 4
        let x = Sequence::from_parts(
            vec![(2, r("0")), (4, r("10"))],
            Base::Harmonic { coeff: r("1"), offset: 0 },
        );
        let xs = x.decreasing_rearrangement().unwrap();
        assert_eq!(xs.value_at(1), r("10"));
        assert_eq!(xs.value_at(2), r("1"));
        assert_eq!(xs.value_at(3), r("1/3"));
        assert_eq!(xs.value_at(4), r("1/5"));
        assert_eq!(xs.value_at(5), r("1/6"));
    }

    #[test]
    fn closing_up_periodic_with_zeros() {
        // (1, 0, 2, 1, 0, 2, ...) closes up to (1, 2, 1, 2, ...)
        let x = Sequence::periodic(vec![r("1"), r("0"), r("2")]).unwrap();
        let y = x.closing_up().unwrap();
        for n in 1..=10u64 {
            let want = if n % 2 == 1 { r("1") } else { r("2") };
            assert_eq!(y.value_at(n), want, "n={n}");
        }
    }

    #[test]
    fn closing_up_patched_harmonic() {
        // zero out x_1 and x_3 of the harmonic sequence
        let x = Sequence::from_parts(
            vec![(1, r("0")), (3, r("0"))],
            Base::Harmonic { coeff: r("1"), offset: 0 },
        );
        let y = x.closing_up().unwrap();
        assert_eq!(y.value_at(1), r("1/2"));
        assert_eq!(y.value_at(2), r("1/4"));
        assert_eq!(y.value_at(3), r("1/5"));
        assert_eq!(y.value_at(4), r("1/6"));
    }

    #[test]
    fn shift_into_tail() {
        let x = Sequence::blocks(
            vec![(r("9"), 2u32.into())],
            Tail::Periodic(vec![r("1"), r("2"), r("3")]),
        )
        .unwrap();
        let y = x.apply_map(&InjectionSpec::Shift(4)).unwrap();
        // x = 9 9 1 2 3 1 2 3 ... ; y_n = x_{n+4} = 3 1 2 3 ...
        assert_eq!(y.value_at(1), r("3"));
        assert_eq!(y.value_at(2), r("1"));
        assert_eq!(y.value_at(3), r("2"));
        assert_eq!(y.value_at(4), r("3"));
    }

    #[test]
    fn dilation_and_parity_are_inverse() {
        let x = Sequence::from_parts(
            vec![(3, r("5"))],
            Base::Periodic(vec![r("1"), r("2"), r("3"), r("4"), r("7")]),
        );
        let d = x.apply_map(&InjectionSpec::Dilation2).unwrap();
        for n in 1..=20u64 {
            assert_eq!(d.value_at(n), x.value_at(n.div_ceil(2)), "n={n}");
        }
        let back = d.apply_map(&InjectionSpec::EvensToAll).unwrap();
        assert!(back.seq_eq(&x));
        let back_odd = d.apply_map(&InjectionSpec::OddsToAll).unwrap();
        assert!(back_odd.seq_eq(&x));
    }

    #[test]
    fn parity_subsequence_of_blocks() {
        let x = Sequence::blocks(
            vec![(r("4"), 3u32.into()), (r("2"), 2u32.into())],
            Tail::Periodic(vec![r("1"), r("0")]),
        )
        .unwrap();
        // x = 4 4 4 2 2 1 0 1 0 ...
        let e = x.apply_map(&InjectionSpec::EvensToAll).unwrap();
        // evens: x2 x4 x6 x8 ... = 4 2 1 1 1 ...
        assert_eq!(e.value_at(1), r("4"));
        assert_eq!(e.value_at(2), r("2"));
        for n in 3..=8 {
            assert_eq!(e.value_at(n), r("1"), "n={n}");
        }
        let o = x.apply_map(&InjectionSpec::OddsToAll).unwrap();
        // odds: x1 x3 x5 x7 x9 ... = 4 4 2 0 0 ...
        assert_eq!(o.value_at(1), r("4"));
        assert_eq!(o.value_at(2), r("4"));
        assert_eq!(o.value_at(3), r("2"));
        for n in 4..=8 {
            assert_eq!(o.value_at(n), r("0"), "n={n}");
        }
    }

    #[test]
    fn parity_subsequence_of_harmonic() {
        let h: Sequence<Rat> = Sequence::harmonic();
        let e = h.apply_map(&InjectionSpec::EvensToAll).unwrap();
        for n in 1..=10u64 {
            assert_eq!(e.value_at(n), r("1") / Rat::from_integer((2 * n).into()));
        }
        assert!(h.apply_map(&InjectionSpec::OddsToAll).is_err());
        let shifted = h.apply_map(&InjectionSpec::Shift(1)).unwrap();
        let o = shifted.apply_map(&InjectionSpec::OddsToAll).unwrap();
        // shifted_n = 1/(n+1); odds: 1/(2n)
        for n in 1..=10u64 {
            assert_eq!(o.value_at(n), r("1") / Rat::from_integer((2 * n).into()));
        }
    }

    #[test]
    fn interleave_round_trip() {
        let x = Sequence::from_parts(vec![(2, r("9"))], Base::Periodic(vec![r("1"), r("2")]));
        let y = x.apply_map(&InjectionSpec::InterleaveWithZeros).unwrap();
        for n in 1..=16u64 {
            let want = if n % 2 == 0 { x.value_at(n / 2) } else { r("0") };
            assert_eq!(y.value_at(n), want, "n={n}");
        }
        let back = y.apply_map(&InjectionSpec::EvensToAll).unwrap();
        assert!(back.seq_eq(&x));
    }

    #[test]
    fn restriction_parities_partition() {
        let x = Sequence::from_parts(
            vec![(5, r("-2"))],
            Base::Periodic(vec![r("1"), r("3"), r("0")]),
        );
        let e = x.restrict(&IndexSetSpec::Evens).unwrap();
        let o = x.restrict(&IndexSetSpec::Odds).unwrap();
        let s = e.add(&o).unwrap();
        assert!(s.seq_eq(&x));
        for n in 1..=12u64 {
            if n % 2 == 0 {
                assert_eq!(e.value_at(n), x.value_at(n));
                assert_eq!(o.value_at(n), r("0"));
            } else {
                assert_eq!(o.value_at(n), x.value_at(n));
                assert_eq!(e.value_at(n), r("0"));
            }
        }
    }

    #[test]
    fn prefix_sum_symbolic_matches_direct() {
        let x = Sequence::from_parts(
            vec![(4, r("10"))],
            Base::Blocks {
                blocks: vec![(r("2"), 3u32.into())],
                tail: Tail::Periodic(vec![r("1"), r("-1"), r("0")]),
            },
        );
        for n in 1..=20u64 {
            let direct: Rat = x.eval_prefix(n).into_iter().sum();
            assert_eq!(x.prefix_sum_at(&BigUint::from(n)).unwrap(), direct, "n={n}");
        }
    }

    #[test]
    fn finite_permutation_preserves_rearrangement() {
        let x = rfin(&[(1, "5"), (2, "-1"), (4, "2")]);
        let y = x
            .apply_map(&InjectionSpec::FinitePermutation(vec![4, 1, 3, 2]))
            .unwrap();
        assert!(y
            .decreasing_rearrangement()
            .unwrap()
            .seq_eq(&x.decreasing_rearrangement().unwrap()));
        assert_eq!(y.value_at(1), r("2"));
        assert_eq!(y.value_at(2), r("5"));
        assert_eq!(y.value_at(4), r("-1"));
    }

    #[test]
    fn support_total_counts_patch_interactions() {
        let x = Sequence::from_parts(
            vec![(2, r("0")), (10, r("4"))],
            Base::Blocks { blocks: vec![(r("1"), 3u32.into())], tail: Tail::Zero },
        );
        assert_eq!(x.support_total(), Some(BigUint::from(3u32)));
        assert_eq!(Sequence::<Rat>::harmonic().support_total(), None);
    }

    #[test]
    fn interval_coefficients_work_pointwise() {
        let a: Sequence<RatInterval> =
            Sequence::periodic(vec![RatInterval::new(r("1"), r("11/10"))]).unwrap();
        let b = Sequence::finite(vec![(1, RatInterval::point(r("2")))]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.value_at(1), RatInterval::new(r("3"), r("31/10")));
        assert_eq!(s.value_at(2), RatInterval::new(r("1"), r("11/10")));
    }
}
