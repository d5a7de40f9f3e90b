//! Banach-limit estimators with certified intervals, and the approximate
//! symmetric functional gamma built from them.

use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::fixed::FxCtx;
use crate::scalar::{Prec, Rat, RatInterval};
use crate::seq::{Base, Coeff, Sequence, Tail};
use crate::spaces::{ln_nat_cached, PsiSpec};

/// Which estimator to run.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Average of x over the window (offset, offset + window].
    Cesaro { window: u64, offset: u64 },
    /// depth-fold Cesaro averaging over a materialized prefix.
    IteratedCesaro { depth: u32, window: u64 },
    /// Average of Cesaro estimates of D2^k x for k = 0..=stages.
    DilationAveraged { stages: u32, window: u64 },
}

impl EstimatorSpec {
    pub fn window(&self) -> u64 {
        match self {
            EstimatorSpec::Cesaro { window, .. }
            | EstimatorSpec::IteratedCesaro { window, .. }
            | EstimatorSpec::DilationAveraged { window, .. } => *window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window() == 0 {
            return Err(Error::InvalidInput("window must be at least 1".into()));
        }
        if let EstimatorSpec::IteratedCesaro { depth, .. } = self {
            if *depth == 0 {
                return Err(Error::InvalidInput("depth must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        match self {
            EstimatorSpec::Cesaro { window, offset } => format!("cesaro(W={window},m={offset})"),
            EstimatorSpec::IteratedCesaro { depth, window } => {
                format!("iterated-cesaro(d={depth},W={window})")
            }
            EstimatorSpec::DilationAveraged { stages, window } => {
                format!("dilation-averaged(n={stages},W={window})")
            }
        }
    }
}

/// Output of an estimator run.
#[derive(Debug, Clone)]
pub struct LimitEstimate {
    /// Certified interval for the estimated limit.
    pub value: RatInterval,
    pub exact: bool,
    pub method: String,
    /// The empirical windowed average (metadata; may differ from `value`
    /// when the representation forces the limit exactly).
    pub window_average: Option<RatInterval>,
    /// |est(D2 x) - est(x)| style residual where the method defines one.
    pub residual: Option<Rat>,
    /// Analytic bound the residual must respect.
    pub residual_bound: Option<Rat>,
}

// -- harmonic numbers ---------------------------------------------------------

const H_EXACT_MAX: u64 = 1024;

static H_TABLE: Lazy<Mutex<Vec<Rat>>> =
    Lazy::new(|| Mutex::new(vec![<Rat as Zero>::zero()]));

fn h_exact(n: u64) -> Rat {
    debug_assert!(n <= H_EXACT_MAX);
    let mut t = H_TABLE.lock().unwrap();
    while (t.len() as u64) <= n {
        let k = t.len() as u64;
        let next = t.last().unwrap() + Rat::new(BigInt::one(), BigInt::from(k));
        t.push(next);
    }
    t[n as usize].clone()
}

/// Certified interval for the harmonic number H_n; exact for n <= 1024.
pub fn harmonic_number(n: &BigUint, prec: Prec) -> Result<RatInterval> {
    if let Some(k) = n.to_u64().filter(|&k| k <= H_EXACT_MAX) {
        return Ok(RatInterval::point(h_exact(k)));
    }
    // H_n = H_1024 + sum_{j=1025}^{n} 1/j, and 1/j in [ln((j+1)/j), ln(j/(j-1))]
    let head = h_exact(H_EXACT_MAX);
    let ln_hi = ln_nat_cached(n, prec)?;
    let ln_hip = ln_nat_cached(&(n + BigUint::one()), prec)?;
    let ln_lo_den = ln_nat_cached(&BigUint::from(H_EXACT_MAX + 1), prec)?;
    let ln_hi_den = ln_nat_cached(&BigUint::from(H_EXACT_MAX), prec)?;
    let lo = &head + (&ln_hip.lo - &ln_lo_den.hi);
    let hi = &head + (&ln_hi.hi - &ln_hi_den.lo);
    Ok(RatInterval::new(lo, hi))
}

// -- certified prefix sums ----------------------------------------------------

/// Prefix sum of x over [1, n] as a certified interval; handles harmonic
/// bases through harmonic-number brackets.
pub fn prefix_interval<T: Coeff>(x: &Sequence<T>, n: &BigUint, prec: Prec) -> Result<RatInterval> {
    match x.prefix_sum_at(n) {
        Ok(s) => Ok(s.to_interval()),
        Err(Error::UnsupportedCombination(_)) => {
            let (coeff, offset) = match x.base() {
                Base::Harmonic { coeff, offset } => (coeff.to_interval(), *offset),
                _ => unreachable!("only harmonic bases lack symbolic prefix sums"),
            };
            // sum_{j<=n} c/(j+o) = c (H_{n+o} - H_o)
            let h_no = harmonic_number(&(n + BigUint::from(offset)), prec)?;
            let h_o = harmonic_number(&BigUint::from(offset), prec)?;
            let mut s = coeff.mul(&h_no.sub(&h_o));
            for (i, v) in x.patch() {
                if BigUint::from(*i) > *n {
                    break;
                }
                let displaced =
                    coeff.scale(&Rat::new(BigInt::one(), BigInt::from(i + offset)));
                s = s.add(&v.to_interval()).sub(&displaced);
            }
            Ok(s)
        }
        Err(e) => Err(e),
    }
}

/// Average of x over the window (offset, offset + window].
pub fn window_average<T: Coeff>(
    x: &Sequence<T>,
    offset: u64,
    window: u64,
    prec: Prec,
) -> Result<RatInterval> {
    let hi = prefix_interval(x, &BigUint::from(offset + window), prec)?;
    let lo = prefix_interval(x, &BigUint::from(offset), prec)?;
    Ok(hi.sub(&lo).scale(&Rat::new(BigInt::one(), BigInt::from(window))))
}

// -- eventual class -----------------------------------------------------------

/// The Cesaro (almost-convergence) value of x: the mean of its eventual
/// class. Every representable sequence has one.
pub fn almost_convergent_value<T: Coeff>(x: &Sequence<T>) -> RatInterval {
    fn mean<T: Coeff>(p: &[T]) -> RatInterval {
        let mut s = T::zero();
        for v in p {
            s = s.add(v);
        }
        s.div_nat(&BigUint::from(p.len())).to_interval()
    }
    match x.base() {
        Base::Zero | Base::Harmonic { .. } => RatInterval::zero(),
        Base::Periodic(p) => mean(p),
        Base::Blocks { tail, .. } => match tail {
            Tail::Zero => RatInterval::zero(),
            Tail::Periodic(p) => mean(p),
        },
    }
}

/// The plain limit of x, when x converges (eventual class is constant).
pub fn limit_value<T: Coeff>(x: &Sequence<T>) -> Option<RatInterval> {
    fn const_val<T: Coeff>(p: &[T]) -> Option<RatInterval> {
        let first = &p[0];
        for v in &p[1..] {
            if first.try_cmp(v) != Some(std::cmp::Ordering::Equal) {
                return None;
            }
        }
        Some(first.to_interval())
    }
    match x.base() {
        Base::Zero | Base::Harmonic { .. } => Some(RatInterval::zero()),
        Base::Periodic(p) => const_val(p),
        Base::Blocks { tail, .. } => match tail {
            Tail::Zero => Some(RatInterval::zero()),
            Tail::Periodic(p) => const_val(p),
        },
    }
}

// -- estimators ---------------------------------------------------------------

const MATERIALIZE_CAP: u64 = 1 << 17;

/// Average over [1, W] of D2^k x, computed symbolically:
/// sum_{j<=W} x_{ceil(j/2^k)} = 2^k * P(floor(W/2^k)) + (W mod 2^k) * x_{q+1}.
fn dilated_window_average<T: Coeff>(
    x: &Sequence<T>,
    k: u32,
    window: u64,
    prec: Prec,
) -> Result<RatInterval> {
    if k >= 64 {
        return Err(Error::InvalidInput("dilation stage too deep".into()));
    }
    let step = 1u64 << k;
    let q = window / step;
    let r = window % step;
    let mut s = prefix_interval(x, &BigUint::from(q), prec)?
        .scale(&Rat::from_integer(BigInt::from(step)));
    if r > 0 {
        s = s.add(&x.value_at(q + 1).to_interval().scale(&Rat::from_integer(BigInt::from(r))));
    }
    Ok(s.scale(&Rat::new(BigInt::one(), BigInt::from(window))))
}

fn empirical_average<T: Coeff>(
    est: &EstimatorSpec,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<RatInterval> {
    match est {
        EstimatorSpec::Cesaro { window, offset } => window_average(x, *offset, *window, prec),
        EstimatorSpec::DilationAveraged { stages, window } => {
            let mut s = RatInterval::zero();
            for k in 0..=*stages {
                s = s.add(&dilated_window_average(x, k, *window, prec)?);
            }
            Ok(s.scale(&Rat::new(BigInt::one(), BigInt::from(*stages as u64 + 1))))
        }
        EstimatorSpec::IteratedCesaro { depth, window } => {
            let w = *window;
            if w > MATERIALIZE_CAP {
                return Err(Error::InvalidInput(
                    "iterated Cesaro window exceeds the materialization cap".into(),
                ));
            }
            // depth-fold averaging in directed fixed point
            let sup = x.sup_abs();
            let mag = sup.hi.clone().max(-sup.lo.clone()).max(<Rat as One>::one());
            let ctx = FxCtx::for_magnitude(&mag)?;
            let mut cur: Vec<crate::fixed::Fx> = (1..=w)
                .map(|n| ctx.from_interval(&x.value_at(n).to_interval()))
                .collect::<Result<Vec<_>>>()?;
            for _ in 0..*depth {
                let mut run = ctx.zero();
                let mut next = Vec::with_capacity(w as usize);
                for (j, v) in cur.iter().enumerate() {
                    run = ctx.add(run, *v);
                    next.push(ctx.div_nat(run, j as u64 + 1));
                }
                cur = next;
            }
            Ok(ctx.to_interval(*cur.last().unwrap()))
        }
    }
}

/// Run an estimator. The certified value is the almost-convergence value
/// forced by the representation (every representable sequence is almost
/// convergent); the empirical windowed average is reported alongside.
pub fn estimate_limit<T: Coeff>(
    est: &EstimatorSpec,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<LimitEstimate> {
    est.validate()?;
    let value = almost_convergent_value(x);
    let avg = empirical_average(est, x, prec)?;
    Ok(LimitEstimate {
        exact: value.is_point(),
        value,
        method: est.id(),
        window_average: Some(avg),
        residual: None,
        residual_bound: None,
    })
}

/// Dilation-averaged estimate with its residual |est_{n+1} - est_0|/(n+1)
/// against the analytic bound 2 sup|x| / (n+1).
pub fn dilation_averaged_estimate<T: Coeff>(
    stages: u32,
    window: u64,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<LimitEstimate> {
    let est = EstimatorSpec::DilationAveraged { stages, window };
    est.validate()?;
    let value = almost_convergent_value(x);
    let avg = empirical_average(&est, x, prec)?;
    let e_top = dilated_window_average(x, stages + 1, window, prec)?;
    let e_bot = dilated_window_average(x, 0, window, prec)?;
    let n1 = Rat::from_integer(BigInt::from(stages as u64 + 1));
    let residual = e_top.sub(&e_bot).abs().hi / &n1;
    let sup = x.sup_abs();
    let bound = sup.hi.clone().max(-sup.lo.clone()) * Rat::new(BigInt::from(2), BigInt::one()) / n1;
    Ok(LimitEstimate {
        exact: value.is_point(),
        value,
        method: est.id(),
        window_average: Some(avg),
        residual: Some(residual),
        residual_bound: Some(bound),
    })
}

// -- axiom residuals ----------------------------------------------------------

/// A convergent multiplier sequence (a_n) for the product-rule residual.
#[derive(Debug, Clone)]
pub enum MultiplierSpec {
    /// A representable convergent sequence.
    Sequence(Sequence<Rat>),
    /// a_n = constant + coeff/(n + offset); covers a_n = 1 + 1/n.
    ConstantPlusHarmonic { constant: Rat, coeff: Rat, offset: u64 },
}

impl MultiplierSpec {
    pub fn value_at(&self, n: u64) -> Result<Rat> {
        match self {
            MultiplierSpec::Sequence(s) => Ok(s.value_at(n)),
            MultiplierSpec::ConstantPlusHarmonic { constant, coeff, offset } => {
                Ok(constant + coeff * Rat::new(BigInt::one(), BigInt::from(n + offset)))
            }
        }
    }

    pub fn limit(&self) -> Result<Rat> {
        match self {
            MultiplierSpec::Sequence(s) => {
                let l = limit_value(s)
                    .ok_or_else(|| Error::InvalidInput("multiplier must converge".into()))?;
                Ok(l.lo)
            }
            MultiplierSpec::ConstantPlusHarmonic { constant, .. } => Ok(constant.clone()),
        }
    }

    pub fn sup_abs(&self) -> Rat {
        match self {
            MultiplierSpec::Sequence(s) => {
                let v = s.sup_abs();
                v.hi.clone().max(-v.lo.clone())
            }
            MultiplierSpec::ConstantPlusHarmonic { constant, coeff, offset } => {
                Signed::abs(constant) + Signed::abs(coeff) * Rat::new(BigInt::one(), BigInt::from(1 + offset))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct AxiomResidualReport {
    pub method: String,
    pub shift_residual: Rat,
    /// Some(true/false) when nonnegativity of x is decidable.
    pub positivity_ok: Option<bool>,
    /// max(0, |est(x)| - sup|x|), certified upper bound.
    pub norm_bound_excess: Rat,
    /// |est(x) - lim x| when x converges.
    pub convergent_agreement: Option<Rat>,
    /// |est(a x) - a est(x)| for the supplied multiplier.
    pub product_rule_residual: Option<Rat>,
}

fn decidably_nonneg<T: Coeff>(x: &Sequence<T>) -> Option<bool> {
    let ge0 = |v: &T| -> Option<bool> {
        match v.try_cmp(&T::zero()) {
            Some(std::cmp::Ordering::Less) => Some(false),
            Some(_) => Some(true),
            None => None,
        }
    };
    let mut all = true;
    for (_, v) in x.patch() {
        all &= ge0(v)?;
    }
    match x.base() {
        Base::Zero => {}
        Base::Periodic(p) => {
            for v in p {
                all &= ge0(v)?;
            }
        }
        Base::Harmonic { coeff, .. } => all &= ge0(coeff)?,
        Base::Blocks { blocks, tail } => {
            for (v, _) in blocks {
                all &= ge0(v)?;
            }
            if let Tail::Periodic(p) = tail {
                for v in p {
                    all &= ge0(v)?;
                }
            }
        }
    }
    Some(all)
}

pub fn axiom_residuals<T: Coeff>(
    est: &EstimatorSpec,
    x: &Sequence<T>,
    multiplier: Option<&MultiplierSpec>,
    prec: Prec,
) -> Result<AxiomResidualReport> {
    est.validate()?;
    let base = estimate_limit(est, x, prec)?;
    let avg = base.window_average.clone().unwrap();

    // shift residual between windows (m, m+W] and (m+1, m+W+1]
    let (window, offset) = match est {
        EstimatorSpec::Cesaro { window, offset } => (*window, *offset),
        _ => (est.window(), 0),
    };
    let shifted = window_average(x, offset + 1, window, prec)?;
    let shift_residual = shifted.sub(&avg).abs().hi;

    let positivity_ok = decidably_nonneg(x).map(|nn| !nn || !base.value.lo.is_negative());

    let sup = x.sup_abs();
    let sup_hi = sup.hi.clone().max(-sup.lo.clone());
    let est_abs = base.value.abs().hi;
    let norm_bound_excess = (est_abs - sup_hi).max(<Rat as Zero>::zero());

    let convergent_agreement =
        limit_value(x).map(|l| base.value.sub(&l).abs().hi);

    let product_rule_residual = match multiplier {
        None => None,
        Some(m) => Some(product_rule_residual(est, x, m, &base.value, prec)?),
    };

    Ok(AxiomResidualReport {
        method: est.id(),
        shift_residual,
        positivity_ok,
        norm_bound_excess,
        convergent_agreement,
        product_rule_residual,
    })
}

fn product_rule_residual<T: Coeff>(
    est: &EstimatorSpec,
    x: &Sequence<T>,
    m: &MultiplierSpec,
    est_x: &RatInterval,
    prec: Prec,
) -> Result<Rat> {
    let w = est.window();
    if w > MATERIALIZE_CAP {
        return Err(Error::InvalidInput(
            "product-rule window exceeds the materialization cap".into(),
        ));
    }
    let _ = prec;
    let sup = x.sup_abs();
    let mag =
        (sup.hi.clone().max(-sup.lo.clone()) + <Rat as One>::one()) * (m.sup_abs() + <Rat as One>::one());
    let ctx = FxCtx::for_magnitude(&mag)?;
    let mut run = ctx.zero();
    for n in 1..=w {
        let a = m.value_at(n)?;
        let v = x.value_at(n).to_interval().scale(&a);
        run = ctx.add(run, ctx.from_interval(&v)?);
    }
    let est_ax = ctx.to_interval(ctx.div_nat(run, w));
    let target = est_x.scale(&m.limit()?);
    Ok(est_ax.sub(&target).abs().hi)
}

// -- the symmetric functional gamma -------------------------------------------

/// (s_n(x*) / Psi(n)) for n = 1..N, as certified intervals.
pub fn ratio_sequence<T: Coeff>(
    psi: &PsiSpec,
    x: &Sequence<T>,
    n_max: u64,
    prec: Prec,
) -> Result<Vec<RatInterval>> {
    psi.validate()?;
    let r = x.decreasing_rearrangement()?;
    let mut out = Vec::with_capacity(n_max as usize);
    let mut s = RatInterval::zero();
    for n in 1..=n_max {
        s = s.add(&r.value_at(n).to_interval());
        let p = psi.eval(&BigUint::from(n), prec)?;
        out.push(s.div(&p)?);
    }
    Ok(out)
}

/// phi(y) for nonnegative y: a certified interval containing every Banach
/// limit of the ratio sequence (s_n(y*)/Psi(n))_n. The interval comes from
/// analytic inf/sup bounds over n >= n0 = 2^k.
fn phi<T: Coeff>(psi: &PsiSpec, y: &Sequence<T>, window: u64, prec: Prec) -> Result<RatInterval> {
    let r = y.decreasing_rearrangement()?;
    if r.is_zero_seq() {
        return Ok(RatInterval::zero());
    }
    match r.base() {
        Base::Zero => Ok(RatInterval::zero()),
        Base::Periodic(p) if p.iter().any(|v| !v.is_zero()) => Err(Error::NonMember(
            "a nonzero value recurs infinitely often; s_n grows linearly".into(),
        )),
        Base::Blocks { tail: Tail::Periodic(p), .. } if p.iter().any(|v| !v.is_zero()) => {
            Err(Error::NonMember(
                "a nonzero value recurs infinitely often; s_n grows linearly".into(),
            ))
        }
        Base::Periodic(_) | Base::Blocks { .. } => Ok(RatInterval::zero()),
        Base::Harmonic { coeff, offset } => {
            if !psi.is_log() {
                return Err(Error::UnsupportedCombination(
                    "table Psi cannot be evaluated at the asymptotic scale".into(),
                ));
            }
            let c = coeff.to_interval().abs();
            let o = *offset;
            let h = r.patch().last().map(|(i, _)| *i).unwrap_or(0);
            let mut head = T::zero();
            for n in 1..=h {
                head = head.add(&r.value_at(n));
            }
            // s_n = head + c (H_{n+o} - H_{h+o}) for n > h
            let h_ho = harmonic_number(&BigUint::from(h + o), prec)?;
            let k_term = head.to_interval().sub(&c.mul(&h_ho));

            let ln_b = match psi {
                PsiSpec::LogBase(crate::spaces::PsiBase::E) => RatInterval::one(),
                PsiSpec::LogBase(crate::spaces::PsiBase::Rational(b)) => {
                    crate::scalar::ln_rat(b, prec)?
                }
                PsiSpec::Table(_) => unreachable!(),
            };

            let k = 64u64.max(window / 500);
            let n0: BigUint = BigUint::one() << k;
            let ln_n0 = ln_nat_cached(&(&n0 + BigUint::one()), prec)?;
            let ln_1o = ln_nat_cached(&BigUint::from(1 + o), prec)?;

            let asym = c.mul(&ln_b);
            // lower envelope l(n0) = c ln b + K ln b / ln(n0+1)
            let l = asym.add(&k_term.mul(&ln_b).div(&ln_n0)?);
            // upper envelope u(n0) = c ln b + (K + c + c ln(1+o)) ln b / ln(n0+1)
            let top = k_term.add(&c).add(&c.mul(&ln_1o));
            let u = asym.add(&top.mul(&ln_b).div(&ln_n0)?);
            let lo = l.lo.min(asym.lo.clone());
            let hi = u.hi.max(asym.hi.clone());
            Ok(RatInterval::new(lo, hi))
        }
    }
}

/// gamma(x) = phi(x+) - phi(x-), certified.
pub fn symmetric_functional<T: Coeff>(
    psi: &PsiSpec,
    est: &EstimatorSpec,
    x: &Sequence<T>,
    prec: Prec,
) -> Result<LimitEstimate> {
    psi.validate()?;
    est.validate()?;
    let w = est.window();
    let p = phi(psi, &x.pos_part(), w, prec)?;
    let n = phi(psi, &x.neg_part(), w, prec)?;
    let value = p.sub(&n);
    Ok(LimitEstimate {
        exact: value.is_point(),
        value,
        method: format!("gamma[{}; {}]", psi.id(), est.id()),
        window_average: None,
        residual: None,
        residual_bound: None,
    })
}

// -- sandwich -----------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub n_checked: u64,
    pub violations: u64,
    /// max over n of (s_n(x) + s_n(y)) - s_n(x+y), exact for rational input.
    pub max_slack_left: Rat,
    /// max over n of s_{2n}(x+y) - (s_n(x) + s_n(y)).
    pub max_slack_right: Rat,
    pub holds: bool,
}

/// Verifies s_n(x+y) <= s_n(x) + s_n(y) <= s_{2n}(x+y) for all n <= N.
pub fn sandwich_check<T: Coeff>(
    x: &Sequence<T>,
    y: &Sequence<T>,
    n_max: u64,
) -> Result<SandwichReport> {
    for z in [x, y] {
        if decidably_nonneg(z) != Some(true) {
            return Err(Error::InvalidInput("sandwich requires nonnegative inputs".into()));
        }
    }
    let sum = x.add(y)?;
    let rx = x.decreasing_rearrangement()?;
    let ry = y.decreasing_rearrangement()?;
    let rs = sum.decreasing_rearrangement()?;

    // once n covers every support, all four prefix sums are constant, so
    // checking past the largest support adds nothing
    let support = |s: &Sequence<T>| -> Option<u64> {
        s.support_total().and_then(|t| num_traits::ToPrimitive::to_u64(&t))
    };
    let n_eff = match (support(&rx), support(&ry), support(&rs)) {
        (Some(a), Some(b), Some(c)) => n_max.min(a.max(b).max(c).max(1)),
        _ => n_max,
    };

    // running prefix sums: s_n(x), s_n(y) to N and s_n(x+y) to 2N
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut ss: Vec<T> = Vec::with_capacity(2 * n_eff as usize + 1);
    let mut acc = T::zero();
    for n in 1..=2 * n_eff {
        acc = acc.add(&rs.value_at(n));
        ss.push(acc.clone());
    }

    let mut violations = 0u64;
    let mut left = T::zero();
    let mut right = T::zero();
    for n in 1..=n_eff {
        sx = sx.add(&rx.value_at(n));
        sy = sy.add(&ry.value_at(n));
        let both = sx.add(&sy);
        let s_n = &ss[n as usize - 1];
        let s_2n = &ss[2 * n as usize - 1];
        let dl = both.sub(s_n);
        let dr = s_2n.sub(&both);
        let ok_l = !matches!(
            dl.try_cmp(&T::zero()),
            Some(std::cmp::Ordering::Less) | None
        );
        let ok_r = !matches!(
            dr.try_cmp(&T::zero()),
            Some(std::cmp::Ordering::Less) | None
        );
        if !(ok_l && ok_r) {
            violations += 1;
        }
        if dl.try_cmp(&left) == Some(std::cmp::Ordering::Greater) {
            left = dl;
        }
        if dr.try_cmp(&right) == Some(std::cmp::Ordering::Greater) {
            right = dr;
        }
    }
    Ok(SandwichReport {
        n_checked: n_max,
        violations,
        max_slack_left: left.to_interval().hi,
        max_slack_right: right.to_interval().hi,
        holds: violations == 0,
    })
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
    fn estimate_periodic_half() {
        let x = Sequence::periodic(vec![r("1"), r("0")]).unwrap();
        let est = EstimatorSpec::Cesaro { window: 1000, offset: 0 };
        let e = estimate_limit(&est, &x, p50()).unwrap();
        assert_eq!(e.value, RatInterval::point(r("1/2")));
        assert!(e.exact);
        assert_eq!(e.window_average.unwrap(), RatInterval::point(r("1/2")));
    }

    #[test]
    fn estimate_constant() {
        let x = Sequence::constant(r("3"));
        let est = EstimatorSpec::Cesaro { window: 64, offset: 5 };
        let e = estimate_limit(&est, &x, p50()).unwrap();
        assert_eq!(e.value, RatInterval::point(r("3")));
    }

    #[test]
    fn harmonic_window_average_brackets_zero_limit() {
        let x: Sequence<Rat> = Sequence::harmonic();
        let avg = window_average(&x, 0, 10000, p50()).unwrap();
        // (H_10000)/10000 ~ 0.000978
        assert!(avg.lo > r("0.0009") && avg.hi < r("0.0011"), "avg={avg}");
    }

    #[test]
    fn dilation_residual_bound() {
        let x = Sequence::periodic(vec![r("1"), r("0")]).unwrap();
        for stages in 0..=20u32 {
            let e = dilation_averaged_estimate(stages, 4096, &x, p50()).unwrap();
            let res = e.residual.unwrap();
            let bound = e.residual_bound.unwrap();
            assert!(res <= bound, "stages={stages}: {res} > {bound}");
        }
        // constant sequences are fixed points of D2: residual 0
        let c = Sequence::constant(r("7"));
        let e = dilation_averaged_estimate(3, 256, &c, p50()).unwrap();
        assert_eq!(e.residual.unwrap(), <Rat as Zero>::zero());
        assert_eq!(e.value, RatInterval::point(r("7")));
    }

    #[test]
    fn axiom_residuals_product_rule() {
        let x = Sequence::periodic(vec![r("1"), r("0")]).unwrap();
        let est = EstimatorSpec::Cesaro { window: 100_000, offset: 0 };
        let a = MultiplierSpec::ConstantPlusHarmonic {
            constant: r("1"),
            coeff: r("1"),
            offset: 0,
        };
        let rep = axiom_residuals(&est, &x, Some(&a), p50()).unwrap();
        assert!(rep.product_rule_residual.clone().unwrap() < r("1e-4"), "{rep:?}");
        assert_eq!(rep.positivity_ok, Some(true));
        assert_eq!(rep.norm_bound_excess, <Rat as Zero>::zero());
        // shift residual of a window average is at most 2 sup / W
        assert!(rep.shift_residual <= r("2e-5"));
    }

    #[test]
    fn ratio_sequence_examples() {
        let psi2 = PsiSpec::log2();
        let e1: Sequence<Rat> = Sequence::unit(1);
        let rs = ratio_sequence(&psi2, &e1, 3, p50()).unwrap();
        assert_eq!(rs[0], RatInterval::point(r("1")));
        assert_eq!(rs[2], RatInterval::point(r("1/2")));
        // middle entry: 1/log2(3) = 0.63092...
        assert!(rs[1].lo > r("0.6309") && rs[1].hi < r("0.631"));

        let psi_e = PsiSpec::log_e();
        let h: Sequence<Rat> = Sequence::harmonic();
        let rs = ratio_sequence(&psi_e, &h, 2, p50()).unwrap();
        // 1/ln2 = 1.44269..., 1.5/ln3 = 1.36534...
        assert!(rs[0].lo > r("1.4426") && rs[0].hi < r("1.4428"));
        assert!(rs[1].lo > r("1.3653") && rs[1].hi < r("1.3654"));
    }

    #[test]
    fn gamma_vanishes_on_units_and_brackets_one_on_harmonic() {
        let psi = PsiSpec::log_e();
        let est = EstimatorSpec::Cesaro { window: 1_000_000, offset: 0 };
        for n in [1u64, 2, 17, 100] {
            let e: Sequence<Rat> = Sequence::unit(n);
            let g = symmetric_functional(&psi, &est, &e, p50()).unwrap();
            assert_eq!(g.value, RatInterval::zero());
            assert!(g.exact);
        }
        let h: Sequence<Rat> = Sequence::harmonic();
        let g = symmetric_functional(&psi, &est, &h, p50()).unwrap();
        assert!(g.value.contains_rat(&r("1")), "{}", g.value);
        assert!(g.value.width() < r("1e-3"), "width {}", g.value.width());
        let neg = h.negate();
        let g = symmetric_functional(&psi, &est, &neg, p50()).unwrap();
        assert!(g.value.contains_rat(&r("-1")));
    }

    #[test]
    fn gamma_rejects_linfty_constants() {
        let psi = PsiSpec::log_e();
        let est = EstimatorSpec::Cesaro { window: 1000, offset: 0 };
        let ones = Sequence::constant(r("1"));
        match symmetric_functional(&psi, &est, &ones, p50()) {
            Err(Error::NonMember(_)) => {}
            other => panic!("expected NonMember, got {other:?}"),
        }
    }

    #[test]
    fn sandwich_example() {
        let x = Sequence::finite(vec![(1, r("3")), (2, r("1"))]).unwrap();
        let y = Sequence::finite(vec![(1, r("2")), (2, r("2"))]).unwrap();
        let rep = sandwich_check(&x, &y, 2).unwrap();
        assert!(rep.holds);
        // n=1: 5 <= 5 <= 8 (left slack 0); n=2: 8 <= 8 <= 8
        assert_eq!(rep.max_slack_left, <Rat as Zero>::zero());
        assert_eq!(rep.max_slack_right, r("3"));
    }

    #[test]
    fn iterated_cesaro_periodic() {
        let x = Sequence::periodic(vec![r("1"), r("0")]).unwrap();
        let est = EstimatorSpec::IteratedCesaro { depth: 2, window: 2048 };
        let e = estimate_limit(&est, &x, p50()).unwrap();
        let avg = e.window_average.unwrap();
        assert!(avg.contains_rat(&r("1/2")) || avg.sub(&RatInterval::point(r("1/2"))).abs().hi < r("0.01"));
    }
}
