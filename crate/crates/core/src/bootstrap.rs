//! Sampled verification of quadratic-inequality bootstrap arguments.
//!
//! Continuity of `X` cannot be observed from samples, so each check verifies
//! the hypothesis pointwise and then the conclusion pointwise. A conclusion
//! that fails after every hypothesis passed means the samples jumped between
//! the two branches of the quadratic inequality; it is reported as a
//! continuity failure.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::fmt;

/// Samples of a nonnegative function on `[a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    ts: Vec<T>,
    xs: Vec<T>,
    continuity_tolerance: T,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(ts: Vec<T>, xs: Vec<T>, continuity_tolerance: T) -> Result<Self> {
        if ts.len() != xs.len() {
            return Err(Error::Shape(format!("{} times, {} values", ts.len(), xs.len())));
        }
        if ts.len() < 2 {
            return Err(Error::InsufficientData("a sampled function needs 2 samples".into()));
        }
        if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("sample times must be finite and strictly increasing".into()));
        }
        if xs.iter().any(|x| !x.is_finite() || *x < T::zero()) {
            return Err(Error::InvalidParameter("sample values must be finite and nonnegative".into()));
        }
        if !(continuity_tolerance >= T::zero()) {
            return Err(Error::InvalidParameter("continuity tolerance must be >= 0".into()));
        }
        Ok(SampledFunction { ts, xs, continuity_tolerance })
    }

    /// Samples `f` at `n` equispaced points of `[a, b)`.
    pub fn from_fn(a: T, b: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let h = (b - a) / T::from_usize_lossy(n);
        let ts: Vec<T> = (0..n).map(|i| a + h * T::from_usize_lossy(i)).collect();
        let xs = ts.iter().map(|&t| f(t)).collect();
        Self::new(ts, xs, T::zero())
    }

    pub fn ts(&self) -> &[T] {
        &self.ts
    }
    pub fn xs(&self) -> &[T] {
        &self.xs
    }
    pub fn continuity_tolerance(&self) -> T {
        self.continuity_tolerance
    }
    pub fn max(&self) -> T {
        self.xs.iter().copied().fold(T::zero(), T::max)
    }

    /// Piecewise-linear interpolant, clamped to the end values outside the samples.
    pub fn eval(&self, t: T) -> T {
        let (ts, xs) = (&self.ts, &self.xs);
        if t <= ts[0] {
            return xs[0];
        }
        let last = ts.len() - 1;
        if t >= ts[last] {
            return xs[last];
        }
        let j = ts.partition_point(|&s| s <= t);
        let (t0, t1, x0, x1) = (ts[j - 1], ts[j], xs[j - 1], xs[j]);
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }
}

/// Which hypothesis check failed at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    /// The pointwise quadratic inequality does not hold.
    QuadraticInequality,
    /// The inequality holds but the sample lies on the upper branch, which a
    /// continuous function starting below the threshold cannot reach.
    Continuity,
}

/// Which smallness threshold was violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// `C`, `K` or `eps` not strictly positive.
    NonPositiveConstant,
    /// `eps` is not below its limit.
    Eps { eps: f64, limit: f64 },
    /// `X(a)` exceeds its limit.
    InitialValue { value: f64, limit: f64 },
    /// The parameter `eta` is not below the computed `eta*`.
    Eta { eta: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Certified,
    HypothesisFailed { sample: usize, reason: FailureReason },
    ThresholdViolated(Threshold),
    /// The member blew up inside the given window; the sampled data cannot
    /// tell blowup from under-resolution.
    BlownUp { window: usize, time: f64 },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Certified => write!(f, "CERTIFIED"),
            Verdict::HypothesisFailed { sample, reason } => {
                write!(f, "HYPOTHESIS_FAILED(sample {sample}, {reason:?})")
            }
            Verdict::ThresholdViolated(t) => write!(f, "THRESHOLD_VIOLATED({t:?})"),
            Verdict::BlownUp { window, time } => write!(
                f,
                "BLOWN_UP(window {window}, t = {time}; blowup and under-resolution are indistinguishable from samples)"
            ),
        }
    }
}

/// Constants used by a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub c: f64,
    pub k: Option<f64>,
    pub eps: f64,
    pub eps_limit: f64,
    pub initial_limit: f64,
    /// Internal barrier `ln 2 / K` of the exponential variant.
    pub barrier: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCertificate {
    pub verdict: Verdict,
    pub concluded_bound: f64,
    pub thresholds: Thresholds,
}

fn f<T: Real>(x: T) -> f64 {
    x.to_f64_lossy()
}

/// Checks `X ≤ C X² + X/2 + eps` with `eps < 1/(16C)` and `X(a) ≤ 1/(4C)`;
/// concludes `sup X ≤ 4 eps`.
pub fn check_lemma_71<T: Real>(x: &SampledFunction<T>, c: T, eps: T) -> BootstrapCertificate {
    let eps_limit = T::one() / (T::lit(16.0) * c);
    let initial_limit = T::one() / (T::lit(4.0) * c);
    let bound = T::lit(4.0) * eps;
    let thresholds = Thresholds {
        c: f(c),
        k: None,
        eps: f(eps),
        eps_limit: f(eps_limit),
        initial_limit: f(initial_limit),
        barrier: None,
    };
    let verdict = if !(c > T::zero()) || !(eps > T::zero()) {
        Verdict::ThresholdViolated(Threshold::NonPositiveConstant)
    } else if !(eps < eps_limit) {
        Verdict::ThresholdViolated(Threshold::Eps { eps: f(eps), limit: f(eps_limit) })
    } else if !(x.xs[0] <= initial_limit) {
        Verdict::ThresholdViolated(Threshold::InitialValue { value: f(x.xs[0]), limit: f(initial_limit) })
    } else {
        let half = T::lit(0.5);
        pointwise(x, |v| v <= c * v * v + half * v + eps, bound + x.continuity_tolerance)
    };
    BootstrapCertificate { verdict, concluded_bound: f(bound), thresholds }
}

/// Checks `X ≤ (C X² + X/4 + eps) e^{K X}` with
/// `eps < min{1/(64C), ln(3/2)/(8K)}` and `X(a) ≤ min{1/(8C), ln(3/2)/K}`;
/// concludes `sup X ≤ 8 eps` (and stays below the barrier `ln 2 / K`).
pub fn check_lemma_72<T: Real>(x: &SampledFunction<T>, c: T, k: T, eps: T) -> BootstrapCertificate {
    let ln32 = T::lit(1.5).ln();
    let eps_limit = (T::one() / (T::lit(64.0) * c)).min(ln32 / (T::lit(8.0) * k));
    let initial_limit = (T::one() / (T::lit(8.0) * c)).min(ln32 / k);
    let barrier = T::lit(2.0).ln() / k;
    let bound = T::lit(8.0) * eps;
    let thresholds = Thresholds {
        c: f(c),
        k: Some(f(k)),
        eps: f(eps),
        eps_limit: f(eps_limit),
        initial_limit: f(initial_limit),
        barrier: Some(f(barrier)),
    };
    let verdict = if !(c > T::zero()) || !(k > T::zero()) || !(eps > T::zero()) {
        Verdict::ThresholdViolated(Threshold::NonPositiveConstant)
    } else if !(eps < eps_limit) {
        Verdict::ThresholdViolated(Threshold::Eps { eps: f(eps), limit: f(eps_limit) })
    } else if !(x.xs[0] <= initial_limit) {
        Verdict::ThresholdViolated(Threshold::InitialValue { value: f(x.xs[0]), limit: f(initial_limit) })
    } else {
        let quarter = T::lit(0.25);
        let v = pointwise(
            x,
            |v| v <= (c * v * v + quarter * v + eps) * (k * v).exp(),
            bound + x.continuity_tolerance,
        );
        match v {
            Verdict::Certified if !(x.max() < barrier) => Verdict::HypothesisFailed {
                sample: x.xs.iter().position(|&v| !(v < barrier)).unwrap_or(0),
                reason: FailureReason::Continuity,
            },
            v => v,
        }
    };
    BootstrapCertificate { verdict, concluded_bound: f(bound), thresholds }
}

fn pointwise<T: Real>(x: &SampledFunction<T>, hyp: impl Fn(T) -> bool, bound: T) -> Verdict {
    if let Some(sample) = x.xs.iter().position(|&v| !hyp(v)) {
        return Verdict::HypothesisFailed { sample, reason: FailureReason::QuadraticInequality };
    }
    if let Some(sample) = x.xs.iter().position(|&v| !(v <= bound)) {
        return Verdict::HypothesisFailed { sample, reason: FailureReason::Continuity };
    }
    Verdict::Certified
}

/// Budget functions of the continuation argument.
#[derive(Debug, Clone)]
pub struct BudgetFunctions<T> {
    pub g1: SampledFunction<T>,
    pub g2: SampledFunction<T>,
    pub g3: SampledFunction<T>,
    /// Decreasing weight of the carried initial value.
    pub f: SampledFunction<T>,
    pub k: T,
    pub big_k: T,
}

impl<T: Real> BudgetFunctions<T> {
    /// Checks that `g1..g3` are nondecreasing, `f` is nonincreasing and `k, K > 0`.
    pub fn new(
        g1: SampledFunction<T>,
        g2: SampledFunction<T>,
        g3: SampledFunction<T>,
        f: SampledFunction<T>,
        k: T,
        big_k: T,
    ) -> Result<Self> {
        for (name, g) in [("G1", &g1), ("G2", &g2), ("G3", &g3)] {
            if g.xs.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidParameter(format!("{name} must be increasing")));
            }
        }
        if f.xs.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("f must be decreasing".into()));
        }
        if !(k > T::zero()) || !(big_k > T::zero()) {
            return Err(Error::InvalidParameter("k and K must be > 0".into()));
        }
        Ok(BudgetFunctions { g1, g2, g3, f, k, big_k })
    }
}

/// Partition `0 < T_1 < … < T_N = T` of the continuation argument.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T> {
    pub t_star: T,
    pub n: usize,
    /// `T_1, …, T_N`.
    pub t_n: Vec<T>,
}

/// Largest increment of `g` over steps of length `h` on `[0, T − h]`. The
/// increment of a piecewise-linear function is piecewise linear, so its
/// maximum sits at a breakpoint `t_i`, `t_i − h`, or an end of the range.
fn max_increment<T: Real>(g: &SampledFunction<T>, h: T, t_final: T) -> T {
    let hi = t_final - h;
    let mut best = g.eval(h) - g.eval(T::zero());
    let mut probe = |t: T| {
        if t >= T::zero() && t <= hi {
            best = best.max(g.eval(t + h) - g.eval(t));
        }
    };
    probe(hi);
    for &t in &g.ts {
        probe(t);
        probe(t - h);
    }
    best
}

fn step_admissible<T: Real>(b: &BudgetFunctions<T>, h: T, t_final: T) -> bool {
    let slack = |limit: T| limit * (T::one() + T::lit(1e-12)) + T::lit(1e-15);
    max_increment(&b.g1, h, t_final) <= slack(T::lit(2.0).ln())
        && max_increment(&b.g2, h, t_final) <= slack(T::lit(0.125))
        && max_increment(&b.g3, h, t_final) <= slack(T::lit(0.5))
}

/// Finds `T*` (largest sampled step with `g1 ≤ ln 2`, `g2 ≤ 1/8`, `g3 ≤ 1/2`
/// over every window of that length) and the partition `T_n = n T*/2`.
pub fn continuation_schedule<T: Real>(budgets: &BudgetFunctions<T>, t_final: T) -> Result<Schedule<T>> {
    if !(t_final > T::zero()) {
        return Err(Error::InvalidParameter(format!("T = {t_final} must be > 0")));
    }
    let ts = &budgets.g1.ts;
    let tol = T::lit(1e-12) * t_final;
    let mut candidates: Vec<T> = ts
        .iter()
        .skip(1)
        .map(|&t| t - ts[0])
        .filter(|&h| h <= t_final + tol)
        .map(|h| h.min(t_final))
        .collect();
    candidates.dedup();
    if candidates.is_empty() || !step_admissible(budgets, candidates[0], t_final) {
        return Err(Error::ScheduleInfeasible(
            "no admissible step above the sample spacing".into(),
        ));
    }
    // Admissibility is monotone in h: bisect for the last admissible candidate.
    let (mut lo, mut hi) = (0usize, candidates.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if step_admissible(budgets, candidates[mid], t_final) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = candidates[lo];
    let half = t_star * T::lit(0.5);
    let ratio = t_final / half;
    let n = {
        let r = ratio.round();
        if (ratio - r).abs() <= T::lit(1e-9) * r.max(T::one()) {
            r
        } else {
            ratio.ceil()
        }
    }
    .to_f64_lossy() as usize;
    let n = n.max(1);
    let t_n = (1..=n)
        .map(|i| if i < n { half * T::from_usize_lossy(i) } else { t_final })
        .collect();
    Ok(Schedule { t_star, n, t_n })
}

/// One member `X_η` of the family, possibly blown up at some time.
#[derive(Debug, Clone)]
pub struct FamilyMember<T> {
    pub eta: T,
    pub x: SampledFunction<T>,
    pub blowup_time: Option<T>,
}

#[derive(Debug, Clone)]
pub struct WindowReport {
    /// 1-based window index; window `n` checks `[T_{n−1}, T_n)`.
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub certificate: BootstrapCertificate,
}

#[derive(Debug, Clone)]
pub struct MemberReport {
    pub eta: f64,
    pub verdict: Verdict,
    pub windows: Vec<WindowReport>,
    pub max_over_eta: f64,
}

#[derive(Debug, Clone)]
pub struct QiReport {
    pub schedule: Schedule<f64>,
    /// `C_1, …, C_N`.
    pub constants: Vec<f64>,
    pub c_star: f64,
    pub eta_star: f64,
    pub members: Vec<MemberReport>,
    /// True when every member with `eta < eta*` certified on every window.
    pub certified: bool,
}

impl QiReport {
    /// Plain-text report, one line per window.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# T* = {} N = {} C* = {} eta* = {} verdict = {}\n",
            self.schedule.t_star,
            self.schedule.n,
            self.c_star,
            self.eta_star,
            if self.certified { "CERTIFIED" } else { "FAILED" }
        );
        for m in &self.members {
            if m.windows.is_empty() {
                out.push_str(&format!("eta={} all: {}\n", m.eta, m.verdict));
            }
            for w in &m.windows {
                out.push_str(&format!(
                    "eta={} window {} [{}, {}): {} bound={}\n",
                    m.eta, w.index, w.start, w.end, w.certificate.verdict, w.certificate.concluded_bound
                ));
            }
        }
        out
    }
}

/// Restriction of `x` to `[start, end)` (closed at `end` when `closed`), shifted by `offset`.
fn window_samples<T: Real>(
    x: &SampledFunction<T>,
    start: T,
    end: T,
    closed: bool,
    offset: T,
) -> Result<SampledFunction<T>> {
    let mut ts = vec![start];
    let mut xs = vec![x.eval(start)];
    for (&t, &v) in x.ts.iter().zip(&x.xs) {
        let inside = t > start && (t < end || (closed && t <= end));
        if inside {
            ts.push(t);
            xs.push(v);
        }
    }
    if ts.len() < 2 {
        ts.push(end);
        xs.push(x.eval(end));
    }
    let xs = xs.into_iter().map(|v| (v - offset).max(T::zero())).collect();
    SampledFunction::new(ts, xs, x.continuity_tolerance)
}

/// Windowed verification of the continuation argument for a family `X_η`.
///
/// Window 1 checks `X_η` on `[0, T_1)` with the exponential lemma for
/// `C = 2k`, `eps = η`. Window `n+1` checks `X_η − X_η(T_{n−1})` on
/// `[T_n, T_{n+1})` with `eps = η (1 + C_n f(T*/2))`, and
/// `C_{n+1} = 8 (1 + C_n f(T*/2))`, `C_1 = 8`.
pub fn verify_prop_qi<T: Real>(
    family: &[FamilyMember<T>],
    budgets: &BudgetFunctions<T>,
    t_final: T,
) -> Result<QiReport> {
    let schedule = continuation_schedule(budgets, t_final)?;
    let c = T::lit(2.0) * budgets.k;
    let big_k = budgets.big_k;
    let ln32 = T::lit(1.5).ln();
    let f_half = budgets.f.eval(schedule.t_star * T::lit(0.5));

    let mut constants = vec![T::lit(8.0)];
    let lemma_eps = (T::one() / (T::lit(64.0) * c)).min(ln32 / (T::lit(8.0) * big_k));
    let lemma_init = (T::one() / (T::lit(8.0) * c)).min(ln32 / big_k);
    let mut eta_star = lemma_eps;
    for n in 1..schedule.n {
        let cn = constants[n - 1];
        let factor = T::one() + cn * f_half;
        eta_star = eta_star.min(lemma_init / cn).min(lemma_eps / factor);
        constants.push(T::lit(8.0) * factor);
    }
    let c_star = *constants.last().expect("at least one window");

    let mut boundaries = vec![T::zero()];
    boundaries.extend(schedule.t_n.iter().copied());

    let mut members = Vec::with_capacity(family.len());
    let mut certified = true;
    for m in family {
        let report = verify_member(m, &boundaries, &constants, c, big_k, f_half, eta_star, c_star)?;
        let applicable = m.eta < eta_star;
        if applicable && !report.verdict.is_certified() {
            certified = false;
        }
        members.push(report);
    }
    Ok(QiReport {
        schedule: Schedule {
            t_star: f(schedule.t_star),
            n: schedule.n,
            t_n: schedule.t_n.iter().map(|&t| f(t)).collect(),
        },
        constants: constants.iter().map(|&c| f(c)).collect(),
        c_star: f(c_star),
        eta_star: f(eta_star),
        members,
        certified,
    })
}

#[allow(clippy::too_many_arguments)]
fn verify_member<T: Real>(
    m: &FamilyMember<T>,
    boundaries: &[T],
    constants: &[T],
    c: T,
    big_k: T,
    f_half: T,
    eta_star: T,
    c_star: T,
) -> Result<MemberReport> {
    let max_over_eta = f(m.x.max() / m.eta);
    let mut windows = Vec::new();
    let n_windows = boundaries.len() - 1;
    if let Some(tb) = m.blowup_time {
        let window = (1..=n_windows)
            .find(|&j| tb >= boundaries[j - 1] && tb < boundaries[j])
            .unwrap_or(n_windows);
        return Ok(MemberReport {
            eta: f(m.eta),
            verdict: Verdict::BlownUp { window, time: f(tb) },
            windows,
            max_over_eta,
        });
    }
    if !(m.eta < eta_star) {
        return Ok(MemberReport {
            eta: f(m.eta),
            verdict: Verdict::ThresholdViolated(Threshold::Eta { eta: f(m.eta), limit: f(eta_star) }),
            windows,
            max_over_eta,
        });
    }
    let mut verdict = Verdict::Certified;
    for j in 1..=n_windows {
        let (start, end) = (boundaries[j - 1], boundaries[j]);
        let (offset, eps) = if j == 1 {
            (m.x.eval(T::zero()), m.eta)
        } else {
            (m.x.eval(boundaries[j - 2]), m.eta * (T::one() + constants[j - 2] * f_half))
        };
        let xw = window_samples(&m.x, start, end, j == n_windows, offset)?;
        let certificate = check_lemma_72(&xw, c, big_k, eps);
        let ok = certificate.verdict.is_certified();
        windows.push(WindowReport { index: j, start: f(start), end: f(end), certificate });
        if !ok {
            verdict = certificate.verdict;
            break;
        }
    }
    if verdict.is_certified() && !(m.x.max() <= c_star * m.eta + m.x.continuity_tolerance) {
        let sample = m.x.xs.iter().position(|&v| !(v <= c_star * m.eta)).unwrap_or(0);
        verdict = Verdict::HypothesisFailed { sample, reason: FailureReason::Continuity };
    }
    Ok(MemberReport { eta: f(m.eta), verdict, windows, max_over_eta })
}
