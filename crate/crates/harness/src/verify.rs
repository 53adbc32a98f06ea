//! Runtime verification suites: exact-solution oracles, discrete invariants
//! and the bootstrap checks.

use hydrostat_core::bootstrap::{
    check_lemma_71, check_lemma_72, continuation_schedule, BudgetFunctions, SampledFunction, Threshold, Verdict,
};
use hydrostat_core::fields::barotropic_split;
use hydrostat_core::initial::{generate_initial_data, Recipe};
use hydrostat_core::norms::{NormAccumulator, NormKind};
use hydrostat_core::solvers::{ImexStepper, Model, Ns2dStepper, NsStepper, PeStepper, Stepper, StokesStepper};
use hydrostat_core::{Grid, SpectralField, State64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.into(), passed, detail }
    }

    /// `value < limit`, reported with both numbers.
    fn below(name: &str, value: f64, limit: f64) -> Self {
        Check::new(name, value < limit, format!("{value:.3e} < {limit:.0e}"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracles,
    Invariants,
    Bootstrap,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracles" => Ok(Suite::Oracles),
            "invariants" => Ok(Suite::Invariants),
            "bootstrap" => Ok(Suite::Bootstrap),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite '{other}'")),
        }
    }
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Oracles => oracle_checks(),
        Suite::Invariants => invariant_checks(),
        Suite::Bootstrap => bootstrap_checks(),
        Suite::All => [oracle_checks(), invariant_checks(), bootstrap_checks()].concat(),
    }
}

type F = SpectralField<f64>;

fn sq_diff(a: &F, b: &F) -> f64 {
    a.sub(b).map(|d| d.l2_norm_sq()).unwrap_or(f64::NAN)
}

fn march(s: &mut dyn Stepper<f64>, dt: f64, steps: usize) -> bool {
    (0..steps).all(|_| s.step(dt).is_ok())
}

/// Taylor-Green decay in 2D, heat-mode decay under both viscous systems and
/// the exact Stokes exponentials.
pub fn oracle_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let h = Grid::horizontal_grid(64, 64).expect("64x64 grid");
    let tg = generate_initial_data(Recipe::TaylorGreen2d, 0, &h).expect("taylor-green data");
    let mut s = Ns2dStepper::ns2d(&tg).expect("2d stepper");
    let (dt, t) = (1e-4, 0.1);
    let ok = march(&mut s, dt, 1000);
    let decay = (-2.0 * PI * PI * t).exp();
    let e = s.state();
    let err = (sq_diff(&e.v1, &tg.v1.scale(decay)) + sq_diff(&e.v2, &tg.v2.scale(decay))).sqrt();
    out.push(Check::below("taylor_green_2d_l2_error", if ok { err } else { f64::INFINITY }, 1e-8));

    let g = Grid::new(8, 8, 8).expect("8^3 grid");
    let heat = generate_initial_data(Recipe::HeatMode, 0, &g).expect("heat mode");
    let delta = 1.0;
    let exact = heat.v1.scale((-delta * PI * PI * t).exp());
    let rel = |u: &State64| sq_diff(&u.v1, &exact).sqrt() / exact.l2_norm();
    let mut ns = NsStepper::ns(&heat, 0.1, delta).expect("ns stepper");
    let mut pe = PeStepper::pe(&heat, delta).expect("pe stepper");
    let ok = march(&mut ns, dt, 1000) && march(&mut pe, dt, 1000);
    let (e_ns, e_pe) = if ok { (rel(&ns.state()), rel(&pe.state())) } else { (f64::INFINITY, f64::INFINITY) };
    out.push(Check::below("heat_mode_ns_relative_error", e_ns, 1e-6));
    out.push(Check::below("heat_mode_pe_relative_error", e_pe, 1e-6));

    let mut worst = 0.0f64;
    for delta in [0.5, 1.0, 7.0, 64.0] {
        let mut st = StokesStepper::new(&heat, delta).expect("stokes stepper");
        let mut t = 0.0;
        for dt in [1e-3, 0.01, 0.05] {
            let _ = st.step(dt);
            t += dt;
            let want = (-delta * PI * PI * t).exp();
            let got = st.state().v1.coeff(0, 0, 1).re / heat.v1.coeff(0, 0, 1).re;
            worst = worst.max((got - want).abs() / want);
        }
    }
    out.push(Check::below("stokes_exponential_relative_error", worst, 1e-12));
    out
}

fn pair(a: &[F], b: &[F]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Worst relative residual of the discrete energy identity
/// `‖Uⁿ⁺¹‖² − ‖Uⁿ‖² = 2dt (⟨L Ū, Ū⟩ + ⟨P N*, Ū⟩)`, and worst `|⟨P N(U), U⟩|`.
pub fn energy_residuals<M: Model<f64>>(s: &mut ImexStepper<f64, M>, dt: f64, steps: usize) -> (f64, f64) {
    let delta = s.model().delta();
    let (mut balance, mut pairing) = (0.0f64, s.nonlinear_pairing().abs());
    for _ in 0..steps {
        let before = s.prognostic().to_vec();
        if s.step(dt).is_err() {
            return (f64::INFINITY, f64::INFINITY);
        }
        let after = s.prognostic();
        let mid: Vec<F> = before.iter().zip(after).map(|(a, b)| a.add(b).expect("same grid").scale(0.5)).collect();
        let lmid: Vec<F> = mid.iter().map(|m| m.laplacian_delta(delta).expect("delta >= 0")).collect();
        let e0 = pair(&before, &before);
        let rhs = 2.0 * dt * (pair(&lmid, &mid) + pair(s.last_forcing().expect("stepped"), &mid));
        balance = balance.max(((pair(after, after) - e0) - rhs).abs() / e0);
        pairing = pairing.max(s.nonlinear_pairing().abs());
    }
    (balance, pairing)
}

/// Constraint, energy, ordering and splitting invariants on short random trajectories.
pub fn invariant_checks() -> Vec<Check> {
    let g = Grid::new(16, 16, 16).expect("16^3 grid");
    let u0 = generate_initial_data(Recipe::BandlimitedRandom, 42, &g).expect("random data");
    let (dt, steps, eps, delta) = (1e-3, 20, 0.1, 0.1);
    let mut ns = NsStepper::ns(&u0, eps, delta).expect("ns stepper");
    let mut pe = PeStepper::pe(&u0, 0.0).expect("pe stepper");
    let mut two = Ns2dStepper::ns2d(&crate::pair::barotropic_state(&u0).expect("split")).expect("2d stepper");

    let (mut div, mut parity, mut parseval) = (0.0f64, 0.0f64, 0.0f64);
    let mut ordered = true;
    let mut eh = [NormAccumulator::new(NormKind::EH), NormAccumulator::new(NormKind::EH)];
    let mut ehd = [NormAccumulator::new(NormKind::EHdelta(delta)), NormAccumulator::new(NormKind::EHdelta(delta))];
    let (mut balance, mut pairing) = (0.0f64, 0.0f64);
    for n in 0..=steps {
        if n > 0 {
            for (b, p) in [energy_residuals(&mut ns, dt, 1), energy_residuals(&mut pe, dt, 1), energy_residuals(&mut two, dt, 1)] {
                balance = balance.max(b);
                pairing = pairing.max(p);
            }
        }
        for (i, s) in [&ns as &dyn Stepper<f64>, &pe].into_iter().enumerate() {
            let (u, du) = (s.state(), s.time_derivative());
            div = div.max(u.divergence().max_abs_coeff());
            parity = parity.max(u.parity_defect());
            let sp = barotropic_split(&u);
            for (full, bar, tilde) in [(&u.v1, &sp.vbar1, &sp.vtilde1), (&u.v2, &sp.vbar2, &sp.vtilde2)] {
                let total = full.l2_norm_sq();
                let lifted = bar.lift_to(&g).expect("lift").l2_norm_sq();
                parseval = parseval.max((total - lifted - tilde.l2_norm_sq()).abs() / total.max(f64::MIN_POSITIVE));
            }
            eh[i].accumulate(s.time(), &u, Some(&du)).expect("ordered samples");
            ehd[i].accumulate(s.time(), &u, Some(&du)).expect("ordered samples");
            if n > 0 {
                ordered &= eh[i].finalize().unwrap_or(f64::NAN) <= ehd[i].finalize().unwrap_or(f64::NAN);
            }
        }
    }
    vec![
        Check::below("divergence_defect", div, 1e-11),
        Check::new("parity_exact", parity == 0.0, format!("defect {parity:e}")),
        Check::below("advection_energy_neutrality", pairing, 1e-11),
        Check::below("energy_balance_relative_residual", balance, 1e-9),
        Check::new("eh_le_ehdelta_on_trajectory", ordered, format!("{} trajectories", eh.len())),
        Check::below("barotropic_parseval_relative", parseval, 1e-10),
    ]
}

type S = SampledFunction<f64>;

fn constant(v: f64) -> S {
    S::from_fn(0.0, 1.0, 50, |_| v).expect("valid samples")
}

fn lower_root_71(c: f64, eps: f64) -> f64 {
    (0.5 - (0.25 - 4.0 * c * eps).sqrt()) / (2.0 * c)
}

fn upper_root_71(c: f64, eps: f64) -> f64 {
    (0.5 + (0.25 - 4.0 * c * eps).sqrt()) / (2.0 * c)
}

fn gap_72(c: f64, k: f64, eps: f64, x: f64) -> f64 {
    (c * x * x + 0.25 * x + eps) * (k * x).exp() - x
}

/// First zero of the convex gap function on `[0, 8 eps]`, by bisection.
fn lower_root_72(c: f64, k: f64, eps: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 8.0 * eps);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap_72(c, k, eps, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn random_samples(rng: &mut ChaCha8Rng, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(2..60);
    let ts = (0..n).map(|i| i as f64 / n as f64).collect();
    let xs = (0..n).map(|_| rng.gen_range(0.0..=hi)).collect();
    (ts, xs)
}

fn eps_limit_72(c: f64, k: f64) -> f64 {
    (1.0 / (64.0 * c)).min(1.5f64.ln() / (8.0 * k))
}

/// Worked verdicts, randomized conforming and single-violation functions,
/// and the linear-budget continuation schedule.
pub fn bootstrap_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let c1 = check_lemma_71(&constant(0.02), 1.0, 0.01);
    let c2 = check_lemma_72(&constant(0.0067), 1.0, 1.0, 0.005);
    let examples = [
        c1.verdict == Verdict::Certified && (c1.concluded_bound - 0.04).abs() < 1e-15,
        matches!(check_lemma_71(&constant(0.0), 1.0, 0.1).verdict, Verdict::ThresholdViolated(Threshold::Eps { .. })),
        check_lemma_71(&constant(0.0), 2.0, 0.01).verdict == Verdict::Certified,
        matches!(check_lemma_72(&constant(0.01), 1.0, 1.0, 0.005).verdict, Verdict::HypothesisFailed { sample: 0, .. }),
        matches!(check_lemma_72(&constant(0.007), 1.0, 1.0, 0.005).verdict, Verdict::HypothesisFailed { .. }),
        c2.verdict == Verdict::Certified && (c2.concluded_bound - 0.04).abs() < 1e-15,
        check_lemma_72(&constant(0.0), 1.0, 1.0, 0.005).verdict == Verdict::Certified,
    ];
    let hits = examples.iter().filter(|&&b| b).count();
    out.push(Check::new("lemma_examples", hits == examples.len(), format!("{hits}/{} verdicts", examples.len())));

    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut good = 0;
    for i in 0..2000 {
        let c: f64 = rng.gen_range(0.1..10.0);
        let (x, cert) = if i < 1000 {
            let eps = rng.gen_range(1e-6..1.0) / (16.0 * c);
            let (ts, xs) = random_samples(&mut rng, lower_root_71(c, eps));
            let x = S::new(ts, xs, 0.0).expect("valid samples");
            let cert = check_lemma_71(&x, c, eps);
            (x, cert)
        } else {
            let k: f64 = rng.gen_range(0.1..10.0);
            let eps = rng.gen_range(1e-6..1.0) * eps_limit_72(c, k);
            let (ts, xs) = random_samples(&mut rng, lower_root_72(c, k, eps));
            let x = S::new(ts, xs, 0.0).expect("valid samples");
            let cert = check_lemma_72(&x, c, k, eps);
            (x, cert)
        };
        good += usize::from(cert.verdict == Verdict::Certified && x.max() <= cert.concluded_bound);
    }
    out.push(Check::new("conforming_functions_certify", good == 2000, format!("{good}/2000")));

    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut rejected = 0;
    for i in 0..2000 {
        let c: f64 = rng.gen_range(0.1..10.0);
        let certified = if i < 1000 {
            let eps = rng.gen_range(1e-6..1.0) / (16.0 * c);
            let (lo, hi) = (lower_root_71(c, eps), upper_root_71(c, eps));
            let (ts, mut xs) = random_samples(&mut rng, lo);
            let j = rng.gen_range(0..xs.len());
            xs[j] = lo + rng.gen_range(0.01..0.99) * (hi - lo);
            check_lemma_71(&S::new(ts, xs, 0.0).expect("valid samples"), c, eps).verdict.is_certified()
        } else {
            let k: f64 = rng.gen_range(0.1..10.0);
            let eps = rng.gen_range(1e-6..1.0) * eps_limit_72(c, k);
            let lo = lower_root_72(c, k, eps);
            let (ts, mut xs) = random_samples(&mut rng, lo);
            let j = rng.gen_range(0..xs.len());
            xs[j] = lo + rng.gen_range(0.01..=1.0) * (8.0 * eps - lo);
            check_lemma_72(&S::new(ts, xs, 0.0).expect("valid samples"), c, k, eps).verdict.is_certified()
        };
        rejected += usize::from(!certified);
    }
    out.push(Check::new("single_violations_rejected", rejected == 2000, format!("{rejected}/2000")));

    let lin = |slope: f64| S::from_fn(0.0, 2.0, 1000, |t| slope * t).expect("valid samples");
    let budgets = BudgetFunctions::new(
        lin(2f64.ln()),
        lin(0.125),
        lin(0.5),
        S::from_fn(0.0, 2.0, 1000, |_| 1.0).expect("valid samples"),
        1.0,
        1.0,
    )
    .expect("valid budgets");
    let (ok, detail) = match continuation_schedule(&budgets, 2.0) {
        Ok(s) => {
            let want = [0.5, 1.0, 1.5, 2.0];
            let ok = (s.t_star - 1.0).abs() < 1e-12
                && s.n == 4
                && s.t_n.len() == 4
                && s.t_n.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12);
            (ok, format!("T* = {}, N = {}, T_n = {:?}", s.t_star, s.n, s.t_n))
        }
        Err(e) => (false, e.to_string()),
    };
    out.push(Check::new("linear_budget_schedule", ok, detail));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!("all".parse::<Suite>(), Ok(Suite::All));
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn bootstrap_suite_passes() {
        for c in bootstrap_checks() {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn check_lines() {
        let c = Check::below("x", 2e-9, 1e-8);
        assert_eq!(c.to_string(), "PASS x: 2.000e-9 < 1e-8");
    }
}
