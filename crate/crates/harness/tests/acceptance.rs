//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is never captured.
//! Criteria listed in `KNOWN_RED` are reported but do not fail the run;
//! every other criterion must pass.

use hydrostat::pair::HEADLINE_NORM;
use hydrostat::snapshot::{decode, encode};
use hydrostat::sweep::{to_csv, SweepResult};
use hydrostat::verify::{bootstrap_checks, invariant_checks, oracle_checks, Check};
use hydrostat::{run_sweep, HarnessError, SweepConfig, SweepMode};
use hydrostat_core::initial::{generate_initial_data, Recipe};
use hydrostat_core::solvers::SimConfig;
use hydrostat_core::Grid;
use std::time::{Duration, Instant};

/// Criteria that fail with the prescribed discretization (see the README).
const KNOWN_RED: &[u32] = &[3, 4];

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
}

fn criterion(id: u32, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = f();
    let o = Outcome { id, title, passed, detail, elapsed: start.elapsed() };
    println!(
        "{} C{} {}: {} [{:.1}s]",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.title,
        o.detail,
        o.elapsed.as_secs_f64()
    );
    o
}

fn sweep(mode: SweepMode, sim: SimConfig<f64>, eps: &[f64], delta: &[f64], gamma: &[f64]) -> SweepResult {
    let mut cfg = SweepConfig::new(mode, sim);
    cfg.eps_values = eps.to_vec();
    cfg.delta_values = delta.to_vec();
    cfg.gamma_values = gamma.to_vec();
    run_sweep(&cfg).expect("sweep runs")
}

fn headline(r: &SweepResult, eps: f64) -> Vec<(f64, f64, bool)> {
    r.series(HEADLINE_NORM)
        .into_iter()
        .filter(|row| row.eps == eps)
        .map(|row| (row.delta, row.value, row.blowup || row.failed))
        .collect()
}

fn summarize(checks: &[Check]) -> (bool, String) {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    if failed.is_empty() {
        (true, format!("{} checks", checks.len()))
    } else {
        (false, failed.join("; "))
    }
}

fn c1_rate_eps_delta() -> (bool, String) {
    let r = sweep(SweepMode::EpsDeltaToZero, SimConfig::default(), &[0.2, 0.1, 0.05, 0.025], &[], &[]);
    let values: Vec<String> = r.series(HEADLINE_NORM).iter().map(|row| format!("{:.4e}", row.value)).collect();
    match r.fit(None, HEADLINE_NORM) {
        Some(f) if f.points == 4 => (f.slope >= 0.8, format!("slope {:.3} >= 0.8, values {values:?}", f.slope)),
        _ => (false, format!("no fit over 4 points, threshold {:?}", r.blowup_threshold)),
    }
}

fn c2_quarter_power() -> (bool, String) {
    let sim = SimConfig { eps: 0.5, delta: 16.0, dt_initial: Some(1e-7), ..SimConfig::default() };
    let deltas = [16.0, 64.0, 256.0, 1024.0];
    let r = sweep(SweepMode::DeltaToInfty, sim, &[0.5, 0.25], &deltas, &[]);
    let (a, b) = (headline(&r, 0.5), headline(&r, 0.25));
    if a.len() != 4 || b.len() != 4 || a.iter().chain(&b).any(|p| p.2) {
        return (false, "missing or blown-up points".into());
    }
    let monotone = a.windows(2).all(|w| w[1].1 <= w[0].1);
    let scaled: Vec<f64> = a.iter().map(|&(d, v, _)| v * d.powf(0.25)).collect();
    let bounded = scaled.iter().all(|&s| s <= 2.0 * scaled[0]);
    let spread = a.iter().zip(&b).map(|(x, y)| (y.1 - x.1).abs() / x.1).fold(0.0, f64::max);
    let uniform = spread <= 0.1;
    (
        monotone && bounded && uniform,
        format!(
            "nonincreasing {monotone}, value*delta^(1/4) {:?} within 2x {bounded}, eps spread {:.3} <= 0.1",
            scaled.iter().map(|s| format!("{s:.4e}")).collect::<Vec<_>>(),
            spread
        ),
    )
}

fn c3_gamma_regimes() -> (bool, String) {
    let r = sweep(SweepMode::GammaScan, SimConfig::default(), &[0.2, 0.1, 0.05], &[], &[3.0, 4.0]);
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [3.0, 4.0] {
        let want = f64::min(gamma - 2.0, 1.0);
        match r.fit(Some(gamma), HEADLINE_NORM) {
            Some(f) if f.points == 3 => {
                let hit = (f.slope - want).abs() <= 0.25;
                ok &= hit;
                parts.push(format!("gamma {gamma}: slope {:.3} vs {want} +- 0.25", f.slope));
            }
            _ => {
                ok = false;
                parts.push(format!("gamma {gamma}: no fit"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn c7_determinism_and_persistence() -> (bool, String) {
    let sim = SimConfig { nx: 8, ny: 8, nz: 8, t_final: 0.02, ..SimConfig::default() };
    let mut cfg = SweepConfig::new(SweepMode::EpsDeltaToZero, sim);
    cfg.eps_values = vec![0.2, 0.1, 0.05];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| to_csv(&run_sweep(&cfg).expect("sweep runs").rows))
    };
    let (a, b, c) = (run(1), run(3), run(1));
    let identical = a == b && a == c;

    let g = Grid::new(8, 8, 8).expect("grid");
    let mut u = generate_initial_data(Recipe::BandlimitedRandom, 42, &g).expect("data");
    u.time = 0.25;
    let bytes = encode(&u);
    let round_trip = decode(&bytes).map(|v| encode(&v) == bytes && v == u).unwrap_or(false);
    let mut corrupt = bytes.clone();
    corrupt[100] ^= 0x40;
    let crc_guard = matches!(decode(&corrupt), Err(HarnessError::Format { .. }));
    (
        identical && round_trip && crc_guard,
        format!("csv identical {identical} ({} bytes), snapshot bit-exact {round_trip}, crc rejects {crc_guard}", a.len()),
    )
}

fn main() {
    let outcomes = [
        criterion(1, "eps,delta -> 0 rate", c1_rate_eps_delta),
        criterion(2, "delta -> infinity quarter-power bound", c2_quarter_power),
        criterion(3, "gamma regimes", c3_gamma_regimes),
        criterion(4, "exact-solution oracles", || summarize(&oracle_checks())),
        criterion(5, "invariant suite", || summarize(&invariant_checks())),
        criterion(6, "bootstrap suite", || {
            let start = Instant::now();
            let (ok, detail) = summarize(&bootstrap_checks());
            let secs = start.elapsed().as_secs_f64();
            (ok && secs < 30.0, format!("{detail} in {secs:.2}s"))
        }),
        criterion(7, "determinism and persistence", c7_determinism_and_persistence),
    ];
    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.passed && !KNOWN_RED.contains(&o.id)).map(|o| o.id).collect();
    if !unexpected.is_empty() {
        eprintln!("criteria failed: {unexpected:?}");
        std::process::exit(1);
    }
}
