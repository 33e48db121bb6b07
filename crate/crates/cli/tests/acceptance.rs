//! Acceptance criteria AC1-AC8, one PASS/FAIL line each.
//!
//! Run with `cargo test -p cantor-spectra --test acceptance`. The process
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic;
use std::process::{Command, ExitCode};
use std::time::Instant;

use cantor_spectra::format::{parse_potential, serialize_potential};
use cantor_spectra_core::analysis::{
    cluster_gap_statistics, detect_clusters, geometric_gap_threshold, participation_ratio,
    staircase, well_mass_fraction,
};
use cantor_spectra_core::fd::DEFAULT_TOLERANCE;
use cantor_spectra_core::tm::{tm_eigenfunction, TransferMatrix};
use cantor_spectra_core::{
    assemble_hamiltonian, build_cantor_potential, CantorSpec, Grid, ModelParams,
    PiecewisePotential, TridiagonalHamiltonian,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, &'static str, Box<dyn Fn() -> Verdict>);

fn cantor(order: u32) -> PiecewisePotential {
    build_cantor_potential(&CantorSpec::with_order(order)).unwrap()
}

fn params(mu: f64) -> ModelParams {
    ModelParams::new(mu).unwrap()
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Order 0, mu = 300: 95 levels, discrete closed form to 1e-12 relative,
/// second-order convergence to the continuum, under 5 s at n ~ 1e4.
fn ac1() -> Verdict {
    let p = cantor(0);
    let mu = 300.0;
    let grid = Grid::new(9999).unwrap();
    let start = Instant::now();
    let h = assemble_hamiltonian(&p, &params(mu), &grid);
    let fine = h.eigenvalues_in_range(-1.0, 0.0, 1e-16).unwrap();
    let elapsed = start.elapsed().as_secs_f64();

    let spacing = grid.spacing();
    let c = 1.0 / (mu * mu * spacing * spacing);
    let mut worst_rel = 0.0f64;
    for (k, e) in fine.iter().enumerate() {
        let s = ((k + 1) as f64 * PI * spacing / 2.0).sin();
        let discrete = 4.0 * c * s * s - 1.0;
        worst_rel = worst_rel.max((e - discrete).abs() / discrete.abs());
    }

    let coarse = assemble_hamiltonian(&p, &params(mu), &Grid::new(4999).unwrap())
        .eigenvalues_in_range(-1.0, 0.0, 1e-16)
        .unwrap();
    let (mut lo_ratio, mut hi_ratio) = (f64::INFINITY, 0.0f64);
    for k in 1..=fine.len().min(coarse.len()) {
        let exact = (k as f64 * PI / mu).powi(2) - 1.0;
        let ratio =
            (coarse.eigenvalues[k - 1] - exact).abs() / (fine.eigenvalues[k - 1] - exact).abs();
        lo_ratio = lo_ratio.min(ratio);
        hi_ratio = hi_ratio.max(ratio);
    }
    let ok = fine.len() == 95
        && coarse.len() == 95
        && worst_rel <= 1e-12
        && lo_ratio >= 3.5
        && hi_ratio <= 4.5
        && elapsed < 5.0;
    check(
        ok,
        format!(
            "count {} (want 95), worst relative deviation from discrete form {worst_rel:.2e} (<= 1e-12), \
             halving ratios in [{lo_ratio:.4}, {hi_ratio:.4}] (want [3.5, 4.5]), n = 9999 solve {elapsed:.3} s (< 5 s)",
            fine.len()
        ),
    )
}

/// Order 3, mu = 50: grid-converged FD against TM to 1e-7, and integer
/// counts equal at 100 random energies, under 60 s.
fn ac2() -> Verdict {
    let start = Instant::now();
    let p = cantor(3);
    let prm = params(50.0);
    let tm = TransferMatrix::new(&p, prm);
    let exact = tm.eigenvalues(-1.0, 0.0, 1e-14).unwrap().eigenvalues;

    let solve = |g: &Grid| {
        assemble_hamiltonian(&p, &prm, g)
            .eigenvalues_in_range(-1.0, 0.0, 1e-13)
            .unwrap()
            .eigenvalues
    };
    // n + 1 stays a multiple of 27 so every breakpoint is a node.
    let mut grid = Grid::new(27 * 128 - 1).unwrap();
    let mut current = solve(&grid);
    let mut change = f64::INFINITY;
    let mut halvings = 0;
    while change >= 1e-8 && halvings < 12 {
        let next_grid = grid.refined();
        let next = solve(&next_grid);
        change = if next.len() == current.len() {
            next.iter()
                .zip(&current)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        grid = next_grid;
        current = next;
        halvings += 1;
    }
    let diff = if current.len() == exact.len() {
        current
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    let h = assemble_hamiltonian(&p, &prm, &grid);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..100 {
        let eps: f64 = rng.gen_range(-1.0..1.0);
        if h.sturm_count(eps) != tm.node_count(eps) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        change < 1e-8 && diff <= 1e-7 && mismatches == 0 && elapsed < 60.0,
        format!(
            "{} levels; last halving (n = {}) changed values by {change:.2e} (< 1e-8); \
             max |FD - TM| {diff:.2e} (<= 1e-7); count mismatches {mismatches}/100; {elapsed:.1} s (< 60 s)",
            exact.len(),
            grid.n()
        ),
    )
}

fn dense_eigenvalues(h: &TridiagonalHamiltonian) -> Vec<f64> {
    let n = h.dim();
    let d = h.diagonal();
    let e = h.off_diagonal();
    let m = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => d[i],
        1 => e,
        _ => 0.0,
    });
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Five random potentials on n <= 400 grids against dense diagonalization.
fn ac3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_value = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut counts_ok = true;
    for _ in 0..5 {
        let segments = rng.gen_range(2..=10);
        let mut cuts: Vec<f64> = (1..segments).map(|_| rng.gen_range(0.05..0.95)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut breakpoints = vec![0.0];
        breakpoints.extend(cuts);
        breakpoints.push(1.0);
        let values = (1..breakpoints.len())
            .map(|_| rng.gen_range(-1.0..=1.0))
            .collect();
        let p = PiecewisePotential::new(breakpoints, values).unwrap();
        let n = rng.gen_range(100..=400);
        let h = assemble_hamiltonian(
            &p,
            &params(rng.gen_range(5.0..50.0)),
            &Grid::new(n).unwrap(),
        );

        let (g_lo, g_hi) = h.gershgorin();
        let spectrum = h.eigenvalues_in_range(g_lo - 1.0, g_hi, 1e-12).unwrap();
        let reference = dense_eigenvalues(&h);
        counts_ok &= spectrum.len() == n;
        for (a, b) in spectrum.iter().zip(&reference) {
            worst_value = worst_value.max((a - b).abs());
        }
        for psi in h.eigenvectors(&spectrum.eigenvalues, 1e-12).unwrap() {
            worst_residual = worst_residual.max(h.residual(&psi.values, psi.energy));
        }
    }
    check(
        counts_ok && worst_value <= 1e-9 && worst_residual <= 1e-10,
        format!(
            "all eigenvalues found: {counts_ok}; max |bisection - dense| {worst_value:.2e} (<= 1e-9); \
             max residual {worst_residual:.2e} (<= 1e-10)"
        ),
    )
}

/// Order 4, mu = 300 staircase over [-1, 0]: monotone, flat between TM
/// roots, total rise equal to the TM root count.
fn ac4() -> Verdict {
    let p = cantor(4);
    let tm = TransferMatrix::new(&p, params(300.0));
    let roots = tm.eigenvalues(-1.0, 0.0, 1e-14).unwrap().eigenvalues;
    let data = staircase(&tm, -1.0, 0.0, 4000).unwrap();
    let monotone = data.counts.windows(2).all(|w| w[0] <= w[1]);
    let mut bad_steps = 0;
    for (e, c) in data.energies.windows(2).zip(data.counts.windows(2)) {
        let inside = roots.iter().filter(|r| **r > e[0] && **r <= e[1]).count();
        if c[1] - c[0] != inside {
            bad_steps += 1;
        }
    }
    let plateaus = data.counts.windows(2).filter(|w| w[0] == w[1]).count();
    check(
        monotone && bad_steps == 0 && data.total_rise() == roots.len() && data.counts[0] == 0,
        format!(
            "nondecreasing: {monotone}; intervals whose rise differs from their TM root count: {bad_steps}; \
             {plateaus}/4000 intervals flat; total rise {} vs {} TM roots",
            data.total_rise(),
            roots.len()
        ),
    )
}

/// Window (-0.33, -0.30] at mu = 300, orders 3-5: a pair with gap < 0.01
/// whose states have PR < 0.2 and >= 90% mass in the wells.
fn ac5() -> Verdict {
    let mut report = Vec::new();
    let mut found = false;
    for order in [3, 4, 5] {
        let p = cantor(order);
        let prm = params(300.0);
        let samples = Grid::resolved(&p, &prm).n();
        let tm = TransferMatrix::new(&p, prm);
        let window = tm.eigenvalues(-0.33, -0.30, 1e-12).unwrap().eigenvalues;
        for pair in window.windows(2) {
            if pair[1] - pair[0] >= 0.01 {
                continue;
            }
            let localized = pair.iter().all(|&e| {
                let psi = tm_eigenfunction(&p, &prm, e, samples).unwrap();
                participation_ratio(&psi).unwrap() < 0.2 && well_mass_fraction(&psi, &p) >= 0.9
            });
            found |= localized;
        }
        let below = tm
            .eigenvalues(-1.0, -0.33, 1e-12)
            .unwrap()
            .eigenvalues
            .last()
            .copied();
        let above = tm
            .eigenvalues(-0.30, 1.0, 1e-12)
            .unwrap()
            .eigenvalues
            .first()
            .copied();
        let show = |v: Option<f64>| v.map_or("none".to_string(), |e| format!("{e:.5}"));
        report.push(format!(
            "N={order}: {} in window {:?}, nearest below {} above {}",
            window.len(),
            window.iter().map(|e| format!("{e:.5}")).collect::<Vec<_>>(),
            show(below),
            show(above)
        ));
    }
    check(
        found,
        format!(
            "reference values -0.31340 and -0.31544; achieved: {}",
            report.join("; ")
        ),
    )
}

/// Order 4, mu = 300, lowest 16: clusters at the geometric-mean threshold.
fn ac6() -> Verdict {
    let p = cantor(4);
    let prm = params(300.0);
    let h = assemble_hamiltonian(&p, &prm, &Grid::resolved(&p, &prm));
    let lowest = h.lowest(16, DEFAULT_TOLERANCE).unwrap();
    let threshold = geometric_gap_threshold(&lowest, DEFAULT_TOLERANCE).unwrap();
    let report = detect_clusters(&lowest, threshold).unwrap();
    let (intra, inter) = cluster_gap_statistics(&lowest, &report);
    let multi = report.multi_member().count();
    let sizes: Vec<usize> = report.clusters.iter().map(|r| r.len()).collect();
    check(
        multi >= 2 && intra < 0.1 * inter,
        format!(
            "threshold {threshold:.3e} (smallest gap floored at tolerance {DEFAULT_TOLERANCE:e}); \
             cluster sizes {sizes:?}; {multi} multi-member (>= 2); max intra gap {intra:.3e} < 0.1 x min inter gap {inter:.3e}"
        ),
    )
}

/// Order 2 along mu = 10 ... 300 on one grid: levels fall, counts below 0
/// rise, mean PR of the 10 lowest states falls with at most one violation.
fn ac7() -> Verdict {
    let p = cantor(2);
    let ladder = [10.0, 20.0, 40.0, 80.0, 160.0, 300.0];
    let grid = Grid::resolved(&p, &params(300.0));
    let mut levels: Vec<Vec<f64>> = Vec::new();
    let mut counts = Vec::new();
    let mut mean_pr = Vec::new();
    for mu in ladder {
        let h = assemble_hamiltonian(&p, &params(mu), &grid);
        let lowest = h.lowest(10, 1e-12).unwrap();
        let states = h.eigenvectors(&lowest, 1e-12).unwrap();
        let pr: f64 = states
            .iter()
            .map(|s| participation_ratio(s).unwrap())
            .sum::<f64>()
            / 10.0;
        counts.push(h.sturm_count(0.0));
        mean_pr.push(pr);
        levels.push(lowest);
    }
    let monotone_levels = levels
        .windows(2)
        .all(|w| w[1].iter().zip(&w[0]).all(|(now, before)| now <= before));
    let monotone_counts = counts.windows(2).all(|w| w[0] <= w[1]);
    let violations = mean_pr.windows(2).filter(|w| w[1] > w[0]).count();
    check(
        monotone_levels && monotone_counts && violations <= 1,
        format!(
            "n = {}; every level nonincreasing: {monotone_levels}; counts below 0 {counts:?}; \
             mean PR {:?} with {violations} increase(s) (<= 1)",
            grid.n(),
            mean_pr
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
        ),
    )
}

/// Byte-identical CLI output, exact potential round trips, runtime budget.
fn ac8(suite_start: Instant) -> Verdict {
    let bin = env!("CARGO_BIN_EXE_cantor-spectra");
    let configs: [&[&str]; 4] = [
        &["spectrum"],
        &["staircase", "--order", "3", "--mu", "120", "--engine", "tm"],
        &["states", "--order", "2", "--mu", "50", "--eps", "-0.8"],
        &["sweep", "--order", "2", "--mu-list", "10,40,160"],
    ];
    let mut identical = 0;
    for args in configs {
        let a = Command::new(bin).args(args).output().unwrap();
        let b = Command::new(bin).args(args).output().unwrap();
        if a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout {
            identical += 1;
        }
    }
    let mut round_trips = 0;
    for order in 0..=10 {
        let p = cantor(order);
        let back = parse_potential(&serialize_potential(&p)).unwrap();
        let bits = |q: &PiecewisePotential| {
            q.breakpoints()
                .iter()
                .chain(q.values())
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        if bits(&back) == bits(&p) {
            round_trips += 1;
        }
    }
    let elapsed = suite_start.elapsed().as_secs_f64();
    check(
        identical == configs.len() && round_trips == 11 && elapsed < 300.0,
        format!(
            "{identical}/{} configs byte-identical over two runs; {round_trips}/11 potentials round-trip bit-exactly; \
             acceptance suite {elapsed:.1} s (< 300 s)",
            configs.len()
        ),
    )
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    let criteria: [Criterion; 8] = [
        ("AC1", "analytic box oracle", Box::new(ac1)),
        ("AC2", "cross-engine equivalence", Box::new(ac2)),
        ("AC3", "dense brute-force oracle", Box::new(ac3)),
        ("AC4", "staircase properties", Box::new(ac4)),
        ("AC5", "mu = 300 pair in (-0.33, -0.30]", Box::new(ac5)),
        ("AC6", "clustering of the lowest 16", Box::new(ac6)),
        ("AC7", "semiclassical trend", Box::new(ac7)),
        (
            "AC8",
            "determinism and round trips",
            Box::new(move || ac8(suite_start)),
        ),
    ];
    let mut failed = 0;
    for (id, title, run) in &criteria {
        let start = Instant::now();
        let verdict = panic::catch_unwind(panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("{id} PASS {title} [{secs:.1} s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id} FAIL {title} [{secs:.1} s]: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
