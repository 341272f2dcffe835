//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qbell_core::commands::{self, CommandOutput, OutputFormat, RunConfig, PRESET_NAMES};
use qbell_core::discrimination::symmetry_deviation;
use qbell_core::numerics::expectation;
use qbell_core::sweep::SweepResult;
use qbell_core::{
    build_pure_state, build_thermal_state, entanglement_threshold_scan, fef_closed_form,
    gram_matrix, minimax_error_symmetric, numeric_gram_matrix, DensityMatrix, FefSearch,
    QuasiBellLabel, ThermalParameter, TruncationSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn th(x: f64) -> ThermalParameter {
    ThermalParameter::new(x).expect("nonnegative theta")
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Preset results, computed once and shared between criteria.
#[derive(Default)]
struct PresetCache {
    runs: BTreeMap<&'static str, (SweepResult, String)>,
}

impl PresetCache {
    fn get(&mut self, name: &'static str) -> Result<&(SweepResult, String), String> {
        if !self.runs.contains_key(name) {
            let run = run_preset(name)?;
            self.runs.insert(name, run);
        }
        Ok(&self.runs[name])
    }
}

fn run_preset(name: &str) -> Result<(SweepResult, String), String> {
    let cfg = RunConfig::from_preset(name).map_err(err)?;
    match commands::run(&cfg).map_err(err)? {
        CommandOutput::Table(t) => {
            let csv = CommandOutput::Table(t.clone())
                .render(OutputFormat::Csv)
                .map_err(err)?;
            Ok((t, csv))
        }
        CommandOutput::Document(_) => Err(format!("preset {name} did not produce a table")),
    }
}

fn pure_limit_identity() -> Outcome {
    let mut worst = 0.0_f64;
    for label in QuasiBellLabel::ALL {
        for beta in [0.5, 1.0, 2.0] {
            let t =
                TruncationSpec::heuristic(re(beta), ThermalParameter::ZERO, 1e-8).map_err(err)?;
            let rho =
                build_thermal_state(label, re(beta), ThermalParameter::ZERO, t).map_err(err)?;
            let pure =
                DensityMatrix::from_pure(&build_pure_state(label, re(beta), t).map_err(err)?);
            let dev = (rho.matrix() - pure.matrix()).camax();
            worst = worst.max(dev);
            check(dev <= 1e-10, || {
                format!("{label} beta {beta}: deviation {dev:e}")
            })?;
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

fn pure_limit_error() -> Outcome {
    let mut worst13 = 0.0_f64;
    let mut worst24 = 0.0_f64;
    for beta in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let t = TruncationSpec::heuristic(re(beta), ThermalParameter::ZERO, 1e-8).map_err(err)?;
        let build = |l| build_thermal_state(l, re(beta), ThermalParameter::ZERO, t).map_err(err);
        let e13 =
            minimax_error_symmetric(&build(QuasiBellLabel::Phi1)?, &build(QuasiBellLabel::Phi3)?)
                .map_err(err)?
                .value();
        let x = (-4.0 * beta * beta).exp();
        let expected = x / (1.0 + x);
        worst13 = worst13.max((e13 - expected).abs());
        check((e13 - expected).abs() <= 1e-8, || {
            format!("(phi1, phi3) beta {beta}: {e13} vs {expected}")
        })?;
        let e24 =
            minimax_error_symmetric(&build(QuasiBellLabel::Phi2)?, &build(QuasiBellLabel::Phi4)?)
                .map_err(err)?
                .value();
        worst24 = worst24.max(e24);
        check(e24 <= 1e-9, || format!("(phi2, phi4) beta {beta}: {e24:e}"))?;
    }
    Ok(format!(
        "|Pe13 - closed form| <= {worst13:.2e}, Pe24 <= {worst24:.2e}"
    ))
}

fn fef_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_531);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let alpha = rng.random_range(0.2..3.0);
        let beta = rng.random_range(0.2..3.0);
        let theta = rng.random_range(0.0..1.0);
        let tol = 1e-8;
        let t = TruncationSpec::fitted(re(beta), th(theta), tol)
            .map_err(err)?
            .union(&TruncationSpec::fitted(re(alpha), ThermalParameter::ZERO, tol).map_err(err)?);
        let rho = build_thermal_state(QuasiBellLabel::Phi2, re(beta), th(theta), t).map_err(err)?;
        let psi = build_pure_state(QuasiBellLabel::Phi2, re(alpha), t).map_err(err)?;
        let brute = expectation(&rho, &psi).map_err(err)?;
        let closed = fef_closed_form(alpha, beta, th(theta)).map_err(err)?;
        let dev = (brute - closed).abs();
        worst = worst.max(dev);
        check(dev <= 1e-7, || {
            format!("({alpha}, {beta}, {theta}): {closed} vs {brute}")
        })?;
    }
    Ok(format!("50 triples, max deviation {worst:.2e}"))
}

fn fig1_properties(cache: &mut PresetCache) -> Outcome {
    let (a, _) = cache.get("fig1a")?.clone();
    let (b, _) = cache.get("fig1b")?.clone();
    let (n1, n2, p) = (0, 1, 2);
    let worst_even = a
        .rows
        .iter()
        .filter(|r| {
            ((r[n1].as_f64().unwrap() + r[n2].as_f64().unwrap()) as usize).is_multiple_of(2)
        })
        .map(|r| r[p].as_f64().unwrap())
        .fold(0.0_f64, f64::max);
    check(worst_even <= 1e-12, || {
        format!("fig1a even-parity probability {worst_even:e}")
    })?;
    let moment = |t: &SweepResult| -> f64 {
        t.rows
            .iter()
            .map(|r| r[n2].as_f64().unwrap().powi(2) * r[p].as_f64().unwrap())
            .sum()
    };
    let (ma, mb) = (moment(&a), moment(&b));
    check(mb > ma, || {
        format!("n2 second moment fig1b {mb} <= fig1a {ma}")
    })?;
    let purity = |t: &SweepResult| t.metadata["purity"].as_f64().unwrap();
    let (pa, pb) = (purity(&a), purity(&b));
    check(pb < pa, || format!("purity fig1b {pb} >= fig1a {pa}"))?;
    Ok(format!(
        "even mass <= {worst_even:.1e}; <n2^2> {ma:.4} -> {mb:.4}; purity {pa:.6} -> {pb:.6}"
    ))
}

fn fig2_properties() -> Outcome {
    let thetas: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    let scan = entanglement_threshold_scan(&[1.0], &thetas, FefSearch::default()).map_err(err)?;
    let fef: Vec<f64> = scan.points.iter().map(|p| p.fef).collect();
    for (i, w) in fef.windows(2).enumerate() {
        check(w[1] <= w[0], || {
            format!("fef rises from theta {} to {}", thetas[i], thetas[i + 1])
        })?;
    }
    let bits0 = scan.points[0].bound_bits;
    check((bits0 - 1.0).abs() <= 1e-9, || {
        format!("bound at theta 0 is {bits0}")
    })?;
    let threshold = scan.thresholds[0]
        .theta
        .ok_or_else(|| "fef never drops below 1/2".to_string())?;
    check((0.6..=0.8).contains(&threshold), || {
        format!("threshold theta {threshold}")
    })?;
    Ok(format!(
        "fef {:.4} -> {:.4}, bound(0) = {bits0:.12}, threshold theta = {threshold}",
        fef[0], fef[9]
    ))
}

fn fig3_properties(cache: &mut PresetCache) -> Outcome {
    const SLACK: f64 = 1e-9;
    // (pair, beta bits, theta bits) -> pe
    let mut pe: BTreeMap<(String, u64, u64), f64> = BTreeMap::new();
    let mut betas = Vec::new();
    let mut thetas = Vec::new();
    let mut max_dim = 0;
    let mut max_mean_n = 0.0_f64;
    for name in ["fig3b1", "fig3b2", "fig3b3", "fig3b4", "fig3b5", "fig3b6"] {
        let (t, _) = cache.get(name)?;
        let col = |c: &str| t.column_index(c).unwrap();
        for r in &t.rows {
            let pair = r[col("pair")].as_str().unwrap().to_string();
            let beta = r[col("beta")].as_f64().unwrap();
            let theta = r[col("theta")].as_f64().unwrap();
            let dim = (r[col("n1_max")].as_f64().unwrap() as usize + 1)
                * (r[col("n2_max")].as_f64().unwrap() as usize + 1);
            max_dim = max_dim.max(dim);
            max_mean_n = max_mean_n.max(r[col("mean_n")].as_f64().unwrap());
            if !betas.contains(&beta) {
                betas.push(beta);
            }
            if !thetas.contains(&theta) {
                thetas.push(theta);
            }
            pe.insert(
                (pair, beta.to_bits(), theta.to_bits()),
                r[col("pe")].as_f64().unwrap(),
            );
        }
    }
    check(max_mean_n <= 8.0, || format!("<n> reaches {max_mean_n}"))?;
    check(max_dim <= 3600, || {
        format!("basis dimension reaches {max_dim}")
    })?;
    let get = |pair: &str, b: f64, t: f64| pe[&(pair.to_string(), b.to_bits(), t.to_bits())];
    let mut gaps = Vec::new();
    for &t in &thetas {
        let mut gap = f64::NEG_INFINITY;
        for &b in &betas {
            let (e24, e13) = (get("phi24", b, t), get("phi13", b, t));
            check(e24 <= e13 + SLACK, || {
                format!("Pe24 {e24} > Pe13 {e13} at beta {b} theta {t}")
            })?;
            gap = gap.max(e13 - e24);
        }
        gaps.push(gap);
    }
    for (i, w) in gaps.windows(2).enumerate() {
        check(w[1] <= w[0] + SLACK, || {
            format!(
                "max gap grows from {} at theta {} to {} at theta {}",
                w[0],
                thetas[i],
                w[1],
                thetas[i + 1]
            )
        })?;
    }
    for &b in &betas {
        for w in thetas.windows(2) {
            let (e0, e1) = (get("phi24", b, w[0]), get("phi24", b, w[1]));
            check(e1 + SLACK >= e0, || {
                format!(
                    "Pe24 falls from {e0} to {e1} at beta {b}, theta {} -> {}",
                    w[0], w[1]
                )
            })?;
        }
    }
    let gap_text: Vec<String> = gaps.iter().map(|g| format!("{g:.4}")).collect();
    Ok(format!(
        "{} rows, max gap by theta [{}], max dim {max_dim}",
        pe.len(),
        gap_text.join(", ")
    ))
}

fn structural_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7_331);
    let points: Vec<(f64, f64)> = (0..24)
        .map(|_| (rng.random_range(0.2..2.0), rng.random_range(0.0..1.0)))
        .collect();
    let tol = 1e-8;
    let (mut herm, mut lowest, mut rot, mut gram, mut deficit) =
        (0.0_f64, f64::INFINITY, 0.0_f64, 0.0_f64, 0.0_f64);
    for &(beta, theta) in &points {
        let b = re(beta);
        let t = TruncationSpec::heuristic(b, th(theta), tol)
            .map_err(err)?
            .union(&TruncationSpec::fitted(b, th(theta), tol).map_err(err)?);
        let mut states = Vec::new();
        for label in QuasiBellLabel::ALL {
            let rho = build_thermal_state(label, b, th(theta), t).map_err(err)?;
            let h = rho.hermiticity_residual();
            let tr = rho.trace();
            let min = rho.min_eigenvalue().map_err(err)?;
            herm = herm.max(h);
            lowest = lowest.min(min);
            deficit = deficit.max(1.0 - tr);
            let at = || format!("{label} beta {beta:.4} theta {theta:.4}");
            check(h <= 1e-12, || format!("{}: asymmetry {h:e}", at()))?;
            // Trace can exceed 1 only by summation rounding.
            check(tr >= 1.0 - tol && tr <= 1.0 + 1e-12, || {
                format!("{}: trace {tr}", at())
            })?;
            check(min >= -1e-9, || format!("{}: min eigenvalue {min:e}", at()))?;
            states.push(rho);
        }
        for (from, to) in [(2, 0), (3, 1)] {
            let d = symmetry_deviation(&states[from], &states[to]).map_err(err)?;
            rot = rot.max(d);
            check(d <= 1e-10, || {
                format!("rotation phi{} -> phi{} deviation {d:e}", from + 1, to + 1)
            })?;
        }
        let gt = TruncationSpec::heuristic(b, ThermalParameter::ZERO, tol).map_err(err)?;
        let (ga, gn) = (
            gram_matrix(b).map_err(err)?,
            numeric_gram_matrix(b, gt).map_err(err)?,
        );
        for x in QuasiBellLabel::ALL {
            for y in QuasiBellLabel::ALL {
                let d = (ga.get(x, y) - gn.get(x, y)).norm();
                gram = gram.max(d);
                check(d <= 1e-8, || {
                    format!("Gram <{x}|{y}> at beta {beta}: {d:e}")
                })?;
            }
        }
    }
    Ok(format!(
        "{} points x 4 states; asym {herm:.1e}, min eig {lowest:.1e}, deficit {deficit:.1e}, rotation {rot:.1e}, Gram {gram:.1e}",
        points.len()
    ))
}

fn determinism(cache: &mut PresetCache) -> Outcome {
    for name in PRESET_NAMES {
        let first = cache.get(name)?.1.clone();
        let (_, second) = run_preset(name)?;
        check(first == second, || {
            format!("preset {name} differs between runs")
        })?;
    }
    Ok(format!(
        "{} presets byte-identical across two runs",
        PRESET_NAMES.len()
    ))
}

fn main() -> ExitCode {
    let mut cache = PresetCache::default();
    type Criterion<'a> = (
        &'a str,
        Option<Duration>,
        Box<dyn FnMut(&mut PresetCache) -> Outcome>,
    );
    let criteria: Vec<Criterion> = vec![
        (
            "noise-free limit equals pure projector",
            Some(Duration::from_secs(10)),
            Box::new(|_| pure_limit_identity()),
        ),
        (
            "noise-free error probabilities",
            Some(Duration::from_secs(30)),
            Box::new(|_| pure_limit_error()),
        ),
        (
            "closed-form FEF vs quadratic form",
            Some(Duration::from_secs(120)),
            Box::new(|_| fef_oracle()),
        ),
        (
            "photon-number distribution presets",
            Some(Duration::from_secs(30)),
            Box::new(fig1_properties),
        ),
        (
            "entanglement scan at beta = 1",
            Some(Duration::from_secs(120)),
            Box::new(|_| fig2_properties()),
        ),
        (
            "error-probability curves",
            Some(Duration::from_secs(600)),
            Box::new(fig3_properties),
        ),
        (
            "structural invariants battery",
            Some(Duration::from_secs(300)),
            Box::new(|_| structural_invariants()),
        ),
        ("preset determinism", None, Box::new(determinism)),
    ];
    let mut failures = 0;
    for (i, (name, limit, mut run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run(&mut cache);
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(detail), Some(l)) if elapsed > l => {
                Err(format!("{detail}; exceeded {}s", l.as_secs()))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {} ({name}): {detail} [{:.1}s]",
                i + 1,
                elapsed.as_secs_f64()
            ),
            Err(detail) => {
                failures += 1;
                println!(
                    "FAIL criterion {} ({name}): {detail} [{:.1}s]",
                    i + 1,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    println!("acceptance: {} failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
