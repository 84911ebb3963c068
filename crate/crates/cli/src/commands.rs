//! Subcommand implementations.
//!
//! Each `cmd_*` function owns one subcommand end to end: resolve inputs
//! (flags beat config-file fields, which beat defaults), run the
//! simulation, render the report, and map failures onto the exit-code
//! contract (1 for input problems, 2 for violated invariants or
//! tolerances).

use std::path::Path;

use serde::Serialize;

use jrsp_core::{
    build_bases, build_bases_from_table, build_resource, compare, correction_for_r1, eta_grid,
    expansion_verify, fidelity_analytic_printed, fidelity_numeric_given, joint_measure,
    kraus_set, noisy_resource_state, postselect_output, random_target, seeded_rng,
    signed_permutation_table, special_case_constraints, success_probability, FidelityReport,
    NoiseError, NoiseKind, OutcomeRecord, PauliOp, SuccessMode, TargetState,
};

use crate::config::{self, OutputFormat, RunConfig};
use crate::format::{csv_record, sig12};
use crate::{
    resolve_seed, CliError, CompareArgs, Fig2Args, RunArgs, SweepArgs, TargetArgs, VerifyArgs,
};

/// Mandated agreement tolerance for the damping families in `compare`.
const COMPARE_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// A target state plus the seed it was drawn from (None when explicit).
struct ResolvedTarget {
    target: TargetState,
    seed: Option<u64>,
}

/// Flag/config/default resolution for the target state.
///
/// Explicit amplitudes (flag or config) win; otherwise a random target is
/// drawn from the resolved seed so repeated invocations with the same seed
/// reproduce the same report bytes.
fn resolve_target(
    args: &TargetArgs,
    cfg: &RunConfig,
    seed_flag: Option<u64>,
) -> Result<ResolvedTarget, CliError> {
    let allow = args.allow_unnormalized || cfg.allow_unnormalized.unwrap_or(false);
    let alphas = args.alphas.as_deref().or(cfg.alphas.as_deref());
    let phis = args.phis.as_deref().or(cfg.phis.as_deref());
    match (alphas, phis) {
        (Some(alphas), phis) => Ok(ResolvedTarget {
            target: config::target_from_parts(alphas, phis, allow)?,
            seed: None,
        }),
        (None, Some(_)) => Err(CliError::input(
            "--phis requires --alphas (or alphas in the config file)",
        )),
        (None, None) => {
            let seed = resolve_seed(seed_flag)?;
            Ok(ResolvedTarget {
                target: random_target(&mut seeded_rng(seed)),
                seed: Some(seed),
            })
        }
    }
}

/// Flag/config/default resolution for the η grid (defaults 0, 1, 0.05).
fn resolve_grid(
    start: Option<f64>,
    end: Option<f64>,
    step: Option<f64>,
    cfg: &RunConfig,
) -> Result<Vec<f64>, CliError> {
    let start = start.or(cfg.eta_start).unwrap_or(0.0);
    let end = end.or(cfg.eta_end).unwrap_or(1.0);
    let step = step.or(cfg.eta_step).unwrap_or(0.05);
    eta_grid(start, end, step).map_err(|err| CliError::input(err.to_string()))
}

/// Noise-layer failures at report time: grid/rate problems are the
/// caller's input; anything deeper is a violated numerical invariant.
fn map_noise(err: NoiseError) -> CliError {
    match &err {
        NoiseError::EtaOutOfRange { .. }
        | NoiseError::InvalidGrid { .. }
        | NoiseError::Protocol(_) => CliError::input(err.to_string()),
        _ => CliError::violation(err.to_string()),
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports are serializable");
    text.push('\n');
    text
}

/// Write to the path when given, stdout otherwise.
fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|err| CliError::input(format!("cannot write {}: {err}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn record(checks: &mut Vec<Check>, name: &'static str, passed: bool, detail: String) {
    checks.push(Check {
        name,
        passed,
        detail,
    });
}

/// Trace of the correlated-trio channel output on the pure entangled
/// resource, in closed form with β = 1 − η. The shared-index construction
/// deliberately drops cross-index branches, so for η > 0 these are all
/// strictly below 1; `verify` checks conservation against these accounts
/// rather than against the trace-preservation of an uncorrelated channel.
fn expected_channel_trace(kind: NoiseKind, eta: f64) -> f64 {
    let b = 1.0 - eta;
    match kind {
        NoiseKind::AmplitudeDamping => {
            ((1.0 + b * b).powi(3) + 2.0 * eta.powi(3) * b.powi(3) + eta.powi(6)) / 8.0
        }
        NoiseKind::PhaseDamping => {
            b.powi(6) + 0.5 * eta.powi(3) * b.powi(3) + 0.25 * eta.powi(6)
        }
        NoiseKind::Depolarizing => (b.powi(3) + eta.powi(3) / 9.0).powi(2),
    }
}

/// Rescale a copy of `base` so the amplitude pairs coupled by outcome row
/// `r` are equal, which is the symmetry that makes rows 1 and r
/// recoverable.
fn symmetrized_for_row(base: &TargetState, r: usize) -> Result<TargetState, CliError> {
    let mut alphas = *base.alphas();
    for (lhs, rhs) in special_case_constraints(r) {
        let avg = 0.5 * (alphas[lhs - 1] + alphas[rhs - 1]);
        alphas[lhs - 1] = avg;
        alphas[rhs - 1] = avg;
    }
    let norm = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in &mut alphas {
        *a /= norm;
    }
    TargetState::new(alphas, *base.phis())
        .map_err(|err| CliError::violation(format!("symmetrized target invalid: {err}")))
}

pub fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    let mut rng = seeded_rng(seed);
    let mut table = signed_permutation_table();
    if args.corrupt_sign {
        table[1].corrupt_sign(0);
    }

    let default_target = TargetState::equal_amplitudes();
    let mut targets = vec![default_target.clone()];
    targets.extend((0..args.trials).map(|_| random_target(&mut rng)));

    let mut checks = Vec::new();
    let resource = build_resource();

    // Resource construction: eight equal basis amplitudes on the triple
    // support, unit norm.
    {
        let state = resource.state();
        let expected_amp = 0.5 / 2.0f64.sqrt();
        let mut worst = (state.norm() - 1.0).abs();
        let mut support = 0usize;
        for &amp in state.amplitudes() {
            if amp.norm() > 1e-15 {
                support += 1;
                worst = worst.max((amp.re - expected_amp).abs()).max(amp.im.abs());
            }
        }
        record(
            &mut checks,
            "resource-construction",
            support == 8 && worst <= 1e-12,
            format!("support {support} (want 8), worst deviation {worst:.1e}"),
        );
    }

    // One pass per target covers the basis, expansion, outcome, and
    // recovery invariants.
    let mut worst_gram = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut worst_prob_dev = 0.0f64;
    let mut worst_r1_deficit = 0.0f64;
    let mut r1_masks_ok = true;
    let mut generic_counts_ok = true;
    let mut worst_generic_dev = 0.0f64;
    for (index, target) in targets.iter().enumerate() {
        let bases = build_bases_from_table(target, &table)
            .map_err(|err| CliError::input(format!("cannot build bases: {err}")))?;
        let (alice_dev, bob_dev) = bases.gram_deviation();
        worst_gram = worst_gram.max(alice_dev).max(bob_dev);
        let residual = expansion_verify(&resource, &bases)
            .map_err(|err| CliError::violation(err.to_string()))?;
        worst_residual = worst_residual.max(residual);
        let records = joint_measure(&resource, &bases)
            .map_err(|err| CliError::violation(err.to_string()))?;
        for rec in &records {
            worst_prob_dev = worst_prob_dev.max((rec.probability - 1.0 / 64.0).abs());
            if rec.r == 1 {
                match &rec.correction {
                    Some(correction) => {
                        if !correction
                            .ops()
                            .iter()
                            .all(|op| matches!(op, PauliOp::I | PauliOp::Z))
                        {
                            r1_masks_ok = false;
                        }
                        worst_r1_deficit = worst_r1_deficit.max(1.0 - rec.recovery_fidelity);
                    }
                    None => {
                        r1_masks_ok = false;
                        worst_r1_deficit = 1.0;
                    }
                }
            }
        }
        if index > 0 {
            let recovered = records.iter().filter(|rec| rec.correction.is_some()).count();
            if recovered != 8 {
                generic_counts_ok = false;
            }
            let success: f64 = records
                .iter()
                .filter(|rec| rec.correction.is_some())
                .map(|rec| rec.probability)
                .sum();
            worst_generic_dev = worst_generic_dev.max((success - 0.125).abs());
        }
    }
    let described = format!("{} targets", targets.len());
    record(
        &mut checks,
        "basis-orthonormality",
        worst_gram <= 1e-12,
        format!("{described}, worst Gram deviation {worst_gram:.1e}"),
    );
    record(
        &mut checks,
        "expansion-completeness",
        worst_residual <= 1e-12,
        format!("{described}, worst reconstruction residual {worst_residual:.1e}"),
    );
    record(
        &mut checks,
        "outcome-uniformity",
        worst_prob_dev <= 1e-12,
        format!("{described}, worst |p - 1/64| = {worst_prob_dev:.1e}"),
    );
    record(
        &mut checks,
        "r1-correction-recovery",
        r1_masks_ok && worst_r1_deficit <= 1e-12,
        format!(
            "{described}, Z-type masks only: {r1_masks_ok}, worst fidelity deficit {worst_r1_deficit:.1e}"
        ),
    );
    if targets.len() > 1 {
        record(
            &mut checks,
            "generic-recovery-rate",
            generic_counts_ok && worst_generic_dev <= 1e-12,
            format!(
                "{} random targets, 8/64 recoverable: {generic_counts_ok}, worst |p_succ - 1/8| = {worst_generic_dev:.1e}",
                targets.len() - 1
            ),
        );
    }

    // Constrained success rates: uniform amplitudes and all-zero phases
    // recover every outcome; each row-r amplitude pairing recovers a
    // quarter.
    {
        let mut worst = (success_probability(&default_target, SuccessMode::EqualAmplitude)
            .map_err(|err| CliError::violation(err.to_string()))?
            - 1.0)
            .abs();
        let base = if targets.len() > 1 {
            targets[1].clone()
        } else {
            random_target(&mut rng)
        };
        let zero_phase = TargetState::new(*base.alphas(), [0.0; 8])
            .map_err(|err| CliError::violation(err.to_string()))?;
        worst = worst.max(
            (success_probability(&zero_phase, SuccessMode::ZeroPhase)
                .map_err(|err| CliError::violation(err.to_string()))?
                - 1.0)
                .abs(),
        );
        let mut worst_quarter = 0.0f64;
        for r in 2..=8 {
            let constrained = symmetrized_for_row(&base, r)?;
            let success = success_probability(&constrained, SuccessMode::Table1(r))
                .map_err(|err| CliError::violation(err.to_string()))?;
            worst_quarter = worst_quarter.max((success - 0.25).abs());
        }
        record(
            &mut checks,
            "constrained-success-rates",
            worst <= 1e-12 && worst_quarter <= 1e-12,
            format!(
                "full-recovery deviation {worst:.1e}, row-constrained |p - 1/4| worst {worst_quarter:.1e}"
            ),
        );
    }

    // Kraus completeness across the rate range.
    {
        let mut worst = 0.0f64;
        for kind in NoiseKind::all() {
            for step in 0..=10 {
                let eta = f64::from(step) / 10.0;
                let set = kraus_set(kind, eta).map_err(map_noise)?;
                worst = worst.max(set.completeness_deviation());
            }
        }
        record(
            &mut checks,
            "kraus-completeness",
            worst <= 1e-12,
            format!("3 models x 11 rates, worst |sum K'K - I| = {worst:.1e}"),
        );
    }

    // Channel trace accounting: the correlated trio construction keeps the
    // output Hermitian and sheds exactly the cross-index weight, so the
    // trace must match its closed form (1 only at η = 0).
    {
        let mut worst = 0.0f64;
        for kind in NoiseKind::all() {
            for eta in [0.25, 0.75] {
                let set = kraus_set(kind, eta).map_err(map_noise)?;
                let noisy = noisy_resource_state(&set).map_err(map_noise)?;
                let trace = noisy.trace();
                worst = worst
                    .max((trace.re - expected_channel_trace(kind, eta)).abs())
                    .max(trace.im.abs())
                    .max(noisy.hermiticity_deviation());
            }
        }
        record(
            &mut checks,
            "channel-trace-accounting",
            worst <= 1e-12,
            format!("3 models x 2 rates, worst |trace - closed form| = {worst:.1e}"),
        );
    }

    // At η = 0 every channel is the identity: post-selection must return
    // the target exactly, with unit conditional trace.
    {
        let mut worst = 0.0f64;
        for kind in NoiseKind::all() {
            let set = kraus_set(kind, 0.0).map_err(map_noise)?;
            let noisy = noisy_resource_state(&set).map_err(map_noise)?;
            for n in 1..=8 {
                let fidelity =
                    fidelity_numeric_given(&noisy, &default_target, n).map_err(map_noise)?;
                worst = worst.max((fidelity - 1.0).abs());
                let output = postselect_output(&noisy, &default_target, n, &correction_for_r1(n))
                    .map_err(map_noise)?;
                let trace = output.rho_out().trace();
                worst = worst.max((trace.re - 1.0).abs()).max(trace.im.abs());
            }
        }
        record(
            &mut checks,
            "noiseless-postselection",
            worst <= 1e-9,
            format!("3 models x 8 outcomes at eta = 0, worst deviation {worst:.1e}"),
        );
    }

    // Damping families: simulated fidelity matches the closed forms.
    {
        let spot_target = if targets.len() > 1 {
            targets[1].clone()
        } else {
            default_target.clone()
        };
        let mut worst = 0.0f64;
        for kind in [NoiseKind::AmplitudeDamping, NoiseKind::PhaseDamping] {
            for eta in [0.3, 0.9] {
                let set = kraus_set(kind, eta).map_err(map_noise)?;
                let noisy = noisy_resource_state(&set).map_err(map_noise)?;
                for target in [&default_target, &spot_target] {
                    let numeric = fidelity_numeric_given(&noisy, target, 1).map_err(map_noise)?;
                    let analytic =
                        fidelity_analytic_printed(target, kind, eta).map_err(map_noise)?;
                    worst = worst.max((numeric - analytic).abs());
                }
            }
        }
        record(
            &mut checks,
            "damping-analytic-agreement",
            worst <= COMPARE_TOL,
            format!("ad/pd at eta in {{0.3, 0.9}}, worst |numeric - analytic| = {worst:.1e}"),
        );
    }

    let mut first_failure: Option<&'static str> = None;
    for check in &checks {
        let verdict = if check.passed { "pass" } else { "FAIL" };
        println!("{verdict}  {:<28} {}", check.name, check.detail);
        if !check.passed && first_failure.is_none() {
            first_failure = Some(check.name);
        }
    }
    let passed = checks.iter().filter(|check| check.passed).count();
    println!(
        "verify: {passed}/{} invariants hold ({} targets, seed {seed})",
        checks.len(),
        targets.len()
    );
    match first_failure {
        None => Ok(()),
        Some(name) => Err(CliError::violation(format!("invariant violated: {name}"))),
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunReport<'a> {
    /// Seed used to draw the target (absent when given explicitly).
    seed: Option<u64>,
    target: &'a TargetState,
    /// Probability-weighted fraction of outcomes with a perfect correction.
    success_probability: f64,
    /// Number of the 64 outcomes that admit a perfect correction.
    recoverable_outcomes: usize,
    /// All 64 records, Alice-major (r = 1..8), Bob-minor (n = 1..8).
    outcomes: &'a [OutcomeRecord],
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.target.config.as_deref())?;
    let resolved = resolve_target(&args.target, &cfg, args.seed)?;
    let resource = build_resource();
    let bases = build_bases(&resolved.target)
        .map_err(|err| CliError::input(format!("invalid target state: {err}")))?;
    let records =
        joint_measure(&resource, &bases).map_err(|err| CliError::violation(err.to_string()))?;
    let recoverable = records.iter().filter(|rec| rec.correction.is_some()).count();
    let success: f64 = records
        .iter()
        .filter(|rec| rec.correction.is_some())
        .map(|rec| rec.probability)
        .sum();
    let report = RunReport {
        seed: resolved.seed,
        target: &resolved.target,
        success_probability: success,
        recoverable_outcomes: recoverable,
        outcomes: &records,
    };
    let out = args.out.as_deref().or(cfg.output_path.as_deref());
    write_text(out, &to_pretty_json(&report))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepRow {
    model: &'static str,
    eta: f64,
    f_analytic: f64,
    f_numeric: f64,
    abs_err: f64,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    model: &'static str,
    seed: Option<u64>,
    target: &'a TargetState,
    rows: &'a [SweepRow],
}

fn sweep_rows(
    target: &TargetState,
    kind: NoiseKind,
    grid: &[f64],
) -> Result<Vec<SweepRow>, CliError> {
    let mut rows = Vec::with_capacity(grid.len());
    for &eta in grid {
        let set = kraus_set(kind, eta).map_err(map_noise)?;
        let noisy = noisy_resource_state(&set).map_err(map_noise)?;
        let f_numeric = fidelity_numeric_given(&noisy, target, 1).map_err(map_noise)?;
        let f_analytic = fidelity_analytic_printed(target, kind, eta).map_err(map_noise)?;
        rows.push(SweepRow {
            model: kind.code(),
            eta,
            f_analytic,
            f_numeric,
            abs_err: (f_analytic - f_numeric).abs(),
        });
    }
    Ok(rows)
}

fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut text = String::from("model,eta,f_analytic,f_numeric,abs_err\n");
    for row in rows {
        text.push_str(&csv_record(&[
            row.model,
            &sig12(row.eta),
            &sig12(row.f_analytic),
            &sig12(row.f_numeric),
            &sig12(row.abs_err),
        ]));
    }
    text
}

pub fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.target.config.as_deref())?;
    let kind = args
        .model
        .or(cfg.model)
        .ok_or_else(|| CliError::input("missing --model (ad, pd, or dp)"))?;
    let grid = resolve_grid(args.eta_start, args.eta_end, args.eta_step, &cfg)?;
    let resolved = resolve_target(&args.target, &cfg, args.seed)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_path.clone())
        .ok_or_else(|| CliError::input("missing --out PATH"))?;
    let format = args.format.or(cfg.output_format).unwrap_or(OutputFormat::Csv);
    let rows = sweep_rows(&resolved.target, kind, &grid)?;
    let text = match format {
        OutputFormat::Csv => render_sweep_csv(&rows),
        OutputFormat::Json => to_pretty_json(&SweepReport {
            model: kind.code(),
            seed: resolved.seed,
            target: &resolved.target,
            rows: &rows,
        }),
    };
    write_text(Some(&out), &text)
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OrderingReport {
    /// What is being checked, spelled out for report readers.
    description: &'static str,
    eta_start: f64,
    eta_end: f64,
    holds: bool,
    /// Smallest pd-minus-dp margin over the grid (negative = violated).
    min_margin: f64,
    /// Rate at which the smallest margin occurs.
    at_eta: f64,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    tolerance: f64,
    seed: Option<u64>,
    target: &'a TargetState,
    reports: &'a [FidelityReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    ordering: Option<OrderingReport>,
}

/// The fixed-configuration ordering statement: with uniform amplitudes,
/// the depolarizing closed form stays at or below the phase-damping one
/// on every grid point in [0.55, 1]. (Outside that range the ordering
/// reverses, so the check is deliberately restricted.)
fn ordering_check() -> Result<OrderingReport, CliError> {
    let target = TargetState::equal_amplitudes();
    let grid = eta_grid(0.55, 1.0, 0.05).map_err(map_noise)?;
    let mut min_margin = f64::INFINITY;
    let mut at_eta = grid[0];
    for &eta in &grid {
        let pd = fidelity_analytic_printed(&target, NoiseKind::PhaseDamping, eta)
            .map_err(map_noise)?;
        let dp = fidelity_analytic_printed(&target, NoiseKind::Depolarizing, eta)
            .map_err(map_noise)?;
        let margin = pd - dp;
        if margin < min_margin {
            min_margin = margin;
            at_eta = eta;
        }
    }
    Ok(OrderingReport {
        description: "closed-form F_dp <= F_pd with uniform amplitudes",
        eta_start: 0.55,
        eta_end: 1.0,
        holds: min_margin >= 0.0,
        min_margin,
        at_eta,
    })
}

pub fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.target.config.as_deref())?;
    let kinds: Vec<NoiseKind> = if args.all {
        NoiseKind::all().to_vec()
    } else {
        vec![args
            .model
            .or(cfg.model)
            .ok_or_else(|| CliError::input("pass --model (ad, pd, or dp) or --all"))?]
    };
    let grid = resolve_grid(args.eta_start, args.eta_end, args.eta_step, &cfg)?;
    let resolved = resolve_target(&args.target, &cfg, args.seed)?;

    let mut reports = Vec::with_capacity(kinds.len());
    for kind in &kinds {
        reports.push(compare(&resolved.target, *kind, &grid).map_err(map_noise)?);
    }

    let mut violations = Vec::new();
    for report in &reports {
        if report.kind != NoiseKind::Depolarizing && report.max_abs_err > COMPARE_TOL {
            violations.push(format!(
                "{}: max |numeric - analytic| = {:.3e} exceeds {COMPARE_TOL:.0e}",
                report.kind.code(),
                report.max_abs_err
            ));
        }
    }
    let ordering = if args.all {
        let ordering = ordering_check()?;
        if !ordering.holds {
            violations.push(format!(
                "dp-vs-pd ordering violated: margin {:.3e} at eta = {}",
                ordering.min_margin, ordering.at_eta
            ));
        }
        Some(ordering)
    } else {
        None
    };

    let report = CompareReport {
        tolerance: COMPARE_TOL,
        seed: resolved.seed,
        target: &resolved.target,
        reports: &reports,
        ordering,
    };
    let out = args.out.as_deref().or(cfg.output_path.as_deref());
    write_text(out, &to_pretty_json(&report))?;

    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::violation(violations.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// fig2
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Fig2Row {
    alpha1: f64,
    eta: f64,
    f_analytic: f64,
}

#[derive(Serialize)]
struct Fig2Report<'a> {
    model: &'static str,
    rows: &'a [Fig2Row],
}

/// The 21-point α₁ axis: the uniform 0..1 grid with the 0.35 entry
/// replaced by 1/(2√2), so the surface contains the exact row where all
/// eight amplitudes are equal (the row whose endpoints are the anchor
/// values 1 and 1/32).
fn fig2_alpha_axis() -> Result<Vec<f64>, CliError> {
    let mut axis = eta_grid(0.0, 1.0, 0.05).map_err(map_noise)?;
    let anchor = 0.5 / 2.0f64.sqrt();
    for value in &mut axis {
        if (*value - 0.35).abs() < 1e-9 {
            *value = anchor;
        }
    }
    Ok(axis)
}

pub fn cmd_fig2(args: Fig2Args) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.config.as_deref())?;
    let kind = args
        .model
        .or(cfg.model)
        .ok_or_else(|| CliError::input("missing --model (ad or pd)"))?;
    if kind == NoiseKind::Depolarizing {
        return Err(CliError::input(
            "no (alpha1, eta) surface is defined for the depolarizing model; use ad or pd",
        ));
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_path.clone())
        .ok_or_else(|| CliError::input("missing --out PATH"))?;
    let format = args.format.or(cfg.output_format).unwrap_or(OutputFormat::Csv);

    let alpha_axis = fig2_alpha_axis()?;
    let eta_axis = eta_grid(0.0, 1.0, 0.05).map_err(map_noise)?;
    let fixed = 0.5 / 2.0f64.sqrt();
    let mut rows = Vec::with_capacity(alpha_axis.len() * eta_axis.len());
    for &alpha1 in &alpha_axis {
        let mut alphas = [fixed; 8];
        alphas[0] = alpha1;
        let target = TargetState::new_unnormalized(alphas, [0.0; 8])
            .map_err(|err| CliError::input(err.to_string()))?;
        for &eta in &eta_axis {
            let f_analytic =
                fidelity_analytic_printed(&target, kind, eta).map_err(map_noise)?;
            rows.push(Fig2Row {
                alpha1,
                eta,
                f_analytic,
            });
        }
    }

    let text = match format {
        OutputFormat::Csv => {
            let mut text = String::from("alpha1,eta,f_analytic\n");
            for row in &rows {
                text.push_str(&csv_record(&[
                    &sig12(row.alpha1),
                    &sig12(row.eta),
                    &sig12(row.f_analytic),
                ]));
            }
            text
        }
        OutputFormat::Json => to_pretty_json(&Fig2Report {
            model: kind.code(),
            rows: &rows,
        }),
    };
    write_text(Some(&out), &text)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_traces_are_unit_only_at_zero_rate() {
        for kind in NoiseKind::all() {
            assert!((expected_channel_trace(kind, 0.0) - 1.0).abs() < 1e-15);
            assert!(expected_channel_trace(kind, 0.4) < 1.0);
        }
        // Frozen spot value: amplitude damping at eta = 0.1.
        assert!((expected_channel_trace(NoiseKind::AmplitudeDamping, 0.1) - 0.7414).abs() < 5e-5);
    }

    #[test]
    fn ordering_check_holds_with_positive_margin() {
        let report = ordering_check().unwrap();
        assert!(report.holds);
        assert!(report.min_margin > 4e-4 && report.min_margin < 8e-4);
        assert!((report.at_eta - 0.55).abs() < 1e-12);
    }

    #[test]
    fn fig2_alpha_axis_contains_the_anchor_point() {
        let axis = fig2_alpha_axis().unwrap();
        assert_eq!(axis.len(), 21);
        let anchor = 0.5 / 2.0f64.sqrt();
        assert!(axis.iter().any(|&v| v == anchor));
        assert!(axis.iter().all(|&v| (v - 0.35).abs() > 1e-3));
        assert!(axis.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn symmetrizing_enforces_the_row_pairing() {
        let base = random_target(&mut seeded_rng(9));
        for r in 2..=8 {
            let sym = symmetrized_for_row(&base, r).unwrap();
            for (lhs, rhs) in special_case_constraints(r) {
                let diff = (sym.alphas()[lhs - 1] - sym.alphas()[rhs - 1]).abs();
                assert!(diff < 1e-15, "row {r} pair ({lhs},{rhs}) differs by {diff}");
            }
            assert!(sym.norm_residual() < 1e-12);
        }
    }

    #[test]
    fn sweep_rows_carry_consistent_abs_err() {
        let target = TargetState::equal_amplitudes();
        let rows = sweep_rows(&target, NoiseKind::PhaseDamping, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.model, "pd");
            assert!((row.abs_err - (row.f_analytic - row.f_numeric).abs()).abs() < 1e-18);
        }
        assert!((rows[0].f_numeric - 1.0).abs() < 1e-12);
        assert!((rows[2].f_numeric - 0.03125).abs() < 1e-12);
    }
}
