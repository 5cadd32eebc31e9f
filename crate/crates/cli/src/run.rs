//! Scenario execution for each mode.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use curveflow::{
    check_forcing_bound, classify_monge_ampere, convexity_sufficient_condition, curve_of, evolve,
    mode_amplitudes, solve_steady, DiagnosticsRecord, EquationType, ForcingBoundMonitor,
    SupportField, Termination,
};

use crate::config::{Mode, RunConfig};
use crate::output::{series_csv, write_file, write_svg, JsonObject, SnapshotFile};

/// What a run produced and whether it reached its goal.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub success: bool,
    /// Human-readable outcome, e.g. the termination reason.
    pub outcome: String,
    pub files: Vec<PathBuf>,
    /// Time of the first sample violating `0 < F ≤ S² − 1` (evolve mode).
    pub first_bound_violation: Option<f64>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn text(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn snapshot(
        &mut self,
        cfg: &RunConfig,
        index: usize,
        t: f64,
        s: &SupportField<f64>,
    ) -> anyhow::Result<()> {
        if cfg.formats.json {
            self.text(
                &format!("snapshot_{index:04}.json"),
                &SnapshotFile::from_state(t, s).to_json(),
            )?;
        }
        if cfg.formats.svg {
            let curve = curve_of(s);
            if curve.is_finite() {
                let path = self.dir.join(format!("curve_{index:04}.svg"));
                write_svg(&curve, &path)?;
                self.files.push(path);
            }
        }
        Ok(())
    }
}

fn equation_type_name(t: EquationType) -> &'static str {
    match t {
        EquationType::Hyperbolic => "hyperbolic",
        EquationType::Degenerate => "degenerate",
        EquationType::Elliptic => "elliptic",
        EquationType::Mixed => "mixed",
    }
}

/// Runs the configured mode, writing outputs to `cfg.out_dir`. Files
/// written before a failure stay on disk.
pub fn run(cfg: &RunConfig) -> anyhow::Result<RunReport> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut w = Writer {
        dir: &cfg.out_dir,
        files: Vec::new(),
    };
    w.text("config_echo.txt", &cfg.echo())?;
    let s0 = cfg.initial.build(cfg.n)?;
    match cfg.mode {
        Mode::Evolve => run_evolve(cfg, &s0, w),
        Mode::Steady => run_steady(cfg, &s0, w),
        Mode::Analyze => run_analyze(cfg, &s0, w),
        Mode::Render => run_render(cfg, &s0, w),
    }
}

fn run_evolve(
    cfg: &RunConfig,
    s0: &SupportField<f64>,
    mut w: Writer<'_>,
) -> anyhow::Result<RunReport> {
    let mut bound = ForcingBoundMonitor::new(cfg.forcing.clone());
    let traj = evolve(s0, &cfg.forcing, &cfg.flow_config(), &mut [&mut bound])?;
    if cfg.formats.csv {
        w.text("series.csv", &series_csv(&traj.records))?;
    }
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        w.snapshot(cfg, i, *t, s)?;
    }
    if let Some(t) = bound.first_violation {
        log::warn!("forcing bound 0 < F <= S^2 - 1 first violated at t = {t}");
    }
    let success = traj.termination.is_completed();
    let outcome = match traj.termination {
        Termination::Completed => format!(
            "completed at t = {}",
            traj.times.last().copied().unwrap_or(0.0)
        ),
        other => other.to_string(),
    };
    Ok(RunReport {
        success,
        outcome,
        files: w.files,
        first_bound_violation: bound.first_violation,
    })
}

fn run_steady(
    cfg: &RunConfig,
    s0: &SupportField<f64>,
    mut w: Writer<'_>,
) -> anyhow::Result<RunReport> {
    let mean = s0.integral() / std::f64::consts::TAU;
    let opts = cfg.steady_options(mean);
    let res = solve_steady(s0, &cfg.forcing, &opts)?;
    let record = DiagnosticsRecord::compute(0.0, &res.s_inf, &cfg.forcing, &cfg.energy());
    if cfg.formats.csv {
        w.text("series.csv", &series_csv(&[record]))?;
    }
    w.snapshot(cfg, 0, 0.0, &res.s_inf)?;
    let summary = JsonObject::new()
        .boolean("converged", res.converged)
        .integer("iterations", res.iterations)
        .number("residual_norm", res.residual_norm)
        .number("residual_tol", opts.residual_tol)
        .number("convexity_margin", res.convexity_margin)
        .number("noncircularity", res.noncircularity())
        .array(
            "mode_amplitudes",
            mode_amplitudes(&res.s_inf).amplitudes.iter().copied(),
        )
        .array("residual_history", res.residual_history.iter().copied())
        .integer("linear_iterations", res.linear_iterations)
        .integer("linear_stagnations", res.linear_stagnations)
        .optional_string("failure", res.failure.as_deref());
    w.text("steady.json", &summary.to_json())?;
    let outcome = if res.converged {
        format!(
            "converged in {} iterations, residual {:e}",
            res.iterations, res.residual_norm
        )
    } else {
        format!(
            "not converged after {} iterations, residual {:e}{}",
            res.iterations,
            res.residual_norm,
            res.failure
                .as_deref()
                .map(|f| format!(" ({f})"))
                .unwrap_or_default()
        )
    };
    Ok(RunReport {
        success: res.converged,
        outcome,
        files: w.files,
        first_bound_violation: None,
    })
}

fn run_analyze(
    cfg: &RunConfig,
    s0: &SupportField<f64>,
    mut w: Writer<'_>,
) -> anyhow::Result<RunReport> {
    let record = DiagnosticsRecord::compute(0.0, s0, &cfg.forcing, &cfg.energy());
    if cfg.formats.csv {
        w.text("series.csv", &series_csv(&[record]))?;
    }
    w.snapshot(cfg, 0, 0.0, s0)?;
    let ma = classify_monge_ampere(s0, &cfg.forcing);
    let classification = JsonObject::new()
        .string("global", equation_type_name(ma.global))
        .number("min_discriminant", ma.discriminant.min())
        .number("max_discriminant", -ma.discriminant.map(|v| -v).min())
        .optional_number("min_d", ma.d.as_ref().map(|d| d.min()));
    let sufficient = match convexity_sufficient_condition(s0, &cfg.forcing) {
        Ok(r) => JsonObject::new()
            .boolean("supported", true)
            .boolean("all_hold", r.all_hold)
            .integer("points_failing", r.holds.iter().filter(|h| !**h).count()),
        Err(e) => JsonObject::new()
            .boolean("supported", false)
            .string("reason", &e.to_string()),
    };
    let bound = match check_forcing_bound(&cfg.forcing, s0) {
        Ok(b) => JsonObject::new()
            .boolean("passed", b.passed)
            .number("min_forcing", b.min_forcing)
            .number("min_upper_margin", b.min_upper_margin),
        Err(e) => JsonObject::new()
            .boolean("passed", false)
            .string("error", &e.to_string()),
    };
    let doc = JsonObject::new()
        .string("forcing", &cfg.forcing.to_string())
        .number("energy", record.energy)
        .number("l2_norm", record.l2_norm)
        .number("convexity_margin", record.convexity_margin)
        .number("hyperbolicity_margin", record.hyperbolicity_margin)
        .number("length", record.length)
        .number("area", record.area)
        .number("steady_residual", record.steady_residual_norm)
        .number("noncircularity", mode_amplitudes(s0).max_from(2))
        .object("monge_ampere", classification)
        .object("convexity_sufficient_condition", sufficient)
        .object("forcing_bound", bound);
    w.text("analysis.json", &doc.to_json())?;
    Ok(RunReport {
        success: true,
        outcome: format!("analyzed; equation type {}", equation_type_name(ma.global)),
        files: w.files,
        first_bound_violation: None,
    })
}

fn run_render(
    _cfg: &RunConfig,
    s0: &SupportField<f64>,
    mut w: Writer<'_>,
) -> anyhow::Result<RunReport> {
    let path = w.dir.join("curve_0000.svg");
    write_svg(&curve_of(s0), &path)?;
    w.files.push(path);
    Ok(RunReport {
        success: true,
        outcome: "rendered".into(),
        files: w.files,
        first_bound_violation: None,
    })
}
