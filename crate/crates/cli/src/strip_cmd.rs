//! Strip experiments: raw traces, escape series and the escape-rate sweep.

use std::io::Write;

use anyhow::{bail, Result};
use casse_briques::dynamics::{
    Configuration, Direction, Domain, Event, RunOutcome, SimState, Simulator, Trace,
};
use casse_briques::export::{write_escape_csv, write_svg, write_trace_csv, SvgOptions};
use casse_briques::num::{q, q_to_f64, Backend, ExactBackend, FloatBackend, Slope, Q};
use casse_briques::strip::{
    escape_estimates, escape_series, height_h, BaseState, EscapeSeries, StripDomain, StripError,
};
use rayon::prelude::*;

use crate::config::{BackendKind, ExperimentConfig};
use crate::output::{write_file, write_opt};
use crate::{Report, Status, Summary};

fn run_strip<B: Backend>(
    sim: &Simulator<B>,
    start: [B::Value; 2],
    dir: Direction,
    k: i64,
    max_events: u64,
    n_returns: Option<usize>,
) -> Result<Trace<B::Value>> {
    let st = SimState {
        pos: start,
        dir,
        config: Configuration::full_strip(k),
        v_travelled: sim.backend.zero(),
        events: 0,
    };
    let mut returns = 0;
    let trace = sim.run_until(
        st,
        |step, _| {
            if matches!(step.event, Event::BaseCross) {
                returns += 1;
            }
            n_returns.is_some_and(|n| returns >= n)
        },
        max_events,
    )?;
    Ok(trace)
}

fn report_strip<B: Backend>(
    cfg: &ExperimentConfig,
    sim: &Simulator<B>,
    start: [B::Value; 2],
    trace: &Trace<B::Value>,
    summary: Summary,
) -> Result<Report> {
    let b = &sim.backend;
    write_opt(cfg.out.as_deref(), |w| write_trace_csv(w, b, &trace.steps))?;
    let cells: Vec<_> = trace
        .steps
        .iter()
        .filter_map(|s| match s.event {
            Event::BrickHit { cell, .. } => Some(cell),
            _ => None,
        })
        .collect();
    if let Some(path) = cfg.svg.as_deref() {
        let mut pts = vec![(b.to_f64(start[0]), b.to_f64(start[1]))];
        pts.extend(
            trace
                .steps
                .iter()
                .map(|s| (b.to_f64(s.point[0]), b.to_f64(s.point[1]))),
        );
        let k = match sim.domain {
            Domain::Strip { k, .. } => Some(k),
            Domain::Plane => None,
        };
        write_file(path, |w| {
            write_svg(
                w,
                &cells,
                &pts,
                &SvgOptions {
                    strip_k: k,
                    cell_px: 40.0,
                    ..Default::default()
                },
            )
        })?;
    }
    let returns = trace
        .steps
        .iter()
        .filter(|s| matches!(s.event, Event::BaseCross))
        .count();
    let status = match trace.outcome {
        RunOutcome::Singular(_) => Status::Singular,
        RunOutcome::Exhausted if cfg.n_returns.is_some() => Status::Exhausted,
        _ => Status::Success,
    };
    let outcome = match trace.outcome {
        RunOutcome::Stopped => "stopped".to_string(),
        RunOutcome::Exhausted => "exhausted".to_string(),
        RunOutcome::Singular(r) => format!("{r:?}"),
    };
    Ok(summary
        .field("events", trace.steps.len())
        .field("returns", returns)
        .field("bricks", cells.len())
        .field("H", height_h(&trace.final_state.config))
        .field("outcome", outcome)
        .report(status))
}

/// Raw strip trajectory. Defaults: `K = 2`, `h = 1/2`, slope `1/3`,
/// `x1 = 1/5`, `max_events = 10^4`; stops early after `n_returns` returns
/// when given.
pub fn simulate_strip(cfg: &ExperimentConfig) -> Result<Report> {
    let k = cfg.k_or(2)?;
    let h = cfg.h_or("1/2")?;
    let x1 = ExperimentConfig::rational(&cfg.x1, "x1", "1/5")?;
    let dir = cfg.direction_or("1/3")?;
    let domain = StripDomain::new(k, h)?;
    let max_events = cfg.max_events.unwrap_or(10_000);
    let backend = cfg.backend_for(dir.slope)?;
    let summary = Summary::new("simulate-strip")
        .field("K", k)
        .field("h", h)
        .field("slope", dir.slope)
        .field("x1", x1)
        .field("backend", format!("{backend:?}").to_lowercase());
    match backend {
        BackendKind::Rational => {
            let b = ExactBackend::for_inputs(dir.slope, &[h, x1])?;
            let start = [b.from_q(&x1)?, b.from_q(&-h)?];
            let sim = Simulator::new(
                b.clone(),
                Domain::Strip {
                    k: domain.k,
                    base: b.from_q(&-h)?,
                },
            );
            let trace = run_strip(&sim, start, dir, k, max_events, cfg.n_returns)?;
            report_strip(cfg, &sim, start, &trace, summary)
        }
        BackendKind::Float => {
            let b = FloatBackend::new(dir.slope, cfg.epsilon());
            let start = [q_to_f64(&x1), -q_to_f64(&h)];
            let sim = Simulator::new(
                b,
                Domain::Strip {
                    k,
                    base: -q_to_f64(&h),
                },
            );
            let trace = run_strip(&sim, start, dir, k, max_events, cfg.n_returns)?;
            report_strip(cfg, &sim, start, &trace, summary)
        }
    }
}

/// Closed-form escape rates known for this data, as (name, value) pairs.
fn targets(k: i64, slope: Slope, h: Q) -> Vec<(&'static str, f64)> {
    let quarter = Slope::rational(1, 4).expect("valid slope");
    if k == 2 && slope == quarter && h < q(1, 10) {
        let mu = 1.0 - 4.0 * q_to_f64(&h);
        return vec![
            ("target_rate_n", mu),
            ("target_rate_t", (mu / 2f64.sqrt()).sqrt()),
            ("target_rate_t_sin", (mu / 17f64.sqrt()).sqrt()),
        ];
    }
    if k == 1 && slope == Slope::Vertical {
        return vec![("target_rate_n", 1.0), ("target_rate_t", 1.0)];
    }
    Vec::new()
}

/// Escape series. Defaults: `K = 2`, slope `1/4`, `h = 7/100`, `x1 = 1/3`,
/// `n_returns = 10^5`, `max_events = 10^6` per return.
pub fn escape(cfg: &ExperimentConfig) -> Result<Report> {
    let k = cfg.k_or(2)?;
    let h = cfg.h_or("7/100")?;
    let x1 = ExperimentConfig::rational(&cfg.x1, "x1", "1/3")?;
    let slope = cfg.slope_or("1/4")?;
    if cfg.backend_for(slope)? == BackendKind::Float {
        bail!("escape series need the rational backend");
    }
    let n = cfg.n_returns.unwrap_or(100_000);
    let max_events = cfg.max_events.unwrap_or(1_000_000);
    let domain = StripDomain::new(k, h)?;
    let state = BaseState::initial(k, x1, slope);
    let (series, status, error) = match escape_series(&domain, &state, n, max_events) {
        Ok(s) => (s, Status::Success, None),
        Err(e) => {
            let status = match e.source {
                StripError::Singular { .. } => Status::Singular,
                StripError::NonReturn(_) => Status::Exhausted,
                _ => return Err(e.into()),
            };
            (e.partial, status, Some(e.source.to_string()))
        }
    };
    write_opt(cfg.out.as_deref(), |w| write_escape_csv(w, &series))?;
    if let Some(msg) = &error {
        eprintln!("escape: {msg}");
    }
    let mut s = Summary::new("escape")
        .field("K", k)
        .field("h", h)
        .field("slope", slope)
        .field("x1", x1);
    s = s
        .field("returns", series.returns())
        .field("H_n", series.heights.last().copied().unwrap_or(0));
    if let Some(est) = escape_estimates(&series, slope) {
        s = s
            .field("t", format!("{:.6}", est.t))
            .field("rate_n", format!("{:.6}", est.rate_n));
        s = s.field("rate_t", format!("{:.6}", est.rate_t));
    }
    for (name, value) in targets(k, slope, h) {
        s = s.field(name, format!("{value:.6}"));
    }
    Ok(s.report(status))
}

struct SweepRow {
    h: Q,
    series: Result<EscapeSeries, String>,
}

/// `H_n / n` over a grid of base depths. Defaults: `K = 2`, slope `1/4`,
/// `x1 = 1/3`, `n_returns = 10^4`, `h_grid = 1/100, ..., 9/100`.
pub fn sweep_h(cfg: &ExperimentConfig) -> Result<Report> {
    let k = cfg.k_or(2)?;
    let x1 = ExperimentConfig::rational(&cfg.x1, "x1", "1/3")?;
    let slope = cfg.slope_or("1/4")?;
    if cfg.backend_for(slope)? == BackendKind::Float {
        bail!("escape sweeps need the rational backend");
    }
    let n = cfg.n_returns.unwrap_or(10_000);
    let max_events = cfg.max_events.unwrap_or(1_000_000);
    let grid = cfg.h_grid_or(|| (1..10).map(|i| q(i, 100)).collect())?;
    if grid.is_empty() {
        bail!("h_grid is empty");
    }
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&h| {
            let series = StripDomain::new(k, h)
                .map_err(|e| e.to_string())
                .and_then(|d| {
                    escape_series(&d, &BaseState::initial(k, x1, slope), n, max_events)
                        .map_err(|e| e.to_string())
                });
            SweepRow { h, series }
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut write_rows = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "h,rate_n,target_rate_n,returns,error")?;
        for row in &rows {
            let target = targets(k, slope, row.h)
                .iter()
                .find(|t| t.0 == "target_rate_n")
                .map(|t| t.1);
            let target_s = target.map(|t| format!("{t:.6}")).unwrap_or_default();
            match &row.series {
                Ok(series) => {
                    let est = escape_estimates(series, slope);
                    let rate = est.map(|e| e.rate_n).unwrap_or(f64::NAN);
                    if let Some(t) = target {
                        worst = worst.max(((rate - t) / t).abs());
                    }
                    writeln!(w, "{},{rate:.6},{target_s},{},", row.h, series.returns())?;
                }
                Err(msg) => {
                    eprintln!("sweep-h: h = {}: {msg}", row.h);
                    writeln!(w, "{},,{target_s},,\"{}\"", row.h, msg.replace('"', "'"))?;
                }
            }
        }
        Ok(())
    };
    match cfg.out.as_deref() {
        Some(p) => write_file(p, |w| write_rows(w))?,
        None => write_rows(&mut std::io::sink())?,
    }
    let ok = rows.iter().filter(|r| r.series.is_ok()).count();
    if ok == 0 {
        bail!("every point of the sweep failed");
    }
    Ok(Summary::new("sweep-h")
        .field("K", k)
        .field("slope", slope)
        .field("points", rows.len())
        .field("ok", ok)
        .field("failed", rows.len() - ok)
        .field("max_rel_dev", format!("{worst:.6}"))
        .report(Status::Success))
}
