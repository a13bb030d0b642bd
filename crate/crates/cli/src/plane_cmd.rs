//! Plane experiments: destruction logs, renders and the periodicity search.

use std::io::BufRead;
use std::path::Path;

use anyhow::{bail, Context, Result};
use casse_briques::dynamics::{
    CellIndex, Configuration, Direction, Domain, Event, SimState, Simulator,
};
use casse_briques::export::{write_log_csv, write_pgm, write_svg, MotifSummary, SvgOptions};
use casse_briques::num::{q_to_f64, Backend, ExactBackend, FloatBackend, Q};
use casse_briques::plane::{
    search_grid, Classification, ClassifyParams, DestructionLog, SingularStop, Start,
};

use crate::config::{BackendKind, ExperimentConfig};
use crate::output::write_opt;
use crate::{Report, Status, Summary};

/// Trajectory points kept for SVG renders.
const MAX_PATH_POINTS: usize = 200_000;

struct PlaneRun {
    log: DestructionLog,
    path: Vec<(f64, f64)>,
}

fn run_plane<B: Backend>(
    b: B,
    pos: [B::Value; 2],
    start: Start,
    dir: Direction,
    max_hits: usize,
    keep_path: bool,
) -> Result<PlaneRun> {
    let sim = Simulator::new(b, Domain::Plane);
    let b = &sim.backend;
    let mut st = SimState {
        pos,
        dir,
        config: Configuration::plane_initial(),
        v_travelled: b.zero(),
        events: 0,
    };
    let mut cells = Vec::with_capacity(max_hits);
    let mut path = vec![(b.to_f64(pos[0]), b.to_f64(pos[1]))];
    let mut singular = None;
    while cells.len() < max_hits {
        let step = sim.advance(&mut st)?;
        let p = (b.to_f64(step.point[0]), b.to_f64(step.point[1]));
        if keep_path && path.len() < MAX_PATH_POINTS {
            path.push(p);
        }
        match step.event {
            Event::BrickHit { cell, .. } => cells.push(cell),
            Event::Singularity(reason) => {
                singular = Some(SingularStop {
                    x: p.0,
                    y: p.1,
                    reason,
                });
                break;
            }
            _ => {}
        }
    }
    Ok(PlaneRun {
        log: DestructionLog {
            cells,
            start,
            dir,
            singular,
        },
        path,
    })
}

fn plane_from_config(
    cfg: &ExperimentConfig,
    default_hits: usize,
    keep_path: bool,
) -> Result<(PlaneRun, BackendKind)> {
    let dir = cfg.direction_or("1/1")?;
    let x0 = ExperimentConfig::rational(&cfg.x0, "x0", "1/3")?;
    let y0 = ExperimentConfig::rational(&cfg.y0, "y0", "1/7")?;
    let inside = |v: &Q| *v > Q::from_integer(0) && *v < Q::from_integer(1);
    if !inside(&x0) || !inside(&y0) {
        bail!("start ({x0}, {y0}) must lie strictly inside the origin cell");
    }
    let max_hits = cfg.max_hits.unwrap_or(default_hits);
    let backend = cfg.backend_for(dir.slope)?;
    let run = match backend {
        BackendKind::Rational => {
            let b = ExactBackend::for_inputs(dir.slope, &[x0, y0])?;
            let pos = [b.from_q(&x0)?, b.from_q(&y0)?];
            run_plane(
                b,
                pos,
                Start::Exact { x: x0, y: y0 },
                dir,
                max_hits,
                keep_path,
            )?
        }
        BackendKind::Float => {
            let (x, y) = (q_to_f64(&x0), q_to_f64(&y0));
            run_plane(
                FloatBackend::new(dir.slope, cfg.epsilon()),
                [x, y],
                Start::Float { x, y },
                dir,
                max_hits,
                keep_path,
            )?
        }
    };
    Ok((run, backend))
}

fn write_renders(cfg: &ExperimentConfig, cells: &[CellIndex], path: &[(f64, f64)]) -> Result<()> {
    let size = cfg.image_size.unwrap_or(1024);
    write_opt(cfg.pgm.as_deref(), |w| write_pgm(w, cells, size))?;
    let cell_px = if cells.len() > 20_000 { 2.0 } else { 12.0 };
    write_opt(cfg.svg.as_deref(), |w| {
        write_svg(
            w,
            cells,
            path,
            &SvgOptions {
                cell_px,
                ..Default::default()
            },
        )
    })
}

fn plane_summary(name: &str, run: &PlaneRun, backend: BackendKind) -> Report {
    let log = &run.log;
    let (x, y) = match log.start {
        Start::Exact { x, y } => (x.to_string(), y.to_string()),
        Start::Float { x, y } => (x.to_string(), y.to_string()),
    };
    let mut s = Summary::new(name)
        .field("slope", log.dir.slope)
        .field("start", format!("({x},{y})"))
        .field("backend", format!("{backend:?}").to_lowercase())
        .field("hits", log.cells.len());
    if let Some(stop) = log.singular {
        s = s.field(
            "singular",
            format!("{:?}@({:.6},{:.6})", stop.reason, stop.x, stop.y),
        );
        return s.report(Status::Singular);
    }
    s.report(Status::Success)
}

/// Plane orbit from `(x0, y0)`. Defaults: slope `1/1`, start `(1/3, 1/7)`,
/// `max_hits = 10^4`. `theta` allows any direction.
pub fn simulate_plane(cfg: &ExperimentConfig) -> Result<Report> {
    let (run, backend) = plane_from_config(cfg, 10_000, cfg.svg.is_some())?;
    write_opt(cfg.out.as_deref().or(cfg.log.as_deref()), |w| {
        write_log_csv(w, &run.log)
    })?;
    write_renders(cfg, &run.log.cells, &run.path)?;
    Ok(plane_summary("simulate-plane", &run, backend))
}

fn read_log(path: &Path) -> Result<Vec<CellIndex>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut cells = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            bail!("{}:{}: expected hit_index,z1,z2", path.display(), i + 1);
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<i64>()
                .with_context(|| format!("{}:{}: bad integer {s:?}", path.display(), i + 1))
        };
        cells.push(CellIndex::new(parse(cols[1])?, parse(cols[2])?));
    }
    Ok(cells)
}

/// Renders a destruction log given as `input`, or simulates one first
/// (defaults as `simulate-plane`, with `max_hits = 10^6`).
pub fn render(cfg: &ExperimentConfig) -> Result<Report> {
    if cfg.pgm.is_none() && cfg.svg.is_none() {
        bail!("render needs a pgm or svg output");
    }
    if let Some(input) = cfg.input.as_deref() {
        let cells = read_log(input)?;
        write_renders(cfg, &cells, &[])?;
        return Ok(Summary::new("render")
            .field("input", input.display())
            .field("hits", cells.len())
            .report(Status::Success));
    }
    let (run, backend) = plane_from_config(cfg, 1_000_000, cfg.svg.is_some())?;
    write_opt(cfg.log.as_deref(), |w| write_log_csv(w, &run.log))?;
    write_renders(cfg, &run.log.cells, &run.path)?;
    Ok(plane_summary("render", &run, backend))
}

fn class_name(c: &Classification) -> &'static str {
    match c {
        Classification::Directional { .. } => "directional",
        Classification::DigsOnly { .. } => "digs",
        Classification::Unknown { .. } => "unknown",
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Searches the starts `{1/n..(n-1)/n}^2` for a certified relatively
/// periodic orbit. Defaults: slope `1/1`, `grid = 7`, `max_hits = 50000`,
/// classification parameters from the slope. `branches` restricts the
/// accepted branch count.
pub fn detect_periodic(cfg: &ExperimentConfig) -> Result<Report> {
    let slope = cfg.slope_or("1/1")?;
    if cfg.theta.is_some() || cfg.backend_for(slope)? == BackendKind::Float {
        bail!("periodicity certificates need a rational slope and the rational backend");
    }
    let n = cfg.grid.unwrap_or(7);
    if n < 2 {
        bail!("grid must be at least 2");
    }
    let max_hits = cfg.max_hits.unwrap_or(50_000);
    let mut params = ClassifyParams::for_slope(slope);
    params.link_radius = cfg.link_radius.unwrap_or(params.link_radius);
    params.transient_radius = cfg.transient_radius.unwrap_or(params.transient_radius);
    params.max_preperiod = cfg.max_preperiod.unwrap_or(params.max_preperiod);
    params.max_period = cfg.max_period.unwrap_or(params.max_period);
    if params.link_radius < 1 {
        bail!("link_radius must be positive");
    }
    let want = cfg.branches;
    let hit = search_grid(slope, n as i128, max_hits, &params, |c| {
        c.certified() && want.is_none_or(|b| c.branches().len() == b)
    });
    let s = Summary::new("detect-periodic")
        .field("slope", slope)
        .field("grid", n)
        .field("max_hits", max_hits);
    let Some(hit) = hit else {
        let summary = MotifSummary {
            slope: slope.to_string(),
            branches: Vec::new(),
        };
        write_opt(cfg.out.as_deref(), |w| {
            serde_json::to_writer_pretty(&mut *w, &summary).map_err(std::io::Error::from)
        })?;
        return Ok(s.field("result", "not-found").report(Status::Exhausted));
    };
    let reports: Vec<_> = hit
        .classification
        .branches()
        .iter()
        .filter_map(|b| b.motif.as_ref().ok())
        .collect();
    let summary = MotifSummary::new(slope, reports.iter().copied());
    write_opt(cfg.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(std::io::Error::from)
    })?;
    write_opt(cfg.log.as_deref(), |w| write_log_csv(w, &hit.log))?;
    write_renders(cfg, &hit.log.cells, &[])?;
    let (x, y): (Q, Q) = hit.start;
    Ok(s.field("result", "certified")
        .field("start", format!("({x},{y})"))
        .field("class", class_name(&hit.classification))
        .field("branches", reports.len())
        .field("periods", join(reports.iter().map(|r| r.period)))
        .field("preperiods", join(reports.iter().map(|r| r.preperiod)))
        .field(
            "v",
            join(reports.iter().map(|r| format!("({};{})", r.v.0, r.v.1))),
        )
        .report(Status::Success))
}
