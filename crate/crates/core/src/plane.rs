//! Orbits in the plane with every cell but the origin filled: destruction
//! logs, the torus factor, branch splitting, relative periodicity and
//! directional classification.

use thiserror::Error;

use crate::dynamics::{
    CellIndex, Configuration, Direction, Domain, DynamicsError, Event, SimState, Simulator,
    SingularityReason,
};
use crate::num::{q_to_f64, Backend, ExactBackend, FloatBackend, NumError, Slope, Q};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlaneError {
    #[error("start must lie strictly inside the origin cell")]
    StartOutsideOrigin,
    #[error("branch has {have} cells, detection needs {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("no relative period with preperiod <= {max_preperiod} and period <= {max_period}")]
    NotFound {
        max_preperiod: usize,
        max_period: usize,
    },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Where a plane orbit starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Exact { x: Q, y: Q },
    Float { x: f64, y: f64 },
}

impl Start {
    pub fn to_f64(&self) -> (f64, f64) {
        match *self {
            Start::Exact { x, y } => (q_to_f64(&x), q_to_f64(&y)),
            Start::Float { x, y } => (x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularStop {
    pub x: f64,
    pub y: f64,
    pub reason: SingularityReason,
}

/// Destroyed cells in order of destruction.
#[derive(Debug, Clone, PartialEq)]
pub struct DestructionLog {
    pub cells: Vec<CellIndex>,
    pub start: Start,
    pub dir: Direction,
    /// Set when the orbit stopped at a singularity before `max_hits`.
    pub singular: Option<SingularStop>,
}

impl DestructionLog {
    pub fn truncated(&self) -> bool {
        self.singular.is_some()
    }
}

fn check_start(x: f64, y: f64) -> Result<(), PlaneError> {
    if x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(PlaneError::StartOutsideOrigin)
    }
}

/// Runs a plane orbit until `max_hits` bricks are destroyed or a singularity
/// is met. Rational slopes and starts use the exact backend.
pub fn record_orbit(
    start: Start,
    dir: Direction,
    max_hits: usize,
) -> Result<DestructionLog, PlaneError> {
    let (fx, fy) = start.to_f64();
    check_start(fx, fy)?;
    match start {
        Start::Exact { x, y } if dir.slope.is_exact() => {
            let b = ExactBackend::for_inputs(dir.slope, &[x, y])?;
            let pos = [b.from_q(&x)?, b.from_q(&y)?];
            record_with(Simulator::new(b, Domain::Plane), pos, start, dir, max_hits)
        }
        _ => {
            let b = FloatBackend::new(dir.slope, crate::num::FLOAT_EPS);
            record_with(
                Simulator::new(b, Domain::Plane),
                [fx, fy],
                start,
                dir,
                max_hits,
            )
        }
    }
}

fn record_with<B: Backend>(
    sim: Simulator<B>,
    pos: [B::Value; 2],
    start: Start,
    dir: Direction,
    max_hits: usize,
) -> Result<DestructionLog, PlaneError> {
    let mut st = SimState {
        pos,
        dir,
        config: Configuration::plane_initial(),
        v_travelled: sim.backend.zero(),
        events: 0,
    };
    let mut cells = Vec::with_capacity(max_hits);
    let mut singular = None;
    while cells.len() < max_hits {
        let step = sim.advance(&mut st)?;
        match step.event {
            Event::BrickHit { cell, .. } => cells.push(cell),
            Event::Singularity(reason) => {
                let b = &sim.backend;
                singular = Some(SingularStop {
                    x: b.to_f64(step.point[0]),
                    y: b.to_f64(step.point[1]),
                    reason,
                });
                break;
            }
            _ => {}
        }
    }
    Ok(DestructionLog {
        cells,
        start,
        dir,
        singular,
    })
}

/// Fractional position folded so that both velocity components are
/// nonnegative: a point of the torus on which the motion is a linear flow.
pub fn factor_project<B: Backend>(b: &B, st: &SimState<B::Value>) -> (B::Value, B::Value) {
    let fold = |v: B::Value, positive: bool| {
        let f = b.frac(v);
        if positive {
            f
        } else {
            b.frac(b.sub(b.int(1), f))
        }
    };
    (
        fold(st.pos[0], st.dir.sx.value() > 0 || b.is_vertical()),
        fold(st.pos[1], st.dir.sy.value() > 0),
    )
}

/// Point reached by the linear torus flow after vertical time `v` from `p`.
pub fn torus_flow<B: Backend>(b: &B, p: (B::Value, B::Value), v: B::Value) -> (B::Value, B::Value) {
    let run = if b.is_vertical() {
        b.zero()
    } else {
        b.run_for_rise(v)
    };
    (b.frac(b.add(p.0, run)), b.frac(b.add(p.1, v)))
}

/// A sequence of destroyed cells digging one half-band.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Angle of the branch's last cell seen from the origin.
    pub alpha_hint: f64,
    pub cells: Vec<CellIndex>,
    /// Positions of `cells` in the full log.
    pub log_indices: Vec<usize>,
}

fn cheb(a: CellIndex, b: CellIndex) -> i64 {
    (a.z1 - b.z1).abs().max((a.z2 - b.z2).abs())
}

/// Splits the log into branches: cells within `transient_radius` of the
/// origin are dropped, each other cell joins the branch whose latest cell is
/// nearest within `link_radius`, or opens a new branch.
pub fn split_branches(
    log: &DestructionLog,
    link_radius: i64,
    transient_radius: i64,
) -> Vec<Branch> {
    let origin = CellIndex::new(0, 0);
    let mut branches: Vec<Branch> = Vec::new();
    for (i, &z) in log.cells.iter().enumerate() {
        if cheb(z, origin) <= transient_radius {
            continue;
        }
        let best = branches
            .iter_mut()
            .map(|b| (cheb(*b.cells.last().unwrap(), z), b))
            .filter(|(d, _)| *d <= link_radius)
            .min_by_key(|(d, _)| *d);
        match best {
            Some((_, b)) => {
                b.cells.push(z);
                b.log_indices.push(i);
            }
            None => branches.push(Branch {
                alpha_hint: 0.0,
                cells: vec![z],
                log_indices: vec![i],
            }),
        }
    }
    for b in &mut branches {
        let last = b.cells.last().unwrap();
        b.alpha_hint = (last.z2 as f64).atan2(last.z1 as f64);
    }
    branches
}

/// Relative period of one branch.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MotifReport {
    pub preperiod: usize,
    pub period: usize,
    /// Displacement over one period.
    pub v: (i64, i64),
    /// Cells of one period relative to the first.
    pub motif: Vec<(i64, i64)>,
}

impl MotifReport {
    /// Successive differences over one period; they sum to `v`.
    pub fn increments(&self) -> Vec<(i64, i64)> {
        let next = self
            .motif
            .iter()
            .skip(1)
            .copied()
            .chain(std::iter::once(self.v));
        self.motif
            .iter()
            .zip(next)
            .map(|(a, b)| (b.0 - a.0, b.1 - a.1))
            .collect()
    }
}

/// Cells needed by [`detect_relative_periodicity`].
pub fn required_branch_len(max_preperiod: usize, max_period: usize) -> usize {
    2 * (max_preperiod + 2 * max_period)
}

/// Smallest preperiod, then smallest period, such that the increments
/// `z_{n+1} - z_n` are periodic over the rest of the observed branch.
pub fn detect_relative_periodicity(
    cells: &[CellIndex],
    max_preperiod: usize,
    max_period: usize,
) -> Result<MotifReport, PlaneError> {
    let need = required_branch_len(max_preperiod, max_period);
    if cells.len() < need.max(2) {
        return Err(PlaneError::InsufficientData {
            have: cells.len(),
            need: need.max(2),
        });
    }
    let d: Vec<(i64, i64)> = cells
        .windows(2)
        .map(|w| (w[1].z1 - w[0].z1, w[1].z2 - w[0].z2))
        .collect();
    // prefix function of the reversed increments gives the smallest period of every suffix
    let r: Vec<(i64, i64)> = d.iter().rev().copied().collect();
    let m = r.len();
    let mut pi = vec![0usize; m];
    for i in 1..m {
        let mut j = pi[i - 1];
        while j > 0 && r[i] != r[j] {
            j = pi[j - 1];
        }
        if r[i] == r[j] {
            j += 1;
        }
        pi[i] = j;
    }
    for n0 in 0..=max_preperiod.min(m - 1) {
        let len = m - n0;
        let period = len - pi[len - 1];
        if period <= max_period && len >= 2 * period {
            let v = d[n0..n0 + period]
                .iter()
                .fold((0, 0), |a, s| (a.0 + s.0, a.1 + s.1));
            let base = cells[n0];
            let motif = cells[n0..n0 + period]
                .iter()
                .map(|z| (z.z1 - base.z1, z.z2 - base.z2))
                .collect();
            return Ok(MotifReport {
                preperiod: n0,
                period,
                v,
                motif,
            });
        }
    }
    Err(PlaneError::NotFound {
        max_preperiod,
        max_period,
    })
}

/// Number of whole periods of `cells` reproduced exactly by translating the
/// motif by multiples of `v`.
pub fn motif_replay_periods(cells: &[CellIndex], report: &MotifReport) -> usize {
    let base = cells[report.preperiod];
    let mut periods = 0;
    'outer: loop {
        let start = report.preperiod + periods * report.period;
        if start + report.period > cells.len() {
            break;
        }
        let j = periods as i64;
        for (i, &(a, b)) in report.motif.iter().enumerate() {
            let expected =
                CellIndex::new(base.z1 + j * report.v.0 + a, base.z2 + j * report.v.1 + b);
            if cells[start + i] != expected {
                break 'outer;
            }
        }
        periods += 1;
    }
    periods
}

/// Band `{p : |<p - origin, n>| <= width/2}` around a line of the given slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandFit {
    /// Direction of the band as a lattice vector.
    pub direction: (i64, i64),
    /// `dy/dx` of the direction (infinite when vertical).
    pub slope: f64,
    /// Spread of cell centres across the band.
    pub width: f64,
    /// Spread of cell centres along the band.
    pub extent: f64,
    /// All cells on one side of the origin along the band.
    pub half: bool,
    pub origin: (f64, f64),
}

/// Minimal ratio of extent to width for a log to count as directional.
pub const DIRECTIONAL_ASPECT: f64 = 10.0;

/// Narrowest band containing the cells beyond `transient_radius`, searched
/// over the given lattice directions and the two axes.
pub fn directional_fit(
    log: &DestructionLog,
    candidates: &[(i64, i64)],
    transient_radius: i64,
) -> Option<BandFit> {
    let origin = CellIndex::new(0, 0);
    let pts: Vec<(f64, f64)> = log
        .cells
        .iter()
        .filter(|z| cheb(**z, origin) > transient_radius)
        .map(|z| (z.z1 as f64, z.z2 as f64))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let mut dirs: Vec<(i64, i64)> = candidates
        .iter()
        .copied()
        .filter(|d| *d != (0, 0))
        .collect();
    dirs.extend([(1, 0), (0, 1)]);
    let mut best: Option<BandFit> = None;
    for (a, b) in dirs {
        let norm = ((a * a + b * b) as f64).sqrt();
        let (ux, uy) = (a as f64 / norm, b as f64 / norm);
        let (mut lo_t, mut hi_t, mut lo_n, mut hi_n) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in &pts {
            let t = x * ux + y * uy;
            let n = -x * uy + y * ux;
            lo_t = lo_t.min(t);
            hi_t = hi_t.max(t);
            lo_n = lo_n.min(n);
            hi_n = hi_n.max(n);
        }
        let width = hi_n - lo_n;
        let fit = BandFit {
            direction: (a, b),
            slope: if a == 0 {
                f64::INFINITY
            } else {
                b as f64 / a as f64
            },
            width,
            extent: hi_t - lo_t,
            half: lo_t > 0.0 || hi_t < 0.0,
            origin: (0.5, 0.5),
        };
        if best.as_ref().is_none_or(|f| fit.width < f.width - 1e-9) {
            best = Some(fit);
        }
    }
    best.filter(|f| f.extent / f.width.max(1.0) >= DIRECTIONAL_ASPECT)
}

/// Parameters of [`classify_orbit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyParams {
    pub link_radius: i64,
    pub transient_radius: i64,
    pub max_preperiod: usize,
    pub max_period: usize,
}

impl ClassifyParams {
    /// Defaults for slope `p/q`: link radius `2(p+q)`, transient radius 8,
    /// preperiod up to 10^4 and period up to 256.
    pub fn for_slope(slope: Slope) -> Self {
        let link = match slope {
            Slope::Rational { rise, run } => 2 * (rise as i64 + run as i64),
            Slope::Vertical => 2,
            Slope::Real(t) => 2 * (t.ceil() as i64 + 1),
        };
        ClassifyParams {
            link_radius: link,
            transient_radius: 8,
            max_preperiod: 10_000,
            max_period: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub branch: Branch,
    pub motif: Result<MotifReport, PlaneError>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Directional {
        fit: BandFit,
        branches: Vec<BranchReport>,
    },
    DigsOnly {
        branches: Vec<BranchReport>,
    },
    Unknown {
        branches: Vec<BranchReport>,
    },
}

impl Classification {
    pub fn branches(&self) -> &[BranchReport] {
        match self {
            Classification::Directional { branches, .. }
            | Classification::DigsOnly { branches }
            | Classification::Unknown { branches } => branches,
        }
    }

    /// Periods of the certified branches, in branch order.
    pub fn periods(&self) -> Vec<usize> {
        self.branches()
            .iter()
            .filter_map(|b| b.motif.as_ref().ok().map(|m| m.period))
            .collect()
    }

    /// All branches certified relatively periodic.
    pub fn certified(&self) -> bool {
        let b = self.branches();
        !b.is_empty() && b.iter().all(|r| r.motif.is_ok())
    }

    /// More than two persistent branches would contradict the expected
    /// pairing of half-bands.
    pub fn excess_branches(&self) -> bool {
        self.branches().len() > 2
    }
}

/// Splits, detects and fits: directional when a narrow band holds the dug
/// region, digging when every branch is relatively periodic, else unknown.
pub fn classify_orbit(log: &DestructionLog, params: &ClassifyParams) -> Classification {
    let branches = split_branches(log, params.link_radius, params.transient_radius);
    let reports: Vec<BranchReport> = branches
        .into_iter()
        .map(|b| {
            let motif =
                detect_relative_periodicity(&b.cells, params.max_preperiod, params.max_period);
            BranchReport { branch: b, motif }
        })
        .collect();
    let candidates: Vec<(i64, i64)> = reports
        .iter()
        .filter_map(|r| r.motif.as_ref().ok().map(|m| m.v))
        .collect();
    let fit = directional_fit(log, &candidates, params.transient_radius);
    let certified = !reports.is_empty() && reports.iter().all(|r| r.motif.is_ok());
    match (fit, certified) {
        (Some(fit), _) => Classification::Directional {
            fit,
            branches: reports,
        },
        (None, true) => Classification::DigsOnly { branches: reports },
        (None, false) => Classification::Unknown { branches: reports },
    }
}

/// Starts `(i/n, j/n)` for `1 <= i, j < n`, in row-major order.
pub fn grid_starts(n: i128) -> Vec<(Q, Q)> {
    (1..n)
        .flat_map(|i| (1..n).map(move |j| (Q::new(i, n), Q::new(j, n))))
        .collect()
}

/// A grid start whose orbit was accepted by [`search_grid`].
#[derive(Debug, Clone)]
pub struct GridHit {
    pub start: (Q, Q),
    pub log: DestructionLog,
    pub classification: Classification,
}

/// Classifies the orbit of every grid start moving up and right and returns
/// the first, in grid order, that `accept` approves. Singular orbits are
/// skipped. Starts are run in parallel; the result does not depend on
/// scheduling.
pub fn search_grid(
    slope: Slope,
    n: i128,
    max_hits: usize,
    params: &ClassifyParams,
    accept: impl Fn(&Classification) -> bool + Sync,
) -> Option<GridHit> {
    use rayon::prelude::*;
    grid_starts(n).into_par_iter().find_map_first(|(x, y)| {
        let log = record_orbit(Start::Exact { x, y }, Direction::up_right(slope), max_hits).ok()?;
        if log.truncated() {
            return None;
        }
        let classification = classify_orbit(&log, params);
        accept(&classification).then_some(GridHit {
            start: (x, y),
            log,
            classification,
        })
    })
}
