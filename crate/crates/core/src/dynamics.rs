//! Event-driven billiard among unit bricks that are destroyed on impact.
//!
//! The ball walks cell by cell along its straight path. The first wall, brick
//! face or base line met is returned as an [`Event`]; grazing a brick corner is
//! a terminal [`Event::Singularity`].

use std::cmp::Ordering;
use std::fmt;

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::num::{Backend, NumError, Sign, Slope};

/// Integer lattice cell `[z1, z1+1) x [z2, z2+1)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub struct CellIndex {
    pub z1: i64,
    pub z2: i64,
}

impl CellIndex {
    pub const fn new(z1: i64, z2: i64) -> Self {
        CellIndex { z1, z2 }
    }

    pub fn offset(self, d1: i64, d2: i64) -> Self {
        CellIndex::new(self.z1 + d1, self.z2 + d2)
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.z1, self.z2)
    }
}

/// Face of a brick, named from the brick's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Left,
    Right,
    Bottom,
    Top,
}

impl Face {
    pub fn axis(self) -> Axis {
        match self {
            Face::Left | Face::Right => Axis::Vertical,
            Face::Bottom | Face::Top => Axis::Horizontal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::Left => "left",
            Face::Right => "right",
            Face::Bottom => "bottom",
            Face::Top => "top",
        }
    }
}

/// Orientation of a reflecting segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Vertical,
    Horizontal,
}

/// One of the four directions `{θ₀, π-θ₀, -θ₀, π+θ₀}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub slope: Slope,
    pub sx: Sign,
    pub sy: Sign,
}

impl Direction {
    pub fn new(slope: Slope, sx: Sign, sy: Sign) -> Self {
        let sx = if slope == Slope::Vertical {
            Sign::Pos
        } else {
            sx
        };
        Direction { slope, sx, sy }
    }

    /// Direction `θ₀` pointing up and to the right.
    pub fn up_right(slope: Slope) -> Self {
        Direction::new(slope, Sign::Pos, Sign::Pos)
    }
}

/// Mirror `dir` in a segment of orientation `axis`.
pub fn reflect(dir: Direction, axis: Axis) -> Direction {
    match axis {
        Axis::Vertical if dir.slope != Slope::Vertical => Direction {
            sx: dir.sx.flip(),
            ..dir
        },
        Axis::Vertical => dir,
        Axis::Horizontal => Direction {
            sy: dir.sy.flip(),
            ..dir
        },
    }
}

/// Which index set the brick configuration lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lattice {
    /// Columns `0..k`, rows `>= 0`.
    Strip { k: i64 },
    /// All of `Z^2`.
    Plane,
}

impl Lattice {
    pub fn contains(&self, z: CellIndex) -> bool {
        match *self {
            Lattice::Strip { k } => (0..k).contains(&z.z1) && z.z2 >= 0,
            Lattice::Plane => true,
        }
    }
}

/// Brick configuration, stored as the finite set of destroyed cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    lattice: Lattice,
    holes: FxHashSet<CellIndex>,
}

impl Configuration {
    /// Every cell of the strip holds a brick.
    pub fn full_strip(k: i64) -> Self {
        Configuration {
            lattice: Lattice::Strip { k },
            holes: FxHashSet::default(),
        }
    }

    /// All cells of the plane except the origin hold a brick.
    pub fn plane_initial() -> Self {
        let mut holes = FxHashSet::default();
        holes.insert(CellIndex::new(0, 0));
        Configuration {
            lattice: Lattice::Plane,
            holes,
        }
    }

    pub fn with_holes(
        lattice: Lattice,
        holes: impl IntoIterator<Item = CellIndex>,
    ) -> Result<Self, DynamicsError> {
        let mut set = FxHashSet::default();
        for z in holes {
            if !lattice.contains(z) {
                return Err(DynamicsError::Inadmissible(format!(
                    "hole {z} outside the index set"
                )));
            }
            set.insert(z);
        }
        Ok(Configuration {
            lattice,
            holes: set,
        })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn is_present(&self, z: CellIndex) -> bool {
        self.lattice.contains(z) && !self.holes.contains(&z)
    }

    pub fn is_hole(&self, z: CellIndex) -> bool {
        self.holes.contains(&z)
    }

    pub fn holes(&self) -> impl Iterator<Item = &CellIndex> {
        self.holes.iter()
    }

    pub fn hole_count(&self) -> usize {
        self.holes.len()
    }

    /// Holes in increasing `(z2, z1)` order.
    pub fn sorted_holes(&self) -> Vec<CellIndex> {
        let mut v: Vec<_> = self.holes.iter().copied().collect();
        v.sort_by_key(|z| (z.z2, z.z1));
        v
    }

    pub fn destroy(&mut self, z: CellIndex) -> Result<(), DynamicsError> {
        if !self.lattice.contains(z) || !self.holes.insert(z) {
            return Err(DynamicsError::DestroyedTwice(z));
        }
        Ok(())
    }

    pub(crate) fn holes_mut(&mut self) -> &mut FxHashSet<CellIndex> {
        &mut self.holes
    }
}

/// The region the ball moves in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain<V> {
    /// `[0, k] x [base, ∞)`: side walls plus a reflecting base line.
    Strip {
        k: i64,
        base: V,
    },
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularityReason {
    /// The path meets a brick corner or a corner of the domain.
    CornerHit,
    /// The path meets several bricks at once, or starts on a lattice line
    /// it runs along.
    AmbiguousBrick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    WallBounce,
    BrickHit { cell: CellIndex, face: Face },
    BaseCross,
    Singularity(SingularityReason),
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::WallBounce => "wall",
            Event::BrickHit { .. } => "brick",
            Event::BaseCross => "base",
            Event::Singularity(_) => "singularity",
        }
    }
}

/// Next event together with where it happens and the vertical time to reach it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<V> {
    pub event: Event,
    pub point: [V; 2],
    pub v_delta: V,
}

/// Full dynamical state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<V> {
    pub pos: [V; 2],
    pub dir: Direction,
    pub config: Configuration,
    /// Accumulated vertical displacement `Σ|Δy|`.
    pub v_travelled: V,
    pub events: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("inadmissible state: {0}")]
    Inadmissible(String),
    #[error("cell {0} destroyed twice or outside the index set")]
    DestroyedTwice(CellIndex),
    #[error("no event after {0} cell steps")]
    NonTermination(u64),
    #[error("singular state cannot be advanced")]
    Singular,
    #[error("illegal translation: {0}")]
    IllegalTranslate(String),
    #[error("coordinates left the representable range")]
    Overflow,
    #[error("budget must be positive")]
    InvalidBudget,
    #[error(transparent)]
    Num(#[from] NumError),
}

/// How [`Simulator::run_until`] ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunOutcome {
    Stopped,
    Singular(SingularityReason),
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct Trace<V> {
    pub steps: Vec<Step<V>>,
    pub final_state: SimState<V>,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellKind {
    Free,
    Brick,
    Wall,
}

/// Event finder bound to one backend and one domain.
#[derive(Debug, Clone)]
pub struct Simulator<B: Backend> {
    pub backend: B,
    pub domain: Domain<B::Value>,
    /// Cap on empty cells crossed while looking for one event.
    pub max_cell_steps: u64,
}

impl<B: Backend> Simulator<B> {
    pub fn new(backend: B, domain: Domain<B::Value>) -> Self {
        Simulator {
            backend,
            domain,
            max_cell_steps: 1 << 24,
        }
    }

    fn kind(&self, config: &Configuration, z: CellIndex) -> CellKind {
        if let Domain::Strip { k, .. } = self.domain {
            if z.z1 < 0 || z.z1 >= k {
                return CellKind::Wall;
            }
        }
        if config.is_present(z) {
            CellKind::Brick
        } else {
            CellKind::Free
        }
    }

    fn check_domain(&self, st: &SimState<B::Value>) -> Result<(), DynamicsError> {
        let b = &self.backend;
        match (self.domain, st.config.lattice()) {
            (Domain::Strip { k, base }, Lattice::Strip { k: ck }) if k == ck => {
                let [x, y] = st.pos;
                if x < b.zero() || x > b.int(k) || y < base {
                    return Err(DynamicsError::Inadmissible(
                        "position outside the strip".into(),
                    ));
                }
                Ok(())
            }
            (Domain::Plane, Lattice::Plane) => Ok(()),
            _ => Err(DynamicsError::Inadmissible(
                "configuration does not match the domain".into(),
            )),
        }
    }

    /// Cell entered next along the component moving with sign `s`.
    fn cell_ahead(&self, v: B::Value, s: i64) -> i64 {
        if s > 0 {
            self.backend.floor(v)
        } else {
            self.backend.ceil(v) - 1
        }
    }

    /// Finds the next event without changing the state.
    pub fn next_event(&self, st: &SimState<B::Value>) -> Result<Step<B::Value>, DynamicsError> {
        self.check_domain(st)?;
        let b = &self.backend;
        let zero = b.zero();
        let sx = st.dir.sx.value();
        let sy = st.dir.sy.value();
        let vertical = b.is_vertical();
        let [mut x, mut y] = st.pos;
        let at = |x, y, v, event| {
            Ok(Step {
                event,
                point: [x, y],
                v_delta: v,
            })
        };

        if vertical && b.is_integer(x) {
            return at(
                x,
                y,
                zero,
                Event::Singularity(SingularityReason::AmbiguousBrick),
            );
        }
        let mut cx = if vertical {
            b.floor(x)
        } else {
            self.cell_ahead(x, sx)
        };
        let mut cy = self.cell_ahead(y, sy);
        let limit = b.cell_limit();
        if cx.abs() > limit || cy.abs() > limit {
            return Err(DynamicsError::Overflow);
        }

        if let Domain::Strip { base, .. } = self.domain {
            if sy < 0 && y == base {
                let event = if self.on_wall(x) {
                    Event::Singularity(SingularityReason::CornerHit)
                } else {
                    Event::BaseCross
                };
                return at(x, y, zero, event);
            }
        }
        match self.kind(&st.config, CellIndex::new(cx, cy)) {
            CellKind::Free => {}
            CellKind::Wall => return at(x, y, zero, Event::WallBounce),
            CellKind::Brick => {
                let on_x = !vertical && b.is_integer(x);
                let on_y = b.is_integer(y);
                let cell = CellIndex::new(cx, cy);
                let event = match (on_x, on_y) {
                    (true, true) => Event::Singularity(SingularityReason::CornerHit),
                    (true, false) => Event::BrickHit {
                        cell,
                        face: if sx > 0 { Face::Left } else { Face::Right },
                    },
                    (false, true) => Event::BrickHit {
                        cell,
                        face: if sy > 0 { Face::Bottom } else { Face::Top },
                    },
                    (false, false) => {
                        return Err(DynamicsError::Inadmissible("ball inside a brick".into()))
                    }
                };
                return at(x, y, zero, event);
            }
        }

        let mut travelled = zero;
        for _ in 0..self.max_cell_steps {
            let gy_line = if sy > 0 { cy + 1 } else { cy };
            let mut target_y = b.int(gy_line);
            let mut hits_base = false;
            if let Domain::Strip { base, .. } = self.domain {
                if sy < 0 && base >= target_y {
                    target_y = base;
                    hits_base = true;
                }
            }
            let dy = if sy > 0 {
                b.sub(target_y, y)
            } else {
                b.sub(y, target_y)
            };
            let (gx_line, dx, ord) = if vertical {
                (cx, zero, Ordering::Greater)
            } else {
                let gx_line = if sx > 0 { cx + 1 } else { cx };
                let gx = b.int(gx_line);
                let dx = if sx > 0 { b.sub(gx, x) } else { b.sub(x, gx) };
                (gx_line, dx, b.cmp_reach(dx, dy))
            };
            match ord {
                Ordering::Less => {
                    let rise = b.rise_for_run(dx);
                    let nx = b.int(gx_line);
                    let ny = if sy > 0 {
                        b.add(y, rise)
                    } else {
                        b.sub(y, rise)
                    };
                    travelled = b.add(travelled, rise);
                    let next = CellIndex::new(cx + sx, cy);
                    match self.kind(&st.config, next) {
                        CellKind::Wall => return at(nx, ny, travelled, Event::WallBounce),
                        CellKind::Brick => {
                            let face = if sx > 0 { Face::Left } else { Face::Right };
                            return at(nx, ny, travelled, Event::BrickHit { cell: next, face });
                        }
                        CellKind::Free => {
                            x = nx;
                            y = ny;
                            cx += sx;
                        }
                    }
                }
                Ordering::Greater => {
                    let run = if vertical { zero } else { b.run_for_rise(dy) };
                    let nx = if sx > 0 { b.add(x, run) } else { b.sub(x, run) };
                    travelled = b.add(travelled, dy);
                    if hits_base {
                        return at(nx, target_y, travelled, Event::BaseCross);
                    }
                    let next = CellIndex::new(cx, cy + sy);
                    match self.kind(&st.config, next) {
                        CellKind::Brick => {
                            let face = if sy > 0 { Face::Bottom } else { Face::Top };
                            return at(
                                nx,
                                target_y,
                                travelled,
                                Event::BrickHit { cell: next, face },
                            );
                        }
                        _ => {
                            x = nx;
                            y = target_y;
                            cy += sy;
                        }
                    }
                }
                Ordering::Equal => {
                    let nx = b.int(gx_line);
                    travelled = b.add(travelled, dy);
                    if hits_base {
                        let event = if self.on_wall(nx) {
                            Event::Singularity(SingularityReason::CornerHit)
                        } else {
                            Event::BaseCross
                        };
                        return at(nx, target_y, travelled, event);
                    }
                    let side = self.kind(&st.config, CellIndex::new(cx + sx, cy));
                    let over = self.kind(&st.config, CellIndex::new(cx, cy + sy));
                    let diag = self.kind(&st.config, CellIndex::new(cx + sx, cy + sy));
                    let bricks = [side, over, diag]
                        .iter()
                        .filter(|k| **k == CellKind::Brick)
                        .count();
                    if bricks >= 2 {
                        return at(
                            nx,
                            target_y,
                            travelled,
                            Event::Singularity(SingularityReason::AmbiguousBrick),
                        );
                    }
                    if bricks == 1 {
                        return at(
                            nx,
                            target_y,
                            travelled,
                            Event::Singularity(SingularityReason::CornerHit),
                        );
                    }
                    if side == CellKind::Wall {
                        return at(nx, target_y, travelled, Event::WallBounce);
                    }
                    x = nx;
                    y = target_y;
                    cx += sx;
                    cy += sy;
                }
            }
            if cx.abs() > limit || cy.abs() > limit {
                return Err(DynamicsError::Overflow);
            }
        }
        Err(DynamicsError::NonTermination(self.max_cell_steps))
    }

    fn on_wall(&self, x: B::Value) -> bool {
        match self.domain {
            Domain::Strip { k, .. } => x == self.backend.zero() || x == self.backend.int(k),
            Domain::Plane => false,
        }
    }

    /// Moves to the event point, reflects, and destroys the brick hit.
    pub fn apply_event(
        &self,
        st: &mut SimState<B::Value>,
        step: &Step<B::Value>,
    ) -> Result<(), DynamicsError> {
        let axis = match step.event {
            Event::Singularity(_) => return Err(DynamicsError::Singular),
            Event::WallBounce => Axis::Vertical,
            Event::BaseCross => Axis::Horizontal,
            Event::BrickHit { cell, face } => {
                st.config.destroy(cell)?;
                face.axis()
            }
        };
        st.pos = step.point;
        st.dir = reflect(st.dir, axis);
        st.v_travelled = self.backend.add(st.v_travelled, step.v_delta);
        st.events += 1;
        Ok(())
    }

    /// Finds and applies one event; singular events are returned unapplied.
    pub fn advance(&self, st: &mut SimState<B::Value>) -> Result<Step<B::Value>, DynamicsError> {
        let step = self.next_event(st)?;
        if !matches!(step.event, Event::Singularity(_)) {
            self.apply_event(st, &step)?;
        }
        Ok(step)
    }

    /// Advances until `stop` accepts an applied step, a singularity occurs,
    /// or `max_events` events have been processed.
    pub fn run_until(
        &self,
        mut st: SimState<B::Value>,
        mut stop: impl FnMut(&Step<B::Value>, &SimState<B::Value>) -> bool,
        max_events: u64,
    ) -> Result<Trace<B::Value>, DynamicsError> {
        if max_events == 0 {
            return Err(DynamicsError::InvalidBudget);
        }
        let mut steps = Vec::new();
        for _ in 0..max_events {
            let step = self.advance(&mut st)?;
            steps.push(step);
            if let Event::Singularity(r) = step.event {
                return Ok(Trace {
                    steps,
                    final_state: st,
                    outcome: RunOutcome::Singular(r),
                });
            }
            if stop(&step, &st) {
                return Ok(Trace {
                    steps,
                    final_state: st,
                    outcome: RunOutcome::Stopped,
                });
            }
        }
        Ok(Trace {
            steps,
            final_state: st,
            outcome: RunOutcome::Exhausted,
        })
    }

    /// Translates state and domain by the lattice vector `u`.
    ///
    /// In the strip only vertical moves are legal; moving down by `m`
    /// requires rows `0..m` to be empty and lowers the base by `m`.
    pub fn translate(
        &self,
        st: &SimState<B::Value>,
        u: (i64, i64),
    ) -> Result<(Self, SimState<B::Value>), DynamicsError> {
        let b = &self.backend;
        let shift = |z: &CellIndex| CellIndex::new(z.z1 + u.0, z.z2 + u.1);
        let mut out = st.clone();
        out.pos = [b.add(st.pos[0], b.int(u.0)), b.add(st.pos[1], b.int(u.1))];
        let mut sim = self.clone();
        match self.domain {
            Domain::Plane => {
                let holes: FxHashSet<_> = st.config.holes().map(shift).collect();
                *out.config.holes_mut() = holes;
            }
            Domain::Strip { k, base } => {
                if u.0 != 0 {
                    return Err(DynamicsError::IllegalTranslate(
                        "strip walls are fixed".into(),
                    ));
                }
                let m = u.1;
                let new_base = b.add(base, b.int(m));
                if m < 0 {
                    for row in 0..-m {
                        for z1 in 0..k {
                            if st.config.is_present(CellIndex::new(z1, row)) {
                                return Err(DynamicsError::IllegalTranslate(format!(
                                    "row {row} is not empty"
                                )));
                            }
                        }
                    }
                }
                let mut holes: FxHashSet<_> =
                    st.config.holes().map(shift).filter(|z| z.z2 >= 0).collect();
                for row in 0..m.max(0) {
                    holes.extend((0..k).map(|z1| CellIndex::new(z1, row)));
                }
                *out.config.holes_mut() = holes;
                sim.domain = Domain::Strip { k, base: new_base };
            }
        }
        Ok((sim, out))
    }
}
