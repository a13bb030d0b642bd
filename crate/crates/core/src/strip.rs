//! Half-strip `[0,K] x [-h, ∞)` with a reflecting base: return map to the
//! base, normalisation of configurations, and escape statistics.

use num_traits::Zero;
use thiserror::Error;

use crate::dynamics::{
    CellIndex, Configuration, Direction, Domain, DynamicsError, Event, Face, Lattice, SimState,
    SimState as St, Simulator, SingularityReason,
};
use crate::num::{q, qi, Backend, ExactBackend, NumError, Sign, Slope, Q};

/// Strip width `k` and base depth `h >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripDomain {
    pub k: i64,
    pub h: Q,
}

impl StripDomain {
    pub fn new(k: i64, h: Q) -> Result<Self, StripError> {
        if k < 1 {
            return Err(StripError::BadDomain(format!("width {k} must be >= 1")));
        }
        if h < Q::zero() {
            return Err(StripError::BadDomain(format!(
                "base depth {h} must be >= 0"
            )));
        }
        Ok(StripDomain { k, h })
    }
}

/// State at the base: abscissa, direction (moving up), configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseState {
    pub x1: Q,
    pub dir: Direction,
    pub config: Configuration,
}

impl BaseState {
    /// Full strip, ball leaving the base at `x1` up and to the right.
    pub fn initial(k: i64, x1: Q, slope: Slope) -> Self {
        BaseState {
            x1,
            dir: Direction::up_right(slope),
            config: Configuration::full_strip(k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReturnKind {
    /// The lowest occupied row is unchanged.
    U0,
    /// The lowest row is cleared without going above it.
    UPlus,
    /// The ball reaches the row above the lowest one.
    UPlusPlus,
}

impl ReturnKind {
    pub fn name(self) -> &'static str {
        match self {
            ReturnKind::U0 => "U0",
            ReturnKind::UPlus => "U+",
            ReturnKind::UPlusPlus => "U++",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnRecord {
    pub next: BaseState,
    /// Vertical displacement accumulated between the two base visits.
    pub t_vertical: Q,
    pub delta_h: i64,
    pub kind: ReturnKind,
    /// Highest point reached (a row boundary when a brick was hit).
    pub peak: Q,
    pub bricks_destroyed: Vec<(CellIndex, Face)>,
    pub events: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StripError {
    #[error("invalid strip: {0}")]
    BadDomain(String),
    #[error("slope {0} is not supported by the exact strip backend")]
    UnsupportedSlope(String),
    #[error("singular event ({reason:?}) at ({x}, {y})")]
    Singular {
        x: Q,
        y: Q,
        reason: SingularityReason,
    },
    #[error("no return to the base within {0} events")]
    NonReturn(u64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Lowest row that still contains a brick.
pub fn height_h(config: &Configuration) -> i64 {
    let k = strip_width(config);
    let mut counts: std::collections::BTreeMap<i64, i64> = Default::default();
    for z in config.holes() {
        *counts.entry(z.z2).or_default() += 1;
    }
    let mut row = 0;
    while counts.get(&row).copied().unwrap_or(0) >= k {
        row += 1;
    }
    row
}

/// One above the highest row containing a hole, or 0 without holes.
pub fn height_h_plus(config: &Configuration) -> i64 {
    config.holes().map(|z| z.z2 + 1).max().unwrap_or(0)
}

pub fn is_equilibrated(config: &Configuration) -> bool {
    height_h_plus(config) - height_h(config) <= 1
}

/// Slope bound `1/(K(K-1))` below which equilibrium is stable; `None` when
/// every slope qualifies (`K = 1`).
pub fn slope_threshold(k: i64) -> Option<Q> {
    (k > 1).then(|| q(1, (k * (k - 1)) as i128))
}

/// Whether `slope` lies strictly below the stability threshold for width `k`.
pub fn below_threshold(k: i64, slope: Slope) -> bool {
    match (slope_threshold(k), slope) {
        (None, _) => true,
        (Some(_), Slope::Vertical) => false,
        (Some(t), Slope::Rational { .. }) => slope.as_q().unwrap() < t,
        (Some(t), Slope::Real(v)) => v < crate::num::q_to_f64(&t),
    }
}

fn strip_width(config: &Configuration) -> i64 {
    match config.lattice() {
        Lattice::Strip { k } => k,
        Lattice::Plane => panic!("strip operation on a plane configuration"),
    }
}

/// Height `2Kp/q` of an empty band whose insertion leaves the return map
/// unchanged; `None` for vertical motion.
pub fn band_height(k: i64, slope: Slope) -> Option<Q> {
    slope.as_q().map(|t| t * qi(2 * k as i128))
}

fn exact_sim(
    domain: &StripDomain,
    state: &BaseState,
) -> Result<Simulator<ExactBackend>, StripError> {
    if !state.dir.slope.is_exact() {
        return Err(StripError::UnsupportedSlope(state.dir.slope.to_string()));
    }
    let b = ExactBackend::for_inputs(state.dir.slope, &[state.x1, domain.h])?;
    let base = b.from_q(&-domain.h)?;
    Ok(Simulator::new(b, Domain::Strip { k: domain.k, base }))
}

fn check_base_state(domain: &StripDomain, state: &BaseState) -> Result<(), StripError> {
    if state.config.lattice() != (Lattice::Strip { k: domain.k }) {
        return Err(DynamicsError::Inadmissible(
            "configuration width differs from the strip".into(),
        )
        .into());
    }
    if state.dir.sy != Sign::Pos {
        return Err(DynamicsError::Inadmissible("base state must move upward".into()).into());
    }
    if state.x1 < Q::zero() || state.x1 > qi(domain.k as i128) {
        return Err(DynamicsError::Inadmissible("abscissa outside [0, K]".into()).into());
    }
    Ok(())
}

/// Runs from the base until the ball comes back to it.
pub fn base_return(
    domain: &StripDomain,
    state: &BaseState,
    max_events: u64,
) -> Result<ReturnRecord, StripError> {
    if max_events == 0 {
        return Err(DynamicsError::InvalidBudget.into());
    }
    check_base_state(domain, state)?;
    let sim = exact_sim(domain, state)?;
    let b = &sim.backend;
    let h_before = height_h(&state.config);
    let mut st: St<i64> = SimState {
        pos: [b.from_q(&state.x1)?, b.from_q(&-domain.h)?],
        dir: state.dir,
        config: state.config.clone(),
        v_travelled: 0,
        events: 0,
    };
    let mut destroyed = Vec::new();
    let mut peak = st.pos[1];
    for _ in 0..max_events {
        let step = sim.next_event(&st)?;
        if let Event::Singularity(reason) = step.event {
            return Err(StripError::Singular {
                x: b.to_q(step.point[0]).unwrap(),
                y: b.to_q(step.point[1]).unwrap(),
                reason,
            });
        }
        sim.apply_event(&mut st, &step)?;
        if step.point[1] > peak {
            peak = step.point[1];
        }
        match step.event {
            Event::BrickHit { cell, face } => destroyed.push((cell, face)),
            Event::BaseCross => {
                let h_after = height_h(&st.config);
                let delta_h = h_after - h_before;
                let peak = b.to_q(peak).unwrap();
                let kind = if peak > qi(h_before as i128) {
                    ReturnKind::UPlusPlus
                } else if delta_h > 0 {
                    ReturnKind::UPlus
                } else {
                    ReturnKind::U0
                };
                return Ok(ReturnRecord {
                    next: BaseState {
                        x1: b.to_q(st.pos[0]).unwrap(),
                        dir: st.dir,
                        config: st.config,
                    },
                    t_vertical: b.to_q(st.v_travelled).unwrap(),
                    delta_h,
                    kind,
                    peak,
                    bricks_destroyed: destroyed,
                    events: st.events,
                });
            }
            _ => {}
        }
    }
    Err(StripError::NonReturn(max_events))
}

/// Result of [`trim_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed {
    pub domain: StripDomain,
    pub state: BaseState,
    /// Rows removed from below the configuration.
    pub rows_removed: i64,
    /// Number of empty bands removed from the base gap.
    pub bands_removed: i128,
}

/// Moves the configuration down until its lowest row holds a brick, then
/// shortens the base gap by whole empty bands.
pub fn trim_normalize(domain: &StripDomain, state: &BaseState) -> Trimmed {
    let shift = height_h(&state.config);
    let holes: Vec<CellIndex> = state
        .config
        .holes()
        .filter(|z| z.z2 >= shift)
        .map(|z| CellIndex::new(z.z1, z.z2 - shift))
        .collect();
    let config = Configuration::with_holes(Lattice::Strip { k: domain.k }, holes)
        .expect("shifted holes stay in the strip");
    let h_raw = domain.h + qi(shift as i128);
    let (h, bands) = match band_height(domain.k, state.dir.slope) {
        Some(band) => {
            let m = (h_raw / band).floor().to_integer();
            (h_raw - band * qi(m), m)
        }
        None => (h_raw, 0),
    };
    Trimmed {
        domain: StripDomain { k: domain.k, h },
        state: BaseState {
            x1: state.x1,
            dir: state.dir,
            config,
        },
        rows_removed: shift,
        bands_removed: bands,
    }
}

/// Heights, cumulative vertical times and return kinds along an orbit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EscapeSeries {
    /// `H_0, H_1, ..., H_n` in absolute rows.
    pub heights: Vec<i64>,
    /// Cumulative vertical time at each base visit, starting with 0.
    pub tau_vertical: Vec<Q>,
    /// Kind of return `1..=n`.
    pub kinds: Vec<ReturnKind>,
}

impl EscapeSeries {
    pub fn returns(&self) -> usize {
        self.kinds.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("escape series stopped after {} returns: {source}", partial.returns())]
pub struct EscapeError {
    pub partial: EscapeSeries,
    #[source]
    pub source: StripError,
}

/// Iterates the base return `n` times, renormalising after each return so
/// the configuration stays bounded. Heights and times are absolute.
#[allow(clippy::result_large_err)]
pub fn escape_series(
    domain: &StripDomain,
    state: &BaseState,
    n: usize,
    max_events_per_return: u64,
) -> Result<EscapeSeries, EscapeError> {
    let mut series = EscapeSeries::default();
    let fail = |series: EscapeSeries, source: StripError| EscapeError {
        partial: series,
        source,
    };
    if let Err(e) = check_base_state(domain, state) {
        return Err(fail(series, e));
    }
    let mut trimmed = trim_normalize(domain, state);
    let mut h_abs = trimmed.rows_removed;
    let mut tau = Q::zero();
    series.heights.push(h_abs);
    series.tau_vertical.push(tau);
    for _ in 0..n {
        let rec = match base_return(&trimmed.domain, &trimmed.state, max_events_per_return) {
            Ok(r) => r,
            Err(e) => return Err(fail(series, e)),
        };
        // vertical distance lost by moving the bricks down to the trimmed base
        let gap = qi(h_abs as i128) + domain.h - trimmed.domain.h;
        tau += rec.t_vertical + gap * qi(2);
        let next = trim_normalize(&trimmed.domain, &rec.next);
        h_abs += next.rows_removed;
        series.heights.push(h_abs);
        series.tau_vertical.push(tau);
        series.kinds.push(rec.kind);
        trimmed = next;
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeEstimates {
    /// `H_n / n` at the last return.
    pub rate_n: f64,
    /// `H_t / sqrt(t)` with `t` the arc length at the last return.
    pub rate_t: f64,
    pub n: usize,
    pub t: f64,
}

pub fn escape_estimates(series: &EscapeSeries, slope: Slope) -> Option<EscapeEstimates> {
    let n = series.returns();
    if n == 0 {
        return None;
    }
    let h0 = series.heights[0];
    let hn = (series.heights[n] - h0) as f64;
    let t = crate::num::q_to_f64(&series.tau_vertical[n]) / slope.sin();
    Some(EscapeEstimates {
        rate_n: hn / n as f64,
        rate_t: hn / t.sqrt(),
        n,
        t,
    })
}

/// Cumulative vertical return times `2 Σ_{l<k} (h + l)` of the vertical
/// ball in the unit strip.
pub fn vertical_unit_return_times(h: Q, count: usize) -> Vec<Q> {
    let mut out = Vec::with_capacity(count);
    let mut acc = Q::zero();
    for l in 0..count {
        acc += (h + qi(l as i128)) * qi(2);
        out.push(acc);
    }
    out
}

/// Odd numerators over a power-of-two denominator in bit-reversed order,
/// scaled to `(0, k)`: a deterministic low-discrepancy set of abscissas.
pub fn regular_abscissas(k: i64, count: usize) -> Vec<Q> {
    let mut bits = 1u32;
    while (1usize << (bits - 1)) < count.max(1) {
        bits += 1;
    }
    let den = 1i128 << bits;
    let half = 1u64 << (bits - 1);
    (0..half)
        .map(|i| {
            let r = i.reverse_bits() >> (64 - (bits - 1)).min(63);
            let r = if bits == 1 { 0 } else { r };
            q((2 * r as i128 + 1) * k as i128, den)
        })
        .take(count)
        .collect()
}

/// `2kh + k(k-1)`: cumulative vertical time after `k` returns of the
/// vertical ball in the unit strip.
pub fn vertical_unit_closed_form(h: Q, k: i64) -> Q {
    h * qi(2 * k as i128) + qi((k * (k - 1)) as i128)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heights_of_simple_configurations() {
        let full = Configuration::full_strip(2);
        assert_eq!((height_h(&full), height_h_plus(&full)), (0, 0));
        let c = Configuration::with_holes(
            Lattice::Strip { k: 2 },
            [
                CellIndex::new(0, 0),
                CellIndex::new(1, 0),
                CellIndex::new(1, 1),
            ],
        )
        .unwrap();
        assert_eq!((height_h(&c), height_h_plus(&c)), (1, 2));
        assert!(is_equilibrated(&c));
        let d = Configuration::with_holes(
            Lattice::Strip { k: 2 },
            [CellIndex::new(0, 0), CellIndex::new(0, 1)],
        )
        .unwrap();
        assert_eq!((height_h(&d), height_h_plus(&d)), (0, 2));
        assert!(!is_equilibrated(&d));
    }

    #[test]
    fn thresholds() {
        assert_eq!(slope_threshold(1), None);
        assert_eq!(slope_threshold(2), Some(q(1, 2)));
        assert_eq!(slope_threshold(3), Some(q(1, 6)));
        assert!(below_threshold(2, Slope::rational(1, 4).unwrap()));
        assert!(!below_threshold(2, Slope::rational(1, 2).unwrap()));
    }

    #[test]
    fn vertical_returns_match_sum() {
        let d = StripDomain::new(1, q(1, 2)).unwrap();
        let s = BaseState::initial(1, q(1, 2), Slope::Vertical);
        let series = escape_series(&d, &s, 5, 1000).unwrap();
        let expected = vertical_unit_return_times(q(1, 2), 5);
        assert_eq!(&series.tau_vertical[1..], &expected[..]);
        for k in 1..=5 {
            assert_eq!(
                expected[k - 1],
                vertical_unit_closed_form(q(1, 2), k as i64)
            );
        }
        assert_eq!(series.heights, vec![0, 1, 2, 3, 4, 5]);
        assert!(series.kinds.iter().all(|k| *k == ReturnKind::UPlus));
    }

    #[test]
    fn first_return_of_small_strip() {
        let d = StripDomain::new(2, q(1, 2)).unwrap();
        let s = BaseState::initial(2, q(1, 6), Slope::rational(1, 3).unwrap());
        let r = base_return(&d, &s, 100).unwrap();
        assert_eq!(r.bricks_destroyed[0], (CellIndex::new(1, 0), Face::Bottom));
        assert_eq!(r.t_vertical, qi(2) * (q(1, 2) + r.peak));
        assert_eq!(r.next.dir.sy, Sign::Pos);
    }

    #[test]
    fn trim_removes_rows_and_bands() {
        let k = 2;
        let slope = Slope::rational(1, 4).unwrap();
        let holes = [
            CellIndex::new(0, 0),
            CellIndex::new(1, 0),
            CellIndex::new(0, 1),
        ];
        let config = Configuration::with_holes(Lattice::Strip { k }, holes).unwrap();
        let d = StripDomain::new(k, q(3, 2)).unwrap();
        let s = BaseState {
            x1: q(1, 3),
            dir: Direction::up_right(slope),
            config,
        };
        let t = trim_normalize(&d, &s);
        assert_eq!(t.rows_removed, 1);
        // band height 2*2/4 = 1, raw gap 5/2
        assert_eq!(t.bands_removed, 2);
        assert_eq!(t.domain.h, q(1, 2));
        assert_eq!(t.state.config.sorted_holes(), vec![CellIndex::new(0, 0)]);
    }

    #[test]
    fn abscissas_are_distinct_odd_dyadics() {
        let xs = regular_abscissas(2, 20);
        assert_eq!(xs.len(), 20);
        let mut sorted = xs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
        assert!(xs
            .iter()
            .all(|x| *x > Q::zero() && *x < qi(2) && *x.denom() == 32));
        assert_eq!(xs[0], q(1, 32));
        assert_eq!(xs[1], q(33, 32));
    }
}
