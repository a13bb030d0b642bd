//! Strategies and property checks shared by the property tests and the
//! acceptance suite.
#![allow(dead_code)]

use casse_briques::dynamics::{
    CellIndex, Configuration, Direction, Domain, Event, Lattice, SimState, Simulator,
};
use casse_briques::frontier::{
    phi_two_columns, psi, psi_star_inverse, FrontierError, FrontierMap, FrontierPoint, Xi,
};
use casse_briques::num::{q, qi, Backend, ExactBackend, Sign, Slope, Q};
use casse_briques::strip::{
    band_height, base_return, escape_series, height_h, height_h_plus, is_equilibrated,
    BaseState, ReturnKind, StripDomain, StripError,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 1000;
pub const MAX_EVENTS: u64 = 1_000_000;

pub fn config() -> Config {
    Config {
        cases: CASES,
        max_global_rejects: 20 * CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

/// Runs `test` over `strategy` with [`config`] and a fixed seed.
pub fn run_property<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        config(),
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Rational slope strictly below the stability threshold of width `k`.
pub fn slope_below(k: i64) -> impl Strategy<Value = Slope> {
    (1u32..=3, 1u32..=30).prop_map(move |(rise, extra)| {
        let floor = if k == 1 { 0 } else { (k * (k - 1)) as u32 * rise };
        Slope::rational(rise, floor + extra).expect("positive slope")
    })
}

pub fn rational_in(lo: i128, hi_num: i128, max_den: i128) -> impl Strategy<Value = Q> {
    (1..=max_den).prop_flat_map(move |d| (lo * d..hi_num * d).prop_map(move |n| q(n, d)))
}

/// Strip data `(K, slope, h, x1)` with `K` in `ks`, `0 <= h < 2` and
/// `0 < x1 < K`.
pub fn strip_case(ks: std::ops::RangeInclusive<i64>) -> impl Strategy<Value = (StripDomain, BaseState)> {
    ks.prop_flat_map(|k| (Just(k), slope_below(k), rational_in(0, 2, 60), 2i128..=60))
        .prop_flat_map(|(k, slope, h, xd)| {
            (Just(k), Just(slope), Just(h), (1..k as i128 * xd).prop_map(move |c| q(c, xd)))
        })
        .prop_map(|(k, slope, h, x1)| {
            (StripDomain { k, h }, BaseState::initial(k, x1, slope))
        })
}

/// Holes filling rows `0..h0` and a random proper subset of row `h0`.
pub fn equilibrated_config(k: i64) -> impl Strategy<Value = Configuration> {
    (0i64..3, proptest::collection::vec(any::<bool>(), k as usize)).prop_map(move |(h0, bits)| {
        let mut holes: Vec<_> = (0..h0)
            .flat_map(|r| (0..k).map(move |c| CellIndex::new(c, r)))
            .collect();
        let row: Vec<_> = (0..k).filter(|&c| bits[c as usize]).collect();
        let keep = if row.len() == k as usize { &row[1..] } else { &row[..] };
        holes.extend(keep.iter().map(|&c| CellIndex::new(c, h0)));
        Configuration::with_holes(Lattice::Strip { k }, holes).expect("holes in the strip")
    })
}

/// Holes anywhere in rows `0..4`.
pub fn filled_config(k: i64) -> impl Strategy<Value = Configuration> {
    proptest::collection::vec(any::<bool>(), 4 * k as usize).prop_map(move |bits| {
        let holes = (0..4 * k)
            .filter(|&i| bits[i as usize])
            .map(|i| CellIndex::new(i % k, i / k));
        Configuration::with_holes(Lattice::Strip { k }, holes).expect("holes in the strip")
    })
}

pub fn strip_case_with(
    ks: std::ops::RangeInclusive<i64>,
    configs: fn(i64) -> BoxedStrategy<Configuration>,
) -> impl Strategy<Value = (StripDomain, BaseState)> {
    strip_case(ks).prop_flat_map(move |(d, s)| {
        let k = d.k;
        (Just(d), Just(s), configs(k))
    })
    .prop_map(|(d, s, config)| (d, BaseState { config, ..s }))
}

pub fn equilibrated_boxed(k: i64) -> BoxedStrategy<Configuration> {
    equilibrated_config(k).boxed()
}

pub fn filled_boxed(k: i64) -> BoxedStrategy<Configuration> {
    filled_config(k).boxed()
}

/// Plane start in the open unit cell with a rational slope and any signs.
pub fn plane_case() -> impl Strategy<Value = (Q, Q, Direction)> {
    (
        rational_in(0, 1, 40),
        rational_in(0, 1, 40),
        1u32..=6,
        1u32..=6,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_filter("start strictly inside", |(x, y, ..)| *x > qi(0) && *y > qi(0))
        .prop_map(|(x, y, rise, run, px, py)| {
            let sign = |b: bool| if b { Sign::Pos } else { Sign::Neg };
            let slope = Slope::rational(rise, run).expect("positive slope");
            (x, y, Direction::new(slope, sign(px), sign(py)))
        })
}

pub fn plane_sim(x: Q, y: Q, dir: Direction) -> (Simulator<ExactBackend>, SimState<i64>) {
    let b = ExactBackend::for_inputs(dir.slope, &[x, y]).expect("small denominators");
    let st = SimState {
        pos: [b.from_q(&x).unwrap(), b.from_q(&y).unwrap()],
        dir,
        config: Configuration::plane_initial(),
        v_travelled: 0,
        events: 0,
    };
    (Simulator::new(b, Domain::Plane), st)
}

pub fn strip_sim(d: &StripDomain, s: &BaseState) -> (Simulator<ExactBackend>, SimState<i64>) {
    let b = ExactBackend::for_inputs(s.dir.slope, &[s.x1, d.h]).expect("small denominators");
    let base = b.from_q(&-d.h).unwrap();
    let st = SimState {
        pos: [b.from_q(&s.x1).unwrap(), base],
        dir: s.dir,
        config: s.config.clone(),
        v_travelled: 0,
        events: 0,
    };
    (Simulator::new(b, Domain::Strip { k: d.k, base }), st)
}

fn singular(e: &StripError) -> bool {
    matches!(e, StripError::Singular { .. })
}

/// Walks up to `events` events, stopping at the first singularity.
fn walk(
    sim: &Simulator<ExactBackend>,
    mut st: SimState<i64>,
    events: usize,
    mut each: impl FnMut(&SimState<i64>, &Event, &SimState<i64>) -> Result<(), TestCaseError>,
) -> Result<(), TestCaseError> {
    for _ in 0..events {
        let before = st.clone();
        let step = sim.advance(&mut st).map_err(|e| TestCaseError::fail(e.to_string()))?;
        if let Event::Singularity(_) = step.event {
            return Ok(());
        }
        each(&before, &step.event, &st)?;
    }
    Ok(())
}

fn check_angles(slope: Slope, before: &SimState<i64>, ev: &Event, after: &SimState<i64>) -> Result<(), TestCaseError> {
    prop_assert_eq!(after.dir.slope, slope);
    if slope == Slope::Vertical {
        prop_assert_eq!(after.dir.sx, Sign::Pos);
    }
    if matches!(ev, Event::WallBounce | Event::BrickHit { .. } | Event::BaseCross) {
        let flips = (before.dir.sx != after.dir.sx) as u8 + (before.dir.sy != after.dir.sy) as u8;
        prop_assert_eq!(flips, 1, "one reflection per event, {:?}", ev);
    }
    Ok(())
}

/// Every direction along a trajectory keeps the initial slope; each event
/// reflects exactly one component.
pub fn angle_closure_plane((x, y, dir): (Q, Q, Direction)) -> Result<(), TestCaseError> {
    let (sim, st) = plane_sim(x, y, dir);
    walk(&sim, st, 300, |b, e, a| check_angles(dir.slope, b, e, a))
}

pub fn angle_closure_strip((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    let (sim, st) = strip_sim(&d, &s);
    walk(&sim, st, 300, |b, e, a| check_angles(s.dir.slope, b, e, a))
}

fn check_destruction(before: &SimState<i64>, ev: &Event, after: &SimState<i64>) -> Result<(), TestCaseError> {
    match ev {
        Event::BrickHit { cell, .. } => {
            prop_assert!(before.config.is_present(*cell), "hit a hole at {}", cell);
            prop_assert!(after.config.is_hole(*cell));
            prop_assert_eq!(after.config.hole_count(), before.config.hole_count() + 1);
        }
        _ => prop_assert_eq!(&after.config, &before.config),
    }
    for z in before.config.holes() {
        prop_assert!(after.config.is_hole(*z));
    }
    Ok(())
}

/// Holes only accumulate, one per brick hit, and only present bricks are hit.
pub fn monotone_destruction_plane((x, y, dir): (Q, Q, Direction)) -> Result<(), TestCaseError> {
    let (sim, st) = plane_sim(x, y, dir);
    walk(&sim, st, 300, check_destruction)?;
    Ok(())
}

pub fn monotone_destruction_strip((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    let (sim, st) = strip_sim(&d, &s);
    walk(&sim, st, 300, check_destruction)
}

/// `n - (K-1) <= K (H_n - H_0) <= K n` for every prefix of an escape series
/// from a full strip below the threshold.
pub fn height_bounds((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    let series = match escape_series(&d, &s, 200, MAX_EVENTS) {
        Ok(series) => series,
        Err(e) if singular(&e.source) => return Err(TestCaseError::reject("singular start")),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    let k = d.k;
    let h0 = series.heights[0];
    for (n, w) in series.heights.windows(2).enumerate() {
        prop_assert!((0..=1).contains(&(w[1] - w[0])), "step {} of H is {}", n, w[1] - w[0]);
    }
    for (n, &hn) in series.heights.iter().enumerate() {
        let (n, dh) = (n as i64, hn - h0);
        prop_assert!(k * dh <= k * n && k * dh >= n - (k - 1), "n={} H_n-H_0={}", n, dh);
    }
    for w in series.tau_vertical.windows(2) {
        prop_assert!(w[1] > w[0] || (d.h == qi(0) && w[1] == w[0]));
    }
    Ok(())
}

/// Untrimmed returns; `f` sees the state before and the record.
fn returns(
    d: &StripDomain,
    s: &BaseState,
    n: usize,
    mut f: impl FnMut(&BaseState, &casse_briques::strip::ReturnRecord) -> Result<(), TestCaseError>,
) -> Result<usize, TestCaseError> {
    let mut cur = s.clone();
    for i in 0..n {
        let rec = match base_return(d, &cur, MAX_EVENTS) {
            Ok(r) => r,
            Err(e) if singular(&e) && i == 0 => return Err(TestCaseError::reject("singular start")),
            Err(e) if singular(&e) => return Ok(i),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        f(&cur, &rec)?;
        cur = rec.next;
    }
    Ok(n)
}

/// `T = 2(H + h + [U++])` for every return from an equilibrated start.
pub fn t_formula((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    prop_assume!(is_equilibrated(&s.config));
    returns(&d, &s, 60, |before, rec| {
        let hh = qi(height_h(&before.config) as i128);
        let extra = qi((rec.kind == ReturnKind::UPlusPlus) as i128);
        prop_assert_eq!(rec.t_vertical, (hh + d.h + extra) * qi(2));
        prop_assert_eq!(rec.delta_h == 0, rec.kind == ReturnKind::U0);
        Ok(())
    })?;
    Ok(())
}

/// From an equilibrated configuration every intermediate configuration of
/// every return is equilibrated.
pub fn equilibration_stability((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    prop_assume!(is_equilibrated(&s.config));
    returns(&d, &s, 60, |before, rec| {
        let mut c = before.config.clone();
        for (cell, _) in &rec.bricks_destroyed {
            c.destroy(*cell).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(is_equilibrated(&c), "lost equilibrium after destroying {}", cell);
        }
        Ok(())
    })?;
    Ok(())
}

/// From any well-filled configuration, equilibrium is reached by the first
/// return whose lowest row reaches `H+` of the start, and kept afterwards.
pub fn equilibration_absorption((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    let target = height_h_plus(&s.config);
    let mut reached = height_h(&s.config) >= target;
    let mut first_eq: Option<usize> = is_equilibrated(&s.config).then_some(0);
    let mut i = 0;
    let done = returns(&d, &s, 400, |_, rec| {
        i += 1;
        let eq = is_equilibrated(&rec.next.config);
        reached |= height_h(&rec.next.config) >= target;
        if let Some(at) = first_eq {
            prop_assert!(eq, "equilibrium reached at return {} lost at {}", at, i);
        } else if eq {
            first_eq = Some(i);
        }
        if reached {
            prop_assert!(eq, "not equilibrated at return {} although H >= H+(start) = {}", i, target);
        }
        Ok(())
    })?;
    if done == 400 {
        prop_assert!(reached, "H+(start) = {} not reached in 400 returns", target);
    }
    Ok(())
}

/// Adding an empty band of height `2K tan θ₀` below the bricks changes the
/// return only by the vertical time spent crossing it twice.
pub fn band_removal((d, s): (StripDomain, BaseState)) -> Result<(), TestCaseError> {
    let band = band_height(d.k, s.dir.slope).expect("rational slope");
    let deep = StripDomain { k: d.k, h: d.h + band };
    let a = match base_return(&d, &s, MAX_EVENTS) {
        Ok(r) => r,
        Err(e) if singular(&e) => return Err(TestCaseError::reject("singular start")),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    let b = base_return(&deep, &s, MAX_EVENTS).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&b.next, &a.next);
    prop_assert_eq!(b.kind, a.kind);
    prop_assert_eq!(b.delta_h, a.delta_h);
    prop_assert_eq!(&b.bricks_destroyed, &a.bricks_destroyed);
    prop_assert_eq!(b.t_vertical, a.t_vertical + band * qi(2));
    Ok(())
}

/// Running then translating by `u` equals translating then running.
pub fn translation_plane(((x, y, dir), u): ((Q, Q, Direction), (i64, i64))) -> Result<(), TestCaseError> {
    let (sim, st) = plane_sim(x, y, dir);
    let (tsim, mut tst) = sim.translate(&st, u).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut st = st;
    for _ in 0..200 {
        let a = sim.advance(&mut st).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let b = tsim.advance(&mut tst).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (_, moved) = sim.translate(&st, u).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&moved, &tst);
        match (a.event, b.event) {
            (Event::BrickHit { cell: c, face: f }, Event::BrickHit { cell: c2, face: f2 }) => {
                prop_assert_eq!(c.offset(u.0, u.1), c2);
                prop_assert_eq!(f, f2);
            }
            (ea, eb) => prop_assert_eq!(ea, eb),
        }
        if matches!(a.event, Event::Singularity(_)) {
            break;
        }
    }
    Ok(())
}

/// With `m` empty rows at the bottom, shifting down by `m` and raising the
/// base accordingly gives the same motion.
pub fn translation_strip(((d, s), m): ((StripDomain, BaseState), i64)) -> Result<(), TestCaseError> {
    let holes = (0..m).flat_map(|r| (0..d.k).map(move |c| CellIndex::new(c, r)));
    let config = Configuration::with_holes(Lattice::Strip { k: d.k }, holes).unwrap();
    let s = BaseState { config, ..s };
    let (sim, st) = strip_sim(&d, &s);
    let (tsim, tst) = sim.translate(&st, (0, -m)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let ra = sim.run_until(st, |_, _| false, 200).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let rb = tsim.run_until(tst, |_, _| false, 200).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(ra.steps.len(), rb.steps.len());
    let (_, moved) = sim
        .translate(&ra.final_state, (0, -m))
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(moved, rb.final_state);
    Ok(())
}

/// `Ψ` of the canonical state encoded by a point is the point itself.
pub fn psi_round_trip((k, slope, x, h, xi): (usize, Slope, Q, Q, Xi)) -> Result<(), TestCaseError> {
    let p = FrontierPoint::new(x, h, xi);
    let (d, s) = psi_star_inverse(&p, k, slope).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(psi(&d, &s).map_err(|e| TestCaseError::fail(e.to_string()))?, p);
    Ok(())
}

pub fn frontier_point(max_k: usize) -> impl Strategy<Value = (usize, Slope, Q, Q, Xi)> {
    (2..=max_k)
        .prop_flat_map(|k| {
            (
                Just(k),
                slope_below(k as i64),
                rational_in(0, 1, 200),
                rational_in(0, 1, 200),
                1..(1u64 << k),
            )
        })
}

/// The general map, its piecewise form and (for `K = 2`) the two-column
/// form agree.
pub fn phi_forms_agree((k, slope, x, h, xi): (usize, Slope, Q, Q, Xi)) -> Result<(), TestCaseError> {
    let m = FrontierMap::exact(k, slope).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let p = FrontierPoint::new(x, h, xi);
    let direct = m.phi(&p);
    prop_assert_eq!(direct, m.phi_by_pieces(&p));
    if k == 2 {
        prop_assert_eq!(direct, phi_two_columns(m.alpha, &p));
    }
    prop_assert!(direct.x >= qi(0) && direct.x < qi(1));
    prop_assert!(direct.xi != 0);
    Ok(())
}

/// Lockstep semiconjugacy between the strip return map and `φ`.
pub fn conjugacy((d, s): (StripDomain, BaseState), steps: usize) -> Result<(), TestCaseError> {
    match casse_briques::frontier::conjugacy_check(&d, &s, steps, MAX_EVENTS) {
        Ok(r) => {
            prop_assert_eq!(r.steps, steps);
            Ok(())
        }
        Err(FrontierError::Strip(e)) if singular(&e) => Err(TestCaseError::reject("singular start")),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}
