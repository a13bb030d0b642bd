//! Aggregated invariant checks: conjugacy lockstep, torus factor, induced
//! map on `G_h`, equilibration and height bounds.

use std::io::Write;

use anyhow::Result;
use casse_briques::dynamics::{
    CellIndex, Configuration, Direction, Domain, Event, Lattice, SimState, Simulator,
};
use casse_briques::frontier::{
    beta, conjugacy_check_with, g_h_arc, in_invariant_set_gh, induced_closed_form_gh,
    induced_return_time_gh, induced_rotation_gh, invariant_set_gh, FrontierError, FrontierMap,
    FrontierPoint, XI_01, XI_10, XI_11,
};
use casse_briques::num::{q, qi, Backend, ExactBackend, FloatBackend, Sign, Slope, Q};
use casse_briques::plane::{factor_project, torus_flow};
use casse_briques::strip::{
    base_return, below_threshold, escape_series, height_h, is_equilibrated, trim_normalize,
    BaseState, StripDomain, StripError,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::config::{BackendKind, ExperimentConfig, Mutation};
use crate::output::write_opt;
use crate::{Report, Status, Summary};

/// Tolerance of the float factor check.
const FLOAT_TOL: f64 = 1e-6;

struct SuiteResult {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn suite(name: &'static str, r: Result<String, String>) -> SuiteResult {
    match r {
        Ok(detail) => SuiteResult {
            name,
            pass: true,
            detail,
        },
        Err(detail) => SuiteResult {
            name,
            pass: false,
            detail,
        },
    }
}

/// Random strip data below the stability threshold.
pub(crate) fn random_tuple(rng: &mut StdRng) -> (StripDomain, BaseState) {
    let k = rng.gen_range(2..=3i64);
    let slope = loop {
        let s =
            Slope::rational(rng.gen_range(1..=3), rng.gen_range(1..=40)).expect("positive slope");
        if below_threshold(k, s) {
            break s;
        }
    };
    let hd = rng.gen_range(1..=60i128);
    let h = q(rng.gen_range(0..2 * hd), hd);
    let xd = rng.gen_range(2..=60i128);
    let x1 = q(rng.gen_range(1..k as i128 * xd), xd);
    (StripDomain { k, h }, BaseState::initial(k, x1, slope))
}

fn is_singular(e: &FrontierError) -> bool {
    matches!(e, FrontierError::Strip(StripError::Singular { .. }))
}

fn conjugacy(cfg: &ExperimentConfig, rng: &mut StdRng) -> Result<String, String> {
    let tuples = cfg.tuples.unwrap_or(8);
    let steps = cfg.steps.unwrap_or(1000);
    let mutate = cfg.mutate;
    let (mut done, mut skipped) = (0, 0);
    while done < tuples {
        if skipped > 20 * tuples.max(1) {
            return Err(format!("only {done} regular tuples in {skipped} draws"));
        }
        let (domain, state) = random_tuple(rng);
        let phi = |m: &FrontierMap<Q>, p: &FrontierPoint<Q>| match mutate {
            Some(Mutation::BetaOffByOne) => {
                m.phi_with_offset(p, |xi, col, width| beta::<Q>(xi, (col + 1) % width, width))
            }
            None => m.phi(p),
        };
        match conjugacy_check_with(&domain, &state, steps, 1_000_000, phi) {
            Ok(_) => done += 1,
            Err(e) if is_singular(&e) => skipped += 1,
            Err(e) => {
                return Err(format!(
                    "K={} slope={} h={} x1={}: {e}",
                    domain.k, state.dir.slope, domain.h, state.x1
                ))
            }
        }
    }
    Ok(format!(
        "{done} tuples x {steps} steps, {skipped} singular draws skipped"
    ))
}

fn factor_run<B: Backend>(
    b: B,
    domain: Domain<B::Value>,
    st: SimState<B::Value>,
    events: usize,
    eq: impl Fn(&B, (B::Value, B::Value), (B::Value, B::Value)) -> bool,
) -> Result<usize, String> {
    let sim = Simulator::new(b, domain);
    let b = &sim.backend;
    let mut st = st;
    let p0 = factor_project(b, &st);
    for i in 0..events {
        let step = sim.advance(&mut st).map_err(|e| e.to_string())?;
        if matches!(step.event, Event::Singularity(_)) {
            return Ok(i);
        }
        if !eq(b, factor_project(b, &st), torus_flow(b, p0, st.v_travelled)) {
            return Err(format!("factor identity fails at event {i}"));
        }
    }
    Ok(events)
}

fn factor(cfg: &ExperimentConfig) -> Result<String, String> {
    let events = cfg.steps.unwrap_or(1000);
    let dir = Direction::new(Slope::rational(2, 3).expect("slope"), Sign::Neg, Sign::Pos);
    let (x0, y0) = (q(1, 3), q(1, 7));
    let exact_eq = |_: &ExactBackend, a: (i64, i64), b: (i64, i64)| a == b;
    let plane = |b: &ExactBackend| -> Result<SimState<i64>, String> {
        Ok(SimState {
            pos: [
                b.from_q(&x0).map_err(|e| e.to_string())?,
                b.from_q(&y0).map_err(|e| e.to_string())?,
            ],
            dir,
            config: Configuration::plane_initial(),
            v_travelled: 0,
            events: 0,
        })
    };
    if cfg.backend == Some(BackendKind::Float) {
        let slope = Slope::real(0.7265425280053609).map_err(|e| e.to_string())?;
        let b = FloatBackend::new(slope, cfg.epsilon());
        let st = SimState {
            pos: [0.3, 0.6],
            dir: Direction::new(slope, Sign::Neg, Sign::Pos),
            config: Configuration::plane_initial(),
            v_travelled: 0.0,
            events: 0,
        };
        let close = |_: &FloatBackend, a: (f64, f64), c: (f64, f64)| {
            let d = |u: f64, v: f64| {
                let t = (u - v).abs();
                t.min(1.0 - t)
            };
            d(a.0, c.0) < FLOAT_TOL && d(a.1, c.1) < FLOAT_TOL
        };
        let n = factor_run(b, Domain::Plane, st, events, close)?;
        return Ok(format!(
            "float plane trace, {n} events within {FLOAT_TOL:e}"
        ));
    }
    let b = ExactBackend::for_inputs(dir.slope, &[x0, y0]).map_err(|e| e.to_string())?;
    let n_plane = factor_run(b.clone(), Domain::Plane, plane(&b)?, events, exact_eq)?;
    let h = q(1, 2);
    let x1 = q(2, 5);
    let b = ExactBackend::for_inputs(dir.slope, &[x1, h]).map_err(|e| e.to_string())?;
    let base = b.from_q(&-h).map_err(|e| e.to_string())?;
    let st = SimState {
        pos: [b.from_q(&x1).map_err(|e| e.to_string())?, base],
        dir: Direction::up_right(dir.slope),
        config: Configuration::full_strip(2),
        v_travelled: 0,
        events: 0,
    };
    let n_strip = factor_run(b, Domain::Strip { k: 2, base }, st, events, exact_eq)?;
    Ok(format!(
        "plane {n_plane} events, strip (h=1/2) {n_strip} events, exact"
    ))
}

fn induction() -> Result<String, String> {
    let mut checked = 0;
    let mut notes = Vec::new();
    for h in [q(1, 30), q(7, 100)] {
        let mut times = std::collections::BTreeSet::new();
        let map = FrontierMap::exact(2, Slope::rational(1, 4).expect("slope"))
            .map_err(|e| e.to_string())?;
        let arc = g_h_arc(h);
        let comps = invariant_set_gh(h);
        let in_g = |p: &FrontierPoint<Q>| p.xi == XI_01 && arc.contains(p.x);
        let total: Q = comps.iter().map(|c| c.arc.len).sum();
        if total != qi(1) {
            return Err(format!("h={h}: component lengths sum to {total}"));
        }
        for i in 0..1000 {
            let x = arc.start + arc.len * q(2 * i + 1, 2000);
            let p = FrontierPoint::new(x, h, XI_01);
            let (img, n) = map
                .induce(in_g, &p, 100)
                .map_err(|e| format!("h={h} x={x}: {e}"))?;
            let expect = induced_rotation_gh(x, h).map_err(|e| e.to_string())?;
            if img.x != expect || img.h != h {
                return Err(format!(
                    "h={h} x={x}: induced {} vs rotation {expect}",
                    img.x
                ));
            }
            if h <= q(1, 20) {
                let closed = induced_closed_form_gh(x, h).map_err(|e| e.to_string())?;
                let t = induced_return_time_gh(x, h).map_err(|e| e.to_string())?;
                if closed != expect || n != t {
                    return Err(format!(
                        "h={h} x={x}: induced ({}, {n}) vs closed form ({closed}, {t})",
                        img.x
                    ));
                }
            }
            times.insert(n);
            let mut cur = p;
            for _ in 0..n {
                cur = map.phi(&cur);
                if !in_invariant_set_gh(&comps, &cur) {
                    return Err(format!("h={h} x={x}: orbit leaves the invariant set"));
                }
            }
            checked += 1;
        }
        for i in 0..1000 {
            for xi in [XI_11, XI_01, XI_10] {
                let p = FrontierPoint::new(q(2 * i + 1, 2000), h, xi);
                if !in_invariant_set_gh(&comps, &map.iterate(&p, 3)) {
                    return Err(format!(
                        "h={h} x={} xi={xi:02b}: third iterate outside the invariant set",
                        p.x
                    ));
                }
            }
        }
        notes.push(format!("h={h} return times {times:?}"));
    }
    Ok(format!(
        "{checked} grid points, rotation, invariance and third-iterate absorption exact; {}",
        notes.join("; ")
    ))
}

fn stability(cfg: &ExperimentConfig, rng: &mut StdRng) -> Result<String, String> {
    let returns = cfg.steps.unwrap_or(1000);
    let tuples = cfg.tuples.unwrap_or(8);
    let (mut done, mut draws) = (0, 0);
    while done < tuples && draws < 20 * tuples.max(1) {
        draws += 1;
        let (domain, state) = random_tuple(rng);
        // a column dug three rows deep is not equilibrated
        let holes = (0..3).map(|r| CellIndex::new(0, r));
        let config = Configuration::with_holes(Lattice::Strip { k: domain.k }, holes)
            .map_err(|e| e.to_string())?;
        let mut cur = trim_normalize(&domain, &BaseState { config, ..state });
        let mut absorbed_at = None;
        let mut singular = false;
        for n in 0..returns {
            let rec = match base_return(&cur.domain, &cur.state, 1_000_000) {
                Ok(r) => r,
                Err(StripError::Singular { .. }) => {
                    singular = true;
                    break;
                }
                Err(e) => return Err(e.to_string()),
            };
            cur = trim_normalize(&cur.domain, &rec.next);
            let eq = is_equilibrated(&cur.state.config);
            match (absorbed_at, eq) {
                (None, true) => absorbed_at = Some(n),
                (Some(a), false) => {
                    return Err(format!(
                        "K={} slope={}: equilibrium lost at return {n} after {a}",
                        domain.k, state.dir.slope
                    ))
                }
                _ => {}
            }
        }
        if singular {
            continue;
        }
        if absorbed_at.is_none() {
            return Err(format!(
                "K={} slope={}: not equilibrated after {returns} returns",
                domain.k, state.dir.slope
            ));
        }
        done += 1;
    }
    Ok(format!(
        "{done} orbits x {returns} returns absorbed and stayed equilibrated"
    ))
}

fn height_bounds(cfg: &ExperimentConfig, rng: &mut StdRng) -> Result<String, String> {
    let returns = cfg.steps.unwrap_or(1000);
    let tuples = cfg.tuples.unwrap_or(8);
    let (mut done, mut draws) = (0, 0);
    while done < tuples && draws < 20 * tuples.max(1) {
        draws += 1;
        let (domain, state) = random_tuple(rng);
        let k = domain.k;
        let series = match escape_series(&domain, &state, returns, 1_000_000) {
            Ok(s) => s,
            Err(e) if matches!(e.source, StripError::Singular { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let h0 = series.heights[0];
        for (n, &hn) in series.heights.iter().enumerate() {
            let (n, dh) = (n as i64, hn - h0);
            if k * dh > k * n || k * dh < n - (k - 1) {
                return Err(format!(
                    "K={k} slope={}: H_{n} - H_0 = {dh} out of bounds",
                    state.dir.slope
                ));
            }
        }
        if height_h(&state.config) != 0 {
            return Err("initial configuration is not full".into());
        }
        done += 1;
    }
    Ok(format!(
        "{done} orbits x {returns} returns within n-(K-1) <= K(H_n-H_0) <= Kn"
    ))
}

/// Runs every suite. Defaults: `steps = 1000`, `tuples = 8`, `seed = 1`.
pub fn verify(cfg: &ExperimentConfig) -> Result<Report> {
    let seed = cfg.seed.unwrap_or(1);
    let mut rng = StdRng::seed_from_u64(seed);
    let results = [
        suite("conjugacy", conjugacy(cfg, &mut rng)),
        suite("factor", factor(cfg)),
        suite("induction", induction()),
        suite("stability", stability(cfg, &mut rng)),
        suite("height-bounds", height_bounds(cfg, &mut rng)),
    ];
    let lines: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "suite={} result={} detail={:?}",
                r.name,
                if r.pass { "pass" } else { "fail" },
                r.detail
            )
        })
        .collect();
    for l in &lines {
        eprintln!("{l}");
    }
    write_opt(cfg.out.as_deref(), |w| {
        lines.iter().try_for_each(|l| writeln!(w, "{l}"))
    })?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    let mut s = Summary::new("verify")
        .field("seed", seed)
        .field("suites", results.len())
        .field("passed", results.len() - failed.len())
        .field("failed", failed.len());
    if !failed.is_empty() {
        s = s.field("failing", failed.join(","));
    }
    Ok(s.report(if failed.is_empty() {
        Status::Success
    } else {
        Status::Mismatch
    }))
}
