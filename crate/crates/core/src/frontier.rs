//! Reduced dynamics on `T^2 x C*_K`.
//!
//! A base state with an equilibrated configuration is encoded by the
//! position `x` on the unfolded base circle, the gap `h` to the lowest row in
//! units of `2K tan θ₀`, and the occupancy `ξ` of that row. The return map
//! becomes a piecewise translation [`FrontierMap::phi`].

use std::collections::HashMap;
use std::hash::Hash;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{CellIndex, Configuration, Direction, Lattice};
use crate::num::{frac_q, q, qi, CircleNum, Sign, Slope, Q};
use crate::strip::{self, BaseState, StripDomain, StripError};

/// Row occupancy `ξ`, bit `i` set when column `i` holds a brick.
pub type Xi = u64;

pub fn full_xi(k: usize) -> Xi {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

pub fn xi_bit(xi: Xi, i: usize) -> bool {
    xi >> i & 1 == 1
}

/// Index used in exports: the full row is 0; other rows are ranked by their
/// binary value read with `ξ(0)` as the most significant bit.
pub fn xi_index(xi: Xi, k: usize) -> u64 {
    if xi == full_xi(k) {
        return 0;
    }
    (0..k).fold(0, |acc, i| acc << 1 | (xi >> i & 1))
}

/// `ξ` from a list of bits `ξ(0), ξ(1), ...`.
pub fn xi_from_bits(bits: &[u8]) -> Xi {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, b)| acc | ((*b as u64 & 1) << i))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrontierPoint<T> {
    pub x: T,
    pub h: T,
    pub xi: Xi,
}

impl<T: CircleNum> FrontierPoint<T> {
    pub fn new(x: T, h: T, xi: Xi) -> Self {
        FrontierPoint {
            x: x.frac(),
            h: h.frac(),
            xi,
        }
    }
}

/// Half-open arc `[start, start + len)` on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc<T> {
    pub start: T,
    pub len: T,
}

impl<T: CircleNum> Arc<T> {
    pub fn new(start: T, len: T) -> Self {
        Arc {
            start: start.frac(),
            len,
        }
    }

    /// Arc from `a` to `b` going counterclockwise.
    pub fn between(a: T, b: T) -> Self {
        let len = b.minus(a).frac();
        Arc::new(a, len)
    }

    pub fn contains(&self, x: T) -> bool {
        x.minus(self.start).frac() < self.len
    }
}

/// One translation piece of `φ` for fixed `(h, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceSpec<T> {
    /// Unfolded cell `0..2K` met when reaching the lowest row.
    pub k: usize,
    /// `None` for a face hit, `Some(ε)` for a hole entry.
    pub epsilon: Option<u8>,
    pub arc: Arc<T>,
    /// Translation of `x`.
    pub shift: T,
    /// Whether `h` advances by `α`.
    pub eps_alpha: bool,
    pub xi_next: Xi,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontierError {
    #[error("configuration is not equilibrated")]
    NotEquilibrated,
    #[error("slope {0} has no exact frontier parameter")]
    UnsupportedSlope(String),
    #[error("point is outside the induction domain")]
    OutOfDomain,
    #[error("no return to the target within {0} steps")]
    NoReturn(usize),
    #[error("conjugacy mismatch at step {step}: strip gives {lhs}, map gives {rhs}")]
    Mismatch {
        step: usize,
        lhs: String,
        rhs: String,
    },
    #[error("height increment mismatch at step {step}: strip {strip}, indicator {indicator}")]
    HeightMismatch {
        step: usize,
        strip: i64,
        indicator: u8,
    },
    #[error(transparent)]
    Strip(#[from] StripError),
}

/// `α = 1/(2K tan θ₀)` unreduced.
pub fn alpha_raw(k: usize, slope: Slope) -> Result<Q, FrontierError> {
    match slope {
        Slope::Rational { rise, run } => Ok(q(run as i128, 2 * k as i128 * rise as i128)),
        _ => Err(FrontierError::UnsupportedSlope(slope.to_string())),
    }
}

/// `α` reduced mod 1.
pub fn alpha(k: usize, slope: Slope) -> Result<Q, FrontierError> {
    alpha_raw(k, slope).map(|a| frac_q(&a))
}

/// Hole-entry offset `β(ξ, k) = Σ_{i<k} ξ(i)(i+1)/K - Σ_{i>k} ξ(i) i/K` mod 1.
pub fn beta<T: CircleNum>(xi: Xi, k: usize, width: usize) -> T {
    let kk = width as i64;
    let mut num = 0i64;
    for i in 0..width {
        if !xi_bit(xi, i) {
            continue;
        }
        if i < k {
            num += i as i64 + 1;
        } else if i > k {
            num -= i as i64;
        }
    }
    T::ratio(num, kk).frac()
}

/// Folds an unfolded cell index `0..2K` onto a column `0..K`.
pub fn fold(k: usize, width: usize) -> usize {
    if k < width {
        k
    } else {
        2 * width - 1 - k
    }
}

/// The map `φ` for strip width `k` and parameter `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierMap<T> {
    pub k: usize,
    pub alpha: T,
}

impl FrontierMap<Q> {
    pub fn exact(k: usize, slope: Slope) -> Result<Self, FrontierError> {
        Ok(FrontierMap {
            k,
            alpha: alpha(k, slope)?,
        })
    }
}

impl FrontierMap<f64> {
    pub fn float(k: usize, slope: Slope) -> Self {
        let a = match slope {
            Slope::Vertical => 0.0,
            _ => 1.0 / (2.0 * k as f64 * slope.to_f64()),
        };
        FrontierMap { k, alpha: a.frac() }
    }
}

impl<T: CircleNum> FrontierMap<T> {
    fn cell_of(&self, y: T) -> usize {
        let c = y.frac().times(2 * self.k as i64).floor_int();
        c.clamp(0, 2 * self.k as i64 - 1) as usize
    }

    /// Direct evaluation of `φ`.
    pub fn phi(&self, p: &FrontierPoint<T>) -> FrontierPoint<T> {
        self.phi_with_offset(p, beta::<T>)
    }

    /// `φ` with `beta_fn` in place of [`beta`], for mutation checks.
    pub fn phi_with_offset(
        &self,
        p: &FrontierPoint<T>,
        beta_fn: impl Fn(Xi, usize, usize) -> T,
    ) -> FrontierPoint<T> {
        let width = self.k;
        let full = full_xi(width);
        let y = p.x.plus(p.h);
        let col = fold(self.cell_of(y), width);
        let two_h = p.h.plus(p.h);
        if xi_bit(p.xi, col) {
            if p.xi.count_ones() > 1 {
                FrontierPoint::new(p.x.plus(two_h), p.h, p.xi & !(1 << col))
            } else {
                FrontierPoint::new(p.x.plus(two_h), p.h.plus(self.alpha), full)
            }
        } else {
            let gamma = self.alpha.plus(beta_fn(p.xi, col, width));
            let landing = fold(self.cell_of(y.plus(gamma)), width);
            FrontierPoint::new(
                p.x.plus(two_h).plus(self.alpha).plus(gamma),
                p.h.plus(self.alpha),
                full & !(1 << landing),
            )
        }
    }

    /// Whether `φ` raises the lowest row at `p`.
    pub fn delta_h_indicator(&self, p: &FrontierPoint<T>) -> u8 {
        let col = fold(self.cell_of(p.x.plus(p.h)), self.k);
        u8::from(!xi_bit(p.xi, col) || p.xi.count_ones() == 1)
    }

    /// Translation pieces of `φ` for fixed `(h, ξ)`; their arcs partition the circle.
    pub fn pieces(&self, h: T, xi: Xi) -> Vec<PieceSpec<T>> {
        let width = self.k;
        let two_k = 2 * width as i64;
        let full = full_xi(width);
        let two_h = h.plus(h);
        let mut out = Vec::new();
        for k in 0..2 * width {
            let col = fold(k, width);
            let lo = T::ratio(k as i64, two_k).minus(h);
            let cell_len = T::ratio(1, two_k);
            if xi_bit(xi, col) {
                let last = xi.count_ones() == 1;
                out.push(PieceSpec {
                    k,
                    epsilon: None,
                    arc: Arc::new(lo, cell_len),
                    shift: two_h,
                    eps_alpha: last,
                    xi_next: if last { full } else { xi & !(1 << col) },
                });
                continue;
            }
            let gamma = self.alpha.plus(beta::<T>(xi, col, width));
            let scaled = gamma.times(two_k);
            let whole = scaled.floor_int();
            let gamma_star = scaled.minus(T::ratio(whole, 1)).frac();
            let ell = (k as i64 + whole).rem_euclid(two_k) as usize;
            // I^0 = [lo, hi - γ*), I^1 = [hi - γ*, hi) with γ* = frac(2Kγ)/2K
            let len1 = gamma_star.div_int(two_k);
            let len0 = cell_len.minus(len1);
            let shift = two_h.plus(self.alpha).plus(gamma);
            for (eps, start, len) in [(0u8, lo, len0), (1u8, lo.plus(len0), len1)] {
                if len == T::ratio(0, 1) {
                    continue;
                }
                let landing = fold((ell + eps as usize) % (2 * width), width);
                out.push(PieceSpec {
                    k,
                    epsilon: Some(eps),
                    arc: Arc::new(start, len),
                    shift,
                    eps_alpha: true,
                    xi_next: full & !(1 << landing),
                });
            }
        }
        out
    }

    /// `φ` evaluated through [`FrontierMap::pieces`].
    pub fn phi_by_pieces(&self, p: &FrontierPoint<T>) -> FrontierPoint<T> {
        let piece = self
            .pieces(p.h, p.xi)
            .into_iter()
            .find(|s| s.arc.contains(p.x))
            .expect("pieces cover the circle");
        let h = if piece.eps_alpha {
            p.h.plus(self.alpha)
        } else {
            p.h
        };
        FrontierPoint::new(p.x.plus(piece.shift), h, piece.xi_next)
    }

    pub fn iterate(&self, p: &FrontierPoint<T>, n: usize) -> FrontierPoint<T> {
        let mut cur = *p;
        for _ in 0..n {
            cur = self.phi(&cur);
        }
        cur
    }

    /// First return to `target` (iterating at least once).
    pub fn induce(
        &self,
        target: impl Fn(&FrontierPoint<T>) -> bool,
        p: &FrontierPoint<T>,
        max_steps: usize,
    ) -> Result<(FrontierPoint<T>, usize), FrontierError> {
        if !target(p) {
            return Err(FrontierError::OutOfDomain);
        }
        let mut cur = *p;
        for n in 1..=max_steps {
            cur = self.phi(&cur);
            if target(&cur) {
                return Ok((cur, n));
            }
        }
        Err(FrontierError::NoReturn(max_steps))
    }
}

/// Two-case form of `φ` for `K = 2`, written from the geometry of the
/// two-column strip; used to cross-check [`FrontierMap::phi`].
pub fn phi_two_columns<T: CircleNum>(alpha: T, p: &FrontierPoint<T>) -> FrontierPoint<T> {
    let left = |y: T| {
        let c = y.frac().times(4).floor_int();
        c == 0 || c == 3
    };
    let y = p.x.plus(p.h);
    let two_h = p.h.plus(p.h);
    let half = T::ratio(1, 2);
    let hole_entry = |p: &FrontierPoint<T>| {
        let z = y.plus(alpha).plus(half);
        let xi = if left(z) { 0b10 } else { 0b01 };
        FrontierPoint::new(
            p.x.plus(two_h).plus(alpha).plus(alpha).plus(half),
            p.h.plus(alpha),
            xi,
        )
    };
    match p.xi {
        0b11 => FrontierPoint::new(p.x.plus(two_h), p.h, if left(y) { 0b10 } else { 0b01 }),
        0b10 if left(y) => hole_entry(p),
        0b10 => FrontierPoint::new(p.x.plus(two_h), p.h.plus(alpha), 0b11),
        0b01 if !left(y) => hole_entry(p),
        0b01 => FrontierPoint::new(p.x.plus(two_h), p.h.plus(alpha), 0b11),
        _ => panic!("ξ = {:b} is not a two-column occupancy", p.xi),
    }
}

/// Encodes a base state with an equilibrated configuration.
pub fn psi(domain: &StripDomain, state: &BaseState) -> Result<FrontierPoint<Q>, FrontierError> {
    let k = domain.k as usize;
    if !strip::is_equilibrated(&state.config) {
        return Err(FrontierError::NotEquilibrated);
    }
    let a = alpha_raw(k, state.dir.slope)?;
    let two_k = qi(2 * domain.k as i128);
    let x = match state.dir.sx {
        Sign::Pos => state.x1 / two_k,
        Sign::Neg => qi(1) - state.x1 / two_k,
    };
    let row = strip::height_h(&state.config);
    let h = (qi(row as i128) + domain.h) * a;
    let xi = (0..k)
        .filter(|&i| state.config.is_present(CellIndex::new(i as i64, row)))
        .fold(0, |acc, i| acc | 1 << i);
    Ok(FrontierPoint::new(x, h, xi))
}

/// Canonical base state encoded by `p`: lowest row 0, holes of row 0 where
/// `ξ = 0`, base depth `h / α`.
pub fn psi_star_inverse(
    p: &FrontierPoint<Q>,
    k: usize,
    slope: Slope,
) -> Result<(StripDomain, BaseState), FrontierError> {
    let a = alpha_raw(k, slope)?;
    let two_k = qi(2 * k as i128);
    let (sx, x1) = if p.x <= q(1, 2) {
        (Sign::Pos, two_k * p.x)
    } else {
        (Sign::Neg, two_k * (qi(1) - p.x))
    };
    let holes = (0..k)
        .filter(|&i| !xi_bit(p.xi, i))
        .map(|i| CellIndex::new(i as i64, 0));
    let config = Configuration::with_holes(Lattice::Strip { k: k as i64 }, holes)
        .expect("row-0 holes are in the strip");
    let domain = StripDomain {
        k: k as i64,
        h: p.h / a,
    };
    Ok((
        domain,
        BaseState {
            x1,
            dir: Direction::new(slope, sx, Sign::Pos),
            config,
        },
    ))
}

/// Outcome of a successful [`conjugacy_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyReport {
    pub steps: usize,
    /// Height gained by the strip orbit, equal to the summed indicator.
    pub height_gain: i64,
    pub final_point: FrontierPoint<Q>,
}

/// Iterates the strip return map and `φ` side by side from `Ψ(state)` and
/// checks `Ψ ∘ φ_h = φ ∘ Ψ` and the height increment at every step.
pub fn conjugacy_check(
    domain: &StripDomain,
    state: &BaseState,
    n: usize,
    max_events_per_return: u64,
) -> Result<ConjugacyReport, FrontierError> {
    conjugacy_check_with(domain, state, n, max_events_per_return, |m, p| m.phi(p))
}

/// [`conjugacy_check`] against an arbitrary candidate for `φ`.
pub fn conjugacy_check_with(
    domain: &StripDomain,
    state: &BaseState,
    n: usize,
    max_events_per_return: u64,
    phi: impl Fn(&FrontierMap<Q>, &FrontierPoint<Q>) -> FrontierPoint<Q>,
) -> Result<ConjugacyReport, FrontierError> {
    let k = domain.k as usize;
    let map = FrontierMap::exact(k, state.dir.slope)?;
    let mut point = psi(domain, state)?;
    let mut cur = strip::trim_normalize(domain, state);
    let mut gain = 0;
    for step in 0..n {
        let rec = strip::base_return(&cur.domain, &cur.state, max_events_per_return)?;
        let indicator = map.delta_h_indicator(&point);
        if rec.delta_h != indicator as i64 {
            return Err(FrontierError::HeightMismatch {
                step,
                strip: rec.delta_h,
                indicator,
            });
        }
        gain += rec.delta_h;
        let next = strip::trim_normalize(&cur.domain, &rec.next);
        let lhs = psi(&next.domain, &next.state)?;
        let rhs = phi(&map, &point);
        if lhs != rhs {
            return Err(FrontierError::Mismatch {
                step,
                lhs: show(&lhs, k),
                rhs: show(&rhs, k),
            });
        }
        point = rhs;
        cur = next;
    }
    Ok(ConjugacyReport {
        steps: n,
        height_gain: gain,
        final_point: point,
    })
}

fn show(p: &FrontierPoint<Q>, k: usize) -> String {
    let bits: String = (0..k)
        .map(|i| if xi_bit(p.xi, i) { '1' } else { '0' })
        .collect();
    format!("(x={}, h={}, ξ={bits})", p.x, p.h)
}

/// Induction domain `G_h = [3/4 + 5h, 1/4 - h) x {(0,1)}` for `K = 2`,
/// `tan θ₀ = 1/4`.
pub fn g_h_arc(h: Q) -> Arc<Q> {
    Arc::between(q(3, 4) + h * qi(5), q(1, 4) - h)
}

pub const XI_01: Xi = 0b10;
pub const XI_10: Xi = 0b01;
pub const XI_11: Xi = 0b11;

fn check_small_h(h: &Q) -> Result<(), FrontierError> {
    if *h < Q::zero() || *h >= q(1, 10) {
        return Err(FrontierError::OutOfDomain);
    }
    Ok(())
}

/// Position of `x` along `G_h`, measured from its start, if `x` lies in it.
fn offset_in_gh(x: Q, h: Q) -> Result<Q, FrontierError> {
    let arc = g_h_arc(h);
    let x = frac_q(&x);
    if !arc.contains(x) {
        return Err(FrontierError::OutOfDomain);
    }
    Ok(frac_q(&(x - arc.start)))
}

/// Closed form of the first return to `G_h`: `x + 4h` on
/// `[3/4+5h, 1/4-5h)` and `x + 10h - 1/2` on `[1/4-5h, 1/4-h)`, both pieces
/// read from the start of `G_h`. The first piece is empty once `h >= 1/20`.
pub fn induced_closed_form_gh(x: Q, h: Q) -> Result<Q, FrontierError> {
    check_small_h(&h)?;
    let u = offset_in_gh(x, h)?;
    if u < q(1, 2) - h * qi(10) {
        Ok(frac_q(&(x + h * qi(4))))
    } else {
        Ok(frac_q(&(x + h * qi(10) - q(1, 2))))
    }
}

/// Return time to `G_h` implied by the itineraries: 2 on the first piece, 5
/// on the second.
pub fn induced_return_time_gh(x: Q, h: Q) -> Result<usize, FrontierError> {
    check_small_h(&h)?;
    let u = offset_in_gh(x, h)?;
    Ok(if u < q(1, 2) - h * qi(10) { 2 } else { 5 })
}

/// Rotation of `G_h` by `4h` modulo its length `1/2 - 6h`. Agrees with
/// [`induced_closed_form_gh`] for `h <= 1/20` and extends it to `h < 1/10`.
pub fn induced_rotation_gh(x: Q, h: Q) -> Result<Q, FrontierError> {
    check_small_h(&h)?;
    let u = offset_in_gh(x, h)?;
    let len = g_h_arc(h).len;
    let v = u + h * qi(4);
    let v = v - len * Q::from_integer((v / len).floor().to_integer());
    Ok(frac_q(&(g_h_arc(h).start + v)))
}

/// Component of the invariant set `𝒢_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhComponent {
    pub arc: Arc<Q>,
    pub xi: Xi,
}

/// `𝒢_h`: the forward images of `G_h` up to its return, as arcs per `ξ`.
pub fn invariant_set_gh(h: Q) -> Vec<GhComponent> {
    let a = |s: Q, e: Q| Arc::between(s, e);
    vec![
        GhComponent {
            arc: a(q(3, 4) + h, q(3, 4) + h * qi(3)),
            xi: XI_11,
        },
        GhComponent {
            arc: a(q(1, 4) + h, q(1, 4) + h * qi(3)),
            xi: XI_11,
        },
        GhComponent {
            arc: a(q(3, 4) + h * qi(3), q(1, 4) + h),
            xi: XI_01,
        },
        GhComponent {
            arc: a(q(1, 4) + h * qi(3), q(3, 4) + h),
            xi: XI_10,
        },
    ]
}

pub fn in_invariant_set_gh(components: &[GhComponent], p: &FrontierPoint<Q>) -> bool {
    components
        .iter()
        .any(|c| c.xi == p.xi && c.arc.contains(p.x))
}

/// Rotation number `8h/(1-12h)` of the induced map on `G_h`.
pub fn rotation_angle_gh(h: Q) -> Q {
    h * qi(8) / (qi(1) - h * qi(12))
}

/// Point of a limit-set sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub x: f64,
    pub h: f64,
    pub xi_index: u64,
    pub orbit_id: usize,
    pub iterate_index: usize,
}

/// Iterates `φ` from each `(x₀, ξ₀)` at height `h`, discards `burn` iterates
/// and keeps the next `keep`. Output is in input order.
pub fn limit_set_sample<T: CircleNum>(
    map: &FrontierMap<T>,
    h: T,
    burn: usize,
    keep: usize,
    initial: &[(T, Xi)],
) -> Vec<CloudPoint> {
    let k = map.k;
    initial
        .par_iter()
        .enumerate()
        .map(|(orbit_id, &(x, xi))| {
            let mut p = map.iterate(&FrontierPoint::new(x, h, xi), burn);
            let mut pts = Vec::with_capacity(keep);
            for i in 0..keep {
                pts.push(CloudPoint {
                    x: p.x.to_f64(),
                    h: p.h.to_f64(),
                    xi_index: xi_index(p.xi, k),
                    orbit_id,
                    iterate_index: burn + i,
                });
                p = map.phi(&p);
            }
            pts
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Preperiod and period of an exact orbit, if found within `max_steps`.
pub fn orbit_period<T>(
    map: &FrontierMap<T>,
    p: &FrontierPoint<T>,
    max_steps: usize,
) -> Option<(usize, usize)>
where
    T: CircleNum + Eq + Hash,
{
    let mut seen: HashMap<FrontierPoint<T>, usize> = HashMap::new();
    let mut cur = *p;
    for n in 0..=max_steps {
        if let Some(&m) = seen.get(&cur) {
            return Some((m, n - m));
        }
        seen.insert(cur, n);
        cur = map.phi(&cur);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(p: u32, q_: u32) -> Slope {
        Slope::rational(p, q_).unwrap()
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(2, s(1, 4)).unwrap(), qi(0));
        assert_eq!(alpha_raw(2, s(1, 4)).unwrap(), qi(1));
        assert_eq!(alpha(2, s(1, 2)).unwrap(), q(1, 2));
        assert_eq!(alpha(1, s(1, 1)).unwrap(), q(1, 2));
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta::<Q>(XI_01, 0, 2), q(1, 2));
        assert_eq!(beta::<Q>(XI_10, 1, 2), q(1, 2));
        assert_eq!(beta::<Q>(0b110, 0, 3), frac_q(&q(-3, 3)));
        assert_eq!(beta::<Q>(0b101, 1, 3), frac_q(&q(1 - 2, 3)));
    }

    #[test]
    fn xi_indices() {
        assert_eq!(xi_index(XI_11, 2), 0);
        assert_eq!(xi_index(XI_01, 2), 1);
        assert_eq!(xi_index(XI_10, 2), 2);
        assert_eq!(xi_from_bits(&[0, 1]), XI_01);
    }

    #[test]
    fn psi_examples() {
        let d = StripDomain::new(2, q(1, 20)).unwrap();
        let st = BaseState::initial(2, qi(1), s(1, 4));
        assert_eq!(
            psi(&d, &st).unwrap(),
            FrontierPoint::new(q(1, 4), q(1, 20), XI_11)
        );
        let mut back = st.clone();
        back.dir.sx = Sign::Neg;
        assert_eq!(psi(&d, &back).unwrap().x, q(3, 4));
        let (d2, s2) =
            psi_star_inverse(&FrontierPoint::new(q(1, 4), q(1, 20), XI_11), 2, s(1, 4)).unwrap();
        assert_eq!((d2.h, s2.x1, s2.dir.sx), (q(1, 20), qi(1), Sign::Pos));
        let (_, s3) =
            psi_star_inverse(&FrontierPoint::new(q(3, 4), q(1, 20), XI_11), 2, s(1, 4)).unwrap();
        assert_eq!((s3.x1, s3.dir.sx), (qi(1), Sign::Neg));
    }

    #[test]
    fn psi_ignores_whole_bands() {
        let st = BaseState::initial(2, q(1, 3), s(1, 4));
        let a = psi(&StripDomain::new(2, q(1, 20)).unwrap(), &st).unwrap();
        let b = psi(&StripDomain::new(2, q(21, 20)).unwrap(), &st).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_column_forms_at_zero_height() {
        let m = FrontierMap::exact(2, s(1, 4)).unwrap();
        // x + h in the right column [1/4, 3/4): brick (1) is destroyed
        let p = FrontierPoint::new(q(3, 8), qi(0), XI_11);
        assert_eq!(m.phi(&p), FrontierPoint::new(q(3, 8), qi(0), XI_10));
        // ξ = (0,1) and x in the left column: hole entry, shift 1/2
        let p = FrontierPoint::new(q(1, 8), qi(0), XI_01);
        assert_eq!(m.phi(&p), FrontierPoint::new(q(5, 8), qi(0), XI_10));
        for x in 0..64 {
            for xi in [XI_11, XI_01, XI_10] {
                let p = FrontierPoint::new(q(2 * x + 1, 128), q(3, 100), xi);
                assert_eq!(m.phi(&p), phi_two_columns(m.alpha, &p));
                assert_eq!(m.phi(&p), m.phi_by_pieces(&p));
            }
        }
    }

    #[test]
    fn zero_height_cycle_graph() {
        // I_1 is column 0 (x in [3/4, 1/4)), I_2 is column 1
        let m = FrontierMap::exact(2, s(1, 4)).unwrap();
        let i1 = q(1, 8);
        let i2 = q(5, 8);
        let step = |x: Q, xi: Xi| m.phi(&FrontierPoint::new(x, qi(0), xi));
        assert_eq!(step(i1, XI_10), FrontierPoint::new(i1, qi(0), XI_11));
        assert_eq!(step(i1, XI_11), FrontierPoint::new(i1, qi(0), XI_01));
        assert_eq!(step(i1, XI_01), FrontierPoint::new(i2, qi(0), XI_10));
        assert_eq!(step(i2, XI_10), FrontierPoint::new(i1, qi(0), XI_01));
        assert_eq!(step(i2, XI_11), FrontierPoint::new(i2, qi(0), XI_10));
        assert_eq!(step(i2, XI_01), FrontierPoint::new(i2, qi(0), XI_11));
    }

    #[test]
    fn closed_form_examples() {
        let h = q(1, 30);
        assert_eq!(induced_closed_form_gh(q(11, 60), h).unwrap(), q(1, 60));
        assert_eq!(induced_closed_form_gh(q(19, 20), h).unwrap(), q(1, 12));
        assert_eq!(
            induced_closed_form_gh(q(9, 10), h),
            Err(FrontierError::OutOfDomain)
        );
        assert_eq!(induced_rotation_gh(q(11, 60), h).unwrap(), q(1, 60));
        assert_eq!(induced_rotation_gh(q(19, 20), h).unwrap(), q(1, 12));
        assert_eq!(rotation_angle_gh(h), q(4, 9));
        assert_eq!(frac_q(&rotation_angle_gh(q(1, 20))), qi(0));
    }

    #[test]
    fn invariant_set_lengths() {
        let h = q(7, 100);
        let comps = invariant_set_gh(h);
        let total: Q = comps.iter().map(|c| c.arc.len).sum();
        assert_eq!(total, qi(1));
        let asym: Q = comps
            .iter()
            .filter(|c| c.xi != XI_11)
            .map(|c| c.arc.len)
            .sum();
        assert_eq!(asym, qi(1) - h * qi(4));
    }

    #[test]
    fn arc_wraps() {
        let a = g_h_arc(q(1, 30));
        assert!(a.contains(q(19, 20)));
        assert!(a.contains(q(1, 10)));
        assert!(!a.contains(q(1, 2)));
        assert!(!a.contains(q(13, 60)));
    }
}
