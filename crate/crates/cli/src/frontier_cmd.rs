//! Limit sets of the frontier map.

use anyhow::{bail, Result};
use casse_briques::export::{write_cloud_csv, write_cloud_svg};
use casse_briques::frontier::{full_xi, limit_set_sample, CloudPoint, FrontierMap, Xi};
use casse_briques::num::{q, q_to_f64, Q};
use rustc_hash::FxHashSet;

use crate::config::{BackendKind, ExperimentConfig};
use crate::output::write_opt;
use crate::{Report, Status, Summary};

/// Point clouds of `φ` between iterates `burn` and `burn + keep`, for every
/// height of `h_grid`, `grid` initial abscissas `i/grid` and every nonempty
/// frontier. Defaults: `K = 2`, slope `1/4`, `burn = keep = 1000`,
/// `grid = 10`, `h_grid = 0, 1/40, ..., 39/40`.
pub fn limit_set(cfg: &ExperimentConfig) -> Result<Report> {
    let k = cfg.k_or(2)?;
    if k > 16 {
        bail!("K = {k} is too wide for a frontier bit mask");
    }
    let slope = cfg.slope_or("1/4")?;
    let burn = cfg.burn.unwrap_or(1000);
    let keep = cfg.keep.unwrap_or(1000);
    let grid = cfg.grid.unwrap_or(10);
    let heights = cfg.h_grid_or(|| (0..40).map(|i| q(i, 40)).collect())?;
    if heights.is_empty() || grid == 0 {
        bail!("empty initial grid");
    }
    let width = k as usize;
    let xis: Vec<Xi> = (1..=full_xi(width)).collect();
    let backend = cfg.backend_for(slope)?;
    let mut points: Vec<CloudPoint> = Vec::new();
    for (hi, h) in heights.iter().enumerate() {
        let offset = hi * grid * xis.len();
        let mut cloud = match backend {
            BackendKind::Rational => {
                let map = FrontierMap::exact(width, slope)?;
                let init: Vec<(Q, Xi)> = (0..grid)
                    .flat_map(|i| xis.iter().map(move |&xi| (q(i as i128, grid as i128), xi)))
                    .collect();
                limit_set_sample(&map, *h, burn, keep, &init)
            }
            BackendKind::Float => {
                let map = FrontierMap::float(width, slope);
                let init: Vec<(f64, Xi)> = (0..grid)
                    .flat_map(|i| xis.iter().map(move |&xi| (i as f64 / grid as f64, xi)))
                    .collect();
                limit_set_sample(&map, q_to_f64(h), burn, keep, &init)
            }
        };
        for p in &mut cloud {
            p.orbit_id += offset;
        }
        points.extend(cloud);
    }
    write_opt(cfg.out.as_deref(), |w| write_cloud_csv(w, &points))?;
    write_opt(cfg.svg.as_deref(), |w| write_cloud_svg(w, &points))?;
    let distinct: FxHashSet<(u64, u64, u64)> = points
        .iter()
        .map(|p| (p.x.to_bits(), p.h.to_bits(), p.xi_index))
        .collect();
    Ok(Summary::new("limit-set")
        .field("K", k)
        .field("slope", slope)
        .field("backend", format!("{backend:?}").to_lowercase())
        .field("heights", heights.len())
        .field("orbits", heights.len() * grid * xis.len())
        .field("points", points.len())
        .field("distinct", distinct.len())
        .report(Status::Success))
}
