//! Plain-text outputs: CSV tables, the motif report, and PGM/SVG renders of
//! destroyed cells and trajectories.

use std::io::{self, Write};

use serde::Serialize;

use crate::dynamics::{CellIndex, Event, Step};
use crate::frontier::CloudPoint;
use crate::num::{Backend, Slope};
use crate::plane::{DestructionLog, MotifReport};
use crate::strip::EscapeSeries;

/// Trace rows. Exact backends give numerator/denominator pairs, float
/// backends 17 significant digits. `v_travelled` accumulates from zero.
pub fn write_trace_csv<B: Backend, W: Write>(
    w: &mut W,
    b: &B,
    steps: &[Step<B::Value>],
) -> io::Result<()> {
    let exact = b.to_q(b.zero()).is_some();
    if exact {
        writeln!(w, "event_index,kind,cell_z1,cell_z2,face,x_num,x_den,y_num,y_den,v_travelled_num,v_travelled_den")?;
    } else {
        writeln!(w, "event_index,kind,cell_z1,cell_z2,face,x,y,v_travelled")?;
    }
    let mut v = b.zero();
    for (i, s) in steps.iter().enumerate() {
        v = b.add(v, s.v_delta);
        let (z1, z2, face) = match s.event {
            Event::BrickHit { cell, face } => {
                (cell.z1.to_string(), cell.z2.to_string(), face.name())
            }
            _ => (String::new(), String::new(), ""),
        };
        write!(w, "{i},{},{z1},{z2},{face},", s.event.name())?;
        if exact {
            let [x, y, t] = [s.point[0], s.point[1], v].map(|c| b.to_q(c).expect("exact backend"));
            writeln!(
                w,
                "{},{},{},{},{},{}",
                x.numer(),
                x.denom(),
                y.numer(),
                y.denom(),
                t.numer(),
                t.denom()
            )?;
        } else {
            writeln!(
                w,
                "{},{},{}",
                g17(b.to_f64(s.point[0])),
                g17(b.to_f64(s.point[1])),
                g17(b.to_f64(v))
            )?;
        }
    }
    Ok(())
}

fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per return, starting with the initial state at `n = 0`.
pub fn write_escape_csv<W: Write>(w: &mut W, series: &EscapeSeries) -> io::Result<()> {
    writeln!(w, "n,H_n,tau_v_num,tau_v_den,kind")?;
    for n in 0..series.heights.len() {
        let tau = series.tau_vertical[n];
        let kind = if n == 0 {
            ""
        } else {
            series.kinds[n - 1].name()
        };
        writeln!(
            w,
            "{n},{},{},{},{kind}",
            series.heights[n],
            tau.numer(),
            tau.denom()
        )?;
    }
    Ok(())
}

pub fn write_cloud_csv<W: Write>(w: &mut W, points: &[CloudPoint]) -> io::Result<()> {
    writeln!(w, "x,h,xi_index,orbit_id,iterate_index")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            g17(p.x),
            g17(p.h),
            p.xi_index,
            p.orbit_id,
            p.iterate_index
        )?;
    }
    Ok(())
}

pub fn write_log_csv<W: Write>(w: &mut W, log: &DestructionLog) -> io::Result<()> {
    writeln!(w, "hit_index,z1,z2")?;
    for (i, z) in log.cells.iter().enumerate() {
        writeln!(w, "{i},{},{}", z.z1, z.z2)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MotifEntry {
    pub preperiod: usize,
    pub period: usize,
    pub v: [i64; 2],
    /// Increments over one period.
    pub motif: Vec<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MotifSummary {
    pub slope: String,
    pub branches: Vec<MotifEntry>,
}

impl MotifSummary {
    pub fn new<'a>(slope: Slope, reports: impl IntoIterator<Item = &'a MotifReport>) -> Self {
        let branches = reports
            .into_iter()
            .map(|r| MotifEntry {
                preperiod: r.preperiod,
                period: r.period,
                v: [r.v.0, r.v.1],
                motif: r.increments().into_iter().map(|(a, b)| [a, b]).collect(),
            })
            .collect();
        MotifSummary {
            slope: slope.to_string(),
            branches,
        }
    }
}

/// Bounding box of a cell set, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub min: CellIndex,
    pub max: CellIndex,
}

impl CellBox {
    pub fn of(cells: &[CellIndex]) -> Option<Self> {
        let first = *cells.first()?;
        Some(cells.iter().fold(
            CellBox {
                min: first,
                max: first,
            },
            |b, z| CellBox {
                min: CellIndex::new(b.min.z1.min(z.z1), b.min.z2.min(z.z2)),
                max: CellIndex::new(b.max.z1.max(z.z1), b.max.z2.max(z.z2)),
            },
        ))
    }

    pub fn width(&self) -> i64 {
        self.max.z1 - self.min.z1 + 1
    }

    pub fn height(&self) -> i64 {
        self.max.z2 - self.min.z2 + 1
    }
}

/// Binary grayscale image of destruction order: intact cells are black,
/// destroyed cells brighten with their hit index. Boxes wider than
/// `max_side` are downsampled, keeping the latest hit per pixel.
pub fn write_pgm<W: Write>(w: &mut W, cells: &[CellIndex], max_side: usize) -> io::Result<()> {
    let Some(bb) = CellBox::of(cells) else {
        return write!(w, "P5\n1 1\n255\n\0");
    };
    let side = bb.width().max(bb.height()) as usize;
    let scale = side.div_ceil(max_side.max(1)).max(1);
    let (pw, ph) = (
        (bb.width() as usize).div_ceil(scale),
        (bb.height() as usize).div_ceil(scale),
    );
    let mut img = vec![0u8; pw * ph];
    let n = cells.len();
    for (i, z) in cells.iter().enumerate() {
        let px = (z.z1 - bb.min.z1) as usize / scale;
        // row 0 is the top of the image
        let py = ph - 1 - (z.z2 - bb.min.z2) as usize / scale;
        img[py * pw + px] = 40 + (215 * (i + 1) / n) as u8;
    }
    write!(w, "P5\n{pw} {ph}\n255\n")?;
    w.write_all(&img)
}

/// Colour of relative time `t` in `[0, 1]`: dark blue through teal and
/// green to yellow.
pub fn ramp(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68., 1., 84.),
        (59., 82., 139.),
        (33., 145., 140.),
        (94., 201., 98.),
        (253., 231., 37.),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    /// Pixels per unit cell.
    pub cell_px: f64,
    /// Draw the walls of a strip of this width.
    pub strip_k: Option<i64>,
    /// The trajectory is cut into this many polylines of decreasing width.
    pub path_segments: usize,
    pub max_stroke: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            cell_px: 12.0,
            strip_k: None,
            path_segments: 16,
            max_stroke: 3.0,
        }
    }
}

/// Renders destroyed cells coloured by destruction order and the trajectory
/// as polylines that get thinner over time.
pub fn write_svg<W: Write>(
    w: &mut W,
    cells: &[CellIndex],
    path: &[(f64, f64)],
    opts: &SvgOptions,
) -> io::Result<()> {
    let mut lo = (0.0f64, 0.0f64);
    let mut hi = (1.0f64, 1.0f64);
    for z in cells {
        lo = (lo.0.min(z.z1 as f64), lo.1.min(z.z2 as f64));
        hi = (hi.0.max(z.z1 as f64 + 1.0), hi.1.max(z.z2 as f64 + 1.0));
    }
    for &(x, y) in path {
        lo = (lo.0.min(x.floor()), lo.1.min(y.floor()));
        hi = (hi.0.max(x.ceil()), hi.1.max(y.ceil()));
    }
    if let Some(k) = opts.strip_k {
        lo.0 = lo.0.min(0.0);
        hi.0 = hi.0.max(k as f64);
    }
    let (lo, hi) = ((lo.0 - 1.0, lo.1 - 1.0), (hi.0 + 1.0, hi.1 + 1.0));
    let s = opts.cell_px;
    let (wpx, hpx) = ((hi.0 - lo.0) * s, (hi.1 - lo.1) * s);
    let tx = |x: f64| (x - lo.0) * s;
    let ty = |y: f64| (hi.1 - y) * s;

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{wpx:.0}" height="{hpx:.0}" viewBox="0 0 {wpx:.2} {hpx:.2}">"#
    )?;
    writeln!(w, r##"<rect width="100%" height="100%" fill="#b0a89a"/>"##)?;
    writeln!(w, r#"<g stroke="none">"#)?;
    let n = cells.len().max(1);
    for (i, z) in cells.iter().enumerate() {
        let (r, g, b) = ramp(i as f64 / n as f64);
        writeln!(
            w,
            r#"<rect x="{:.2}" y="{:.2}" width="{s:.2}" height="{s:.2}" fill="rgb({r},{g},{b})"/>"#,
            tx(z.z1 as f64),
            ty(z.z2 as f64 + 1.0)
        )?;
    }
    writeln!(w, "</g>")?;
    if let Some(k) = opts.strip_k {
        for x in [0.0, k as f64] {
            writeln!(
                w,
                r#"<line x1="{0:.2}" y1="0" x2="{0:.2}" y2="{hpx:.2}" stroke="black" stroke-width="2"/>"#,
                tx(x)
            )?;
        }
    }
    if path.len() >= 2 {
        let segs = opts.path_segments.clamp(1, path.len() - 1);
        let per = (path.len() - 1).div_ceil(segs);
        writeln!(
            w,
            r#"<g fill="none" stroke="crimson" stroke-linejoin="round">"#
        )?;
        for (j, chunk_start) in (0..path.len() - 1).step_by(per).enumerate() {
            let end = (chunk_start + per).min(path.len() - 1);
            let width = opts.max_stroke * (1.0 - j as f64 / segs as f64).max(0.05);
            write!(w, r#"<polyline stroke-width="{width:.3}" points=""#)?;
            for &(x, y) in &path[chunk_start..=end] {
                write!(w, "{:.2},{:.2} ", tx(x), ty(y))?;
            }
            writeln!(w, r#""/>"#)?;
        }
        writeln!(w, "</g>")?;
    }
    writeln!(w, "</svg>")
}

/// Scatter of a point cloud: the tori of each frontier side by side along
/// `x` (`xi_index + x`), height `h` in `[0, 1)` upwards.
pub fn write_cloud_svg<W: Write>(w: &mut W, points: &[CloudPoint]) -> io::Result<()> {
    let panels = points.iter().map(|p| p.xi_index + 1).max().unwrap_or(1) as f64;
    let (unit, margin) = (300.0, 10.0);
    let (wpx, hpx) = (panels * unit + 2.0 * margin, unit + 2.0 * margin);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{wpx:.0}" height="{hpx:.0}">"#
    )?;
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    for i in 0..panels as u64 {
        let x0 = margin + i as f64 * unit;
        writeln!(
            w,
            r#"<rect x="{x0:.1}" y="{margin}" width="{unit}" height="{unit}" fill="none" stroke="gray"/>"#
        )?;
    }
    writeln!(w, r#"<g fill="black">"#)?;
    for p in points {
        let cx = margin + (p.xi_index as f64 + p.x) * unit;
        let cy = margin + (1.0 - p.h) * unit;
        writeln!(w, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="0.6"/>"#)?;
    }
    writeln!(w, "</g>\n</svg>")
}
