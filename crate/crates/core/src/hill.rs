//! Hill's regions `{U <= c}` on a planar grid: membership, connected
//! components and export.
//!
//! Cells are sampled at their centers. A cell is in the region iff
//! `U(center) <= c`; the cells holding a massive primary are always in. Every
//! component that touches the frame is reported as the single unbounded
//! component, since outside the frame the region is connected for `c < kappa`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cr3bp::{effective_potential, SystemParams};
use crate::error::{Error, Result};
use crate::format::{ser_f64, sci17};
use crate::par::{self, Execution};

pub const MIN_RESOLUTION: usize = 16;

/// True iff `U(q) <= c`.
pub fn hill_membership(params: &SystemParams, c: f64, q: &[f64]) -> Result<bool> {
    Ok(effective_potential(params, q)? <= c)
}

/// Rectangle `[x_min, x_max] x [y_min, y_max]` split into `resolution` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub bounds: [f64; 4],
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            bounds: [-2.0, 2.0, -2.0, 2.0],
            resolution: 400,
        }
    }
}

impl GridSpec {
    pub fn square(half_width: f64, resolution: usize) -> Self {
        GridSpec {
            bounds: [-half_width, half_width, -half_width, half_width],
            resolution,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < MIN_RESOLUTION {
            return Err(Error::InvalidInput(format!(
                "grid resolution {} is below the minimum {MIN_RESOLUTION}",
                self.resolution
            )));
        }
        let [x0, x1, y0, y1] = self.bounds;
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite() && x0 < x1 && y0 < y1) {
            return Err(Error::InvalidInput(format!("invalid grid bounds {:?}", self.bounds)));
        }
        Ok(())
    }

    pub fn cell_size(&self) -> (f64, f64) {
        let n = self.resolution as f64;
        ((self.bounds[1] - self.bounds[0]) / n, (self.bounds[3] - self.bounds[2]) / n)
    }

    /// Center of cell `(i, j)`, column `i` along `q1`, row `j` along `q2`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let (dx, dy) = self.cell_size();
        (
            self.bounds[0] + (i as f64 + 0.5) * dx,
            self.bounds[2] + (j as f64 + 0.5) * dy,
        )
    }

    /// The cell containing `(x, y)`, if inside the frame.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (dx, dy) = self.cell_size();
        let fi = ((x - self.bounds[0]) / dx).floor();
        let fj = ((y - self.bounds[2]) / dy).floor();
        let n = self.resolution as f64;
        if fi < 0.0 || fj < 0.0 || fi >= n || fj >= n || fi.is_nan() || fj.is_nan() {
            return None;
        }
        Some((fi as usize, fj as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HillComponent {
    pub id: usize,
    pub cells: usize,
    pub bounded: bool,
    pub contains_earth: bool,
    pub contains_moon: bool,
}

/// Labelled sample of a Hill's region on a planar slice.
#[derive(Debug, Clone, Serialize)]
pub struct HillGrid {
    pub spec: GridSpec,
    #[serde(serialize_with = "ser_f64")]
    pub c: f64,
    /// `U` at cell centers, row-major (row = `q2` index); `-inf` at a primary.
    #[serde(skip)]
    pub values: Vec<f64>,
    /// Component id per cell, `None` outside the region.
    #[serde(skip)]
    pub labels: Vec<Option<usize>>,
    pub components: Vec<HillComponent>,
    pub earth_component: Option<usize>,
    pub moon_component: Option<usize>,
}

/// Samples `U` on the grid and labels the 4-connected components of `{U <= c}`.
pub fn classify_components(params: &SystemParams, c: f64, spec: GridSpec) -> Result<HillGrid> {
    classify_components_with(params, c, spec, Execution::available())
}

pub fn classify_components_with(params: &SystemParams, c: f64, spec: GridSpec, exec: Execution) -> Result<HillGrid> {
    spec.validate()?;
    let n = spec.resolution;
    let dim = params.n();
    let mut values = vec![0.0; n * n];
    par::fill_chunks(exec, &mut values, n, |j, row| {
        let mut q = vec![0.0; dim];
        for (i, v) in row.iter_mut().enumerate() {
            let (x, y) = spec.center(i, j);
            q[0] = x;
            q[1] = y;
            *v = effective_potential(params, &q).unwrap_or(f64::NEG_INFINITY);
        }
    });
    let earth_cell = spec.cell_of(params.earth()[0], params.earth()[1]);
    let moon_cell = spec.cell_of(params.moon()[0], params.moon()[1]);
    let mut inside: Vec<bool> = values.iter().map(|&u| u <= c).collect();
    if let Some((i, j)) = earth_cell {
        inside[j * n + i] = true;
    }
    if params.mu() > 0.0 {
        if let Some((i, j)) = moon_cell {
            inside[j * n + i] = true;
        }
    }

    // raw flood fill
    let mut raw = vec![usize::MAX; n * n];
    let mut touches = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n * n {
        if !inside[start] || raw[start] != usize::MAX {
            continue;
        }
        let id = touches.len();
        let mut frame = false;
        raw[start] = id;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k % n, k / n);
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                frame = true;
            }
            let mut visit = |k2: usize| {
                if inside[k2] && raw[k2] == usize::MAX {
                    raw[k2] = id;
                    stack.push(k2);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < n {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - n);
            }
            if j + 1 < n {
                visit(k + n);
            }
        }
        touches.push(frame);
    }

    // merge frame-touching components, renumber in scan order
    let mut remap = vec![usize::MAX; touches.len()];
    let mut outer = None;
    let mut next = 0;
    for (k, &t) in touches.iter().enumerate() {
        if t {
            if let Some(o) = outer {
                remap[k] = o;
                continue;
            }
            outer = Some(next);
        }
        remap[k] = next;
        next += 1;
    }
    let labels: Vec<Option<usize>> = raw
        .iter()
        .map(|&r| if r == usize::MAX { None } else { Some(remap[r]) })
        .collect();
    let label_at = |cell: Option<(usize, usize)>| cell.and_then(|(i, j)| labels[j * n + i]);
    let earth_component = label_at(earth_cell);
    let moon_component = if params.mu() > 0.0 { label_at(moon_cell) } else { None };
    let mut components: Vec<HillComponent> = (0..next)
        .map(|id| HillComponent {
            id,
            cells: 0,
            bounded: Some(id) != outer,
            contains_earth: Some(id) == earth_component,
            contains_moon: Some(id) == moon_component,
        })
        .collect();
    for l in labels.iter().flatten() {
        components[*l].cells += 1;
    }
    Ok(HillGrid {
        spec,
        c,
        values,
        labels,
        components,
        earth_component,
        moon_component,
    })
}

impl HillGrid {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn bounded_count(&self) -> usize {
        self.components.iter().filter(|c| c.bounded).count()
    }

    pub fn unbounded_component(&self) -> Option<usize> {
        self.components.iter().find(|c| !c.bounded).map(|c| c.id)
    }

    pub fn label(&self, i: usize, j: usize) -> Option<usize> {
        self.labels[j * self.spec.resolution + i]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.resolution + i]
    }

    /// Component of the cell containing `q` (first two coordinates).
    pub fn component_at(&self, q: &[f64]) -> Option<usize> {
        let (i, j) = self.spec.cell_of(q[0], q[1])?;
        self.label(i, j)
    }

    /// Like [`component_at`](Self::component_at), but if the containing cell is
    /// outside the sampled region, the label of an adjacent cell is used. Meant
    /// for points that are known to satisfy `U <= c` and sit on a boundary cell.
    pub fn component_near(&self, q: &[f64]) -> Option<usize> {
        let (i, j) = self.spec.cell_of(q[0], q[1])?;
        if let Some(l) = self.label(i, j) {
            return Some(l);
        }
        let n = self.spec.resolution as isize;
        let mut found = None;
        for dj in -1..=1isize {
            for di in -1..=1isize {
                let (a, b) = (i as isize + di, j as isize + dj);
                if a < 0 || b < 0 || a >= n || b >= n {
                    continue;
                }
                if let Some(l) = self.label(a as usize, b as usize) {
                    match found {
                        None => found = Some(l),
                        Some(f) if f != l => return None,
                        _ => {}
                    }
                }
            }
        }
        found
    }

    /// Membership of every cell, row-major.
    pub fn in_region(&self) -> impl Iterator<Item = bool> + '_ {
        self.labels.iter().map(Option::is_some)
    }

    /// `U` at cell centers as a CSV matrix; row `j` is `q2` index `j`.
    pub fn values_csv(&self) -> String {
        let n = self.spec.resolution;
        let mut out = String::new();
        for row in self.values.chunks(n) {
            let cells: Vec<String> = row.iter().map(|&u| sci17(u)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Component ids as a CSV matrix, `-1` outside the region.
    pub fn labels_csv(&self) -> String {
        let n = self.spec.resolution;
        let mut out = String::new();
        for row in self.labels.chunks(n) {
            let cells: Vec<String> = row
                .iter()
                .map(|l| l.map_or("-1".to_string(), |v| v.to_string()))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Zero-velocity curve `U = c` by marching squares on the cell centers.
    pub fn contour_segments(&self) -> Vec<[(f64, f64); 2]> {
        let n = self.spec.resolution;
        let c = self.c;
        let mut segs = Vec::new();
        let lerp = |a: (f64, f64), b: (f64, f64), ua: f64, ub: f64| {
            let t = if ua.is_finite() && ub.is_finite() && ua != ub {
                ((c - ua) / (ub - ua)).clamp(0.0, 1.0)
            } else {
                0.5
            };
            (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        };
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let p = [
                    self.spec.center(i, j),
                    self.spec.center(i + 1, j),
                    self.spec.center(i + 1, j + 1),
                    self.spec.center(i, j + 1),
                ];
                let u = [
                    self.value(i, j),
                    self.value(i + 1, j),
                    self.value(i + 1, j + 1),
                    self.value(i, j + 1),
                ];
                let mut crossings = Vec::with_capacity(4);
                for e in 0..4 {
                    let (a, b) = (e, (e + 1) % 4);
                    if (u[a] <= c) != (u[b] <= c) {
                        crossings.push(lerp(p[a], p[b], u[a], u[b]));
                    }
                }
                match crossings.len() {
                    2 => segs.push([crossings[0], crossings[1]]),
                    4 => {
                        // saddle: pair by the sign of the center average
                        let mid = u.iter().sum::<f64>() / 4.0;
                        if (mid <= c) == (u[0] <= c) {
                            segs.push([crossings[0], crossings[3]]);
                            segs.push([crossings[1], crossings[2]]);
                        } else {
                            segs.push([crossings[0], crossings[1]]);
                            segs.push([crossings[2], crossings[3]]);
                        }
                    }
                    _ => {}
                }
            }
        }
        segs
    }

    /// SVG picture: in-region cells coloured by component, plus the zero-velocity curve.
    pub fn to_svg(&self, params: &SystemParams) -> String {
        const PALETTE: [&str; 8] = [
            "#9ecae1", "#fdae6b", "#a1d99b", "#bcbddc", "#fc9272", "#c7e9c0", "#fdd0a2", "#d9d9d9",
        ];
        let [x0, x1, y0, y1] = self.spec.bounds;
        let n = self.spec.resolution;
        let (dx, dy) = self.spec.cell_size();
        // q2 grows upward, so flip the y axis
        let sy = |y: f64| y1 + y0 - y;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0} {y0} {w} {h}" width="800" height="{ph}">"#,
            w = x1 - x0,
            h = y1 - y0,
            ph = (800.0 * (y1 - y0) / (x1 - x0)).round()
        );
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="white"/>"#, x1 - x0, y1 - y0);
        for j in 0..n {
            let mut i = 0;
            while i < n {
                let Some(l) = self.label(i, j) else {
                    i += 1;
                    continue;
                };
                let start = i;
                while i < n && self.label(i, j) == Some(l) {
                    i += 1;
                }
                let fill = if self.components[l].bounded {
                    PALETTE[l % PALETTE.len()]
                } else {
                    "#eeeeee"
                };
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="none"/>"#,
                    x0 + start as f64 * dx,
                    sy(y0 + (j + 1) as f64 * dy),
                    (i - start) as f64 * dx,
                    dy
                );
            }
        }
        let stroke = (x1 - x0) / 800.0;
        let mut d = String::new();
        for [a, b] in self.contour_segments() {
            let _ = write!(d, "M{} {}L{} {}", a.0, sy(a.1), b.0, sy(b.1));
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="black" stroke-width="{stroke}"/>"#);
        for (name, pos, color) in [("E", params.earth(), "#08519c"), ("M", params.moon(), "#636363")] {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="{}" fill="{color}"><title>{name}</title></circle>"#,
                pos[0],
                sy(pos[1]),
                3.0 * stroke
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::kappa;

    #[test]
    fn membership_examples() {
        let p0 = SystemParams::planar(0.0).unwrap();
        assert!(hill_membership(&p0, -2.0, &[0.1, 0.0]).unwrap());
        assert!(!hill_membership(&p0, -2.0, &[1.0, 0.0]).unwrap());
        let u = effective_potential(&p0, &[0.7, 0.2]).unwrap();
        assert!(hill_membership(&p0, u, &[0.7, 0.2]).unwrap());
        assert!(hill_membership(&p0, -2.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_coarse_grids() {
        let p = SystemParams::planar(0.2).unwrap();
        assert!(matches!(
            classify_components(&p, -2.0, GridSpec::square(2.0, 15)),
            Err(Error::InvalidInput(_))
        ));
        assert!(classify_components(&p, -2.0, GridSpec::square(2.0, 16)).is_ok());
    }

    #[test]
    fn three_components_below_kappa() {
        let p = SystemParams::planar(0.2).unwrap();
        let k = kappa(&p).unwrap();
        let g = classify_components(&p, k - 0.1, GridSpec::square(2.0, 400)).unwrap();
        assert_eq!(g.component_count(), 3);
        assert_eq!(g.bounded_count(), 2);
        let (e, m) = (g.earth_component.unwrap(), g.moon_component.unwrap());
        assert_ne!(e, m);
        assert!(g.components[e].bounded && g.components[m].bounded);
    }

    #[test]
    fn rotating_kepler_has_two() {
        let p = SystemParams::planar(0.0).unwrap();
        let g = classify_components(&p, -1.6, GridSpec::default()).unwrap();
        assert_eq!(g.component_count(), 2);
        assert_eq!(g.bounded_count(), 1);
        assert!(g.components[g.earth_component.unwrap()].bounded);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let p = SystemParams::planar(0.3).unwrap();
        let a = classify_components_with(&p, -1.9, GridSpec::square(2.0, 64), Execution::Sequential).unwrap();
        let b = classify_components_with(&p, -1.9, GridSpec::square(2.0, 64), Execution::Parallel).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn exports() {
        let p = SystemParams::planar(0.2).unwrap();
        let g = classify_components(&p, -1.9, GridSpec::square(2.0, 32)).unwrap();
        let csv = g.labels_csv();
        assert_eq!(csv.lines().count(), 32);
        assert!(csv.lines().all(|l| l.split(',').count() == 32));
        assert_eq!(g.values_csv().lines().count(), 32);
        let svg = g.to_svg(&p);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!g.contour_segments().is_empty());
    }
}
