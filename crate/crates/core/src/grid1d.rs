//! One-dimensional grids, piecewise-constant densities, their piecewise-linear
//! CDFs and the pseudo-inverse (quantile) curves built from them.
//!
//! All conversions are exact for piecewise-constant data: the CDF of a
//! piecewise-constant density is piecewise linear, its pseudo-inverse is the
//! same polyline with the coordinates swapped, and intervals on which the
//! density vanishes appear as jumps (pairs of nodes sharing one `y`).

use crate::error::{Error, Result};

/// Breakpoints of different quantile curves closer than this (in `y`) are merged.
pub const Y_MERGE_TOL: f64 = 1e-14;

/// Cell values in `[-NEGATIVE_CLIP, 0)` are treated as roundoff and clamped to zero.
pub const NEGATIVE_CLIP: f64 = 1e-12;

/// Relative threshold for [`Error::ZeroMass`]: `mass <= ZERO_MASS_REL * length * max|value|`.
pub const ZERO_MASS_REL: f64 = 1e-12;

/// Segments of a CDF narrower than this are candidates for [`Error::PointMass`].
pub const POINT_MASS_WIDTH: f64 = 1e-14;

/// Mass fraction a sub-[`POINT_MASS_WIDTH`] segment may carry before it counts as an atom.
pub const POINT_MASS_FRACTION: f64 = 1e-12;

/// Relative distance below which a source edge is taken to coincide with a target edge when resampling.
pub const EDGE_MATCH_TOL: f64 = 1e-14;

/// Cell edges of a one-dimensional grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    edges: Vec<f64>,
}

impl Grid1D {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least one cell".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidGrid("edges must be finite".into()));
        }
        if let Some(j) = edges.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "edges must be strictly increasing (edge {} = {}, edge {} = {})",
                j,
                edges[j],
                j + 1,
                edges[j + 1]
            )));
        }
        Ok(Grid1D { edges })
    }

    /// `cells` cells of equal width on `[a, b]`; the last edge is exactly `b`.
    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(b > a) {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs cells >= 1 and a < b (got {cells} cells on [{a}, {b}])"
            )));
        }
        let len = b - a;
        let n = cells as f64;
        let edges = (0..=cells)
            .map(|j| if j == cells { b } else { a + len * (j as f64) / n })
            .collect();
        Grid1D::new(edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self, j: usize) -> f64 {
        self.edges[j + 1] - self.edges[j]
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| w[1] - w[0])
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.upper() - self.lower()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// True when all widths agree to 1e-9 relative.
    pub fn is_uniform(&self) -> bool {
        let h = self.length() / self.cells() as f64;
        self.widths().all(|w| (w - h).abs() <= 1e-9 * h)
    }

    /// Index of the cell containing `x` (half-open cells, the last one closed).
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.lower() || x > self.upper() {
            return None;
        }
        let k = self.edges.partition_point(|&e| e <= x);
        Some(k.saturating_sub(1).min(self.cells() - 1))
    }
}

/// Piecewise-constant function given by its cell averages.
#[derive(Clone, Debug, PartialEq)]
pub struct PwcFunction1D {
    grid: Grid1D,
    values: Vec<f64>,
}

impl PwcFunction1D {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value in cell {j}")));
        }
        Ok(PwcFunction1D { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let values = vec![0.0; grid.cells()];
        PwcFunction1D { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_parts(self) -> (Grid1D, Vec<f64>) {
        (self.grid, self.values)
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.widths())
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn abs_mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.widths())
            .map(|(v, w)| v.abs() * w)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Value of the cell containing `x`; zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        self.grid.locate(x).map_or(0.0, |j| self.values[j])
    }

    pub fn scaled(&self, c: f64) -> PwcFunction1D {
        PwcFunction1D {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Same values on a grid translated by `shift`.
    pub fn translated(&self, shift: f64) -> Result<PwcFunction1D> {
        let grid = Grid1D::new(self.grid.edges.iter().map(|e| e + shift).collect())?;
        Ok(PwcFunction1D {
            grid,
            values: self.values.clone(),
        })
    }

    /// Conservative transfer onto `target` by exact integration over cell overlaps.
    pub fn resample(&self, target: &Grid1D) -> Result<PwcFunction1D> {
        let src = &self.grid.edges;
        let (ta, tb) = (target.lower(), target.upper());
        for (j, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let outside = (ta - src[j]).max(0.0) + (src[j + 1] - tb).max(0.0);
            if outside > 1e-14 * (1.0 + ta.abs().max(tb.abs())) {
                return Err(Error::DomainMismatch(format!(
                    "source cell [{}, {}] carries mass outside the target [{}, {}]",
                    src[j],
                    src[j + 1],
                    ta,
                    tb
                )));
            }
        }

        // Source edges within roundoff of a target edge are moved onto it, and
        // each source cell's mass is spread over its moved extent.
        let tgt = target.edges();
        let last = target.cells() - 1;
        let locate = |x: f64| tgt.partition_point(|&t| t <= x).saturating_sub(1).min(last);
        let snap = |e: f64| {
            let k = locate(e);
            [tgt[k], tgt[k + 1]]
                .into_iter()
                .find(|t| (t - e).abs() <= EDGE_MATCH_TOL * (1.0 + e.abs()))
                .unwrap_or(e)
        };
        let mut mass = vec![0.0; target.cells()];
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (a, b) = (snap(src[i]), snap(src[i + 1]));
            if a >= b {
                mass[locate(a)] += v * (src[i + 1] - src[i]);
                continue;
            }
            let density = if a == src[i] && b == src[i + 1] {
                v
            } else {
                v * (src[i + 1] - src[i]) / (b - a)
            };
            let mut k = locate(a);
            while k <= last && tgt[k] < b {
                let overlap = b.min(tgt[k + 1]) - a.max(tgt[k]);
                if overlap > 0.0 {
                    mass[k] += density * overlap;
                }
                k += 1;
            }
        }
        let out = mass
            .iter()
            .zip(target.widths())
            .map(|(m, w)| m / w)
            .collect();
        PwcFunction1D::new(target.clone(), out)
    }

    /// `sum_i c_i f_i` on the union of all grids (values outside a grid count as zero).
    pub fn linear_combination(terms: &[(f64, &PwcFunction1D)]) -> Result<PwcFunction1D> {
        if terms.is_empty() {
            return Err(Error::EmptyInput);
        }
        let grid = union_grid(terms.iter().map(|(_, f)| f.grid()))?;
        let centers = grid.centers();
        let mut values = vec![0.0; grid.cells()];
        for (c, f) in terms {
            for (v, &x) in values.iter_mut().zip(&centers) {
                *v += c * f.eval(x);
            }
        }
        PwcFunction1D::new(grid, values)
    }

    /// Cellwise differences `self - other` on the union grid, with cell widths.
    fn differences(&self, other: &PwcFunction1D) -> Result<(Vec<f64>, Vec<f64>)> {
        let grid = union_grid([self.grid(), other.grid()].into_iter())?;
        let diffs = grid
            .centers()
            .iter()
            .map(|&x| self.eval(x) - other.eval(x))
            .collect();
        Ok((diffs, grid.widths().collect()))
    }

    pub fn linf_distance(&self, other: &PwcFunction1D) -> Result<f64> {
        let (d, _) = self.differences(other)?;
        Ok(d.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn l1_distance(&self, other: &PwcFunction1D) -> Result<f64> {
        let (d, w) = self.differences(other)?;
        Ok(d.iter().zip(&w).map(|(v, w)| v.abs() * w).sum())
    }

    pub fn l2_distance(&self, other: &PwcFunction1D) -> Result<f64> {
        let (d, w) = self.differences(other)?;
        Ok(d.iter().zip(&w).map(|(v, w)| v * v * w).sum::<f64>().sqrt())
    }

    pub fn l1_norm(&self) -> f64 {
        self.abs_mass()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.widths())
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Edge between the two adjacent cells with the largest drop in value
    /// (the first such edge on ties), or `None` for a single cell.
    pub fn steepest_descent_edge(&self) -> Option<f64> {
        let mut best: Option<(usize, f64)> = None;
        for (j, w) in self.values.windows(2).enumerate() {
            let drop = w[0] - w[1];
            if best.is_none_or(|(_, d)| drop > d) {
                best = Some((j, drop));
            }
        }
        best.map(|(j, _)| self.grid.edges()[j + 1])
    }
}

/// Sorted union of grid edges, with edges closer than 1e-14 (relative) merged.
pub fn union_grid<'a>(grids: impl Iterator<Item = &'a Grid1D>) -> Result<Grid1D> {
    let mut all: Vec<f64> = grids.flat_map(|g| g.edges().iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = Vec::with_capacity(all.len());
    for e in all {
        match edges.last() {
            Some(&last) if e - last <= 1e-14 * (1.0 + last.abs()) => {}
            _ => edges.push(e),
        }
    }
    Grid1D::new(edges)
}

/// Piecewise-linear CDF through `(x_j, U_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PwlCdf {
    x: Vec<f64>,
    u: Vec<f64>,
}

impl PwlCdf {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.len() != u.len() || x.len() < 2 {
            return Err(Error::InvariantViolation(
                "a CDF needs at least two nodes with matching coordinates".into(),
            ));
        }
        if x.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation("non-finite CDF node".into()));
        }
        if let Some(j) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvariantViolation(format!(
                "CDF x-nodes must be strictly increasing (node {})",
                j + 1
            )));
        }
        if let Some(j) = u.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvariantViolation(format!(
                "CDF values must be non-decreasing (node {})",
                j + 1
            )));
        }
        if u[0] != 0.0 {
            return Err(Error::InvariantViolation(format!(
                "CDF must start at zero (got {})",
                u[0]
            )));
        }
        if !(u[u.len() - 1] > 0.0) {
            return Err(Error::ZeroMass {
                mass: u[u.len() - 1],
            });
        }
        Ok(PwlCdf { x, u })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn total_mass(&self) -> f64 {
        self.u[self.u.len() - 1]
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x[0] {
            return 0.0;
        }
        let n = self.x.len();
        if x >= self.x[n - 1] {
            return self.u[n - 1];
        }
        let k = self.x.partition_point(|&v| v <= x);
        let (x0, x1, u0, u1) = (self.x[k - 1], self.x[k], self.u[k - 1], self.u[k]);
        u0 + (u1 - u0) * (x - x0) / (x1 - x0)
    }
}

/// Pseudo-inverse of a normalized CDF, as a monotone polyline in `(y, x)`.
///
/// A jump of length `l` at level `y` is stored as two consecutive nodes
/// `(y, a)`, `(y, a + l)`; between jumps `y` strictly increases.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileCurve {
    y: Vec<f64>,
    x: Vec<f64>,
}

impl QuantileCurve {
    pub fn new(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if y.len() != x.len() || y.len() < 2 {
            return Err(Error::InvariantViolation(
                "a quantile curve needs at least two nodes".into(),
            ));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation("non-finite quantile node".into()));
        }
        if y[0] != 0.0 || y[y.len() - 1] != 1.0 {
            return Err(Error::InvariantViolation(format!(
                "quantile levels must run from 0 to 1 (got {} to {})",
                y[0],
                y[y.len() - 1]
            )));
        }
        for j in 1..y.len() {
            if y[j] < y[j - 1] {
                return Err(Error::InvariantViolation(format!(
                    "quantile levels must be non-decreasing (node {j})"
                )));
            }
            if x[j] < x[j - 1] {
                return Err(Error::InvariantViolation(format!(
                    "quantile positions must be non-decreasing (node {j})"
                )));
            }
            if j >= 2 && y[j] == y[j - 1] && y[j - 1] == y[j - 2] {
                return Err(Error::InvariantViolation(format!(
                    "more than two nodes share level {} (node {j})",
                    y[j]
                )));
            }
        }
        Ok(QuantileCurve { y, x })
    }

    /// The identity quantile of the uniform density on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        QuantileCurve::new(vec![0.0, 1.0], vec![a, b])
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Jumps as `(y, x_minus, x_plus)`.
    pub fn jumps(&self) -> Vec<(f64, f64, f64)> {
        (1..self.y.len())
            .filter(|&j| self.y[j] == self.y[j - 1] && self.x[j] > self.x[j - 1])
            .map(|j| (self.y[j], self.x[j - 1], self.x[j]))
            .collect()
    }

    /// Left and right limits at `y`; at `y = 0` the left limit is the first node.
    pub fn limits(&self, y: f64) -> (f64, f64) {
        self.limits_in_window(y, y, y)
    }

    pub fn left_limit(&self, y: f64) -> f64 {
        self.limits(y).0
    }

    pub fn right_limit(&self, y: f64) -> f64 {
        self.limits(y).1
    }

    /// Limits treating every node with level in `[lo, hi]` as sitting at `at`.
    fn limits_in_window(&self, lo: f64, hi: f64, at: f64) -> (f64, f64) {
        let first = self.y.partition_point(|&v| v < lo);
        let past = self.y.partition_point(|&v| v <= hi);
        if first < past {
            return (self.x[first], self.x[past - 1]);
        }
        let n = self.y.len();
        if first == 0 {
            return (self.x[0], self.x[0]);
        }
        if first >= n {
            return (self.x[n - 1], self.x[n - 1]);
        }
        let (y0, y1) = (self.y[first - 1], self.y[first]);
        let (x0, x1) = (self.x[first - 1], self.x[first]);
        let v = x0 + (x1 - x0) * (at - y0) / (y1 - y0);
        (v, v)
    }
}

/// Running cell sums at the grid edges.
pub fn cdf(u: &PwcFunction1D) -> Result<PwlCdf> {
    let grid = u.grid();
    let mut acc = 0.0;
    let mut running = Vec::with_capacity(grid.cells() + 1);
    running.push(0.0);
    let mut vmax = 0.0f64;
    for (j, (&v, w)) in u.values().iter().zip(grid.widths()).enumerate() {
        let v = if v < 0.0 {
            if v < -NEGATIVE_CLIP {
                return Err(Error::NegativeValue { cell: j, value: v });
            }
            0.0
        } else {
            v
        };
        vmax = vmax.max(v);
        acc += v * w;
        running.push(acc);
    }
    if acc <= ZERO_MASS_REL * grid.length() * vmax || acc <= 0.0 {
        return Err(Error::ZeroMass { mass: acc });
    }
    PwlCdf::new(grid.edges().to_vec(), running)
}

/// Swap the CDF coordinates; flat runs of the CDF become jumps.
pub fn pseudo_inverse(cdf: &PwlCdf) -> QuantileCurve {
    let mass = cdf.total_mass();
    let (xs, us) = (cdf.x(), cdf.u());
    let n = xs.len();
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        let mut k = j;
        while k + 1 < n && us[k + 1] == us[j] {
            k += 1;
        }
        let level = if j == 0 {
            0.0
        } else if k == n - 1 {
            1.0
        } else {
            us[j] / mass
        };
        y.push(level);
        x.push(xs[j]);
        if k > j {
            y.push(level);
            x.push(xs[k]);
        }
        j = k + 1;
    }
    QuantileCurve { y, x }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

/// Weighted sum of quantile curves on the merged set of breakpoints.
///
/// Breakpoints closer than [`Y_MERGE_TOL`] are merged; at each merged level the
/// left and right limits are combined separately so jumps of every input
/// survive. Curves with zero weight do not contribute breakpoints.
pub fn combine(curves: &[QuantileCurve], weights: &[f64]) -> Result<QuantileCurve> {
    if curves.is_empty() {
        return Err(Error::EmptyInput);
    }
    if curves.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} curves but {} weights",
            curves.len(),
            weights.len()
        )));
    }
    validate_weights(weights)?;
    let active: Vec<(&QuantileCurve, f64)> = curves
        .iter()
        .zip(weights.iter().copied())
        .filter(|(_, w)| *w > 0.0)
        .collect();

    let mut levels: Vec<f64> = active
        .iter()
        .flat_map(|(c, _)| c.y.iter().copied())
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut clusters: Vec<(f64, f64)> = Vec::new();
    for v in levels {
        match clusters.last_mut() {
            Some(c) if v - c.0 <= Y_MERGE_TOL => c.1 = v,
            _ => clusters.push((v, v)),
        }
    }
    let last = clusters.len() - 1;

    let mut y = Vec::with_capacity(2 * clusters.len());
    let mut x: Vec<f64> = Vec::with_capacity(2 * clusters.len());
    for (i, &(lo, hi)) in clusters.iter().enumerate() {
        let at = if i == 0 {
            0.0
        } else if i == last {
            1.0
        } else {
            lo
        };
        let mut left = 0.0;
        let mut right = 0.0;
        for (c, w) in &active {
            let (l, r) = c.limits_in_window(lo, hi, at);
            left += w * l;
            right += w * r;
        }
        if let Some(&prev) = x.last() {
            left = left.max(prev);
        }
        right = right.max(left);
        y.push(at);
        x.push(left);
        if right > left {
            y.push(at);
            x.push(right);
        }
    }
    QuantileCurve::new(y, x)
}

/// Reflect a quantile curve back into a CDF of total mass `mass`.
pub fn quantile_to_cdf(q: &QuantileCurve, mass: f64) -> Result<PwlCdf> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::ZeroMass { mass });
    }
    let n = q.len();
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    let mut us: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let x = q.x[i];
        let u = if i == 0 {
            0.0
        } else if q.y[i] == 1.0 {
            mass
        } else {
            q.y[i] * mass
        };
        if let Some(&lx) = xs.last() {
            if x <= lx {
                let du = u - us[us.len() - 1];
                if du > POINT_MASS_FRACTION * mass {
                    return Err(Error::PointMass { x });
                }
                if xs.len() > 1 || i == n - 1 {
                    let k = us.len() - 1;
                    us[k] = u;
                }
                continue;
            }
        }
        xs.push(x);
        us.push(u);
    }
    if xs.len() < 2 {
        return Err(Error::PointMass { x: q.x[0] });
    }
    if us[0] != 0.0 {
        // only reachable when everything collapsed onto the first node
        return Err(Error::PointMass { x: xs[0] });
    }
    let k = us.len() - 1;
    us[k] = mass;
    PwlCdf::new(xs, us)
}

/// Piecewise-constant derivative of a CDF on the grid of its x-nodes.
pub fn density_from_cdf(cdf: &PwlCdf) -> Result<PwcFunction1D> {
    let (xs, us) = (cdf.x(), cdf.u());
    let mass = cdf.total_mass();
    let mut values = Vec::with_capacity(xs.len() - 1);
    for j in 0..xs.len() - 1 {
        let dx = xs[j + 1] - xs[j];
        let du = us[j + 1] - us[j];
        if dx <= POINT_MASS_WIDTH * (1.0 + xs[j].abs()) && du > POINT_MASS_FRACTION * mass {
            return Err(Error::PointMass { x: xs[j] });
        }
        values.push(du / dx);
    }
    PwcFunction1D::new(Grid1D::new(xs.to_vec())?, values)
}

/// Normalized pseudo-inverse and mass of a nonnegative density.
pub fn normalized_quantile(u: &PwcFunction1D) -> Result<(QuantileCurve, f64)> {
    let c = cdf(u)?;
    let m = c.total_mass();
    Ok((pseudo_inverse(&c), m))
}

/// Number of plateaus of the CDF (levels at which the pseudo-inverse jumps).
pub fn plateau_count(q: &QuantileCurve) -> usize {
    q.jumps().len()
}
