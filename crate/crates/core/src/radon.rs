//! Discrete Radon transform of piecewise-constant images, its adjoint, least
//! squares inversion, and the slice-wise displacement interpolant.
//!
//! A sinogram sample is the average over an `s`-bin of the exact line
//! integrals of the image, which equals the area of each pixel inside the
//! strip `{x : s_k ≤ (x − c)·ω < s_k + Δs}` weighted by the pixel value and
//! divided by `Δs`. Every pixel's footprint covers a handful of bins; the
//! weights are computed in closed form from the distribution of a sum of two
//! uniform variables.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dinterp1d::interp_signed;
use crate::error::{Error, Result};
use crate::grid1d::{Grid1D, PwcFunction1D};

/// Axis-aligned square `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Extent {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Extent {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let (lx, ly) = (x1 - x0, y1 - y0);
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "extent [{x0}, {x1}] x [{y0}, {y1}] is empty"
            )));
        }
        if (lx - ly).abs() > 1e-12 * lx.max(ly) {
            return Err(Error::InvalidInput(format!(
                "extent must be square (got {lx} by {ly})"
            )));
        }
        Ok(Extent { x0, x1, y0, y1 })
    }

    pub fn unit() -> Self {
        Extent {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        }
    }

    pub fn side(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// `D × D` cell averages; row `i` holds the cells with the `i`-th smallest `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image2D {
    d: usize,
    extent: Extent,
    values: Vec<f64>,
}

impl Image2D {
    pub fn new(d: usize, extent: Extent, values: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("image dimension {d} below 2")));
        }
        if values.len() != d * d {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {d}x{d} image",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite pixel value".into()));
        }
        Ok(Image2D { d, extent, values })
    }

    pub fn zeros(d: usize, extent: Extent) -> Self {
        Image2D {
            d,
            extent,
            values: vec![0.0; d * d],
        }
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(d: usize, extent: Extent, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let h = extent.side() / d as f64;
        let mut values = Vec::with_capacity(d * d);
        for i in 0..d {
            let y = extent.y0 + (i as f64 + 0.5) * h;
            for j in 0..d {
                let x = extent.x0 + (j as f64 + 0.5) * h;
                values.push(f(x, y));
            }
        }
        Image2D::new(d, extent, values)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn h(&self) -> f64 {
        self.extent.side() / self.d as f64
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn mass(&self) -> f64 {
        let h = self.h();
        self.values.iter().sum::<f64>() * h * h
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖₂ / ‖other‖₂` over pixel values.
    pub fn relative_l2_error(&self, reference: &Image2D) -> Result<f64> {
        if self.d != reference.d {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} against {}x{}",
                self.d, self.d, reference.d, reference.d
            )));
        }
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(num.sqrt() / reference.l2_norm())
    }

    /// Central differences along `x` (`axis = 1`) or `y` (`axis = 2`), with edge
    /// replication at the border.
    pub fn central_difference(&self, axis: usize) -> Result<Image2D> {
        let d = self.d;
        let h = self.h();
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let (a, b) = match axis {
                    1 => (self.get(i, j.saturating_sub(1)), self.get(i, (j + 1).min(d - 1))),
                    2 => (self.get(i.saturating_sub(1), j), self.get((i + 1).min(d - 1), j)),
                    _ => return Err(Error::InvalidInput(format!("axis {axis} not in {{1, 2}}"))),
                };
                out[i * d + j] = (b - a) / (2.0 * h);
            }
        }
        Image2D::new(d, self.extent, out)
    }
}

/// Angles, offsets and image layout of a sinogram.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadonGeometry {
    pub d: usize,
    pub extent: Extent,
    pub angles: usize,
    pub oversample: f64,
}

impl RadonGeometry {
    pub fn new(d: usize, extent: Extent, angles: usize, oversample: f64) -> Result<Self> {
        if angles == 0 {
            return Err(Error::InvalidInput("at least one angle is required".into()));
        }
        if !(oversample >= 1.0 && oversample.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "oversampling factor {oversample} below 1"
            )));
        }
        if d < 2 {
            return Err(Error::InvalidInput(format!("image dimension {d} below 2")));
        }
        Ok(RadonGeometry {
            d,
            extent,
            angles,
            oversample,
        })
    }

    /// `4D` angles and twofold oversampling.
    pub fn default_for(image: &Image2D) -> Self {
        RadonGeometry {
            d: image.d,
            extent: image.extent,
            angles: 4 * image.d,
            oversample: 2.0,
        }
    }

    pub fn h(&self) -> f64 {
        self.extent.side() / self.d as f64
    }

    pub fn ds(&self) -> f64 {
        self.h() / self.oversample
    }

    /// Half-length of the offset range: the radius of the circumscribed circle.
    pub fn radius(&self) -> f64 {
        self.extent.side() * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn bins(&self) -> usize {
        (2.0 * self.radius() / self.ds() - 1e-9).ceil() as usize
    }

    pub fn s_lower(&self) -> f64 {
        -0.5 * self.bins() as f64 * self.ds()
    }

    /// Grid of `s`-bins, measured from the image center.
    pub fn s_grid(&self) -> Grid1D {
        let lo = self.s_lower();
        Grid1D::uniform(lo, -lo, self.bins()).expect("positive bin count")
    }

    pub fn s_centers(&self) -> Vec<f64> {
        let (lo, ds) = (self.s_lower(), self.ds());
        (0..self.bins()).map(|k| lo + (k as f64 + 0.5) * ds).collect()
    }

    pub fn angle(&self, p: usize) -> f64 {
        std::f64::consts::PI * p as f64 / self.angles as f64
    }

    pub fn omega(&self, p: usize) -> (f64, f64) {
        let t = self.angle(p);
        (t.cos(), t.sin())
    }

    fn stride(&self) -> usize {
        (std::f64::consts::SQRT_2 * self.oversample).ceil() as usize + 2
    }

    fn check_image(&self, u: &Image2D) -> Result<()> {
        if u.d != self.d || u.extent != self.extent {
            return Err(Error::GeometryMismatch(format!(
                "image {}x{} on {:?} against geometry {}x{} on {:?}",
                u.d, u.d, u.extent, self.d, self.d, self.extent
            )));
        }
        Ok(())
    }
}

/// Fraction of the unit square where `p·u₁ + q·u₂ ≤ τ`, for `p, q ≥ 0`.
fn sum_uniform_cdf(p: f64, q: f64, tau: f64) -> f64 {
    let (p, q) = if p >= q { (p, q) } else { (q, p) };
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= p + q {
        return 1.0;
    }
    if q <= 1e-12 * p {
        return (tau / p).clamp(0.0, 1.0);
    }
    let f = if tau <= q {
        tau * tau / (2.0 * p * q)
    } else if tau <= p {
        (tau - 0.5 * q) / p
    } else {
        let r = p + q - tau;
        1.0 - r * r / (2.0 * p * q)
    };
    f.clamp(0.0, 1.0)
}

/// Bin weights of one pixel at one angle: first bin, and `area / Δs` per bin.
fn pixel_footprint(
    geom: &RadonGeometry,
    omega: (f64, f64),
    i: usize,
    j: usize,
    out: &mut [f64],
) -> (usize, usize) {
    let h = geom.h();
    let ds = geom.ds();
    let (cx, cy) = geom.extent.center();
    let x = geom.extent.x0 + j as f64 * h - cx;
    let y = geom.extent.y0 + i as f64 * h - cy;
    let (a, b) = (h * omega.0, h * omega.1);
    let s_min = x * omega.0 + y * omega.1 + a.min(0.0) + b.min(0.0);
    let (p, q) = (a.abs(), b.abs());
    let lo = geom.s_lower();
    let bins = geom.bins();
    let first = (((s_min - lo) / ds).floor().max(0.0) as usize).min(bins - 1);
    let last = ((((s_min + p + q) - lo) / ds).ceil() as usize).clamp(first + 1, bins);
    let n = (last - first).min(out.len());
    let area = h * h;
    let mut prev = 0.0;
    for (k, w) in out.iter_mut().enumerate().take(n) {
        let edge = lo + (first + k + 1) as f64 * ds;
        let f = if k + 1 == n {
            1.0
        } else {
            sum_uniform_cdf(p, q, edge - s_min)
        };
        *w = ((f - prev) * area / ds).max(0.0);
        prev = f.max(prev);
    }
    (first, n)
}

/// Sinogram samples on `angles × bins`, angle-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    geometry: RadonGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geometry: RadonGeometry, values: Vec<f64>) -> Result<Self> {
        let n = geometry.angles * geometry.bins();
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} sinogram values for {} angles x {} bins",
                values.len(),
                geometry.angles,
                geometry.bins()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sinogram value".into()));
        }
        Ok(Sinogram { geometry, values })
    }

    pub fn zeros(geometry: RadonGeometry) -> Self {
        let n = geometry.angles * geometry.bins();
        Sinogram {
            geometry,
            values: vec![0.0; n],
        }
    }

    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slice(&self, p: usize) -> &[f64] {
        let s = self.geometry.bins();
        &self.values[p * s..(p + 1) * s]
    }

    /// The slice at angle `p` as a piecewise-constant function of `s`.
    pub fn slice_function(&self, p: usize) -> PwcFunction1D {
        PwcFunction1D::new(self.geometry.s_grid(), self.slice(p).to_vec())
            .expect("slice matches its grid")
    }

    /// `Σ_s value · Δs` at angle `p`.
    pub fn slice_mass(&self, p: usize) -> f64 {
        self.slice(p).iter().sum::<f64>() * self.geometry.ds()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Central differences along `s` (zero beyond the bin range).
    pub fn s_derivative(&self) -> Sinogram {
        let s = self.geometry.bins();
        let ds = self.geometry.ds();
        let mut out = vec![0.0; self.values.len()];
        for (row, dst) in self.values.chunks(s).zip(out.chunks_mut(s)) {
            for k in 0..s {
                let a = if k > 0 { row[k - 1] } else { 0.0 };
                let b = if k + 1 < s { row[k + 1] } else { 0.0 };
                dst[k] = (b - a) / (2.0 * ds);
            }
        }
        Sinogram {
            geometry: self.geometry,
            values: out,
        }
    }
}

/// Precomputed footprints of every pixel at every angle.
#[derive(Debug)]
pub struct RadonOperator {
    geometry: RadonGeometry,
    stride: usize,
    first: Vec<u32>,
    count: Vec<u8>,
    weights: Vec<f64>,
}

impl RadonOperator {
    pub fn new(geometry: RadonGeometry) -> Self {
        let d2 = geometry.d * geometry.d;
        let stride = geometry.stride();
        let per_angle: Vec<(Vec<u32>, Vec<u8>, Vec<f64>)> = (0..geometry.angles)
            .into_par_iter()
            .map(|p| {
                let omega = geometry.omega(p);
                let mut first = Vec::with_capacity(d2);
                let mut count = Vec::with_capacity(d2);
                let mut weights = vec![0.0; d2 * stride];
                for i in 0..geometry.d {
                    for j in 0..geometry.d {
                        let px = i * geometry.d + j;
                        let (f, n) = pixel_footprint(
                            &geometry,
                            omega,
                            i,
                            j,
                            &mut weights[px * stride..(px + 1) * stride],
                        );
                        first.push(f as u32);
                        count.push(n as u8);
                    }
                }
                (first, count, weights)
            })
            .collect();
        let mut first = Vec::with_capacity(d2 * geometry.angles);
        let mut count = Vec::with_capacity(d2 * geometry.angles);
        let mut weights = Vec::with_capacity(d2 * stride * geometry.angles);
        for (f, c, w) in per_angle {
            first.extend(f);
            count.extend(c);
            weights.extend(w);
        }
        RadonOperator {
            geometry,
            stride,
            first,
            count,
            weights,
        }
    }

    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    pub fn forward(&self, u: &Image2D) -> Result<Sinogram> {
        self.geometry.check_image(u)?;
        let s = self.geometry.bins();
        let d2 = self.geometry.d * self.geometry.d;
        let mut values = vec![0.0; self.geometry.angles * s];
        values.par_chunks_mut(s).enumerate().for_each(|(p, row)| {
            let base = p * d2;
            for (px, &v) in u.values.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let k = base + px;
                let f = self.first[k] as usize;
                let n = self.count[k] as usize;
                let w = &self.weights[k * self.stride..k * self.stride + n];
                for (dst, wt) in row[f..f + n].iter_mut().zip(w) {
                    *dst += v * wt;
                }
            }
        });
        Ok(Sinogram {
            geometry: self.geometry,
            values,
        })
    }

    pub fn adjoint(&self, g: &Sinogram) -> Result<Image2D> {
        if g.geometry != self.geometry {
            return Err(Error::GeometryMismatch(
                "sinogram geometry differs from the operator's".into(),
            ));
        }
        let d = self.geometry.d;
        let d2 = d * d;
        let s = self.geometry.bins();
        let mut values = vec![0.0; d2];
        values.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
            for (j, dst) in row.iter_mut().enumerate() {
                let px = i * d + j;
                let mut acc = 0.0;
                for p in 0..self.geometry.angles {
                    let k = p * d2 + px;
                    let f = self.first[k] as usize;
                    let n = self.count[k] as usize;
                    let w = &self.weights[k * self.stride..k * self.stride + n];
                    let slice = &g.values[p * s + f..p * s + f + n];
                    acc += w.iter().zip(slice).map(|(a, b)| a * b).sum::<f64>();
                }
                *dst = acc;
            }
        });
        Image2D::new(d, self.geometry.extent, values)
    }
}

/// Forward transform without caching the footprints.
pub fn radon_forward(u: &Image2D, geometry: &RadonGeometry) -> Result<Sinogram> {
    geometry.check_image(u)?;
    let s = geometry.bins();
    let d = geometry.d;
    let stride = geometry.stride();
    let mut values = vec![0.0; geometry.angles * s];
    values.par_chunks_mut(s).enumerate().for_each(|(p, row)| {
        let omega = geometry.omega(p);
        let mut w = vec![0.0; stride];
        for i in 0..d {
            for j in 0..d {
                let v = u.values[i * d + j];
                if v == 0.0 {
                    continue;
                }
                let (f, n) = pixel_footprint(geometry, omega, i, j, &mut w);
                for (dst, wt) in row[f..f + n].iter_mut().zip(&w) {
                    *dst += v * wt;
                }
            }
        }
    });
    Sinogram::new(*geometry, values)
}

pub fn radon_adjoint(g: &Sinogram, d: usize) -> Result<Image2D> {
    if g.geometry.d != d {
        return Err(Error::GeometryMismatch(format!(
            "sinogram built for {}x{} images, asked for {d}x{d}",
            g.geometry.d, g.geometry.d
        )));
    }
    RadonOperator::new(g.geometry).adjoint(g)
}

/// Stopping rule of the least-squares solver.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CgParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl CgParams {
    /// Relative normal residual `1e-8`, at most `10·D` iterations.
    pub fn default_for(d: usize) -> Self {
        CgParams {
            tol: 1e-8,
            max_iter: 10 * d,
        }
    }
}

/// Result of a least-squares inversion, including the last iterate when the
/// tolerance was not reached.
#[derive(Clone, Debug)]
pub struct Inversion {
    pub image: Image2D,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

impl Inversion {
    pub fn into_result(self) -> Result<Image2D> {
        if self.converged {
            Ok(self.image)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients on the normal equations `RᵀR u = Rᵀg`.
pub fn cgls(op: &RadonOperator, g: &Sinogram, params: CgParams) -> Result<Inversion> {
    let geom = op.geometry;
    let mut x = Image2D::zeros(geom.d, geom.extent);
    let mut r = g.clone();
    let s0 = op.adjoint(&r)?;
    let norm0 = s0.l2_norm();
    let mut history = vec![1.0];
    if norm0 == 0.0 {
        return Ok(Inversion {
            image: x,
            iterations: 0,
            residual: 0.0,
            converged: true,
            history: vec![0.0],
        });
    }
    let mut gamma = dot(&s0.values, &s0.values);
    let mut p = s0;
    let mut residual = 1.0;
    for it in 1..=params.max_iter {
        let q = op.forward(&p)?;
        let qq = dot(&q.values, &q.values);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.values.iter_mut().zip(&p.values).for_each(|(a, b)| *a += alpha * b);
        r.values.iter_mut().zip(&q.values).for_each(|(a, b)| *a -= alpha * b);
        let s = op.adjoint(&r)?;
        let gamma_new = dot(&s.values, &s.values);
        residual = gamma_new.sqrt() / norm0;
        history.push(residual);
        if residual <= params.tol {
            return Ok(Inversion {
                image: x,
                iterations: it,
                residual,
                converged: true,
                history,
            });
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p.values
            .iter_mut()
            .zip(&s.values)
            .for_each(|(a, b)| *a = b + beta * *a);
    }
    Ok(Inversion {
        image: x,
        iterations: history.len() - 1,
        residual,
        converged: false,
        history,
    })
}

pub fn radon_invert(g: &Sinogram, d: usize, params: CgParams) -> Result<Inversion> {
    if g.geometry.d != d {
        return Err(Error::GeometryMismatch(format!(
            "sinogram built for {}x{} images, asked for {d}x{d}",
            g.geometry.d, g.geometry.d
        )));
    }
    cgls(&RadonOperator::new(g.geometry), g, params)
}

/// `‖R[∂u/∂x_i] − ω_i ∂_s R[u]‖ / ‖ω_i ∂_s R[u]‖`, with central differences on both sides.
pub fn intertwine_residual(u: &Image2D, axis: usize, geometry: &RadonGeometry) -> Result<f64> {
    let lhs = radon_forward(&u.central_difference(axis)?, geometry)?;
    let ds = radon_forward(u, geometry)?.s_derivative();
    let bins = geometry.bins();
    let mut num = 0.0;
    let mut den = 0.0;
    for p in 0..geometry.angles {
        let (c, s) = geometry.omega(p);
        let w = if axis == 1 { c } else { s };
        for k in 0..bins {
            let rhs = w * ds.values[p * bins + k];
            let diff = lhs.values[p * bins + k] - rhs;
            num += diff * diff;
            den += rhs * rhs;
        }
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Slice-wise signed interpolation of two sinograms sharing a geometry.
pub fn interp_sinograms(g1: &Sinogram, g2: &Sinogram, lambda: f64) -> Result<Sinogram> {
    if g1.geometry != g2.geometry {
        return Err(Error::GeometryMismatch(
            "sinograms differ in geometry".into(),
        ));
    }
    let geom = g1.geometry;
    let grid = geom.s_grid();
    let bins = geom.bins();
    let rows: Vec<Result<Vec<f64>>> = (0..geom.angles)
        .into_par_iter()
        .map(|p| {
            let (a, b) = (g1.slice(p), g2.slice(p));
            if a.iter().all(|&v| v == 0.0) && b.iter().all(|&v| v == 0.0) {
                return Ok(vec![0.0; bins]);
            }
            let u = interp_signed(&g1.slice_function(p), &g2.slice_function(p), lambda)
                .and_then(|u| u.resample(&grid))
                .map_err(Error::at_angle(p))?;
            Ok(u.into_parts().1)
        })
        .collect();
    let mut values = Vec::with_capacity(geom.angles * bins);
    for r in rows {
        values.extend(r?);
    }
    Sinogram::new(geom, values)
}

/// Displacement interpolant of two images through their Radon transforms.
pub fn dinterp2d(
    u1: &Image2D,
    u2: &Image2D,
    lambda: f64,
    geometry: &RadonGeometry,
    params: CgParams,
) -> Result<Inversion> {
    let op = RadonOperator::new(*geometry);
    dinterp2d_with(&op, u1, u2, lambda, params)
}

/// [`dinterp2d`] with a prebuilt operator.
pub fn dinterp2d_with(
    op: &RadonOperator,
    u1: &Image2D,
    u2: &Image2D,
    lambda: f64,
    params: CgParams,
) -> Result<Inversion> {
    if u1.extent != u2.extent || u1.d != u2.d {
        return Err(Error::GeometryMismatch(
            "operands differ in size or extent".into(),
        ));
    }
    let g = interp_sinograms(&op.forward(u1)?, &op.forward(u2)?, lambda)?;
    cgls(op, &g, params)
}

/// Shared handle to an operator, for callers that reuse one geometry.
pub type SharedOperator = Arc<RadonOperator>;
