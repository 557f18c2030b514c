//! Snapshot matrices of sampled quantile curves and their transport modes.

use rayon::prelude::*;

use crate::dinterp1d::{split_signs, InterpWeights};
use crate::error::{Error, Result};
use crate::grid1d::{normalized_quantile, QuantileCurve};
use crate::radon::Sinogram;
use crate::transform::ComponentBundle;

/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 60;

/// `Q` interior sample levels `y_q = (q − 1/2) / Q`.
pub fn y_grid(q: usize) -> Vec<f64> {
    let n = q as f64;
    (1..=q).map(|k| (k as f64 - 0.5) / n).collect()
}

/// Left limits of `curve` at each level of `ys`.
pub fn sample_quantile(curve: &QuantileCurve, ys: &[f64]) -> Result<Vec<f64>> {
    ys.iter()
        .map(|&y| {
            if y > 0.0 && y < 1.0 {
                Ok(curve.left_limit(y))
            } else {
                Err(Error::OutOfRange(y))
            }
        })
        .collect()
}

/// Normalized differences of sampled quantile curves from a reference curve.
#[derive(Clone, Debug)]
pub struct SnapshotMatrix {
    columns: Vec<Vec<f64>>,
    y_grid: Vec<f64>,
    reference: QuantileCurve,
    kept: Vec<usize>,
}

impl SnapshotMatrix {
    pub fn rows(&self) -> usize {
        self.y_grid.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn y_grid(&self) -> &[f64] {
        &self.y_grid
    }

    pub fn reference(&self) -> &QuantileCurve {
        &self.reference
    }

    /// Indices (into the input curves) of the curves that produced a column.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }
}

/// Columns `(s(U_k†) − s(U_1†)) / ‖·‖` for `k ≥ 2`; zero differences are dropped.
pub fn build_snapshots(curves: &[QuantileCurve], ys: &[f64]) -> Result<SnapshotMatrix> {
    if curves.len() < 2 {
        return Err(Error::InvalidInput(
            "a snapshot matrix needs at least two curves".into(),
        ));
    }
    let reference = sample_quantile(&curves[0], ys)?;
    let mut columns = Vec::new();
    let mut kept = Vec::new();
    for (k, c) in curves.iter().enumerate().skip(1) {
        let mut col = sample_quantile(c, ys)?;
        for (v, r) in col.iter_mut().zip(&reference) {
            *v -= r;
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            log::warn!("snapshot {} equals the reference curve and is dropped", k + 1);
            continue;
        }
        col.iter_mut().for_each(|v| *v /= norm);
        columns.push(col);
        kept.push(k);
    }
    if columns.is_empty() {
        return Err(Error::AllIdentical);
    }
    if columns.len() > ys.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} columns exceed {} sample levels",
            columns.len(),
            ys.len()
        )));
    }
    Ok(SnapshotMatrix {
        columns,
        y_grid: ys.to_vec(),
        reference: curves[0].clone(),
        kept,
    })
}

/// Orthonormal left singular vectors and their singular values, largest first.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeBasis {
    pub modes: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub y_grid: Vec<f64>,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Singular values divided by the largest one.
    pub fn scaled_singular_values(&self) -> Vec<f64> {
        let s1 = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .map(|s| if s1 > 0.0 { s / s1 } else { 0.0 })
            .collect()
    }
}

pub fn svd(a: &SnapshotMatrix) -> Result<ModeBasis> {
    let mut basis = svd_columns(a.columns())?;
    basis.y_grid = a.y_grid.clone();
    Ok(basis)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Thin SVD of the matrix with the given columns by one-sided (Hestenes) Jacobi.
///
/// Column pairs are visited in fixed cyclic order; the sign of each mode is
/// chosen so its largest-magnitude entry is positive.
pub fn svd_columns(columns: &[Vec<f64>]) -> Result<ModeBasis> {
    let k = columns.len();
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    let q = columns[0].len();
    if columns.iter().any(|c| c.len() != q) {
        return Err(Error::ShapeMismatch("columns differ in length".into()));
    }
    if q < k {
        return Err(Error::ShapeMismatch(format!(
            "{k} columns exceed {q} rows"
        )));
    }
    let mut u: Vec<Vec<f64>> = columns.to_vec();
    let frob2: f64 = u.iter().map(|c| dot(c, c)).sum();

    let mut off = 0.0;
    let mut converged = frob2 == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        off = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                let alpha = dot(&u[i], &u[i]);
                let beta = dot(&u[j], &u[j]);
                let gamma = dot(&u[i], &u[j]);
                off += gamma * gamma;
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = u.split_at_mut(j);
                for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        off = off.sqrt();
        if !rotated || off <= 1e-15 * frob2 {
            converged = true;
        }
    }
    if !converged && off > 1e-12 * frob2 {
        return Err(Error::ConvergenceFailure {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = u
        .into_iter()
        .map(|c| {
            let s = dot(&c, &c).sqrt();
            (s, c)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let tiny = 1e-300_f64.max(f64::EPSILON * frob2.sqrt() * (q as f64));
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut singular_values = Vec::with_capacity(k);
    let mut filler = 0;
    for (s, c) in pairs {
        let mode = if s > tiny {
            c.iter().map(|v| v / s).collect()
        } else {
            next_orthogonal(&modes, q, &mut filler)
        };
        modes.push(mode);
        singular_values.push(if s > tiny { s } else { 0.0 });
    }
    for m in &mut modes {
        let lead = m
            .iter()
            .copied()
            .reduce(|a, b| if b.abs() > a.abs() { b } else { a })
            .unwrap_or(0.0);
        if lead < 0.0 {
            m.iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(ModeBasis {
        modes,
        singular_values,
        y_grid: Vec::new(),
    })
}

/// Unit vector orthogonal to `modes`, from Gram–Schmidt on successive unit vectors.
fn next_orthogonal(modes: &[Vec<f64>], q: usize, next: &mut usize) -> Vec<f64> {
    while *next < q {
        let mut v = vec![0.0; q];
        v[*next] = 1.0;
        *next += 1;
        for _ in 0..2 {
            for m in modes {
                let p = dot(&v, m);
                v.iter_mut().zip(m).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|a| *a /= n);
            return v;
        }
    }
    unreachable!("fewer modes than rows always leaves a free direction")
}

/// Pool-adjacent-violators projection onto non-decreasing sequences.
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        let mut sum = v;
        let mut count = 1;
        while let Some(&(s, c)) = blocks.last() {
            if s / c as f64 > sum / count as f64 {
                blocks.pop();
                sum += s;
                count += c;
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    blocks
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c))
        .collect()
}

/// Quantile curve of the barycentric combination, approximated in the span
/// of the leading `rank` modes.
///
/// The combination's samples, minus the reference samples, are projected onto
/// the modes; the projection is added back to the reference, made monotone and
/// turned into a curve through the sample nodes, with end nodes at the
/// combination's extreme positions.
pub fn reconstruct(
    basis: &ModeBasis,
    weights: &InterpWeights,
    curves: &[QuantileCurve],
    rank: usize,
) -> Result<QuantileCurve> {
    if rank > basis.len() {
        return Err(Error::RankTooLarge {
            rank,
            modes: basis.len(),
        });
    }
    if curves.len() != weights.len() || curves.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} curves but {} weights",
            curves.len(),
            weights.len()
        )));
    }
    let ys = &basis.y_grid;
    let reference = sample_quantile(&curves[0], ys)?;
    let mut target = vec![0.0; ys.len()];
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (c, &w) in curves.iter().zip(weights.lambdas()) {
        if w == 0.0 {
            continue;
        }
        let s = sample_quantile(c, ys)?;
        target.iter_mut().zip(&s).for_each(|(t, v)| *t += w * v);
        lo += w * c.x()[0];
        hi += w * c.x()[c.len() - 1];
    }
    let diff: Vec<f64> = target.iter().zip(&reference).map(|(t, r)| t - r).collect();
    let mut approx = reference;
    for m in basis.modes.iter().take(rank) {
        let nu = dot(&diff, m);
        approx.iter_mut().zip(m).for_each(|(a, v)| *a += nu * v);
    }
    let xs = isotonic(&approx);
    curve_through_samples(ys, &xs, lo, hi)
}

/// Polyline through `(y_q, x_q)` extended linearly to `y = 0` and `y = 1`,
/// with jumps to `lo` and `hi` when those lie beyond the extrapolated ends.
pub fn curve_through_samples(ys: &[f64], xs: &[f64], lo: f64, hi: f64) -> Result<QuantileCurve> {
    let n = ys.len();
    if n == 0 || xs.len() != n {
        return Err(Error::ShapeMismatch("samples and levels differ".into()));
    }
    let (left, right) = if n == 1 {
        (xs[0], xs[0])
    } else {
        let l = xs[0] - (xs[1] - xs[0]) * ys[0] / (ys[1] - ys[0]);
        let r = xs[n - 1] + (xs[n - 1] - xs[n - 2]) * (1.0 - ys[n - 1]) / (ys[n - 1] - ys[n - 2]);
        (l.min(xs[0]), r.max(xs[n - 1]))
    };
    let mut y = Vec::with_capacity(n + 4);
    let mut x = Vec::with_capacity(n + 4);
    let start = lo.min(left);
    y.push(0.0);
    x.push(start);
    if left > start {
        y.push(0.0);
        x.push(left);
    }
    y.extend_from_slice(ys);
    x.extend_from_slice(xs);
    let end = hi.max(right);
    y.push(1.0);
    x.push(right);
    if end > right {
        y.push(1.0);
        x.push(end);
    }
    QuantileCurve::new(y, x)
}

/// Mean and population standard deviation of each singular-value index over angles.
pub fn singular_stats(per_angle: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = per_angle.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if per_angle.iter().any(|v| v.len() != n) {
        return Err(Error::ShapeMismatch(
            "singular-value vectors differ in length".into(),
        ));
    }
    let p = per_angle.len() as f64;
    let means: Vec<f64> = (0..n)
        .map(|j| per_angle.iter().map(|v| v[j]).sum::<f64>() / p)
        .collect();
    let stds = (0..n)
        .map(|j| {
            let var = per_angle
                .iter()
                .map(|v| (v[j] - means[j]).powi(2))
                .sum::<f64>()
                / p;
            var.sqrt()
        })
        .collect();
    Ok((means, stds))
}

/// Singular values of the given snapshots after scaling each to unit Euclidean norm.
pub fn unit_column_singular_values(columns: &[Vec<f64>]) -> Result<Vec<f64>> {
    let scaled: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let n = dot(c, c).sqrt();
            if n > 0.0 {
                c.iter().map(|v| v / n).collect()
            } else {
                c.clone()
            }
        })
        .collect();
    Ok(svd_columns(&scaled)?.singular_values)
}

fn sinograms(bundle: &ComponentBundle) -> Result<Vec<&Sinogram>> {
    bundle
        .components()
        .iter()
        .map(|(name, f)| {
            f.as_sinogram().ok_or_else(|| {
                Error::ShapeMismatch(format!("component `{name}` is a {}, not a sinogram", f.kind()))
            })
        })
        .collect()
}

/// Singular values of the transport snapshots at every angle of a family of
/// sinogram bundles.
///
/// At angle `p`, each member contributes one column: the concatenated quantile
/// samples (on `ys`) of the positive and negative parts of every component
/// slice, i.e. its transport maps. A part enters only if it has mass in every
/// member.
pub fn angle_singular_values(bundles: &[ComponentBundle], ys: &[f64]) -> Result<Vec<Vec<f64>>> {
    if bundles.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let members: Vec<Vec<&Sinogram>> = bundles.iter().map(sinograms).collect::<Result<_>>()?;
    let names: Vec<&str> = bundles[0].names().collect();
    for b in &bundles[1..] {
        if !b.names().eq(names.iter().copied()) {
            return Err(Error::ShapeMismatch("bundles name different components".into()));
        }
    }
    let geometry = *members[0][0].geometry();
    if members.iter().flatten().any(|g| *g.geometry() != geometry) {
        return Err(Error::GeometryMismatch("sinograms differ in geometry".into()));
    }
    (0..geometry.angles)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut columns = vec![Vec::new(); members.len()];
            for c in 0..names.len() {
                let parts: Vec<_> = members.iter().map(|m| split_signs(&m[c].slice_function(p))).collect();
                for positive in [true, false] {
                    let present = parts
                        .iter()
                        .all(|s| if positive { s.has_plus() } else { s.has_minus() });
                    if !present {
                        continue;
                    }
                    for (col, s) in columns.iter_mut().zip(&parts) {
                        let part = if positive { &s.plus } else { &s.minus };
                        let (q, _) = normalized_quantile(part).map_err(Error::at_angle(p))?;
                        col.extend(sample_quantile(&q, ys)?);
                    }
                }
            }
            if columns[0].is_empty() {
                return Ok(vec![0.0; members.len()]);
            }
            svd_columns(&columns)
                .map(|b| b.singular_values)
                .map_err(Error::at_angle(p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_identity_and_jump() {
        let id = QuantileCurve::uniform(0.0, 1.0).unwrap();
        assert_eq!(
            sample_quantile(&id, &[0.25, 0.5, 0.75]).unwrap(),
            vec![0.25, 0.5, 0.75]
        );
        let q = QuantileCurve::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.3, 0.5, 1.0]).unwrap();
        assert_eq!(sample_quantile(&q, &[0.5]).unwrap(), vec![0.3]);
        assert!(matches!(
            sample_quantile(&q, &[0.0]),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn interior_levels() {
        assert_eq!(y_grid(4), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn identical_curves() {
        let id = QuantileCurve::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            build_snapshots(&[id.clone(), id], &y_grid(8)),
            Err(Error::AllIdentical)
        ));
    }

    #[test]
    fn rank_one_columns() {
        let cols = vec![vec![1.0, 2.0, 3.0]; 3];
        let b = svd_columns(&cols).unwrap();
        assert!(b.singular_values[1] / b.singular_values[0] <= 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&b.modes[i], &b.modes[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let cols = vec![vec![-3.0, 1.0, 0.0], vec![0.0, 0.0, -1.0]];
        let b = svd_columns(&cols).unwrap();
        for m in &b.modes {
            let lead = m.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn pava() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic(&[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn stats() {
        let (m, s) = singular_stats(&[vec![1.0, 0.5]]).unwrap();
        assert_eq!((m, s), (vec![1.0, 0.5], vec![0.0, 0.0]));
        let (m, s) = singular_stats(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!((m[0], s[0]), (2.0, 1.0));
        assert!(matches!(singular_stats(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn rank_too_large() {
        let ys = y_grid(8);
        let a = QuantileCurve::uniform(0.0, 1.0).unwrap();
        let b = QuantileCurve::uniform(0.5, 1.5).unwrap();
        let s = build_snapshots(&[a.clone(), b.clone()], &ys).unwrap();
        let basis = svd(&s).unwrap();
        let w = InterpWeights::pair(0.3).unwrap();
        assert!(matches!(
            reconstruct(&basis, &w, &[a.clone(), b.clone()], 2),
            Err(Error::RankTooLarge { .. })
        ));
        let r = reconstruct(&basis, &w, &[a, b], 1).unwrap();
        for (y, x) in ys.iter().zip(sample_quantile(&r, &ys).unwrap()) {
            assert!((x - (y + 0.15)).abs() < 1e-14);
        }
    }
}
