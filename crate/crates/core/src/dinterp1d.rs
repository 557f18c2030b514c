//! Displacement interpolation of one-dimensional densities.
//!
//! The interpolant of nonnegative operands is obtained by averaging their
//! normalized quantile curves, reflecting the average back into a CDF,
//! differentiating, and rescaling to the linearly interpolated mass. Signed
//! operands are split into positive and negative parts which are interpolated
//! separately; a part that vanishes in one operand is paired with the
//! opposite-sign part of that operand.

use crate::error::{Error, Result};
use crate::grid1d::{
    combine, density_from_cdf, normalized_quantile, quantile_to_cdf, Grid1D, PwcFunction1D,
    QuantileCurve,
};

/// Parts whose mass is at most this fraction of the operand's total variation are dropped.
pub const NEGLIGIBLE_PART: f64 = 1e-12;

/// Slope jumps below this fraction of the largest slope are treated as roundoff.
pub const SLOPE_JUMP_NOISE: f64 = 1e-9;

/// Positive and negative parts of a signed density, both stored nonnegative.
#[derive(Clone, Debug)]
pub struct SignedParts {
    pub plus: PwcFunction1D,
    pub minus: PwcFunction1D,
    pub mass_plus: f64,
    pub mass_minus: f64,
}

impl SignedParts {
    pub fn total_variation(&self) -> f64 {
        self.mass_plus + self.mass_minus
    }

    pub fn has_plus(&self) -> bool {
        self.mass_plus > NEGLIGIBLE_PART * self.total_variation()
    }

    pub fn has_minus(&self) -> bool {
        self.mass_minus > NEGLIGIBLE_PART * self.total_variation()
    }
}

pub fn split_signs(u: &PwcFunction1D) -> SignedParts {
    let plus: Vec<f64> = u.values().iter().map(|&v| v.max(0.0)).collect();
    let minus: Vec<f64> = u.values().iter().map(|&v| (-v).max(0.0)).collect();
    let plus = PwcFunction1D::new(u.grid().clone(), plus).expect("finite values stay finite");
    let minus = PwcFunction1D::new(u.grid().clone(), minus).expect("finite values stay finite");
    let mass_plus = plus.mass();
    let mass_minus = minus.mass();
    SignedParts {
        plus,
        minus,
        mass_plus,
        mass_minus,
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaRange(lambda));
    }
    Ok(())
}

/// Rescaling applied to the opposite-sign pairing when `u2`'s negative part vanishes.
///
/// `β = ((1−λ)M1⁻ + λM2⁻) / ((1−λ)M1⁻ + λM2⁺)`.
pub fn beta_coefficient(_m1p: f64, m1m: f64, m2p: f64, m2m: f64, lambda: f64) -> Result<f64> {
    let den = (1.0 - lambda) * m1m + lambda * m2p;
    if !(den > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(((1.0 - lambda) * m1m + lambda * m2m) / den)
}

/// Displacement interpolation of nonnegative densities with arbitrary positive masses.
pub fn interp_nonneg(u1: &PwcFunction1D, u2: &PwcFunction1D, lambda: f64) -> Result<PwcFunction1D> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(u1.clone());
    }
    if lambda == 1.0 {
        return Ok(u2.clone());
    }
    interp_quantiles(&[u1, u2], &[1.0 - lambda, lambda])
}

/// Weighted combination of normalized quantile curves, rescaled to `Σ w_n M_n`.
///
/// Unlike the public interpolation entry points this never short-circuits at
/// simplex vertices.
pub fn interp_quantiles(us: &[&PwcFunction1D], weights: &[f64]) -> Result<PwcFunction1D> {
    if us.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} operands but {} weights",
            us.len(),
            weights.len()
        )));
    }
    let mut curves = Vec::with_capacity(us.len());
    let mut mass = 0.0;
    for (u, w) in us.iter().zip(weights) {
        let (q, m) = normalized_quantile(u)?;
        curves.push(q);
        mass += w * m;
    }
    let q = combine(&curves, weights)?;
    density_from_cdf(&quantile_to_cdf(&q, mass)?)
}

/// Quantile curve of the interpolant, before reflection (used for invariant checks).
pub fn interp_quantile_curve(
    u1: &PwcFunction1D,
    u2: &PwcFunction1D,
    lambda: f64,
) -> Result<QuantileCurve> {
    check_lambda(lambda)?;
    let (q1, _) = normalized_quantile(u1)?;
    let (q2, _) = normalized_quantile(u2)?;
    combine(&[q1, q2], &[1.0 - lambda, lambda])
}

/// Interpolated part of sign `σ` (positive when `positive`), or `None` when
/// that part is missing from both operands.
fn interp_part(
    a: &SignedParts,
    b: &SignedParts,
    positive: bool,
    lambda: f64,
) -> Result<Option<PwcFunction1D>> {
    let part = |p: &SignedParts, same: bool| -> PwcFunction1D {
        if same == positive {
            p.plus.clone()
        } else {
            p.minus.clone()
        }
    };
    let (a_has, b_has) = if positive {
        (a.has_plus(), b.has_plus())
    } else {
        (a.has_minus(), b.has_minus())
    };
    let (ap, am) = (a.mass_plus, a.mass_minus);
    let (bp, bm) = (b.mass_plus, b.mass_minus);
    let (ua, ub, beta) = match (a_has, b_has) {
        (false, false) => return Ok(None),
        (true, true) => (part(a, true), part(b, true), 1.0),
        (true, false) => {
            let beta = if positive {
                beta_coefficient(am, ap, bm, bp, lambda)?
            } else {
                beta_coefficient(ap, am, bp, bm, lambda)?
            };
            (part(a, true), part(b, false), beta)
        }
        (false, true) => {
            let beta = if positive {
                beta_coefficient(bm, bp, am, ap, 1.0 - lambda)?
            } else {
                beta_coefficient(bp, bm, ap, am, 1.0 - lambda)?
            };
            (part(a, false), part(b, true), beta)
        }
    };
    let u = interp_nonneg(&ua, &ub, lambda)?;
    Ok(Some(if beta == 1.0 { u } else { u.scaled(beta) }))
}

/// Displacement interpolation of signed densities.
pub fn interp_signed(u1: &PwcFunction1D, u2: &PwcFunction1D, lambda: f64) -> Result<PwcFunction1D> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(u1.clone());
    }
    if lambda == 1.0 {
        return Ok(u2.clone());
    }
    let s1 = split_signs(u1);
    let s2 = split_signs(u2);
    if s1.total_variation() == 0.0 {
        return Err(Error::BothPartsZero { operand: 1 });
    }
    if s2.total_variation() == 0.0 {
        return Err(Error::BothPartsZero { operand: 2 });
    }
    let plus = interp_part(&s1, &s2, true, lambda)?;
    let minus = interp_part(&s1, &s2, false, lambda)?;
    match (plus, minus) {
        (Some(p), Some(m)) => PwcFunction1D::linear_combination(&[(1.0, &p), (-1.0, &m)]),
        (Some(p), None) => Ok(p),
        (None, Some(m)) => Ok(m.scaled(-1.0)),
        (None, None) => unreachable!("a nonzero operand has a non-negligible part"),
    }
}

/// Barycentric coordinates of a parameter point, optionally with the nodes they refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpWeights {
    lambdas: Vec<f64>,
    nodes: Option<Vec<Vec<f64>>>,
}

impl InterpWeights {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::EmptyInput);
        }
        let sum: f64 = lambdas.iter().sum();
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightSum { sum });
        }
        Ok(InterpWeights {
            lambdas,
            nodes: None,
        })
    }

    /// Weights `(1 − λ, λ)` of a two-function interpolation.
    pub fn pair(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        InterpWeights::new(vec![1.0 - lambda, lambda])
    }

    /// Barycentric weights of `alpha` over all `nodes`, nonzero only on the vertices
    /// of the first simplex (in the given order) that contains `alpha`.
    pub fn from_tessellation(
        alpha: &[f64],
        nodes: &[Vec<f64>],
        simplices: &[Vec<usize>],
    ) -> Result<Self> {
        let d = alpha.len();
        if d == 0 || nodes.iter().any(|n| n.len() != d) {
            return Err(Error::ShapeMismatch(
                "parameter point and nodes must share a positive dimension".into(),
            ));
        }
        for s in simplices {
            if s.len() != d + 1 || s.iter().any(|&k| k >= nodes.len()) {
                return Err(Error::ShapeMismatch(format!(
                    "simplex {s:?} must list {} valid node indices",
                    d + 1
                )));
            }
            let Some(local) = barycentric(alpha, s.iter().map(|&k| nodes[k].as_slice())) else {
                continue;
            };
            if local.iter().all(|&l| l >= -1e-12) {
                let mut lambdas = vec![0.0; nodes.len()];
                let clipped: Vec<f64> = local.iter().map(|l| l.max(0.0)).collect();
                let total: f64 = clipped.iter().sum();
                for (&k, l) in s.iter().zip(clipped) {
                    lambdas[k] = l / total;
                }
                return Ok(InterpWeights {
                    lambdas,
                    nodes: Some(nodes.to_vec()),
                });
            }
        }
        Err(Error::OutOfDomain(format!(
            "parameter point {alpha:?} lies in no simplex of the tessellation"
        )))
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn nodes(&self) -> Option<&[Vec<f64>]> {
        self.nodes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Index of the vertex carrying all weight, if any.
    pub fn vertex(&self) -> Option<usize> {
        let k = self.lambdas.iter().position(|&l| l == 1.0)?;
        self.lambdas
            .iter()
            .enumerate()
            .all(|(i, &l)| i == k || l == 0.0)
            .then_some(k)
    }
}

/// Barycentric coordinates of `p` in the simplex with the given vertices, or
/// `None` if the simplex is degenerate.
fn barycentric<'a>(p: &[f64], vertices: impl Iterator<Item = &'a [f64]>) -> Option<Vec<f64>> {
    let vs: Vec<&[f64]> = vertices.collect();
    let d = p.len();
    // columns v_k - v_0, right-hand side p - v_0
    let mut a = vec![vec![0.0; d + 1]; d];
    for (r, row) in a.iter_mut().enumerate() {
        for c in 0..d {
            row[c] = vs[c + 1][r] - vs[0][r];
        }
        row[d] = p[r] - vs[0][r];
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let rest: Vec<f64> = (0..d).map(|r| a[r][d] / a[r][r]).collect();
    let first = 1.0 - rest.iter().sum::<f64>();
    Some(std::iter::once(first).chain(rest).collect())
}

fn check_weights(us: &[PwcFunction1D], w: &InterpWeights) -> Result<()> {
    if us.is_empty() {
        return Err(Error::EmptyInput);
    }
    if us.len() != w.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} operands but {} weights",
            us.len(),
            w.len()
        )));
    }
    Ok(())
}

/// Barycentric displacement interpolation of nonnegative densities.
pub fn interp_bary(us: &[PwcFunction1D], w: &InterpWeights) -> Result<PwcFunction1D> {
    check_weights(us, w)?;
    if let Some(k) = w.vertex() {
        return Ok(us[k].clone());
    }
    let refs: Vec<&PwcFunction1D> = us.iter().collect();
    interp_quantiles(&refs, w.lambdas())
}

/// Barycentric interpolation of signed densities.
///
/// Two operands use the pairwise signed rule. With more operands the parts are
/// interpolated separately, which requires every operand to carry both parts,
/// or all of them to share one sign.
pub fn interp_bary_signed(us: &[PwcFunction1D], w: &InterpWeights) -> Result<PwcFunction1D> {
    check_weights(us, w)?;
    if let Some(k) = w.vertex() {
        return Ok(us[k].clone());
    }
    if us.len() == 2 {
        return interp_signed(&us[0], &us[1], w.lambdas()[1]);
    }
    let parts: Vec<SignedParts> = us.iter().map(split_signs).collect();
    if let Some(k) = parts.iter().position(|p| p.total_variation() == 0.0) {
        return Err(Error::BothPartsZero { operand: k + 1 });
    }
    let all_plus = parts.iter().all(SignedParts::has_plus);
    let all_minus = parts.iter().all(SignedParts::has_minus);
    let no_plus = parts.iter().all(|p| !p.has_plus());
    let no_minus = parts.iter().all(|p| !p.has_minus());
    let pluses: Vec<PwcFunction1D> = parts.iter().map(|p| p.plus.clone()).collect();
    let minuses: Vec<PwcFunction1D> = parts.iter().map(|p| p.minus.clone()).collect();
    if no_minus {
        interp_bary(&pluses, w)
    } else if no_plus {
        Ok(interp_bary(&minuses, w)?.scaled(-1.0))
    } else if all_plus && all_minus {
        let p = interp_bary(&pluses, w)?;
        let m = interp_bary(&minuses, w)?;
        PwcFunction1D::linear_combination(&[(1.0, &p), (-1.0, &m)])
    } else {
        let pattern: Vec<String> = parts
            .iter()
            .map(|p| match (p.has_plus(), p.has_minus()) {
                (true, true) => "+-",
                (true, false) => "+",
                _ => "-",
            })
            .map(String::from)
            .collect();
        Err(Error::UnsupportedSignPattern(format!(
            "operand signs [{}] mix one-signed and two-signed functions",
            pattern.join(", ")
        )))
    }
}

/// Point masses of a second derivative: locations and nonnegative weights.
#[derive(Clone, Debug, Default, PartialEq)]
struct Atoms {
    x: Vec<f64>,
    m: Vec<f64>,
}

impl Atoms {
    fn mass(&self) -> f64 {
        self.m.iter().sum()
    }

    fn push(&mut self, x: f64, m: f64) {
        if m > 0.0 {
            self.x.push(x);
            self.m.push(m);
        }
    }

    /// Step-function quantile curve of the normalized atoms.
    fn quantile(&self) -> Result<QuantileCurve> {
        let total = self.mass();
        let n = self.x.len();
        let mut y = vec![0.0];
        let mut x = vec![self.x[0]];
        let mut acc = 0.0;
        for k in 0..n {
            acc += self.m[k];
            let level = if k == n - 1 { 1.0 } else { acc / total };
            y.push(level);
            x.push(self.x[k]);
            if k + 1 < n {
                y.push(level);
                x.push(self.x[k + 1]);
            }
        }
        QuantileCurve::new(y, x)
    }

    fn from_quantile(q: &QuantileCurve, mass: f64) -> Atoms {
        let mut atoms = Atoms::default();
        let (y, x) = (q.y(), q.x());
        for i in 1..y.len() {
            let dy = y[i] - y[i - 1];
            if dy > 0.0 {
                atoms.push(0.5 * (x[i] + x[i - 1]), dy * mass);
            }
        }
        atoms
    }
}

/// Four sign components of the second derivative, in the order
/// `d+d+`, `d+d−`, `d−d+`, `d−d−`.
fn derivative_atoms(p: &PwcFunction1D) -> [Atoms; 4] {
    let grid = p.grid();
    let edges = grid.edges();
    let n = grid.cells();
    let mut nodal = vec![0.0; n + 1];
    for j in 0..n {
        nodal[j + 1] = 2.0 * p.values()[j] - nodal[j];
    }
    let slopes: Vec<f64> = (0..n).map(|j| (nodal[j + 1] - nodal[j]) / grid.width(j)).collect();
    let smax = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let noise = SLOPE_JUMP_NOISE * smax;

    // Jumps are measured from the last retained slope level so that the
    // retained atoms telescope back to a zero slope outside the support.
    let mut out: [Atoms; 4] = Default::default();
    let (mut prev_plus, mut prev_minus) = (0.0, 0.0);
    for (j, &x) in edges.iter().enumerate() {
        let s = slopes.get(j).copied().unwrap_or(0.0);
        let s = if s.abs() > noise { s } else { 0.0 };
        let (sp, sm) = (s.max(0.0), s.min(0.0));
        let jp = sp - prev_plus;
        let jm = sm - prev_minus;
        if jp.abs() > noise || (sp == 0.0 && prev_plus != 0.0) {
            if jp > 0.0 {
                out[0].push(x, jp);
            } else {
                out[1].push(x, -jp);
            }
            prev_plus = sp;
        }
        if jm.abs() > noise || (sm == 0.0 && prev_minus != 0.0) {
            if jm > 0.0 {
                out[2].push(x, jm);
            } else {
                out[3].push(x, -jm);
            }
            prev_minus = sm;
        }
    }
    out
}

const COMPONENT_NAMES: [&str; 4] = ["d+d+", "d+d-", "d-d+", "d-d-"];

/// Interpolation of continuous piecewise-linear signals through the sign
/// components of their second derivatives.
///
/// The signal is assumed to vanish at the left edge of its grid; its nodal
/// values are recovered from the cell averages, the slope is split into
/// positive and negative parts, and the jumps of each part are split by sign
/// into four nonnegative point-mass measures. Each measure is interpolated
/// through its quantile curve and the result is integrated twice, exactly, on
/// the grid of `p1`.
pub fn interp_derivative_split(
    p1: &PwcFunction1D,
    p2: &PwcFunction1D,
    lambda: f64,
) -> Result<PwcFunction1D> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(p1.clone());
    }
    if lambda == 1.0 {
        return Ok(p2.clone());
    }
    let a1 = derivative_atoms(p1);
    let a2 = derivative_atoms(p2);
    let mut atoms: Vec<(f64, Atoms)> = Vec::new();
    for (k, sign) in [1.0, -1.0, 1.0, -1.0].into_iter().enumerate() {
        let (c1, c2) = (&a1[k], &a2[k]);
        match (c1.x.is_empty(), c2.x.is_empty()) {
            (true, true) => continue,
            (false, false) => {}
            _ => {
                return Err(Error::MismatchedComponents {
                    component: COMPONENT_NAMES[k].to_string(),
                })
            }
        }
        let mass = (1.0 - lambda) * c1.mass() + lambda * c2.mass();
        let q = combine(&[c1.quantile()?, c2.quantile()?], &[1.0 - lambda, lambda])
            .map_err(Error::at_component(COMPONENT_NAMES[k]))?;
        atoms.push((sign, Atoms::from_quantile(&q, mass)));
    }
    Ok(double_integral(p1.grid(), &atoms))
}

/// Exact cell averages of `Σ σ m (x − x_a)⁺`.
fn double_integral(grid: &Grid1D, atoms: &[(f64, Atoms)]) -> PwcFunction1D {
    let edges = grid.edges();
    let values = edges
        .windows(2)
        .map(|e| {
            let (a, b) = (e[0], e[1]);
            let mut acc = 0.0;
            for (sign, set) in atoms {
                for (&xa, &m) in set.x.iter().zip(&set.m) {
                    let avg = if xa <= a {
                        0.5 * (a + b) - xa
                    } else if xa >= b {
                        0.0
                    } else {
                        (b - xa) * (b - xa) / (2.0 * (b - a))
                    };
                    acc += sign * m * avg;
                }
            }
            acc
        })
        .collect();
    PwcFunction1D::new(grid.clone(), values).expect("finite atoms give finite averages")
}
