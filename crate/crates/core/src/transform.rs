//! Interpolation conjugated by invertible transforms: `I_T = T⁻¹ I_⊗ T`.
//!
//! A [`TransformChain`] maps a field to a [`ComponentBundle`] of named fields.
//! Component names are paths: the input is `u`, and every stage appends one
//! segment per output (`u/plus`, `u/Re-oo/R`, ...). Inversion walks the same
//! tree from the leaves back to the root.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dinterp1d::{interp_signed, split_signs};
use crate::error::{Error, Result};
use crate::grid1d::{Grid1D, PwcFunction1D};
use crate::radon::{
    cgls, interp_sinograms, CgParams, Extent, Image2D, RadonGeometry, RadonOperator, Sinogram,
};

/// Names of the Fourier sub-index components, real parts first.
pub const FOURIER_COMPONENTS: [&str; 8] = [
    "Re-oo", "Re-eo", "Re-oe", "Re-ee", "Im-oo", "Im-eo", "Im-oe", "Im-ee",
];

/// A field a transform stage can act on.
#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Line(PwcFunction1D),
    Image(Image2D),
    Sinogram(Sinogram),
}

impl Field {
    pub fn kind(&self) -> &'static str {
        match self {
            Field::Line(_) => "line",
            Field::Image(_) => "image",
            Field::Sinogram(_) => "sinogram",
        }
    }

    pub fn as_line(&self) -> Option<&PwcFunction1D> {
        match self {
            Field::Line(u) => Some(u),
            _ => None,
        }
    }

    pub fn as_image(&self) -> Option<&Image2D> {
        match self {
            Field::Image(u) => Some(u),
            _ => None,
        }
    }

    pub fn as_sinogram(&self) -> Option<&Sinogram> {
        match self {
            Field::Sinogram(u) => Some(u),
            _ => None,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Field::Line(u) => u.values(),
            Field::Image(u) => u.values(),
            Field::Sinogram(u) => u.values(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(|&v| v == 0.0)
    }

    /// Shape description used in manifests and error messages.
    pub fn shape(&self) -> Vec<usize> {
        match self {
            Field::Line(u) => vec![u.grid().cells()],
            Field::Image(u) => vec![u.d(), u.d()],
            Field::Sinogram(u) => vec![u.geometry().angles, u.geometry().bins()],
        }
    }
}

/// Named components produced by a transform chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComponentBundle {
    components: Vec<(String, Field)>,
}

impl ComponentBundle {
    pub fn new(components: Vec<(String, Field)>) -> Result<Self> {
        let mut names: Vec<&str> = components.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "duplicate component name `{}`",
                w[0]
            )));
        }
        Ok(ComponentBundle { components })
    }

    pub fn components(&self) -> &[(String, Field)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Field> {
        self.components
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
    }
}

/// Settings of a Radon stage; unset values take the geometry defaults.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadonConfig {
    pub angles: Option<usize>,
    pub oversample: f64,
    pub cg: Option<CgParams>,
}

impl Default for RadonConfig {
    fn default() -> Self {
        RadonConfig {
            angles: None,
            oversample: 2.0,
            cg: None,
        }
    }
}

impl RadonConfig {
    pub fn geometry(&self, u: &Image2D) -> Result<RadonGeometry> {
        RadonGeometry::new(
            u.d(),
            u.extent(),
            self.angles.unwrap_or(4 * u.d()),
            self.oversample,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage {
    /// `u ↦ [max(u, 0), max(−u, 0)]`.
    SignSplit,
    /// Backward differences of a line divided by cell widths.
    Derivative,
    Radon(RadonConfig),
    /// Unitary 2D DFT restricted to the eight parity classes of its indices.
    FourierPermute,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::SignSplit => "sign-split",
            Stage::Derivative => "derivative",
            Stage::Radon(_) => "radon",
            Stage::FourierPermute => "fourier-permute",
        }
    }

    fn children(&self) -> &'static [&'static str] {
        match self {
            Stage::SignSplit => &["plus", "minus"],
            Stage::Derivative => &["d"],
            Stage::Radon(_) => &["R"],
            Stage::FourierPermute => &FOURIER_COMPONENTS,
        }
    }
}

type GeometryKey = (usize, [u64; 4], usize, u64);

fn geometry_key(g: &RadonGeometry) -> GeometryKey {
    let e = g.extent;
    (
        g.d,
        [e.x0.to_bits(), e.x1.to_bits(), e.y0.to_bits(), e.y1.to_bits()],
        g.angles,
        g.oversample.to_bits(),
    )
}

/// Iteration count and final residual of one Radon-stage inversion.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct InversionReport {
    pub component: String,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Ordered stages applied to a field; Radon operators are built once per geometry.
#[derive(Debug, Default)]
pub struct TransformChain {
    stages: Vec<Stage>,
    operators: Mutex<HashMap<GeometryKey, Arc<RadonOperator>>>,
}

impl Clone for TransformChain {
    fn clone(&self) -> Self {
        TransformChain::new(self.stages.clone())
    }
}

impl TransformChain {
    pub fn new(stages: Vec<Stage>) -> Self {
        TransformChain {
            stages,
            operators: Mutex::new(HashMap::new()),
        }
    }

    pub fn identity() -> Self {
        TransformChain::new(Vec::new())
    }

    /// Fourier permutation followed by a Radon transform of each component.
    pub fn radon_fourier(config: RadonConfig) -> Self {
        TransformChain::new(vec![Stage::FourierPermute, Stage::Radon(config)])
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn describe(&self) -> String {
        if self.stages.is_empty() {
            return "identity".into();
        }
        self.stages
            .iter()
            .map(Stage::name)
            .collect::<Vec<_>>()
            .join(" -> ")
    }

    /// Cached operator for `geometry`.
    pub fn operator(&self, geometry: &RadonGeometry) -> Arc<RadonOperator> {
        let key = geometry_key(geometry);
        let mut cache = self.operators.lock().expect("operator cache poisoned");
        cache
            .entry(key)
            .or_insert_with(|| Arc::new(RadonOperator::new(*geometry)))
            .clone()
    }

    pub fn apply(&self, u: &Field) -> Result<ComponentBundle> {
        let mut current = vec![("u".to_string(), u.clone())];
        for stage in &self.stages {
            let mut next = Vec::with_capacity(current.len() * stage.children().len());
            for (name, field) in current {
                let parts = self
                    .apply_stage(stage, &field)
                    .map_err(Error::at_component(&name))?;
                for (child, f) in stage.children().iter().zip(parts) {
                    next.push((format!("{name}/{child}"), f));
                }
            }
            current = next;
        }
        ComponentBundle::new(current)
    }

    fn apply_stage(&self, stage: &Stage, field: &Field) -> Result<Vec<Field>> {
        match (stage, field) {
            (Stage::SignSplit, Field::Line(u)) => {
                let s = split_signs(u);
                Ok(vec![Field::Line(s.plus), Field::Line(s.minus)])
            }
            (Stage::SignSplit, Field::Image(u)) => {
                let (p, m) = split_values(u.values());
                Ok(vec![
                    Field::Image(Image2D::new(u.d(), u.extent(), p)?),
                    Field::Image(Image2D::new(u.d(), u.extent(), m)?),
                ])
            }
            (Stage::SignSplit, Field::Sinogram(g)) => {
                let (p, m) = split_values(g.values());
                Ok(vec![
                    Field::Sinogram(Sinogram::new(*g.geometry(), p)?),
                    Field::Sinogram(Sinogram::new(*g.geometry(), m)?),
                ])
            }
            (Stage::Derivative, Field::Line(u)) => Ok(vec![Field::Line(derivative(u))]),
            (Stage::Radon(cfg), Field::Image(u)) => {
                let op = self.operator(&cfg.geometry(u)?);
                Ok(vec![Field::Sinogram(op.forward(u)?)])
            }
            (Stage::FourierPermute, Field::Image(u)) => {
                Ok(fourier_permute(u)?.into_iter().map(Field::Image).collect())
            }
            (stage, field) => Err(Error::ShapeMismatch(format!(
                "stage `{}` cannot act on a {}",
                stage.name(),
                field.kind()
            ))),
        }
    }

    pub fn invert(&self, b: &ComponentBundle) -> Result<Field> {
        Ok(self.invert_with_report(b)?.0)
    }

    /// Inverse together with the diagnostics of every Radon inversion.
    pub fn invert_with_report(&self, b: &ComponentBundle) -> Result<(Field, Vec<InversionReport>)> {
        let lookup: HashMap<&str, &Field> = b.components.iter().map(|(n, f)| (n.as_str(), f)).collect();
        let reports = Mutex::new(Vec::new());
        let field = self.invert_node(0, "u", &lookup, &reports)?;
        let mut reports = reports.into_inner().expect("report lock poisoned");
        reports.sort_by(|a: &InversionReport, b| a.component.cmp(&b.component));
        Ok((field, reports))
    }

    fn invert_node(
        &self,
        depth: usize,
        name: &str,
        lookup: &HashMap<&str, &Field>,
        reports: &Mutex<Vec<InversionReport>>,
    ) -> Result<Field> {
        let Some(stage) = self.stages.get(depth) else {
            return lookup
                .get(name)
                .map(|f| (*f).clone())
                .ok_or_else(|| Error::ShapeMismatch(format!("bundle lacks component `{name}`")));
        };
        let children: Vec<Field> = stage
            .children()
            .par_iter()
            .map(|c| self.invert_node(depth + 1, &format!("{name}/{c}"), lookup, reports))
            .collect::<Result<_>>()?;
        self.invert_stage(stage, name, children, reports)
            .map_err(Error::at_component(name))
    }

    fn invert_stage(
        &self,
        stage: &Stage,
        name: &str,
        children: Vec<Field>,
        reports: &Mutex<Vec<InversionReport>>,
    ) -> Result<Field> {
        match stage {
            Stage::SignSplit => match (&children[0], &children[1]) {
                (Field::Line(p), Field::Line(m)) => {
                    if p.grid() == m.grid() {
                        let v = p.values().iter().zip(m.values()).map(|(a, b)| a - b).collect();
                        Ok(Field::Line(PwcFunction1D::new(p.grid().clone(), v)?))
                    } else {
                        Ok(Field::Line(PwcFunction1D::linear_combination(&[
                            (1.0, p),
                            (-1.0, m),
                        ])?))
                    }
                }
                (Field::Image(p), Field::Image(m)) => {
                    let v = p.values().iter().zip(m.values()).map(|(a, b)| a - b).collect();
                    Ok(Field::Image(Image2D::new(p.d(), p.extent(), v)?))
                }
                (Field::Sinogram(p), Field::Sinogram(m)) => {
                    let v = p.values().iter().zip(m.values()).map(|(a, b)| a - b).collect();
                    Ok(Field::Sinogram(Sinogram::new(*p.geometry(), v)?))
                }
                _ => Err(Error::ShapeMismatch(
                    "sign-split parts differ in kind".into(),
                )),
            },
            Stage::Derivative => match &children[0] {
                Field::Line(d) => Ok(Field::Line(antiderivative(d))),
                other => Err(Error::ShapeMismatch(format!(
                    "derivative stage cannot invert a {}",
                    other.kind()
                ))),
            },
            Stage::Radon(cfg) => match &children[0] {
                Field::Sinogram(g) => {
                    let geom = g.geometry();
                    let op = self.operator(geom);
                    let params = cfg.cg.unwrap_or_else(|| CgParams::default_for(geom.d));
                    let inv = cgls(&op, g, params)?;
                    if !inv.converged {
                        log::warn!(
                            "component `{name}`: inversion stopped after {} iterations at relative residual {:e}",
                            inv.iterations,
                            inv.residual
                        );
                    }
                    reports.lock().expect("report lock poisoned").push(InversionReport {
                        component: name.to_string(),
                        iterations: inv.iterations,
                        residual: inv.residual,
                        converged: inv.converged,
                    });
                    Ok(Field::Image(inv.image))
                }
                other => Err(Error::ShapeMismatch(format!(
                    "radon stage cannot invert a {}",
                    other.kind()
                ))),
            },
            Stage::FourierPermute => {
                let images: Vec<&Image2D> = children
                    .iter()
                    .map(|f| {
                        f.as_image().ok_or_else(|| {
                            Error::ShapeMismatch("Fourier components must be images".into())
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(Field::Image(fourier_unpermute(&images)?))
            }
        }
    }
}

fn split_values(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        v.iter().map(|&x| x.max(0.0)).collect(),
        v.iter().map(|&x| (-x).max(0.0)).collect(),
    )
}

/// `d_j = (u_j − u_{j−1}) / w_j` with `u_{−1} = 0`.
pub fn derivative(u: &PwcFunction1D) -> PwcFunction1D {
    let mut prev = 0.0;
    let v = u
        .values()
        .iter()
        .zip(u.grid().widths())
        .map(|(&x, w)| {
            let d = (x - prev) / w;
            prev = x;
            d
        })
        .collect();
    PwcFunction1D::new(u.grid().clone(), v).expect("finite differences of finite values")
}

/// Inverse of [`derivative`]: running sums of `d_j w_j`.
pub fn antiderivative(d: &PwcFunction1D) -> PwcFunction1D {
    let mut acc = 0.0;
    let v = d
        .values()
        .iter()
        .zip(d.grid().widths())
        .map(|(&x, w)| {
            acc += x * w;
            acc
        })
        .collect();
    PwcFunction1D::new(d.grid().clone(), v).expect("finite sums of finite values")
}

/// Unitary 2D DFT (`1/√D` per axis), row-major with row index `k_y`.
fn dft2(values: &mut [Complex64], d: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(d)
    } else {
        planner.plan_fft_forward(d)
    };
    for row in values.chunks_mut(d) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); d];
    for j in 0..d {
        for i in 0..d {
            col[i] = values[i * d + j];
        }
        fft.process(&mut col);
        for i in 0..d {
            values[i * d + j] = col[i];
        }
    }
    let scale = 1.0 / d as f64;
    values.iter_mut().for_each(|v| *v *= scale);
}

/// Parity offsets `(row, column)` of each component in [`FOURIER_COMPONENTS`] order.
const PARITY: [(usize, usize); 4] = [(1, 1), (0, 1), (1, 0), (0, 0)];

/// Eight real `(D/2) × (D/2)` components of the unitary DFT, split by index parity.
///
/// In a component name `xy`, `x` is the parity of the row (`k_y`) index and
/// `y` the parity of the column (`k_x`) index; entry `(a, b)` of component `xy`
/// holds the coefficient at `(2a + [x odd], 2b + [y odd])`.
pub fn fourier_permute(u: &Image2D) -> Result<Vec<Image2D>> {
    let d = u.d();
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    let mut spec: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft2(&mut spec, d, false);
    let half = d / 2;
    let mut out = Vec::with_capacity(8);
    for part in 0..2 {
        for &(pr, pc) in &PARITY {
            let mut v = Vec::with_capacity(half * half);
            for a in 0..half {
                for b in 0..half {
                    let c = spec[(2 * a + pr) * d + 2 * b + pc];
                    v.push(if part == 0 { c.re } else { c.im });
                }
            }
            out.push(Image2D::new(half, u.extent(), v)?);
        }
    }
    Ok(out)
}

/// Inverse of [`fourier_permute`] after Hermitian symmetrization of the spectrum.
pub fn fourier_unpermute(components: &[&Image2D]) -> Result<Image2D> {
    if components.len() != 8 {
        return Err(Error::ShapeMismatch(format!(
            "{} Fourier components instead of 8",
            components.len()
        )));
    }
    let half = components[0].d();
    let extent: Extent = components[0].extent();
    if components.iter().any(|c| c.d() != half) {
        return Err(Error::ShapeMismatch(
            "Fourier components differ in size".into(),
        ));
    }
    let d = 2 * half;
    let mut spec = vec![Complex64::new(0.0, 0.0); d * d];
    for (k, &(pr, pc)) in PARITY.iter().enumerate() {
        let (re, im) = (components[k], components[k + 4]);
        for a in 0..half {
            for b in 0..half {
                spec[(2 * a + pr) * d + 2 * b + pc] =
                    Complex64::new(re.get(a, b), im.get(a, b));
            }
        }
    }
    let sym: Vec<Complex64> = (0..d * d)
        .map(|idx| {
            let (i, j) = (idx / d, idx % d);
            let mirror = ((d - i) % d) * d + (d - j) % d;
            0.5 * (spec[idx] + spec[mirror].conj())
        })
        .collect();
    let mut spec = sym;
    dft2(&mut spec, d, true);
    Image2D::new(d, extent, spec.iter().map(|c| c.re).collect())
}

/// Signed 1D interpolation of every row of two images along `x`.
fn interp_rows(a: &Image2D, b: &Image2D, lambda: f64) -> Result<Image2D> {
    if a.d() != b.d() || a.extent() != b.extent() {
        return Err(Error::ShapeMismatch("images differ in size or extent".into()));
    }
    let d = a.d();
    let e = a.extent();
    let grid = Grid1D::uniform(e.x0, e.x1, d)?;
    let rows: Vec<Result<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let ra = &a.values()[i * d..(i + 1) * d];
            let rb = &b.values()[i * d..(i + 1) * d];
            if ra.iter().all(|&v| v == 0.0) && rb.iter().all(|&v| v == 0.0) {
                return Ok(vec![0.0; d]);
            }
            let fa = PwcFunction1D::new(grid.clone(), ra.to_vec())?;
            let fb = PwcFunction1D::new(grid.clone(), rb.to_vec())?;
            Ok(interp_signed(&fa, &fb, lambda)?.resample(&grid)?.into_parts().1)
        })
        .collect();
    let mut values = Vec::with_capacity(d * d);
    for r in rows {
        values.extend(r?);
    }
    Image2D::new(d, e, values)
}

/// Signed 1D interpolation along the last axis of each pair of components.
pub fn interp_bundles(b1: &ComponentBundle, b2: &ComponentBundle, lambda: f64) -> Result<ComponentBundle> {
    if b1.len() != b2.len() {
        return Err(Error::ShapeMismatch(format!(
            "bundles hold {} and {} components",
            b1.len(),
            b2.len()
        )));
    }
    let out: Vec<Result<(String, Field)>> = b1
        .components
        .par_iter()
        .zip(b2.components.par_iter())
        .map(|((n1, f1), (n2, f2))| {
            if n1 != n2 {
                return Err(Error::ShapeMismatch(format!(
                    "component `{n1}` paired with `{n2}`"
                )));
            }
            let f = match (f1, f2) {
                _ if f1.is_zero() && f2.is_zero() => f1.clone(),
                (Field::Line(a), Field::Line(b)) => Field::Line(interp_signed(a, b, lambda)?),
                (Field::Image(a), Field::Image(b)) => Field::Image(interp_rows(a, b, lambda)?),
                (Field::Sinogram(a), Field::Sinogram(b)) => {
                    Field::Sinogram(interp_sinograms(a, b, lambda)?)
                }
                _ => {
                    return Err(Error::ShapeMismatch(format!(
                        "component `{n1}` is a {} in one operand and a {} in the other",
                        f1.kind(),
                        f2.kind()
                    )))
                }
            };
            Ok((n1.clone(), f))
        })
        .collect();
    let mut comps = Vec::with_capacity(out.len());
    for (r, (name, _)) in out.into_iter().zip(&b1.components) {
        comps.push(r.map_err(Error::at_component(name))?);
    }
    ComponentBundle::new(comps)
}

/// `T⁻¹ I_⊗(λ; T u1, T u2)`.
pub fn interp_via_transform(
    chain: &TransformChain,
    u1: &Field,
    u2: &Field,
    lambda: f64,
) -> Result<Field> {
    let b1 = chain.apply(u1)?;
    let b2 = chain.apply(u2)?;
    chain.invert(&interp_bundles(&b1, &b2, lambda)?)
}
