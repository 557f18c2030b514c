//! Closed-form inputs and reference solutions for the reproduced experiments.
//!
//! Every profile is turned into cell averages by exact integration, except the
//! 2D images which are sampled at cell centers.

use std::collections::BTreeMap;

use rand_core::Rng;
use rand_pcg::Pcg32;

use crate::error::{Error, Result};
use crate::grid1d::{Grid1D, PwcFunction1D};
use crate::radon::{Extent, Image2D};

/// Stream constant of the random-hats generator (the PCG reference default).
pub const PCG_STREAM: u64 = 0xa02bdbf7bb3c0a7;

/// Parameters of a named experiment.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
    pub description: String,
}

/// Names accepted by [`ScenarioSpec::default_for`].
pub const SCENARIOS: [&str; 9] = [
    "transport",
    "random-hats",
    "two-param",
    "wavelet",
    "acoustics",
    "burgers",
    "riemann",
    "diamond",
    "oscillatory",
];

impl ScenarioSpec {
    pub fn default_for(name: &str) -> Result<Self> {
        let (params, description): (&[(&str, f64)], &str) = match name {
            "transport" => (
                &[("w", 0.05), ("n_max", 6.0), ("a", 0.0), ("b", 1.0), ("cells", 1000.0)],
                "translated hats u(t_n) = phi(x - 3w - t_n; w), t_n = 3w(n - 1)",
            ),
            "random-hats" => (
                &[("n", 50.0), ("seed", 20190801.0), ("a", 0.0), ("b", 1.0), ("cells", 1000.0)],
                "hats with (t, w) drawn uniformly from (0.1, 0.9) x (0, 0.1)",
            ),
            "two-param" => (
                &[("a", 0.0), ("b", 1.0), ("cells", 1000.0)],
                "stand-in triple: two hats, one boxcar, two boxcars of unequal mass",
            ),
            "wavelet" => (
                &[("a", -16.0), ("b", 16.0), ("cells", 6400.0)],
                "Mexican-hat wavelet psi(x), psi(x/2)/sqrt(2), psi(x - 1)",
            ),
            "acoustics" => (
                &[("w", 0.05), ("c", 1.0), ("t1", 0.0), ("t2", 3.0), ("a", -3.05), ("b", 3.2), ("cells", 1000.0)],
                "pressure p(x, t) = (phi(x - 2w - ct; w) + phi(x - 2w + ct; w)) / 2",
            ),
            "burgers" => (
                &[
                    ("background", 0.0),
                    ("amplitude", 0.2),
                    ("center", 0.3),
                    ("width", 0.1),
                    ("t1", 1.0),
                    ("t2", 3.0),
                    ("a", 0.0),
                    ("b", 2.0),
                    ("cells", 1000.0),
                ],
                "inviscid Burgers from u0 = background + amplitude * phi(x - center; width); stand-in initial condition",
            ),
            "riemann" => (
                &[("left", 1.0), ("right", 0.0), ("x0", 0.5), ("t1", 0.5), ("t2", 1.0), ("a", 0.0), ("b", 2.0), ("cells", 1000.0)],
                "inviscid Burgers Riemann problem",
            ),
            "diamond" => (
                &[("d", 128.0)],
                "diamond-shaped Gaussian hump and a sharp diamond at (0.5, 0.25) on [-1, 1]^2",
            ),
            "oscillatory" => (
                &[("k1", 8.0), ("k2", 16.0), ("sigma2", 0.0125), ("d", 128.0)],
                "radial oscillation exp(-r^2 / (2 sigma2)) cos(k pi r) on [0, 1]^2",
            ),
            other => return Err(Error::UnknownScenario(other.to_string())),
        };
        Ok(ScenarioSpec {
            name: name.to_string(),
            parameters: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            description: description.to_string(),
        })
    }

    /// Checks that every parameter of the named scenario is present.
    pub fn validate(&self) -> Result<()> {
        let reference = ScenarioSpec::default_for(&self.name)?;
        for key in reference.parameters.keys() {
            if !self.parameters.contains_key(key) {
                return Err(Error::InvalidInput(format!(
                    "scenario `{}` lacks parameter `{key}`",
                    self.name
                )));
            }
        }
        if let Some((k, v)) = self.parameters.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("parameter `{k}` = {v} is not finite")));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.parameters.get(key).copied().ok_or_else(|| {
            Error::InvalidInput(format!("scenario `{}` lacks parameter `{key}`", self.name))
        })
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.parameters.insert(key.to_string(), value);
    }

    /// The uniform grid given by parameters `a`, `b`, `cells`.
    pub fn grid(&self) -> Result<Grid1D> {
        let cells = self.get("cells")?;
        if !(cells >= 1.0 && cells.fract() == 0.0) {
            return Err(Error::InvalidGrid(format!("cell count {cells} is not a positive integer")));
        }
        Grid1D::uniform(self.get("a")?, self.get("b")?, cells as usize)
    }
}

/// Cell averages of a function given by its antiderivative.
fn averages(grid: &Grid1D, prim: impl Fn(f64) -> f64) -> PwcFunction1D {
    let v = grid
        .edges()
        .windows(2)
        .map(|e| (prim(e[1]) - prim(e[0])) / (e[1] - e[0]))
        .collect();
    PwcFunction1D::new(grid.clone(), v).expect("finite antiderivative")
}

/// Antiderivative of the unit-mass hat `φ(x − t; w)`, zero left of its support.
fn hat_primitive(x: f64, t: f64, w: f64) -> f64 {
    let z = ((x - t) / w).clamp(-1.0, 1.0);
    if z <= 0.0 {
        0.5 * (1.0 + z) * (1.0 + z)
    } else {
        1.0 - 0.5 * (1.0 - z) * (1.0 - z)
    }
}

/// Value of the hat `φ(x; w) = max(0, 1 − |x|/w) / w`.
pub fn hat_value(x: f64, w: f64) -> f64 {
    (1.0 - x.abs() / w).max(0.0) / w
}

/// Cell averages of `φ(x − t; w)`.
pub fn hat(w: f64, t: f64, grid: &Grid1D) -> Result<PwcFunction1D> {
    if !(w > 0.0 && w.is_finite() && t.is_finite()) {
        return Err(Error::InvalidInput(format!("hat needs w > 0 (got w = {w}, t = {t})")));
    }
    Ok(averages(grid, |x| hat_primitive(x, t, w)))
}

/// Cell averages of `h · 1_[a, b]`.
pub fn boxcar(a: f64, b: f64, height: f64, grid: &Grid1D) -> PwcFunction1D {
    averages(grid, |x| height * (x.clamp(a, b) - a))
}

/// `u(t_n) = φ(x − 3w − t_n; w)`, `t_n = 3w(n − 1)`, for `n = 1..=n_max`, wrapped
/// periodically into the grid's domain.
pub fn transport_family(n_max: usize, w: f64, grid: &Grid1D) -> Result<Vec<PwcFunction1D>> {
    let (a, b) = (grid.lower(), grid.upper());
    let len = b - a;
    (1..=n_max)
        .map(|n| {
            let t = 3.0 * w * (n - 1) as f64;
            let center = a + (3.0 * w + t - a).rem_euclid(len);
            if center - w < a - 1e-12 || center + w > b + 1e-12 {
                return Err(Error::OutOfDomain(format!(
                    "member {n} centred at {center} would wrap around [{a}, {b}]"
                )));
            }
            hat(w, center, grid)
        })
        .collect()
}

/// `p(x, t) = (φ(x − 2w − ct; w) + φ(x − 2w + ct; w)) / 2`.
pub fn acoustics_pressure(t: f64, w: f64, c: f64, grid: &Grid1D) -> Result<PwcFunction1D> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time {t} is negative")));
    }
    let (r, l) = (2.0 * w + c * t, 2.0 * w - c * t);
    Ok(averages(grid, |x| {
        0.5 * (hat_primitive(x, r, w) + hat_primitive(x, l, w))
    }))
}

/// Initial data of the Burgers scenarios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BurgersIC {
    /// `b + a·φ(x − c; w)`.
    Bump {
        background: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `left` for `x < x0`, `right` otherwise.
    Riemann { left: f64, right: f64, x0: f64 },
}

impl BurgersIC {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        match spec.name.as_str() {
            "burgers" => {
                let ic = BurgersIC::Bump {
                    background: spec.get("background")?,
                    amplitude: spec.get("amplitude")?,
                    center: spec.get("center")?,
                    width: spec.get("width")?,
                };
                if spec.get("amplitude")? <= 0.0 || spec.get("width")? <= 0.0 {
                    return Err(Error::UnsupportedIC(
                        "bump needs positive amplitude and width".into(),
                    ));
                }
                Ok(ic)
            }
            "riemann" => Ok(BurgersIC::Riemann {
                left: spec.get("left")?,
                right: spec.get("right")?,
                x0: spec.get("x0")?,
            }),
            other => Err(Error::UnsupportedIC(other.to_string())),
        }
    }

    /// Time at which a shock forms (zero for a compressive jump).
    pub fn shock_time(&self) -> Option<f64> {
        match *self {
            BurgersIC::Bump {
                amplitude, width, ..
            } => Some(width * width / amplitude),
            BurgersIC::Riemann { left, right, .. } => (left > right).then_some(0.0),
        }
    }

    /// Shock position at time `t`, if a shock exists then.
    pub fn shock_location(&self, t: f64) -> Option<f64> {
        match *self {
            BurgersIC::Bump {
                background,
                amplitude,
                center,
                width,
            } => {
                let k = amplitude / (width * width);
                (k * t >= 1.0).then(|| {
                    center - width
                        + background * t
                        + std::f64::consts::SQRT_2 * width * (1.0 + k * t).sqrt()
                })
            }
            BurgersIC::Riemann { left, right, x0 } => {
                (left > right).then(|| x0 + 0.5 * (left + right) * t)
            }
        }
    }
}

/// Piecewise-linear profile: breakpoints and, per piece, `u(x) = v + s·(x − x_start)`.
struct Profile {
    breaks: Vec<f64>,
    pieces: Vec<(f64, f64)>,
    left: f64,
    right: f64,
}

impl Profile {
    fn integral_to(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let first = self.breaks[0];
        if x <= first {
            return self.left * (x - first);
        }
        for (k, &(v, s)) in self.pieces.iter().enumerate() {
            let (a, b) = (self.breaks[k], self.breaks[k + 1]);
            let hi = x.min(b);
            if hi > a {
                let d = hi - a;
                acc += v * d + 0.5 * s * d * d;
            }
            if x <= b {
                return acc;
            }
        }
        acc + self.right * (x - self.breaks[self.breaks.len() - 1])
    }
}

fn burgers_profile(ic: &BurgersIC, t: f64) -> Profile {
    match *ic {
        BurgersIC::Bump {
            background: b,
            amplitude: a,
            center: c,
            width: w,
        } => {
            let k = a / (w * w);
            let xl = c - w + b * t;
            if k * t < 1.0 {
                let peak = c + (b + a / w) * t;
                let xr = c + w + b * t;
                Profile {
                    breaks: vec![xl, peak, xr],
                    pieces: vec![(b, k / (1.0 + k * t)), (b + a / w, -k / (1.0 - k * t))],
                    left: b,
                    right: b,
                }
            } else {
                let x_s = ic.shock_location(t).expect("shock exists after formation");
                Profile {
                    breaks: vec![xl, x_s],
                    pieces: vec![(b, k / (1.0 + k * t))],
                    left: b,
                    right: b,
                }
            }
        }
        BurgersIC::Riemann { left, right, x0 } => {
            if left > right {
                let x_s = x0 + 0.5 * (left + right) * t;
                Profile {
                    breaks: vec![x_s, x_s],
                    pieces: vec![(left, 0.0)],
                    left,
                    right,
                }
            } else if t == 0.0 || left == right {
                Profile {
                    breaks: vec![x0, x0],
                    pieces: vec![(left, 0.0)],
                    left,
                    right,
                }
            } else {
                let (a, b) = (x0 + left * t, x0 + right * t);
                Profile {
                    breaks: vec![a, b],
                    pieces: vec![(left, 1.0 / t)],
                    left,
                    right,
                }
            }
        }
    }
}

/// Exact entropy solution of `u_t + (u²/2)_x = 0`, cell averaged.
pub fn burgers_solution(t: f64, ic: &BurgersIC, grid: &Grid1D) -> Result<PwcFunction1D> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time {t} is negative")));
    }
    let profile = burgers_profile(ic, t);
    Ok(averages(grid, |x| profile.integral_to(x)))
}

/// Cell-center samples of the two diamond-shaped Gaussians on `[−1, 1]²`.
pub fn diamond_gaussians(d: usize) -> Result<(Image2D, Image2D)> {
    let extent = Extent::new(-1.0, 1.0, -1.0, 1.0)?;
    let s1 = 2.0 * 0.2 * 0.2;
    let u1 = Image2D::from_fn(d, extent, |x, y| {
        let r = x.abs() + y.abs();
        1.5 * (-(r - 0.75).powi(2) / s1 - (r - 0.5).powi(2) / s1).exp()
    })?;
    let s2 = 2.0 * 0.05 * 0.05;
    let u2 = Image2D::from_fn(d, extent, |x, y| {
        let r = (x - 0.5).abs() + (y - 0.25).abs();
        1.5 * (-(r * r) / s2).exp()
    })?;
    Ok((u1, u2))
}

/// `exp(−r²/(2σ²))·cos(kπr)`.
pub fn oscillatory_value(r: f64, k: f64, sigma2: f64) -> f64 {
    (-(r * r) / (2.0 * sigma2)).exp() * (k * std::f64::consts::PI * r).cos()
}

/// Cell-center samples of the radial oscillation on `[0, 1]²`, `r` measured from the origin.
pub fn oscillatory(k: f64, sigma2: f64, d: usize) -> Result<Image2D> {
    if !(k > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "oscillation needs k > 0 and sigma2 > 0 (got {k}, {sigma2})"
        )));
    }
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    Image2D::from_fn(d, Extent::unit(), |x, y| {
        oscillatory_value((x * x + y * y).sqrt(), k, sigma2)
    })
}

/// Wave numbers `k = 8 + 0.5 j`, `j = 0..n`.
pub fn oscillatory_family_k(n: usize) -> Vec<f64> {
    (0..n).map(|j| 8.0 + 0.5 * j as f64).collect()
}

/// Uniform double in `[0, 1)` from the top 53 bits of a 64-bit draw.
fn unit_f64(rng: &mut Pcg32) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Parameters `(t, w)` of `n` random hats: `t = 0.1 + 0.8u`, `w = 0.1u'`, with
/// `u'` redrawn while zero.
pub fn random_hat_parameters(n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = Pcg32::new(seed, PCG_STREAM);
    (0..n)
        .map(|_| {
            let t = 0.1 + 0.8 * unit_f64(&mut rng);
            let mut u = unit_f64(&mut rng);
            while u == 0.0 {
                u = unit_f64(&mut rng);
            }
            (t, 0.1 * u)
        })
        .collect()
}

pub fn random_hats(n: usize, seed: u64, grid: &Grid1D) -> Result<Vec<PwcFunction1D>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("random hats need n >= 2 (got {n})")));
    }
    random_hat_parameters(n, seed)
        .into_iter()
        .map(|(t, w)| hat(w, t, grid))
        .collect()
}

/// Stand-in triple of the two-parameter example; each member has unit mass.
pub fn two_param_triple(grid: &Grid1D) -> Result<[PwcFunction1D; 3]> {
    let h1 = hat(0.05, 0.25, grid)?;
    let h2 = hat(0.03, 0.45, grid)?;
    let u1 = PwcFunction1D::linear_combination(&[(0.6, &h1), (0.4, &h2)])?.resample(grid)?;
    let u2 = boxcar(0.55, 0.65, 10.0, grid);
    let u3 = PwcFunction1D::linear_combination(&[
        (1.0, &boxcar(0.2, 0.26, 5.0, grid)),
        (1.0, &boxcar(0.7, 0.74, 17.5, grid)),
    ])?
    .resample(grid)?;
    Ok([u1, u2, u3])
}

/// The parameter points of the two-parameter example.
pub const TWO_PARAM_NODES: [[f64; 2]; 12] = [
    [0.25, 0.0],
    [0.5, 0.0],
    [0.75, 0.0],
    [0.75, 0.25],
    [0.5, 0.5],
    [0.25, 0.75],
    [0.0, 0.75],
    [0.0, 0.5],
    [0.0, 0.25],
    [0.25, 0.25],
    [0.5, 0.25],
    [0.25, 0.5],
];

/// `(1 − α₁ − α₂, α₁, α₂)`.
pub fn two_param_weights(alpha: [f64; 2]) -> [f64; 3] {
    [1.0 - alpha[0] - alpha[1], alpha[0], alpha[1]]
}

/// Mexican-hat wavelet `(1 − x²) e^{−x²/2}`.
pub fn mexican_hat(x: f64) -> f64 {
    (1.0 - x * x) * (-0.5 * x * x).exp()
}

fn mexican_hat_primitive(x: f64) -> f64 {
    x * (-0.5 * x * x).exp()
}

/// Cell averages of `c · ψ((x − shift) / scale)`.
pub fn wavelet(scale: f64, shift: f64, amplitude: f64, grid: &Grid1D) -> PwcFunction1D {
    averages(grid, |x| amplitude * scale * mexican_hat_primitive((x - shift) / scale))
}

/// `ψ(x)`, `ψ(x/2)/√2`, `ψ(x − 1)`.
pub fn wavelet_triple(grid: &Grid1D) -> [PwcFunction1D; 3] {
    [
        wavelet(1.0, 0.0, 1.0, grid),
        wavelet(2.0, 0.0, std::f64::consts::FRAC_1_SQRT_2, grid),
        wavelet(1.0, 1.0, 1.0, grid),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid1d::{normalized_quantile, plateau_count};

    fn unit_grid(n: usize) -> Grid1D {
        Grid1D::uniform(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn hat_mass_and_support() {
        let g = unit_grid(1000);
        let u = hat(0.05, 0.15, &g).unwrap();
        assert!((u.mass() - 1.0).abs() < 1e-14);
        for (c, v) in g.centers().iter().zip(u.values()) {
            if *c < 0.1 - 1e-9 || *c > 0.2 + 1e-9 {
                assert!(v.abs() < 1e-12);
            }
        }
        assert!(hat(0.0, 0.5, &g).is_err());
    }

    #[test]
    fn transport_members_are_disjoint() {
        let g = unit_grid(1000);
        let fam = transport_family(6, 0.05, &g).unwrap();
        assert!(fam[0].linf_distance(&hat(0.05, 0.15, &g).unwrap()).unwrap() < 1e-12);
        for i in 0..6 {
            for j in i + 1..6 {
                let ip: f64 = fam[i].values().iter().zip(fam[j].values()).map(|(a, b)| a * b).sum();
                assert!(ip.abs() < 1e-20);
            }
        }
        assert!(matches!(
            transport_family(5, 0.07, &g),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn acoustics_mass_and_initial_state() {
        let g = Grid1D::uniform(-3.05, 3.2, 1000).unwrap();
        let p0 = acoustics_pressure(0.0, 0.05, 1.0, &g).unwrap();
        let h = hat(0.05, 0.1, &g).unwrap();
        assert!(p0.linf_distance(&h).unwrap() < 1e-12);
        for t in [0.4, 1.0, 3.0] {
            let p = acoustics_pressure(t, 0.05, 1.0, &g).unwrap();
            assert!((p.mass() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn burgers_initial_and_mass() {
        let spec = ScenarioSpec::default_for("burgers").unwrap();
        let ic = BurgersIC::from_spec(&spec).unwrap();
        let g = spec.grid().unwrap();
        let u0 = burgers_solution(0.0, &ic, &g).unwrap();
        let expect = hat(0.1, 0.3, &g).unwrap().scaled(0.2);
        assert!(u0.linf_distance(&expect).unwrap() < 1e-12);
        for t in [0.02, 0.05, 1.0, 2.0, 3.0] {
            let u = burgers_solution(t, &ic, &g).unwrap();
            assert!((u.mass() - 0.2).abs() < 1e-12, "t = {t}: {}", u.mass());
        }
    }

    #[test]
    fn riemann_shock_speed() {
        let ic = BurgersIC::Riemann {
            left: 1.0,
            right: 0.2,
            x0: 0.5,
        };
        assert_eq!(ic.shock_location(1.0), Some(1.1));
        let g = Grid1D::uniform(0.0, 2.0, 20).unwrap();
        let u = burgers_solution(1.0, &ic, &g).unwrap();
        assert!((u.values()[10] - 1.0).abs() < 1e-12);
        assert!((u.values()[11] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn diamond_properties() {
        let (u1, u2) = diamond_gaussians(64).unwrap();
        let d = 64;
        for i in 0..d {
            for j in 0..d {
                assert_eq!(u1.get(i, j), u1.get(i, d - 1 - j));
                assert_eq!(u1.get(i, j), u1.get(d - 1 - i, j));
                assert!(u1.get(i, j) > 0.0);
                assert!(u2.get(i, j) >= 0.0);
            }
        }
        let max = u2.values().iter().copied().fold(0.0, f64::max);
        assert!(max <= 1.5 && max > 1.0);
    }

    #[test]
    fn oscillation_origin_and_family() {
        assert_eq!(oscillatory_value(0.0, 8.0, 0.0125), 1.0);
        let ks = oscillatory_family_k(50);
        assert_eq!((ks[0], ks[49]), (8.0, 32.5));
        assert!(matches!(oscillatory(8.0, 0.0125, 7), Err(Error::OddDimension(7))));
    }

    #[test]
    fn random_hats_are_reproducible() {
        let a = random_hat_parameters(5, 7);
        assert_eq!(a, random_hat_parameters(5, 7));
        assert_ne!(a, random_hat_parameters(5, 8));
        for (t, w) in &a {
            assert!((0.1..0.9).contains(t));
            assert!(*w > 0.0 && *w < 0.1);
        }
    }

    #[test]
    fn two_param_plateaus_and_masses() {
        let g = unit_grid(1000);
        let [u1, u2, u3] = two_param_triple(&g).unwrap();
        let counts: Vec<usize> = [&u1, &u2, &u3]
            .iter()
            .map(|u| plateau_count(&normalized_quantile(u).unwrap().0))
            .collect();
        assert_eq!(counts, vec![3, 2, 3]);
        for u in [&u1, &u2, &u3] {
            assert!((u.mass() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn wavelet_has_zero_mean() {
        let g = Grid1D::uniform(-16.0, 16.0, 3200).unwrap();
        let [u1, u2, u3] = wavelet_triple(&g);
        for u in [&u1, &u2, &u3] {
            assert!(u.mass().abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = ScenarioSpec::default_for("acoustics").unwrap();
        s.validate().unwrap();
        s.parameters.remove("w");
        assert!(s.validate().is_err());
        assert!(matches!(
            ScenarioSpec::default_for("nope"),
            Err(Error::UnknownScenario(_))
        ));
    }
}
