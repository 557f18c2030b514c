use std::fs;
use std::path::PathBuf;

use clap::Args;
use dinterp::dinterp1d::{
    interp_bary, interp_bary_signed, interp_derivative_split, interp_nonneg, interp_signed,
    InterpWeights,
};
use dinterp::grid1d::normalized_quantile;
use dinterp::io;
use dinterp::lowrank::{
    angle_singular_values, build_snapshots, singular_stats, svd, unit_column_singular_values,
    y_grid, ModeBasis,
};
use dinterp::radon::{dinterp2d_with, CgParams, Extent, Image2D, RadonGeometry, RadonOperator};
use dinterp::scenarios::{
    acoustics_pressure, burgers_solution, diamond_gaussians, oscillatory, oscillatory_family_k,
    random_hat_parameters, random_hats, transport_family, two_param_triple, two_param_weights,
    wavelet_triple, BurgersIC, ScenarioSpec, TWO_PARAM_NODES,
};
use dinterp::transform::{
    interp_bundles, Field, RadonConfig, TransformChain, FOURIER_COMPONENTS,
};
use dinterp::Error;

use crate::run::{check_mass, check_nonneg, Run};
use crate::{CliError, Globals};

type CliResult = Result<(), CliError>;

const DEFAULT_LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn lambdas(g: &Globals, default: &[f64]) -> Result<Vec<f64>, CliError> {
    let l = g.lambda.clone().unwrap_or_else(|| default.to_vec());
    if l.is_empty() {
        return Err(usage("--lambda needs at least one value"));
    }
    if let Some(bad) = l.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(usage(format!("--lambda value {bad} outside [0, 1]")));
    }
    Ok(l)
}

/// Default scenario parameters with `--grid`, `--domain` and `--seed` applied.
fn spec(name: &str, g: &Globals) -> Result<ScenarioSpec, CliError> {
    let mut s = ScenarioSpec::default_for(name)?;
    if let Some(n) = g.grid {
        let key = if s.parameters.contains_key("cells") { "cells" } else { "d" };
        s.set(key, n as f64);
    }
    if let Some((a, b)) = g.domain {
        if !s.parameters.contains_key("a") {
            return Err(usage(format!("scenario `{name}` has a fixed 2D domain")));
        }
        s.set("a", a);
        s.set("b", b);
    }
    if let Some(seed) = g.seed {
        if s.parameters.contains_key("seed") {
            s.set("seed", seed as f64);
        }
    }
    s.validate()?;
    Ok(s)
}

/// Image size from `--grid`, `--quick` or the scenario, written back into the scenario.
fn image_size(g: &Globals, s: &mut ScenarioSpec) -> Result<usize, CliError> {
    let d = match g.grid {
        Some(d) => d,
        None if g.quick => 64,
        None => s.get("d")? as usize,
    };
    if d < 2 {
        return Err(usage(format!("image size {d} is too small")));
    }
    s.set("d", d as f64);
    s.validate()?;
    Ok(d)
}

fn cg_params(g: &Globals, d: usize) -> CgParams {
    let default = CgParams::default_for(d);
    CgParams {
        tol: g.tol.unwrap_or(default.tol),
        max_iter: g.max_iter.unwrap_or(default.max_iter),
    }
}

fn record_common(run: &mut Run, g: &Globals) {
    run.manifest
        .parameter("quick", g.quick)
        .parameter("svg", g.svg);
    run.manifest.tolerances.insert("output_mass_relative".into(), 1e-9);
}

fn record_geometry(run: &mut Run, geometry: &RadonGeometry, params: CgParams) {
    run.manifest
        .parameter("D", geometry.d)
        .parameter("extent", geometry.extent)
        .parameter("angles", geometry.angles)
        .parameter("oversample", geometry.oversample)
        .parameter("max_iter", params.max_iter);
    run.manifest.tolerances.insert("cg_relative_residual".into(), params.tol);
}

fn name(prefix: &str, i: usize) -> String {
    format!("{prefix}_{i:02}.csv")
}

fn singular_rows(values: &[f64]) -> Vec<Vec<f64>> {
    let s1 = values.first().copied().unwrap_or(0.0);
    values
        .iter()
        .enumerate()
        .map(|(j, &s)| vec![(j + 1) as f64, s, if s1 > 0.0 { s / s1 } else { 0.0 }])
        .collect()
}

#[derive(Args, Debug)]
pub struct PairArgs {
    /// First density (CSV `x_left,x_right,value`).
    #[arg(long)]
    input1: PathBuf,
    /// Second density.
    #[arg(long)]
    input2: PathBuf,
    /// Allow sign changes (positive and negative parts are paired).
    #[arg(long)]
    signed: bool,
}

pub fn pair(g: &Globals, a: &PairArgs) -> CliResult {
    let u1 = io::read_density(&a.input1)?;
    let u2 = io::read_density(&a.input2)?;
    let ls = lambdas(g, &DEFAULT_LAMBDAS)?;
    let mut run = Run::new("pair", g)?;
    record_common(&mut run, g);
    run.manifest
        .parameter("input1", &a.input1)
        .parameter("input2", &a.input2)
        .parameter("signed", a.signed)
        .parameter("lambda", &ls);
    let mut rows = Vec::new();
    for (i, &l) in ls.iter().enumerate() {
        let out = name("interp", i);
        let u = if a.signed {
            interp_signed(&u1, &u2, l)?
        } else {
            let u = interp_nonneg(&u1, &u2, l)?;
            check_nonneg(&out, &u)?;
            u
        };
        check_mass(&out, &u, (1.0 - l) * u1.mass() + l * u2.mass())?;
        run.density(&out, &u)?;
        rows.push(vec![i as f64, l]);
    }
    run.table("lambdas.csv", &["index", "lambda"], &rows)?;
    run.finish()
}

#[derive(serde::Deserialize)]
struct Tessellation {
    nodes: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct BaryArgs {
    /// Comma-separated density files.
    #[arg(long, value_delimiter = ',', required = true)]
    inputs: Vec<PathBuf>,
    /// Parameter point located in the tessellation (instead of --weights).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    /// JSON file `{"nodes": [[...], ...], "simplices": [[i, j, k], ...]}`.
    #[arg(long)]
    tessellation: Option<PathBuf>,
    /// Allow sign changes.
    #[arg(long)]
    signed: bool,
}

pub fn bary(g: &Globals, a: &BaryArgs) -> CliResult {
    let weights = match (&g.weights, &a.alpha, &a.tessellation) {
        (Some(w), None, None) => InterpWeights::new(w.clone())?,
        (None, Some(alpha), Some(path)) => {
            let text = fs::read_to_string(path).map_err(Error::from)?;
            let t: Tessellation = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line() as u64,
                column: e.column(),
                message: e.to_string(),
            })?;
            InterpWeights::from_tessellation(alpha, &t.nodes, &t.simplices)?
        }
        _ => return Err(usage("give either --weights or both --alpha and --tessellation")),
    };
    if weights.len() != a.inputs.len() {
        return Err(usage(format!(
            "{} weights for {} inputs",
            weights.len(),
            a.inputs.len()
        )));
    }
    let us = a
        .inputs
        .iter()
        .map(|p| io::read_density(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut run = Run::new("bary", g)?;
    record_common(&mut run, g);
    run.manifest
        .parameter("inputs", &a.inputs)
        .parameter("weights", weights.lambdas())
        .parameter("alpha", &a.alpha)
        .parameter("tessellation", &a.tessellation)
        .parameter("signed", a.signed);
    let u = if a.signed {
        interp_bary_signed(&us, &weights)?
    } else {
        let u = interp_bary(&us, &weights)?;
        check_nonneg("interp.csv", &u)?;
        u
    };
    let mass: f64 = us.iter().zip(weights.lambdas()).map(|(u, w)| w * u.mass()).sum();
    check_mass("interp.csv", &u, mass)?;
    run.density("interp.csv", &u)?;
    run.finish()
}

#[derive(Args, Debug)]
pub struct HatsArgs {
    /// Members of the random-hats family.
    #[arg(long, default_value_t = 50)]
    members: usize,
    /// Interior quantile levels sampled per curve.
    #[arg(long, default_value_t = 512)]
    quantiles: usize,
}

fn modes_output(run: &mut Run, file: &str, basis: &ModeBasis) -> CliResult {
    io::write_modes(&run_path(run, file), basis)?;
    run.manifest
        .outputs
        .push(io::sidecar_path(std::path::Path::new(file)).to_string_lossy().into_owned());
    Ok(())
}

fn run_path(run: &mut Run, file: &str) -> PathBuf {
    run.manifest.outputs.push(file.to_string());
    run.dir().join(file)
}

pub fn hats(g: &Globals, a: &HatsArgs) -> CliResult {
    let translation = spec("transport", g)?;
    let random = spec("random-hats", g)?;
    let grid = translation.grid()?;
    let w = translation.get("w")?;
    let n_max = translation.get("n_max")? as usize;
    let seed = random.get("seed")? as u64;
    let ls = lambdas(g, &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])?;
    if a.quantiles < a.members {
        return Err(usage("--quantiles must be at least --members"));
    }

    let mut run = Run::new("hats", g)?;
    record_common(&mut run, g);
    run.manifest.scenario = Some(random.clone());
    run.manifest.seed = Some(seed);
    run.manifest
        .parameter("translation", &translation)
        .parameter("members", a.members)
        .parameter("quantiles", a.quantiles)
        .parameter("lambda", &ls);

    let family = transport_family(n_max, w, &grid)?;
    let (first, last) = (&family[0], &family[n_max - 1]);
    for (i, &l) in ls.iter().enumerate() {
        let out = name("translate", i);
        let u = interp_nonneg(first, last, l)?.resample(&grid)?;
        check_nonneg(&out, &u)?;
        check_mass(&out, &u, 1.0)?;
        run.density(&out, &u)?;
    }
    let ys = y_grid(a.quantiles);
    let curves = family
        .iter()
        .map(|u| normalized_quantile(u).map(|q| q.0))
        .collect::<Result<Vec<_>, _>>()?;
    let basis = svd(&build_snapshots(&curves, &ys)?)?;
    run.table(
        "translation_singular_values.csv",
        &["j", "value", "scaled"],
        &singular_rows(&basis.singular_values),
    )?;

    let params = random_hat_parameters(a.members, seed);
    let hats = random_hats(a.members, seed, &grid)?;
    run.table(
        "random_hats.csv",
        &["n", "t", "w"],
        &params
            .iter()
            .enumerate()
            .map(|(n, &(t, w))| vec![(n + 1) as f64, t, w])
            .collect::<Vec<_>>(),
    )?;
    let curves = hats
        .iter()
        .map(|u| normalized_quantile(u).map(|q| q.0))
        .collect::<Result<Vec<_>, _>>()?;
    let basis = svd(&build_snapshots(&curves, &ys)?)?;
    run.table(
        "random_singular_values.csv",
        &["j", "value", "scaled"],
        &singular_rows(&basis.singular_values),
    )?;
    modes_output(&mut run, "random_modes.csv", &basis)?;
    run.finish()
}

pub fn two_param(g: &Globals) -> CliResult {
    let s = spec("two-param", g)?;
    let grid = s.grid()?;
    let us = two_param_triple(&grid)?;
    let mut run = Run::new("two-param", g)?;
    record_common(&mut run, g);
    run.manifest.scenario = Some(s);
    for (i, u) in us.iter().enumerate() {
        run.density(&format!("input_{}.csv", i + 1), u)?;
    }
    let mut rows = Vec::new();
    for (i, alpha) in TWO_PARAM_NODES.iter().enumerate() {
        let w = two_param_weights(*alpha);
        let out = name("node", i + 1);
        let u = interp_bary(&us, &InterpWeights::new(w.to_vec())?)?.resample(&grid)?;
        check_nonneg(&out, &u)?;
        check_mass(&out, &u, 1.0)?;
        run.density(&out, &u)?;
        rows.push(vec![(i + 1) as f64, alpha[0], alpha[1]]);
    }
    run.table("nodes.csv", &["index", "alpha_1", "alpha_2"], &rows)?;
    run.finish()
}

pub fn wavelet(g: &Globals) -> CliResult {
    let s = spec("wavelet", g)?;
    let grid = s.grid()?;
    let [u1, u2, u3] = wavelet_triple(&grid);
    let ls = lambdas(g, &DEFAULT_LAMBDAS)?;
    let mut run = Run::new("wavelet", g)?;
    record_common(&mut run, g);
    run.manifest.scenario = Some(s);
    run.manifest.parameter("lambda", &ls);
    for (i, u) in [&u1, &u2, &u3].into_iter().enumerate() {
        run.density(&format!("input_{}.csv", i + 1), u)?;
    }
    for (i, &l) in ls.iter().enumerate() {
        for (prefix, other) in [("dilation", &u2), ("translation", &u3)] {
            let out = name(prefix, i);
            let u = interp_signed(&u1, other, l)?.resample(&grid)?;
            check_mass(&out, &u, (1.0 - l) * u1.mass() + l * other.mass())?;
            run.density(&out, &u)?;
        }
    }
    run.finish()
}

pub fn acoustics(g: &Globals) -> CliResult {
    let s = spec("acoustics", g)?;
    let grid = s.grid()?;
    let (w, c, t1, t2) = (s.get("w")?, s.get("c")?, s.get("t1")?, s.get("t2")?);
    let p1 = acoustics_pressure(t1, w, c, &grid)?;
    let p2 = acoustics_pressure(t2, w, c, &grid)?;
    let mut run = Run::new("acoustics", g)?;
    record_common(&mut run, g);
    run.manifest.scenario = Some(s);
    let mut rows = Vec::new();
    for n in 0..=10 {
        let t = 0.2 * n as f64;
        let l = (t - t1) / (t2 - t1);
        let out = name("profile", n);
        let u = interp_derivative_split(&p1, &p2, l)?;
        check_mass(&out, &u, 1.0)?;
        let exact = acoustics_pressure(t, w, c, &grid)?;
        let err = u.l1_distance(&exact)? / exact.l1_norm();
        run.density(&out, &u)?;
        rows.push(vec![n as f64, t, l, err]);
    }
    run.table("errors.csv", &["n", "t", "lambda", "l1_relative"], &rows)?;
    run.finish()
}

pub fn burgers(g: &Globals) -> CliResult {
    let s = spec("burgers", g)?;
    let grid = s.grid()?;
    let ic = BurgersIC::from_spec(&s)?;
    let (t1, t2) = (s.get("t1")?, s.get("t2")?);
    let u1 = burgers_solution(t1, &ic, &grid)?;
    let u2 = burgers_solution(t2, &ic, &grid)?;
    let x1 = u1.steepest_descent_edge().unwrap_or(f64::NAN);
    let x2 = u2.steepest_descent_edge().unwrap_or(f64::NAN);
    let mut run = Run::new("burgers", g)?;
    record_common(&mut run, g);
    run.manifest.scenario = Some(s);
    run.density("input_1.csv", &u1)?;
    run.density("input_2.csv", &u2)?;
    let mut rows = Vec::new();
    for n in 1..=10 {
        let t = t1 + 0.2 * n as f64;
        let l = (t - t1) / (t2 - t1);
        let out = name("profile", n);
        let u = interp_signed(&u1, &u2, l)?.resample(&grid)?;
        check_mass(&out, &u, (1.0 - l) * u1.mass() + l * u2.mass())?;
        let exact = burgers_solution(t, &ic, &grid)?;
        run.density(&out, &u)?;
        run.density(&name("exact", n), &exact)?;
        rows.push(vec![
            n as f64,
            t,
            l,
            u.steepest_descent_edge().unwrap_or(f64::NAN),
            (1.0 - l) * x1 + l * x2,
            ic.shock_location(t).unwrap_or(f64::NAN),
        ]);
    }
    run.table(
        "shocks.csv",
        &["n", "t", "lambda", "x_interp", "x_affine", "x_exact"],
        &rows,
    )?;
    run.finish()
}

pub fn radon2d(g: &Globals) -> CliResult {
    let mut s = spec("diamond", g)?;
    let d = image_size(g, &mut s)?;
    let (u1, u2) = diamond_gaussians(d)?;
    let geometry = RadonGeometry::new(
        d,
        u1.extent(),
        g.angles.unwrap_or(4 * d),
        g.oversample.unwrap_or(2.0),
    )?;
    let params = cg_params(g, d);
    let ls = lambdas(g, &[0.25, 0.5, 0.75])?;
    let mut run = Run::new("radon2d", g)?;
    record_common(&mut run, g);
    record_geometry(&mut run, &geometry, params);
    run.manifest.scenario = Some(s);
    run.manifest.parameter("lambda", &ls);
    run.image("u1.csv", &u1, "first operand")?;
    run.image("u2.csv", &u2, "second operand")?;
    let op = RadonOperator::new(geometry);
    let mut rows = Vec::new();
    for (i, &l) in ls.iter().enumerate() {
        let inv = dinterp2d_with(&op, &u1, &u2, l, params)?;
        if !inv.converged {
            log::warn!(
                "lambda = {l}: inversion stopped at relative residual {:e}",
                inv.residual
            );
        }
        run.image(&name("interp", i), &inv.image, &format!("interpolant at lambda = {l}"))?;
        rows.push(vec![l, inv.iterations as f64, inv.residual, inv.converged as u8 as f64]);
    }
    run.table("cg.csv", &["lambda", "iterations", "residual", "converged"], &rows)?;
    run.finish()
}

#[derive(Args, Debug)]
pub struct OscArgs {
    /// Also compute singular-value statistics of the k-family over all angles.
    #[arg(long)]
    report_singvals: bool,
    /// Members of the k-family.
    #[arg(long, default_value_t = 50)]
    members: usize,
    /// Interior quantile levels per sign part and component.
    #[arg(long, default_value_t = 64)]
    quantiles: usize,
}

pub fn osc2d(g: &Globals, a: &OscArgs) -> CliResult {
    let mut s = spec("oscillatory", g)?;
    let d = image_size(g, &mut s)?;
    let (k1, k2, sigma2) = (s.get("k1")?, s.get("k2")?, s.get("sigma2")?);
    // The Radon stage sees the (D/2) x (D/2) Fourier components.
    let half = d / 2;
    let params = cg_params(g, half);
    let config = RadonConfig {
        angles: g.angles,
        oversample: g.oversample.unwrap_or(2.0),
        cg: Some(params),
    };
    let chain = TransformChain::radon_fourier(config);
    let u1 = oscillatory(k1, sigma2, d)?;
    let u2 = oscillatory(k2, sigma2, d)?;
    let geometry = config.geometry(&Image2D::zeros(half, Extent::unit()))?;
    let ls = lambdas(g, &[0.75])?;
    let mut run = Run::new("osc2d", g)?;
    record_common(&mut run, g);
    record_geometry(&mut run, &geometry, params);
    run.manifest.scenario = Some(s);
    run.manifest
        .parameter("chain", chain.describe())
        .parameter("lambda", &ls)
        .parameter("report_singvals", a.report_singvals);
    run.image("u1.csv", &u1, "first operand")?;
    run.image("u2.csv", &u2, "second operand")?;

    let b1 = chain.apply(&Field::Image(u1))?;
    let b2 = chain.apply(&Field::Image(u2))?;
    let mut rows = Vec::new();
    for (i, &l) in ls.iter().enumerate() {
        let b = interp_bundles(&b1, &b2, l)?;
        let (field, reports) = chain.invert_with_report(&b)?;
        let image = field
            .as_image()
            .ok_or_else(|| Error::InvariantViolation("inverse chain did not yield an image".into()))?;
        run.image(&name("interp", i), image, &format!("interpolant at lambda = {l}"))?;
        for r in reports {
            let c = FOURIER_COMPONENTS
                .iter()
                .position(|n| r.component.contains(n))
                .map_or(f64::NAN, |c| c as f64);
            rows.push(vec![l, c, r.iterations as f64, r.residual, r.converged as u8 as f64]);
        }
    }
    run.table(
        "cg.csv",
        &["lambda", "component", "iterations", "residual", "converged"],
        &rows,
    )?;

    if a.report_singvals {
        if a.members < 2 {
            return Err(usage("--members must be at least 2"));
        }
        let ks = oscillatory_family_k(a.members);
        let images = ks
            .iter()
            .map(|&k| oscillatory(k, sigma2, d))
            .collect::<Result<Vec<Image2D>, _>>()?;
        let bundles = images
            .iter()
            .map(|u| chain.apply(&Field::Image(u.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let per_angle = angle_singular_values(&bundles, &y_grid(a.quantiles))?;
        let (means, stds) = singular_stats(&per_angle)?;
        let stats: Vec<(f64, f64)> = means.into_iter().zip(stds).collect();
        run.singular_stats("singular_values.csv", &stats)?;
        let raw: Vec<Vec<f64>> = images.iter().map(|u| u.values().to_vec()).collect();
        let baseline = unit_column_singular_values(&raw)?;
        run.table(
            "baseline_singular_values.csv",
            &["j", "value", "scaled"],
            &singular_rows(&baseline),
        )?;
        run.manifest
            .parameter("members", a.members)
            .parameter("quantiles", a.quantiles);
    }
    run.finish()
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `key=value`, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// Scenario name (one of: transport, random-hats, two-param, wavelet,
    /// acoustics, burgers, riemann, diamond, oscillatory).
    name: Option<String>,
    /// Read the scenario from a JSON file instead.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override a parameter, e.g. `--set w=0.04`.
    #[arg(long = "set", value_parser = parse_assignment, allow_hyphen_values = true)]
    set: Vec<(String, f64)>,
}

pub fn scenario(g: &Globals, a: &ScenarioArgs) -> CliResult {
    let mut s = match (&a.name, &a.spec) {
        (Some(n), None) => match spec(n, g) {
            Err(CliError::Domain(Error::UnknownScenario(n))) => {
                return Err(usage(format!("unknown scenario `{n}`")))
            }
            other => other?,
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str::<ScenarioSpec>(&text).map_err(|e| Error::Parse {
                line: e.line() as u64,
                column: e.column(),
                message: e.to_string(),
            })?
        }
        _ => return Err(usage("give a scenario name or --spec, not both")),
    };
    for (k, v) in &a.set {
        if !s.parameters.contains_key(k) {
            return Err(usage(format!("scenario `{}` has no parameter `{k}`", s.name)));
        }
        s.set(k, *v);
    }
    s.validate()?;
    let mut run = Run::new("scenario", g)?;
    record_common(&mut run, g);
    run.manifest.scenario = Some(s.clone());
    let spec_path = run_path(&mut run, "scenario.json");
    fs::write(
        &spec_path,
        serde_json::to_string_pretty(&s).map_err(Error::from)? + "\n",
    )
    .map_err(Error::from)?;

    match s.name.as_str() {
        "transport" => {
            let fam = transport_family(s.get("n_max")? as usize, s.get("w")?, &s.grid()?)?;
            for (i, u) in fam.iter().enumerate() {
                run.density(&name("member", i + 1), u)?;
            }
        }
        "random-hats" => {
            let (n, seed) = (s.get("n")? as usize, s.get("seed")? as u64);
            run.manifest.seed = Some(seed);
            for (i, u) in random_hats(n, seed, &s.grid()?)?.iter().enumerate() {
                run.density(&name("member", i + 1), u)?;
            }
        }
        "two-param" => {
            for (i, u) in two_param_triple(&s.grid()?)?.iter().enumerate() {
                run.density(&format!("input_{}.csv", i + 1), u)?;
            }
        }
        "wavelet" => {
            for (i, u) in wavelet_triple(&s.grid()?).iter().enumerate() {
                run.density(&format!("input_{}.csv", i + 1), u)?;
            }
        }
        "acoustics" => {
            let grid = s.grid()?;
            let (w, c) = (s.get("w")?, s.get("c")?);
            for (i, key) in ["t1", "t2"].iter().enumerate() {
                let p = acoustics_pressure(s.get(key)?, w, c, &grid)?;
                run.density(&format!("input_{}.csv", i + 1), &p)?;
            }
        }
        "burgers" | "riemann" => {
            let grid = s.grid()?;
            let ic = BurgersIC::from_spec(&s)?;
            for (i, key) in ["t1", "t2"].iter().enumerate() {
                let u = burgers_solution(s.get(key)?, &ic, &grid)?;
                run.density(&format!("input_{}.csv", i + 1), &u)?;
            }
        }
        "diamond" => {
            let (u1, u2) = diamond_gaussians(s.get("d")? as usize)?;
            run.image("u1.csv", &u1, "diamond Gaussian")?;
            run.image("u2.csv", &u2, "sharp diamond")?;
        }
        "oscillatory" => {
            let (d, sigma2) = (s.get("d")? as usize, s.get("sigma2")?);
            for (i, key) in ["k1", "k2"].iter().enumerate() {
                let u = oscillatory(s.get(key)?, sigma2, d)?;
                run.image(&format!("u{}.csv", i + 1), &u, &format!("oscillation with {key}"))?;
            }
        }
        other => return Err(usage(format!("unknown scenario `{other}`"))),
    }
    run.finish()
}
