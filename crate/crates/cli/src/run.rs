use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dinterp::grid1d::PwcFunction1D;
use dinterp::io::{self, RunManifest};
use dinterp::radon::Image2D;
use dinterp::Error;

use crate::svg;
use crate::{CliError, Globals};

/// Output directory of one run and the manifest describing it.
pub struct Run {
    dir: PathBuf,
    svg: bool,
    start: Instant,
    pub manifest: RunManifest,
}

impl Run {
    pub fn new(command: &str, g: &Globals) -> Result<Self, CliError> {
        fs::create_dir_all(&g.out_dir).map_err(Error::from)?;
        Ok(Run {
            dir: g.out_dir.clone(),
            svg: g.svg,
            start: Instant::now(),
            manifest: RunManifest::new(command),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.dir.join(name)
    }

    pub fn density(&mut self, name: &str, u: &PwcFunction1D) -> Result<(), CliError> {
        check_finite(name, u.values())?;
        let path = self.path(name);
        io::write_density(&path, u)?;
        if self.svg {
            let svg_name = Path::new(name).with_extension("svg");
            let svg_name = svg_name.to_string_lossy().into_owned();
            let svg_path = self.path(&svg_name);
            svg::write_plot(&svg_path, &[u]).map_err(Error::from)?;
        }
        Ok(())
    }

    pub fn image(&mut self, name: &str, u: &Image2D, description: &str) -> Result<(), CliError> {
        check_finite(name, u.values())?;
        let path = self.path(name);
        io::write_image(&path, u, description)?;
        let sidecar = io::sidecar_path(Path::new(name));
        self.manifest
            .outputs
            .push(sidecar.to_string_lossy().into_owned());
        Ok(())
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        for r in rows {
            check_finite(name, r)?;
        }
        let path = self.path(name);
        io::write_columns(&path, header, rows)?;
        Ok(())
    }

    pub fn singular_stats(&mut self, name: &str, stats: &[(f64, f64)]) -> Result<(), CliError> {
        let path = self.path(name);
        io::write_singular_stats(&path, stats)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.manifest.wall_clock_seconds = self.start.elapsed().as_secs_f64();
        io::write_manifest(&self.dir.join("manifest.json"), &self.manifest)?;
        Ok(())
    }
}

pub fn check_finite(name: &str, values: &[f64]) -> Result<(), CliError> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvariantViolation(format!("`{name}` contains {v}")).into());
    }
    Ok(())
}

/// Rejects a result whose mass differs from `expected` beyond roundoff.
pub fn check_mass(name: &str, u: &PwcFunction1D, expected: f64) -> Result<(), CliError> {
    let scale = u.abs_mass().max(expected.abs()).max(1.0);
    if (u.mass() - expected).abs() > 1e-9 * scale {
        return Err(Error::InvariantViolation(format!(
            "`{name}` has mass {} instead of {expected}",
            u.mass()
        ))
        .into());
    }
    Ok(())
}

pub fn check_nonneg(name: &str, u: &PwcFunction1D) -> Result<(), CliError> {
    if let Some((i, v)) = u.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::InvariantViolation(format!("`{name}` is negative ({v}) in cell {i}")).into());
    }
    Ok(())
}
