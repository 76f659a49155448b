//! Dichotomies from JSON files or built-in presets.

use std::path::Path;

use dichotomy::matrixcore::{DensityOperator, Dichotomy, MatrixJson};
use dichotomy::rates::Resource;
use dichotomy::thermo::{appendix_pair, coherent_qubit_family, Direction};
use serde::Deserialize;

use crate::error::CliError;

/// Either two density matrices or two probability vectors.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DichotomyJson {
    Quantum { rho: MatrixJson, sigma: MatrixJson },
    Classical { p: Vec<f64>, q: Vec<f64> },
}

impl DichotomyJson {
    pub fn build(&self) -> Result<Dichotomy, CliError> {
        Ok(match self {
            DichotomyJson::Quantum { rho, sigma } => Dichotomy::new(
                DensityOperator::new(rho.to_hermitian()?)?,
                DensityOperator::new(sigma.to_hermitian()?)?,
            )?,
            DichotomyJson::Classical { p, q } => Dichotomy::classical(p, q)?,
        })
    }
}

pub fn read_dichotomy(path: &Path) -> Result<Dichotomy, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let parsed: DichotomyJson =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad dichotomy in {}: {e}", path.display())))?;
    parsed.build()
}

pub const FIG2_GIBBS: [f64; 2] = [0.95, 0.05];
pub const FIG2_POPULATION: f64 = 0.85;
pub const FIG2_TARGET: [f64; 2] = [0.75, 0.25];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RatePreset {
    /// Coherent qubit ρ(x) → diag(0.75, 0.25) against γ = diag(0.95, 0.05).
    Fig2,
    /// Three-outcome mixture family against the uniform state.
    #[value(name = "appendixG")]
    AppendixG,
}

pub fn fig2_pair(x: f64) -> Result<(Dichotomy, Dichotomy), CliError> {
    let gamma = DensityOperator::from_diag(&FIG2_GIBBS)?;
    let input = Dichotomy::new(coherent_qubit_family(FIG2_POPULATION, x)?, gamma.clone())?;
    let target = Dichotomy::new(DensityOperator::from_diag(&FIG2_TARGET)?, gamma)?;
    Ok((input, target))
}

pub fn preset_pair(
    preset: RatePreset,
    x: Option<f64>,
    mix: Option<f64>,
    direction: Direction,
) -> Result<(Resource, Resource), CliError> {
    match preset {
        RatePreset::Fig2 => {
            let x = x.ok_or_else(|| CliError::Input("preset fig2 needs --x".into()))?;
            let (a, b) = fig2_pair(x)?;
            Ok((a.into(), b.into()))
        }
        RatePreset::AppendixG => {
            let mix = mix.ok_or_else(|| CliError::Input("preset appendixG needs --mix".into()))?;
            Ok(appendix_pair(mix, direction)?)
        }
    }
}
