use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use katugampola::{exact_solution, AuditSettings, ProblemParams, SolveConfig, TestFunction};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flat parameter bag shared by every subcommand. The same struct is read
/// from the JSON config and from the command line; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
#[command(rename_all = "snake_case")]
pub struct RunConfig {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweep cells and audit horizons.
    #[arg(long)]
    pub jobs: Option<usize>,

    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Initial value; defaults to that of the power solution when it has one.
    #[arg(long, allow_negative_numbers = true)]
    pub xa: Option<f64>,

    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub grading: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub picard_tol: Option<f64>,
    #[arg(long)]
    pub picard_max: Option<usize>,
    #[arg(long)]
    pub blowup_cap: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Audit horizons, comma separated and strictly increasing.
    #[arg(long = "T", value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(rename = "T")]
    pub t_values: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda_tf: Option<f64>,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mu_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub m_values: Option<Vec<f64>>,
    /// Exponents given as multiples of each cell's threshold.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub m_factors: Option<Vec<f64>>,
    /// Cells above the threshold use the matched type and initial value.
    #[arg(long)]
    pub match_global: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, out, format, jobs, alpha, beta, rho, a, mu, m, lambda, xa, n, grading,
            horizon, picard_tol, picard_max, blowup_cap, theta, t_values, lambda_tf,
            alpha_values, mu_values, m_values, m_factors, match_global,
        );
        self
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn jobs(&self) -> Result<usize, CliError> {
        match self.jobs {
            Some(0) => Err(CliError::field("jobs", "must be positive")),
            Some(j) => Ok(j),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    /// Problem parameters with `x_a` left at the default when unset.
    pub fn base_params(&self) -> Result<ProblemParams, CliError> {
        let d = ProblemParams::default();
        let p = ProblemParams {
            alpha: self.alpha.unwrap_or(d.alpha),
            beta: self.beta.unwrap_or(d.beta),
            rho: self.rho.unwrap_or(d.rho),
            a: self.a.unwrap_or(d.a),
            mu: self.mu.unwrap_or(d.mu),
            m: self.m.unwrap_or(d.m),
            lambda: self.lambda.unwrap_or(d.lambda),
            x_a: self.xa.unwrap_or(d.x_a),
        };
        p.validate()?;
        Ok(p)
    }

    /// Problem parameters; an unset `xa` becomes the initial value of the
    /// power solution when that is positive.
    pub fn params(&self) -> Result<ProblemParams, CliError> {
        let p = self.base_params()?;
        if self.xa.is_some() {
            return Ok(p);
        }
        match exact_solution(&p).ok().and_then(|e| e.x_a) {
            Some(xa) if xa > 0.0 => Ok(p.with_x_a(xa)),
            _ => Ok(p),
        }
    }

    pub fn solve_config(&self, default_n: usize, default_horizon: f64) -> Result<SolveConfig, CliError> {
        let d = SolveConfig::default();
        let cfg = SolveConfig {
            n: self.n.unwrap_or(default_n),
            grading: self.grading.unwrap_or(d.grading),
            horizon: self.horizon.unwrap_or(default_horizon),
            picard_tol: self.picard_tol.unwrap_or(d.picard_tol),
            picard_max: self.picard_max.unwrap_or(d.picard_max),
            blowup_cap: self.blowup_cap.unwrap_or(d.blowup_cap),
        };
        cfg.validate()?;
        self.mesh_fields(cfg.n, cfg.grading)?;
        Ok(cfg)
    }

    fn mesh_fields(&self, n: usize, grading: f64) -> Result<(), CliError> {
        if n == 0 {
            return Err(CliError::field("n", "must be positive"));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(CliError::field("grading", format!("{grading} must be >= 1")));
        }
        Ok(())
    }

    pub fn mesh_n(&self, default_n: usize) -> Result<(usize, f64), CliError> {
        let n = self.n.unwrap_or(default_n);
        let q = self.grading.unwrap_or(3.0);
        self.mesh_fields(n, q)?;
        Ok((n, q))
    }

    pub fn horizons(&self) -> Result<Vec<f64>, CliError> {
        let ts = self.t_values.clone().unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
        if ts.iter().any(|t| !t.is_finite()) {
            return Err(CliError::field("T", "values must be finite"));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::field("T", "values must be strictly increasing"));
        }
        Ok(ts)
    }

    pub fn audit_settings(&self, params: &ProblemParams) -> Result<AuditSettings, CliError> {
        let (n, grading) = self.mesh_n(2048)?;
        let theta = self.theta.unwrap_or(0.5);
        if !(theta > 0.0 && theta <= 0.5) {
            return Err(CliError::field("theta", format!("{theta} not in (0, 1/2]")));
        }
        let lambda_tf = self
            .lambda_tf
            .unwrap_or_else(|| TestFunction::bounded_quotient_exponent(params.m));
        if !(lambda_tf >= 1.0) {
            return Err(CliError::field("lambda_tf", format!("{lambda_tf} must be >= 1")));
        }
        Ok(AuditSettings { theta, lambda_tf, n, grading })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_json(r#"{"alpha": 0.3, "n": 64, "T": [10, 20]}"#).unwrap();
        let flags = RunConfig { alpha: Some(0.7), ..Default::default() };
        let cfg = file.overlay(&flags);
        assert_eq!(cfg.alpha, Some(0.7));
        assert_eq!(cfg.n, Some(64));
        assert_eq!(cfg.t_values, Some(vec![10.0, 20.0]));
    }

    #[test]
    fn unknown_keys_and_bad_fields_are_rejected() {
        assert!(RunConfig::from_json(r#"{"alpah": 0.3}"#).is_err());
        let cfg = RunConfig { alpha: Some(1.5), ..Default::default() };
        let err = cfg.params().unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
        let cfg = RunConfig { t_values: Some(vec![10.0, 5.0]), ..Default::default() };
        assert!(cfg.horizons().is_err());
    }

    #[test]
    fn default_initial_value_comes_from_power_solution() {
        let p = RunConfig::default().params().unwrap();
        let want = exact_solution(&p).unwrap().x_a.unwrap();
        assert_eq!(p.x_a, want);
    }
}
