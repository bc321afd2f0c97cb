//! Run-scale configuration shared by the command line and the verification
//! gate. A config fixes the combinatorial scale (decorations, truncation),
//! the regularity, the grid, the arithmetic backend, and the I/O locations.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::rough_paths::check_depth;
use crate::scalar::{q_int, q_render, Q};
use crate::suites::{gamma_default, BPHZ_SEEDS, DEC_DEFAULT, DEPTH_DEFAULT, TRUNC_DEFAULT};
use crate::trees::Decoration;

/// Environment variable overriding the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "HOPFPATH_OUT";

/// Arithmetic backend: exact rationals or double precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn parse(text: &str) -> Result<Mode> {
        match text {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Config {
                message: format!("mode must be `exact` or `float`, got `{other}`"),
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

/// One run's worth of knobs. `trunc` is the series truncation N tied to the
/// regularity by gamma * N <= 1 < gamma * (N + 1): N is the largest level
/// whose weight stays within one.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub d: Decoration,
    pub trunc: u32,
    pub gamma: Q,
    pub grid_depth: u32,
    pub mode: Mode,
    pub seed: u64,
    pub rule_file: Option<PathBuf>,
    pub character_file: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            d: DEC_DEFAULT,
            trunc: TRUNC_DEFAULT,
            gamma: gamma_default(),
            grid_depth: DEPTH_DEFAULT,
            mode: Mode::Exact,
            seed: BPHZ_SEEDS[0],
            rule_file: None,
            character_file: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Largest truncation compatible with the regularity: the unique N >= 1
/// with gamma * N <= 1 < gamma * (N + 1).
pub fn max_trunc_for(gamma: &Q) -> Result<u32> {
    check_gamma(gamma)?;
    let one = q_int(1);
    let mut n = 1u32;
    while gamma * &q_int(i64::from(n) + 1) <= one {
        n += 1;
        if n > 64 {
            return Err(Error::Config {
                message: format!(
                    "regularity {} admits truncations beyond 64; refusing the scale",
                    q_render(gamma)
                ),
            });
        }
    }
    Ok(n)
}

fn check_gamma(gamma: &Q) -> Result<()> {
    if gamma <= &q_int(0) || gamma >= &q_int(1) {
        return Err(Error::Config {
            message: format!("gamma must lie strictly between 0 and 1, got {}", q_render(gamma)),
        });
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::Config { message: "at least one decoration is required".into() });
        }
        if self.trunc < 1 {
            return Err(Error::Config { message: "truncation must be at least 1".into() });
        }
        check_gamma(&self.gamma)?;
        let n = max_trunc_for(&self.gamma)?;
        if self.trunc != n {
            return Err(Error::Config {
                message: format!(
                    "truncation {} does not match the regularity: gamma = {} forces N = {n}",
                    self.trunc,
                    q_render(&self.gamma)
                ),
            });
        }
        check_depth(self.grid_depth)?;
        Ok(())
    }

    /// Output directory after the environment override.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn the_default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn truncation_is_pinned_by_the_regularity() {
        assert_eq!(max_trunc_for(&q(6, 25)).unwrap(), 4);
        assert_eq!(max_trunc_for(&q(1, 4)).unwrap(), 4);
        assert_eq!(max_trunc_for(&q(13, 50)).unwrap(), 3);
        assert_eq!(max_trunc_for(&q(1, 2)).unwrap(), 2);

        let mut cfg = RunConfig { trunc: 3, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
        cfg.gamma = q(13, 50);
        cfg.validate().unwrap();
    }

    #[test]
    fn degenerate_regularities_are_rejected() {
        assert!(max_trunc_for(&q_int(0)).is_err());
        assert!(max_trunc_for(&q_int(1)).is_err());
        assert!(max_trunc_for(&q(-1, 3)).is_err());
        let cfg = RunConfig { grid_depth: 40, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        assert_eq!(Mode::parse("exact").unwrap(), Mode::Exact);
        assert_eq!(Mode::parse("float").unwrap(), Mode::Float);
        assert_eq!(Mode::Float.as_str(), "float");
        assert!(Mode::parse("interval").is_err());
    }
}
