use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use s2r_gauss::calculus::GridChart;
use s2r_gauss::families::{FamilyKind, FamilySpec, ProfileMode};
use s2r_gauss::{Error, Real, Result};

/// Gauss maps of conformal minimal surfaces in S²×ℝ: generate example
/// families, check the minimality identities, reconstruct immersions from
/// their Gauss map.
///
/// Exit status: 0 pass, 1 tolerance failure, 2 configuration or I/O error,
/// 3 malformed input file, 4 degenerate input (constant or singular Gauss map).
#[derive(Debug, Parser)]
#[command(name = "s2r", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a family member; writes mesh.obj and fields.csv.
    Generate {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the residual suite and classification; writes verify.json and verify.csv.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        /// Also run at two refinements (2n-1, 4n-3) and report observed orders.
        #[arg(long)]
        convergence: bool,
        /// Relative tolerance for every identity, instead of the resolution default.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Recover both immersions with the input Gauss map; writes
    /// candidate_{1,2}.obj, candidate_{1,2}.csv and reconstruct.json.
    Reconstruct {
        #[command(flatten)]
        input: InputArgs,
        /// Value of r at the base node.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        r0: f64,
        /// Base node `i,j` (default: the central node).
        #[arg(long, value_parser = parse_node)]
        base: Option<(usize, usize)>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Plot tables from earlier runs: residual against spacing per identity,
    /// K and |g| along the central coordinate lines.
    Report {
        /// JSON report of a `verify --convergence` run.
        #[arg(long)]
        verify: Option<PathBuf>,
        /// Field table written by `generate`.
        #[arg(long)]
        fields: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Field table to read instead of generating a family.
    #[arg(long, conflicts_with = "family")]
    pub fields: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Compute in double-double arithmetic (family input only).
    #[arg(long, conflicts_with = "fields")]
    pub double_double: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Sphere,
    Cylinder,
    Helicoid,
    Unduloid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ode,
    ClosedForm,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long)]
    pub family: Option<FamilyName>,
    /// Height of the sphere S²×{a}.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a: f64,
    /// Unit normal of the cylinder's plane, `x,y,z`.
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,1", allow_hyphen_values = true)]
    pub normal: [f64; 3],
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Helicoid profile value at u = 0.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho0: f64,
    #[arg(long, default_value_t = 8.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Profile source (default: ode for helicoids, closed-form for unduloids).
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Chart bounds `u0,u1,v0,v1`.
    #[arg(long, value_parser = parse_chart, allow_hyphen_values = true)]
    pub chart: Option<[f64; 4]>,
    /// Samples per axis, `NUxNV` or `N`.
    #[arg(long, value_parser = parse_res, default_value = "101x101")]
    pub res: (usize, usize),
}

impl FamilyArgs {
    pub fn name(&self) -> Result<FamilyName> {
        self.family
            .ok_or_else(|| Error::Config("give --family or --fields".into()))
    }

    pub fn bounds(&self) -> Result<[f64; 4]> {
        Ok(self.chart.unwrap_or(match self.name()? {
            FamilyName::Sphere => [-0.3, 0.3, -0.3, 0.3],
            FamilyName::Cylinder => [-0.3, 0.3, 0.0, 0.6],
            FamilyName::Helicoid => [0.45, 0.55, 0.0, 0.1],
            FamilyName::Unduloid => [0.3, 0.4, 0.0, 0.1],
        }))
    }

    pub fn spec<T: Real>(&self, res: (usize, usize)) -> Result<FamilySpec<T>> {
        let [u0, u1, v0, v1] = self.bounds()?.map(T::lit);
        let chart = GridChart::new(u0, u1, v0, v1, res.0, res.1)?;
        let mode = |default| match self.mode.unwrap_or(default) {
            Mode::Ode => ProfileMode::Ode,
            Mode::ClosedForm => ProfileMode::ClosedForm,
        };
        let kind = match self.name()? {
            FamilyName::Sphere => FamilyKind::Sphere { a: T::lit(self.a) },
            FamilyName::Cylinder => FamilyKind::Cylinder {
                normal: self.normal.map(T::lit),
            },
            FamilyName::Helicoid => FamilyKind::Helicoid {
                beta: T::lit(self.beta),
                rho0: T::lit(self.rho0),
                mode: mode(Mode::Ode),
            },
            FamilyName::Unduloid => FamilyKind::Unduloid {
                alpha: T::lit(self.alpha),
                mode: mode(Mode::ClosedForm),
            },
        };
        FamilySpec::new(kind, chart)
    }
}

fn parse_list<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    xs.try_into()
        .map_err(|xs: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", xs.len()))
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_list(s)
}

fn parse_chart(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_list(s)
}

fn parse_res(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).unwrap_or((s, s));
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    let res = (n(a)?, n(b)?);
    if res.0 < 5 || res.1 < 5 {
        return Err(format!("resolution must be at least 5 per axis, got {s}"));
    }
    Ok(res)
}

fn parse_node(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn value_parsers() {
        assert_eq!(parse_res("201x101"), Ok((201, 101)));
        assert_eq!(parse_res("41"), Ok((41, 41)));
        assert!(parse_res("4x40").is_err());
        assert_eq!(parse_chart("-0.3,0.3,0,6.2"), Ok([-0.3, 0.3, 0.0, 6.2]));
        assert!(parse_chart("0,1,2").is_err());
        assert!(parse_vec3("0,a,1").is_err());
        assert_eq!(parse_node("3, 4"), Ok((3, 4)));
    }

    #[test]
    fn negative_chart_bounds_parse() {
        let cli = Cli::try_parse_from([
            "s2r",
            "generate",
            "--family",
            "sphere",
            "--chart",
            "-1,1,-1,1",
        ])
        .unwrap();
        let Command::Generate { family, .. } = cli.command else {
            panic!()
        };
        assert_eq!(family.bounds().unwrap(), [-1.0, 1.0, -1.0, 1.0]);
    }
}
