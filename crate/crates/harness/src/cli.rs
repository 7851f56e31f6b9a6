use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use gem_core::modes::{hermite_gauss, ModeIndex};
use gem_core::pgm::{render_intensity, write_pgm};
use gem_core::transport::{
    infer_diffusion_coefficient, kinetic_diffusion_coefficient, mean_thermal_speed,
};
use gem_core::units::ATOMIC_MASS_UNIT;
use gem_core::TransverseGrid;

use crate::analysis::fit_exponential_decay;
use crate::config::{RawConfig, OUTPUT_DIR_ENV};
use crate::error::{HarnessError, Result};
use crate::output::{read_table, result_csv, sweep_csv, write_images, write_text};
use crate::scenario::run_scenario;
use crate::sweep::sweep;

#[derive(Debug, Parser)]
#[command(
    name = "gemsim",
    version,
    about = "Gradient echo memory scenarios, sweeps and helpers"
)]
#[command(
    after_help = "The output directory of simulate and sweep can be overridden with GEMSIM_OUTPUT_DIR."
)]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its table and images.
    Simulate { config: PathBuf },
    /// Run a scenario once per value of one config key.
    Sweep {
        config: PathBuf,
        /// Dotted config key, e.g. memory.D_cm2_s.
        #[arg(long)]
        param: String,
        /// Comma-separated values, or semicolon-separated when values contain commas.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Render a Hermite-Gauss intensity profile as a PGM image.
    Modes {
        /// Orders as `m,n`.
        #[arg(long)]
        render: String,
        /// Beam waist in mm.
        #[arg(long)]
        waist: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long = "extent-mm", default_value_t = 12.0)]
        extent_mm: f64,
    },
    /// Fit a column of a CSV table against another.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: FitModel,
        /// Abscissa column (microseconds when named *_us).
        #[arg(long, default_value = "storage_time_us")]
        x: String,
        /// Ordinate column; defaults to total_efficiency (exp) or sigma2_m2 (linear).
        #[arg(long)]
        y: Option<String>,
    },
    /// Diffusion coefficient from buffer-gas kinetics.
    #[command(name = "estimate-d")]
    EstimateD {
        #[arg(long = "temp-K")]
        temp_k: f64,
        #[arg(long = "buffer-torr")]
        buffer_torr: f64,
        #[arg(long = "rate-MHz-per-torr")]
        rate_mhz_per_torr: f64,
        /// Atomic mass in atomic mass units.
        #[arg(long = "mass-amu", default_value_t = 86.909_180_527)]
        mass_amu: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Exp,
    Linear,
}

fn output_dir(configured: PathBuf) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or(configured)
}

fn split_values(s: &str) -> Vec<String> {
    let sep = if s.contains(';') { ';' } else { ',' };
    s.split(sep)
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect()
}

/// Execute a parsed command, writing the human-readable report to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let say = |out: &mut dyn std::io::Write, text: String| {
        writeln!(out, "{text}").map_err(|e| HarnessError::io("<stdout>", e))
    };
    match cli.command {
        Command::Simulate { config } => {
            let cfg = RawConfig::load(&config)?.build()?.with_env_output();
            let result = run_scenario(&cfg)?;
            let csv = cfg.output.dir.join(format!("{}.csv", cfg.scenario));
            write_text(&csv, &result_csv(&result))?;
            say(out, format!("wrote {}", csv.display()))?;
            if cfg.output.images {
                let imgs = write_images(&result, &cfg.output.dir, cfg.output.shared_scale)?;
                say(
                    out,
                    format!(
                        "wrote {} images to {}",
                        imgs.len(),
                        cfg.output.dir.display()
                    ),
                )?;
            }
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let raw = RawConfig::load(&config)?;
            let base = raw.build()?;
            let values = split_values(&values);
            let results = sweep(&raw, &param, &values)?;
            let dir = output_dir(base.output.dir);
            let csv = dir.join(format!("{}_sweep.csv", base.scenario));
            write_text(&csv, &sweep_csv(&param, &results))?;
            say(
                out,
                format!("wrote {} ({} runs)", csv.display(), results.len()),
            )?;
        }
        Command::Modes {
            render,
            waist,
            grid,
            extent_mm,
        } => {
            let idx: ModeIndex = render.parse()?;
            let g = TransverseGrid::square(grid, extent_mm * 1e-3)?;
            let field = hermite_gauss(idx, waist * 1e-3, &g)?;
            let (img, norm) = render_intensity(&field.intensity(), None);
            let dir = output_dir(PathBuf::from("out"));
            std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
            let path = dir.join(format!("{idx}.pgm"));
            write_pgm(&path, &img).map_err(|e| match e {
                gem_core::Error::Io(io) => HarnessError::io(&path, io),
                other => HarnessError::Core(other),
            })?;
            say(
                out,
                format!(
                    "wrote {} (peak intensity {norm:.6e} per m^2)",
                    path.display()
                ),
            )?;
        }
        Command::Fit { csv, model, x, y } => {
            let text = std::fs::read_to_string(&csv).map_err(|e| HarnessError::io(&csv, e))?;
            let table = read_table(&text)?;
            let y = y.unwrap_or_else(|| match model {
                FitModel::Exp => "total_efficiency".into(),
                FitModel::Linear => "sigma2_m2".into(),
            });
            let col = |name: &str| {
                table.column(name).ok_or_else(|| {
                    HarnessError::Config(format!("no column `{name}` in {}", csv.display()))
                })
            };
            let scale = if x.ends_with("_us") { 1e-6 } else { 1.0 };
            let pts: Vec<(f64, f64)> = col(&x)?
                .into_iter()
                .zip(col(&y)?)
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| (a * scale, b))
                .collect();
            match model {
                FitModel::Exp => {
                    let f = fit_exponential_decay(&pts)?;
                    say(out, format!("amplitude = {:.9e}", f.amplitude))?;
                    say(out, format!("tau_s = {:.9e}", f.tau))?;
                    say(out, format!("residual_rms = {:.3e}", f.residual_rms))?;
                    say(out, format!("curvature = {:.3e}", f.curvature))?;
                    if f.is_curved() {
                        say(out, "note: residuals curve systematically; the decay is not a single exponential".into())?;
                    }
                }
                FitModel::Linear => {
                    let f = infer_diffusion_coefficient(&pts)?;
                    say(out, format!("slope = {:.9e}", f.d))?;
                    say(out, format!("intercept = {:.9e}", f.intercept))?;
                    say(out, format!("slope_stderr = {:.3e}", f.slope_stderr))?;
                    say(out, format!("r_squared = {:.9}", f.r_squared))?;
                }
            }
        }
        Command::EstimateD {
            temp_k,
            buffer_torr,
            rate_mhz_per_torr,
            mass_amu,
        } => {
            if !(temp_k > 0.0 && buffer_torr > 0.0 && rate_mhz_per_torr > 0.0 && mass_amu > 0.0) {
                return Err(HarnessError::Config(
                    "all inputs to estimate-d must be positive".into(),
                ));
            }
            let mass = mass_amu * ATOMIC_MASS_UNIT;
            let rate = rate_mhz_per_torr * 1e6 * buffer_torr;
            let d = kinetic_diffusion_coefficient(temp_k, mass, rate);
            say(
                out,
                format!("mean_speed_m_s = {:.6}", mean_thermal_speed(temp_k, mass)),
            )?;
            say(out, format!("collision_rate_per_s = {rate:.6e}"))?;
            say(out, format!("D_cm2_s = {:.6}", d * 1e4))?;
        }
    }
    Ok(())
}
