use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use whitham_lab::cnls::{evolve_to, write_state, CnlsParams};
use whitham_lab::correctors::write_residual_report;
use whitham_lab::spectral::StripSchedule;
use whitham_lab::validate::{self, ExperimentConfig, NuRelation, ValidityReport};
use whitham_lab::whitham::{classify, integrate, write_trajectory, Integration, ViscositySetting};

#[derive(Parser)]
#[command(name = "whitham-lab", version, about = "CNLS modulation validity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; missing keys take the headline defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, base: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => base.load_over(p)?,
            None => base,
        };
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Error of the modulation approximation, expected O(eps^2).
    TheoremC {
        #[command(flatten)]
        common: Common,
    },
    /// Error of the corrected approximation, expected O(eps^(2n+2)).
    TheoremD {
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Drop the correctors from the comparison target.
        #[arg(long)]
        decoupled: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstructed wavetrain on |x| <= eps^-b, expected O(eps^(2n+1-b)).
    Phase {
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Residual of the truncated expansion, expected O(nu^(n+1)).
    ResidualScaling {
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Characteristic type of the modulation system at a state.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        gamma1: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma2: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// r1,v1,r2,v2
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,0,0")]
        point: Vec<f64>,
    },
    /// Evolves the synthesized CNLS data and writes the final state.
    SimulateCnls {
        #[arg(long)]
        eps: f64,
        /// Slow end time; defaults to the config horizon.
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Integrates the modulation equations and writes the sampled trajectory.
    SimulateWme {
        #[command(flatten)]
        common: Common,
    },
}

fn finish_validity(report: &ValidityReport, cfg: &ExperimentConfig) -> Result<bool> {
    let dir = cfg.output_dir.join(&report.experiment);
    validate::emit_report(report, &dir)?;
    print!("{}", validate::digest(report));
    println!("written to {}", dir.display());
    Ok(report.gate_ok())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::TheoremC { common } => {
            let cfg = common.load(ExperimentConfig::default())?;
            finish_validity(&validate::run_theorem_c(&cfg)?, &cfg)
        }
        Command::TheoremD { n, decoupled, common } => {
            let mut cfg = common.load(ExperimentConfig::higher_order())?;
            cfg.order = n;
            if decoupled {
                cfg.nu_relation = NuRelation::Zero;
            }
            finish_validity(&validate::run_theorem_d(&cfg)?, &cfg)
        }
        Command::Phase { b, n, common } => {
            let mut cfg = common.load(ExperimentConfig::phase())?;
            cfg.order = n;
            cfg.phase_b = b;
            finish_validity(&validate::run_phase_comparison(&cfg)?, &cfg)
        }
        Command::ResidualScaling { n, common } => {
            let cfg = common.load(ExperimentConfig::default())?;
            let rep = validate::run_residual_scaling(&cfg, n)?;
            write_residual_report(&cfg.output_dir, &rep.residual)?;
            for (nu, s) in &rep.residual.sups {
                println!("nu {nu:<8} sup residual {s:.6e}");
            }
            println!(
                "fitted order {:.4} (R^2 {:.5}), expected {} +/- {}: {}",
                rep.residual.fit.order,
                rep.residual.fit.r2,
                rep.expected_order,
                rep.tolerance,
                if rep.passed { "pass" } else { "FAIL" }
            );
            Ok(rep.passed)
        }
        Command::Classify {
            gamma1,
            gamma2,
            alpha,
            point,
        } => {
            let p = CnlsParams::new(gamma1, gamma2, alpha)?;
            let pt: [f64; 4] = point.try_into().map_err(|_| anyhow::anyhow!("--point needs 4 values"))?;
            print!("{}", classify(pt, &p).to_key_value());
            Ok(true)
        }
        Command::SimulateCnls { eps, t, common } => {
            let cfg = common.load(ExperimentConfig::default())?;
            if !(eps > 0.0 && eps < 1.0) {
                bail!("eps must lie in (0, 1)");
            }
            let setup = validate::setup(&cfg)?;
            let start = validate::synthesize_cnls(&setup.u0, eps, cfg.fast_modes)?;
            let t_end = t.unwrap_or(cfg.horizon) / eps;
            let state = evolve_to(&start, t_end, cfg.cnls_dt, &setup.params)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            let path = cfg.output_dir.join(format!("cnls_eps{eps}.csv"));
            write_state(&path, &state, &setup.params).with_context(|| path.display().to_string())?;
            println!("written to {}", path.display());
            Ok(true)
        }
        Command::SimulateWme { common } => {
            let cfg = common.load(ExperimentConfig::default())?;
            let setup = validate::setup(&cfg)?;
            let mut plan = Integration::covering(cfg.horizon, cfg.wme_dt, cfg.samples);
            plan.strip_guard = cfg.strip_guard;
            let beta = cfg.betas.iter().copied().fold(f64::INFINITY, f64::min);
            let traj = integrate(&setup.u0_fine, &setup.params, 0.0, &ViscositySetting::laplacian(beta), &plan)?;
            let sched = StripSchedule::new(cfg.sigma0, cfg.sigma0 / (2.0 * cfg.horizon))?;
            let dir = cfg.output_dir.join("wme");
            write_trajectory(&dir, &traj, &sched, cfg.s_evolution)?;
            println!("written to {}", dir.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
