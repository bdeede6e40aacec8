//! Batch experiment runner: every toolkit module behind one binary with
//! JSON configs in, JSON reports (plus CSV series) out.
//!
//! Exit codes: 0 success, 2 negative verdict (infeasible, check failed),
//! 1 error. Reports embed the config hash, seed, tolerances and library
//! version; reruns with an identical config are byte-identical.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use cgpo_core::protocol::pipeline::{EstimatorWiring, Pipeline, PipelineParams};
use cgpo_core::schema::{lorenz_curve_csv, FeasibilityOutcomeJson};
use cgpo_core::thermo::{gibbs_probs, lorenz_curve, thermomajorization_margin, Alpha};
use cgpo_core::{
    apply, build_catalyst, channel_power, correlated_catalytic_convert, extended_free_energy,
    free_energy, iid_estimator_distribution, is_covariant, is_covariant_sampled, is_cptp,
    is_gibbs_preserving, random_gp_channel, tensor_power, time_evolve, trace_distance,
    ClassicalDistribution, ConvertBudget, QuantumChannel,
};

use config::*;

#[derive(Parser)]
#[command(name = "cgpo-kit", version, about = "Covariant Gibbs-preserving operation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the JSON config document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the report and CSV series (stdout only when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dimension budget override (also honors CGPO_KIT_MAX_DIM).
    #[arg(long, global = true)]
    max_dim: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Free energy F(ρ) = S(ρ‖ρ_Gibbs), plus optional Rényi orders.
    FreeEnergy,
    /// Lorenz-curve dominance verdict for a classical pair.
    Thermomajorize,
    /// CPTP / Gibbs-preserving / covariance checks on a channel.
    CheckChannel,
    /// Search for a (covariant) Gibbs-preserving channel.
    Feasibility,
    /// Covariant phase estimation: variance scaling over copy counts.
    PhaseEst,
    /// Estimation/shift sandwich around an inner map.
    Pipeline,
    /// Compile a many-copy map into a correlated catalyst and run it.
    Catalyst,
    /// End-to-end correlated-catalytic conversion.
    Convert,
    /// Reproduce the built-in two-level example end to end.
    ReproduceExample,
}

/// Verdict-bearing commands exit 2 when the verdict is negative.
enum Verdict {
    Positive,
    Negative,
}

struct Runner {
    config_raw: String,
    out_dir: Option<PathBuf>,
    seed: u64,
    command_name: &'static str,
}

impl Runner {
    fn emit<T: Serialize>(&self, report: &T, series: &[(String, String)]) -> anyhow::Result<()> {
        let envelope = json!({
            "command": self.command_name,
            "version": env!("CARGO_PKG_VERSION"),
            "config_sha256": hex_digest(self.config_raw.as_bytes()),
            "seed": self.seed,
            "max_dim": cgpo_core::dim_budget(),
            "report": report,
        });
        let rendered = serde_json::to_string_pretty(&envelope)?;
        println!("{rendered}");
        if let Some(dir) = &self.out_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.json", self.command_name)), &rendered)?;
            for (name, content) in series {
                std::fs::write(dir.join(name), content)?;
            }
        }
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn read_config(path: &Option<PathBuf>) -> anyhow::Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("cannot read config {}", p.display())),
        None => Ok("{}".to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(dim) = cli.max_dim {
        std::env::set_var("CGPO_KIT_MAX_DIM", dim.to_string());
    }
    let config_raw = match read_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let command_name = match cli.command {
        Command::FreeEnergy => "free-energy",
        Command::Thermomajorize => "thermomajorize",
        Command::CheckChannel => "check-channel",
        Command::Feasibility => "feasibility",
        Command::PhaseEst => "phase-est",
        Command::Pipeline => "pipeline",
        Command::Catalyst => "catalyst",
        Command::Convert => "convert",
        Command::ReproduceExample => "reproduce-example",
    };
    let runner = Runner {
        config_raw,
        out_dir: cli.out,
        seed: cli.seed.unwrap_or(0),
        command_name,
    };
    let result = match cli.command {
        Command::FreeEnergy => cmd_free_energy(&runner),
        Command::Thermomajorize => cmd_thermomajorize(&runner),
        Command::CheckChannel => cmd_check_channel(&runner),
        Command::Feasibility => cmd_feasibility(&runner),
        Command::PhaseEst => cmd_phase_est(&runner),
        Command::Pipeline => cmd_pipeline(&runner),
        Command::Catalyst => cmd_catalyst(&runner),
        Command::Convert => cmd_convert(&runner),
        Command::ReproduceExample => cmd_reproduce_example(&runner),
    };
    match result {
        Ok(Verdict::Positive) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_free_energy(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: FreeEnergyConfig = parse(&r.config_raw, "free-energy")?;
    let h = cfg.system.hamiltonian()?;
    let beta = cfg.system.beta();
    let rho = cfg.state.resolve()?;
    let f = free_energy(&rho, &h, beta)?;
    let mut alpha_values = Vec::new();
    if !cfg.alpha_grid.is_empty() || cfg.include_infinite_orders {
        let p = ClassicalDistribution::from_state_diagonal(&rho)?;
        for &a in &cfg.alpha_grid {
            alpha_values.push(json!({
                "alpha": a,
                "extended_free_energy": extended_free_energy(&p, &h, beta, Alpha::finite(a))?,
                "infinite_order": false,
            }));
        }
        if cfg.include_infinite_orders {
            for (label, alpha) in [("+inf", Alpha::PlusInfinity), ("-inf", Alpha::MinusInfinity)] {
                alpha_values.push(json!({
                    "alpha": label,
                    "extended_free_energy": extended_free_energy(&p, &h, beta, alpha)?,
                    "infinite_order": true,
                }));
            }
        }
    }
    let report = json!({
        "beta": beta,
        "hamiltonian": hamiltonian_json(&h),
        "free_energy": f,
        "alpha_orders": alpha_values,
    });
    r.emit(&report, &[])?;
    Ok(Verdict::Positive)
}

fn cmd_thermomajorize(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: ThermomajorizeConfig = parse(&r.config_raw, "thermomajorize")?;
    let h = cfg.system.hamiltonian()?;
    let beta = cfg.system.beta();
    let p = ClassicalDistribution::new(cfg.p.clone())?;
    let p_prime = ClassicalDistribution::new(cfg.p_prime.clone())?;
    let q = ClassicalDistribution::new(gibbs_probs(&h, beta))?;
    let margin = thermomajorization_margin(&p, &p_prime, &q)?;
    let verdict = margin >= -1e-12;
    let mut series = Vec::new();
    if cfg.export_curves {
        series.push((
            "lorenz_p.csv".to_string(),
            lorenz_curve_csv(&lorenz_curve(&p, &q)?),
        ));
        series.push((
            "lorenz_p_prime.csv".to_string(),
            lorenz_curve_csv(&lorenz_curve(&p_prime, &q)?),
        ));
    }
    let report = json!({
        "verdict": verdict,
        "margin": margin,
        "gibbs": q.probs(),
    });
    r.emit(&report, &series)?;
    Ok(if verdict { Verdict::Positive } else { Verdict::Negative })
}

fn cmd_check_channel(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: CheckChannelConfig = parse(&r.config_raw, "check-channel")?;
    let ch = cfg.channel.to_channel()?;
    let beta = cfg.beta.unwrap_or(1.0);
    let tol = cfg.tol.unwrap_or(1e-8);
    let cptp = is_cptp(&ch, tol);
    let gp = is_gibbs_preserving(&ch, beta, tol)?;
    let cov = is_covariant(&ch, tol);
    let sampled = match cfg.sampled_grid {
        Some(grid) => Some(is_covariant_sampled(&ch, grid, tol)?),
        None => None,
    };
    let all = cptp.pass && gp.pass && cov.pass;
    let report = json!({
        "tol": tol,
        "beta": beta,
        "cptp": cptp,
        "gibbs_preserving": gp,
        "covariant": cov,
        "covariant_sampled": sampled,
    });
    r.emit(&report, &[])?;
    Ok(if all { Verdict::Positive } else { Verdict::Negative })
}

fn cmd_feasibility(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: FeasibilityConfig = parse(&r.config_raw, "feasibility")?;
    let problem = cfg.problem.to_problem()?;
    let outcome = cgpo_core::feasibility::solve(&problem)?;
    let mut out_json = FeasibilityOutcomeJson::from_outcome(&outcome);
    if !cfg.include_witness {
        out_json.channel = None;
    }
    r.emit(&out_json, &[])?;
    Ok(if outcome.found() {
        Verdict::Positive
    } else {
        Verdict::Negative
    })
}

fn cmd_phase_est(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: PhaseEstConfig = parse(&r.config_raw, "phase-est")?;
    let h = cfg.system.hamiltonian()?;
    let rho = cfg.state.resolve()?;
    let mut rows = vec!["m,variance,failure_prob".to_string()];
    let mut points = Vec::new();
    for &m in &cfg.copies {
        let dist = iid_estimator_distribution(&rho, &h, m, cfg.bins)?;
        let (variance, failure) = match cfg.mode {
            PhaseEstMode::ExactDistribution => (dist.circular_variance(), dist.failure_prob()),
            PhaseEstMode::Sample => {
                use rand::SeedableRng;
                let shots = cfg.shots.unwrap_or(10_000);
                let mut rng =
                    rand_chacha::ChaCha8Rng::seed_from_u64(r.seed.wrapping_add(m as u64));
                let samples: Vec<f64> = (0..shots).map(|_| dist.sample(&mut rng)).collect();
                (sample_circular_variance(&samples, dist.period()), dist.failure_prob())
            }
        };
        rows.push(format!("{m},{variance},{failure}"));
        points.push(json!({"m": m, "variance": variance, "failure_prob": failure}));
    }
    let slope = loglog_slope(
        &cfg.copies.iter().map(|&m| m as f64).collect::<Vec<_>>(),
        &points
            .iter()
            .map(|p| p["variance"].as_f64().unwrap())
            .collect::<Vec<_>>(),
    );
    let report = json!({
        "bins": cfg.bins,
        "mode": if cfg.mode == PhaseEstMode::Sample { "sample" } else { "exact_distribution" },
        "points": points,
        "loglog_slope": slope,
    });
    r.emit(&report, &[("phase_est.csv".to_string(), rows.join("\n") + "\n")])?;
    Ok(Verdict::Positive)
}

/// Circular statistics of raw samples over one period.
fn sample_circular_variance(samples: &[f64], period: f64) -> f64 {
    use cgpo_core::protocol::povm::wrap_time;
    let tau = std::f64::consts::TAU;
    let (mut s, mut c) = (0.0, 0.0);
    for &t in samples {
        s += (t / period * tau).sin();
        c += (t / period * tau).cos();
    }
    let mean = s.atan2(c) / tau * period;
    samples
        .iter()
        .map(|&t| {
            let d = wrap_time(t - mean, period);
            d * d
        })
        .sum::<f64>()
        / samples.len() as f64
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn resolve_lambda(
    spec: &LambdaSpec,
    h: &cgpo_core::HarmonicHamiltonian,
    beta: f64,
    set_size: usize,
) -> anyhow::Result<QuantumChannel> {
    match (&spec.random_gp_seed, &spec.channel) {
        (Some(seed), None) => {
            let single = random_gp_channel(h, beta, *seed, false)?;
            Ok(channel_power(&single, set_size)?)
        }
        (None, Some(ch)) => Ok(ch.to_channel()?),
        _ => anyhow::bail!("lambda needs exactly one of random_gp_seed or channel"),
    }
}

fn cmd_pipeline(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: PipelineConfig = parse(&r.config_raw, "pipeline")?;
    let h = cfg.system.hamiltonian()?;
    let beta = cfg.system.beta();
    let rho = cfg.state.resolve()?;
    let lambda = resolve_lambda(&cfg.lambda, &h, beta, cfg.params.set_size)?;
    let params = PipelineParams {
        total_copies: cfg.params.total_copies,
        delta: cfg.params.delta,
        set_size: cfg.params.set_size,
        bins: cfg.params.bins,
        lambda_error: 0.1,
        accept_error: 0.05,
        wiring: EstimatorWiring::Independent,
    };
    let pipe = Pipeline::new(&lambda, &h, params, &rho)?;
    let channel = pipe.to_channel()?;
    let cov = is_covariant(&channel, 1e-9);
    let gp = is_gibbs_preserving(&channel, beta, 1e-10)?;

    // Covariance residual series over a time grid.
    let grid = cfg.covariance_grid.unwrap_or(16);
    let h_in = pipe.h_in()?;
    let h_out = pipe.h_out()?;
    let mut rows = vec!["t,covariance_residual".to_string()];
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(r.seed);
    let probe = cgpo_core::DensityMatrix::new(cgpo_core::linalg::random_density_matrix(
        h_in.dim(),
        &mut rng,
    ))?;
    let mut worst: f64 = 0.0;
    for k in 0..grid {
        let t = h.period() * k as f64 / grid as f64;
        let lhs = apply(&channel, &time_evolve(&probe, &h_in, t)?)?;
        let rhs = time_evolve(&apply(&channel, &probe)?, &h_out, t)?;
        let resid = trace_distance(&lhs, &rhs)?;
        worst = worst.max(resid);
        rows.push(format!("{t},{resid}"));
    }

    // Per-set conversion quality against the inner map's own target.
    let set_output = pipe.exact_set_output(&rho)?;
    let direct = apply(&lambda, &tensor_power(&rho, cfg.params.set_size)?)?;
    let sandwich_spread = trace_distance(&set_output, &direct)?;

    let report = json!({
        "layout": pipe.layout(),
        "covariant": cov,
        "gibbs_preserving": gp,
        "worst_grid_covariance_residual": worst,
        "per_set_sandwich_spread": sandwich_spread,
    });
    r.emit(&report, &[("pipeline_covariance.csv".to_string(), rows.join("\n") + "\n")])?;
    Ok(if cov.pass && gp.pass {
        Verdict::Positive
    } else {
        Verdict::Negative
    })
}

fn cmd_catalyst(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: CatalystConfig = parse(&r.config_raw, "catalyst")?;
    let h = cfg.system.hamiltonian()?;
    let beta = cfg.system.beta();
    let rho = cfg.state.resolve()?;
    let target = cfg.target.resolve()?;
    let lambda = resolve_lambda(&cfg.lambda, &h, beta, cfg.copies)?;
    let run = build_catalyst(&lambda, &rho)?;
    let restoration_ok = run.restoration_error < 1e-9;
    let report = json!({
        "copies": cfg.copies,
        "catalyst_dim": run.catalyst.dim(),
        "restoration_error": run.restoration_error,
        "conversion_error": run.conversion_error(&target)?,
        "max_marginal_error": run.max_marginal_error(&target)?,
    });
    r.emit(&report, &[])?;
    Ok(if restoration_ok {
        Verdict::Positive
    } else {
        Verdict::Negative
    })
}

fn cmd_convert(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: ConvertConfig = parse(&r.config_raw, "convert")?;
    let h = cfg.system.hamiltonian()?;
    let beta = cfg.system.beta();
    let rho = cfg.state.resolve()?;
    let target = cfg.target.resolve()?;
    let mut budget = ConvertBudget::default();
    if let Some(n) = cfg.compile_copies {
        budget.compile_copies = n;
    }
    if let Some(b) = cfg.bisection_steps {
        budget.bisection_steps = b;
    }
    let report = correlated_catalytic_convert(&rho, &target, &h, beta, &budget)?;
    let feasible = report.feasible;
    r.emit(&report, &[])?;
    Ok(if feasible { Verdict::Positive } else { Verdict::Negative })
}

fn cmd_reproduce_example(r: &Runner) -> anyhow::Result<Verdict> {
    let cfg: ReproduceConfig = parse(&r.config_raw, "reproduce-example")?;
    let report = cgpo_core::run_witness_checks(cfg.scan_step.unwrap_or(1e-4))?;
    let pass = report.all_checks_pass;
    r.emit(&report, &[])?;
    Ok(if pass { Verdict::Positive } else { Verdict::Negative })
}
