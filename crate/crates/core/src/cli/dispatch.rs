use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::cli::config::{Command, DiffusionInit, ExperimentConfig, StartRule};
use crate::diagnostics::stats::median;
use crate::diagnostics::{autocorrelation, estimate_coefficients, risk_curves, se_table, RiskOptions, RiskSource, SeTableConfig};
use crate::diffusion::{occupation_measure, simulate_sde, DiffusionSpec, SdeInit, SdeOptions};
use crate::error::{Error, Result};
use crate::metrics::{bl_distance, MetricConfig, RangePolicy};
use crate::model::{moment_estimator, sample_dataset, write_dataset_csv, write_file, Dataset, DatasetMeta, MixtureFamily};
use crate::posterior::{bvm_distance, lan_residual, limit_posterior, posterior_grid, BvmOptions};
use crate::rng::{stream, tags};
use crate::samplers::chain::{header_block, ChainRunner};
use crate::samplers::proposal::IndependenceProposal;

/// Header lines written at the top of every output file.
pub fn output_header(cfg: &ExperimentConfig) -> Vec<String> {
    let mut lines = vec![format!("mixchain {}", env!("CARGO_PKG_VERSION"))];
    lines.extend(cfg.to_lines());
    lines
}

/// Summary of a finished run: files written and lines for the terminal.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Runs the configured experiment, writing its outputs under `cfg.out`.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    let out = Path::new(&cfg.out);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let run = || match cfg.command {
        Command::Gen => run_gen(cfg, out),
        Command::Chain => run_chain_cmd(cfg, out),
        Command::Table => run_table(cfg, out),
        Command::Coeffs => run_coeffs(cfg, out),
        Command::Bvm => run_bvm(cfg, out),
        Command::Lan => run_lan(cfg, out),
        Command::Diffusion => run_diffusion(cfg, out),
        Command::Risk => run_risk(cfg, out),
    };
    if cfg.threads == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::domain("dispatch", format!("cannot start {} workers: {e}", cfg.threads)))?
            .install(run)
    }
}

fn dataset_for(cfg: &ExperimentConfig, n: usize, index: u64) -> Result<(MixtureFamily, Dataset)> {
    let family = cfg.family_for_n(n)?;
    let mut rng = stream(cfg.seed, &[tags::DATASET, n as u64, index]);
    let ds = sample_dataset(&family, cfg.theta_true, n, &mut rng)?;
    Ok((family, ds))
}

fn metric(cfg: &ExperimentConfig) -> MetricConfig {
    MetricConfig {
        cap: cfg.cap,
        grid_size: cfg.grid_size,
        range: RangePolicy::UnionSupport,
    }
}

fn write_text(path: PathBuf, header: &[String], columns: &str, rows: &[String], out: &mut Outcome) -> Result<()> {
    let mut text = header_block(header);
    text.push_str(columns);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    write_file(&path, text.as_bytes())?;
    out.files.push(path);
    Ok(())
}

fn run_gen(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let mut outcome = Outcome::default();
    for &n in &cfg.n {
        let (family, ds) = dataset_for(cfg, n, 0)?;
        let path = dir.join(format!("dataset_n{n}.csv"));
        write_dataset_csv(&path, &ds, &header)?;
        let meta = DatasetMeta {
            family: family.name().to_string(),
            eps: family.eps(),
            sigma: family.sigma(),
            n,
            seed: cfg.seed,
            theta_true: cfg.theta_true,
        };
        let meta_path = path.with_extension("meta");
        write_file(&meta_path, meta.to_text().as_bytes())?;
        outcome.summary.push(format!("n={n} mean={:.6} Z_n={:.6}", ds.mean(), ds.z()));
        outcome.files.push(path);
        outcome.files.push(meta_path);
    }
    Ok(outcome)
}

fn run_chain_cmd(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let (n, m) = (cfg.n[0], cfg.m[0]);
    let (family, ds) = dataset_for(cfg, n, 0)?;
    let prior = cfg.prior()?;
    let post = posterior_grid(&ds, &family, &prior, cfg.points)?;
    let bayes = post.mean();
    let runner = ChainRunner::new(cfg.kernel, &ds, &family, &prior)?;
    let mut start_rng = stream(cfg.seed, &[tags::START, n as u64, 0]);
    let theta0 = match cfg.start {
        StartRule::Moment => moment_estimator(&ds, &family)?,
        StartRule::Posterior => post.quantile(start_rng.random()),
        StartRule::Proposal => runner
            .proposal()
            .ok_or_else(|| Error::domain("chain", "start=proposal needs an mh kernel"))?
            .sample(&mut start_rng),
    };
    let mut chain_rng = stream(cfg.seed, &[tags::CHAIN, n as u64, 0]);
    let mut path = runner.run(theta0, m, &mut chain_rng)?;
    path.seed = Some(cfg.seed);
    let mut outcome = Outcome::default();
    let csv = dir.join("chain.csv");
    path.write_csv(&csv, &header)?;
    outcome.files.push(csv.clone());
    outcome.files.push(csv.with_extension("meta"));
    if cfg.emit_scaled {
        let scaled = dir.join("chain_scaled.csv");
        let mut h = header.clone();
        h.push(format!("theta_tilde={bayes}"));
        write_file(&scaled, path.scaled_csv(bayes, &h).as_bytes())?;
        outcome.files.push(scaled);
    }
    outcome.summary.push(format!("kernel={} n={n} m={m} theta0={theta0:.6}", cfg.kernel));
    outcome.summary.push(format!("bayes estimate {bayes:.6}, path mean {:.6}", path.mean()));
    if let Some(rate) = path.acceptance_rate() {
        outcome.summary.push(format!("acceptance rate {rate:.4}"));
    }
    if m > 2 {
        if let Ok(rho) = autocorrelation(&path.values, 1) {
            outcome.summary.push(format!("lag-1 autocorrelation {rho:.4}"));
        }
    }
    Ok(outcome)
}

fn run_table(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let table_cfg = SeTableConfig {
        family: cfg.family_for_n(cfg.n[0])?,
        eps_rule: cfg.epsilon,
        n_list: cfg.n.clone(),
        m_list: cfg.m.clone(),
        replications: cfg.replications,
        kernel: cfg.kernel,
        prior: cfg.prior()?,
        theta_true: cfg.theta_true,
        seed: cfg.seed,
    };
    let table = se_table(&table_cfg)?;
    let path = dir.join("se_table.csv");
    table.write_csv(&path, &header)?;
    let mut outcome = Outcome::default();
    outcome.files.push(path);
    outcome.summary.push(format!("n \\ m {}", cfg.m.iter().map(|m| format!("{m:>12}")).collect::<String>()));
    for &n in &cfg.n {
        let row: String = cfg
            .m
            .iter()
            .map(|&m| format!("{:>12.6}", table.get(n, m).map_or(f64::NAN, |c| c.se)))
            .collect();
        outcome.summary.push(format!("{n:<5} {row}"));
    }
    Ok(outcome)
}

fn run_coeffs(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let n = cfg.n[0];
    let (family, ds) = dataset_for(cfg, n, 0)?;
    let prior = cfg.prior()?;
    let exp = cfg.centering.expansion(&ds, &family);
    let mut rows = Vec::new();
    let mut outcome = Outcome::default();
    for (k, &h) in cfg.h.iter().enumerate() {
        let mut rng = stream(cfg.seed, &[tags::COEFFICIENTS, n as u64, k as u64]);
        let est = estimate_coefficients(h, &ds, &prior, cfg.reps, &mut rng)?;
        let b_limit = prior.alpha1 + h * exp.z - h * h * exp.information;
        rows.push(format!("{},{b_limit},{}", est.csv_row(), 2.0 * h));
        outcome.summary.push(format!(
            "h={h}: b_hat={:.4} (limit {b_limit:.4}) c_hat={:.4} (limit {:.4}) d_hat={:.5}",
            est.b_hat,
            est.c_hat,
            2.0 * h,
            est.d_hat
        ));
    }
    let path = dir.join("coefficients.csv");
    let columns = format!("{},b_limit,c_limit", crate::diagnostics::CoefficientEstimate::CSV_HEADER);
    write_text(path, &header, &columns, &rows, &mut outcome)?;
    Ok(outcome)
}

fn per_dataset<T: Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(&MixtureFamily, &Dataset) -> Result<T> + Sync,
) -> Result<Vec<(usize, Vec<T>)>> {
    cfg.n
        .iter()
        .map(|&n| {
            let vals = (0..cfg.datasets as u64)
                .into_par_iter()
                .map(|d| {
                    let (family, ds) = dataset_for(cfg, n, d)?;
                    f(&family, &ds)
                })
                .collect::<Result<Vec<T>>>()?;
            Ok((n, vals))
        })
        .collect()
}

fn run_bvm(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let prior = cfg.prior()?;
    let opts = BvmOptions {
        tail_threshold: cfg.tail_threshold,
        centering: cfg.centering,
        points: cfg.points,
    };
    let results = per_dataset(cfg, |family, ds| bvm_distance(ds, family, &prior, &opts))?;
    let mut rows = Vec::new();
    let mut outcome = Outcome::default();
    for (n, reps) in &results {
        for (d, r) in reps.iter().enumerate() {
            rows.push(format!("{n},{d},{},{},{},{}", r.tv, r.tail, r.z, r.information));
        }
        let tvs: Vec<f64> = reps.iter().map(|r| r.tv).collect();
        outcome.summary.push(format!("n={n}: median TV {:.5}", median(&tvs)));
    }
    write_text(dir.join("bvm.csv"), &header, "n,dataset,tv,tail,z,information", &rows, &mut outcome)?;
    Ok(outcome)
}

fn run_lan(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let results = per_dataset(cfg, |family, ds| {
        lan_residual(ds, family, cfg.h_max, cfg.lan_grid, cfg.centering)
    })?;
    let mut rows = Vec::new();
    let mut outcome = Outcome::default();
    for (n, reps) in &results {
        for (d, r) in reps.iter().enumerate() {
            rows.push(format!("{n},{d},{r}"));
        }
        outcome.summary.push(format!("n={n}: median sup-residual {:.5}", median(reps)));
    }
    write_text(dir.join("lan.csv"), &header, "n,dataset,residual", &rows, &mut outcome)?;
    Ok(outcome)
}

fn run_diffusion(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let spec = DiffusionSpec::new(cfg.z, cfg.alpha1, cfg.information)?;
    let init = match cfg.init {
        DiffusionInit::Fixed(h) => SdeInit::Fixed(h),
        DiffusionInit::Posterior => SdeInit::LimitPosterior,
    };
    let opts = SdeOptions {
        horizon: cfg.horizon,
        dt: cfg.dt,
        stride: cfg.stride,
    };
    let mut rng = stream(cfg.seed, &[tags::SDE, 0]);
    let path = simulate_sde(&spec, init, &opts, &mut rng)?;
    let mut outcome = Outcome::default();
    let path_csv = dir.join("diffusion_path.csv");
    path.write_csv(&path_csv, &header)?;
    outcome.files.push(path_csv);
    let metric = metric(cfg);
    let occ = occupation_measure(&path, path.horizon(), &metric)?;
    let occ_csv = dir.join("occupation.csv");
    occ.write_csv(&occ_csv, &header)?;
    outcome.files.push(occ_csv);
    let limit = limit_posterior(cfg.z, cfg.information, cfg.alpha1, cfg.points)?;
    let d = bl_distance(&occ, limit.measure(), &metric)?;
    outcome.summary.push(format!(
        "time average {:.5} (stationary mean {:.5}), bl distance to stationary law {d:.5}",
        path.time_average,
        limit.mean()
    ));
    Ok(outcome)
}

fn run_risk(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let header = output_header(cfg);
    let n = cfg.n[0];
    let (family, ds) = dataset_for(cfg, n, 0)?;
    let prior = cfg.prior()?;
    let opts = RiskOptions {
        source: RiskSource::Kernel(cfg.kernel),
        chains: cfg.chains,
        metric: metric(cfg),
    };
    let mut rng = stream(cfg.seed, &[tags::RISK, n as u64]);
    let report = risk_curves(&ds, &family, &prior, &cfg.m, &opts, &mut rng)?;
    let path = dir.join("risk.csv");
    report.write_csv(&path, &header)?;
    let mut outcome = Outcome::default();
    outcome.files.push(path);
    for k in 0..report.m.len() {
        outcome.summary.push(format!(
            "m={}: R={:.5} (se {:.5}) R'={:.5} (se {:.5})",
            report.m[k], report.r[k], report.se_r[k], report.r_prime[k], report.se_r_prime[k]
        ));
    }
    Ok(outcome)
}
