//! Batch front-end: deterministic experiment drivers over the library, one
//! subcommand per capability. Outputs are CSV/JSON files in the configured
//! directory; every row carries the config hash and crate version.
//!
//! Exit codes: 0 ok, 2 config error, 3 convergence failure, 4 io error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use catlab::cat_family::{complexity, CatFamily};
use catlab::config::{CsvWriter, RunConfig};
use catlab::coupling::{
    couple_segments, decoupled_fraction, random_state, scheme_step,
    star_norm, AlignedSquare, SchemeParams,
};
use catlab::foliation::{build_f1, build_f2, disintegration_check, leaf_dump};
use catlab::measures::{
    equidistribution_defect, monte_carlo_pushforward, mu_all, pushforward_profile, MeasuresError,
    SquareGrid,
};
use catlab::response::{diff_quotients, response_series, ResponseError};
use catlab::standard_pairs::{growth_stats, StandardFamily, StandardSegment};

#[derive(Parser)]
#[command(name = "catlab", version, about = "perturbed cat map laboratory")]
struct Cli {
    /// TOML configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the forward (depth k) and backward singularity segments.
    Singset {
        /// Parameter as a fraction, e.g. 1/8.
        #[arg(long, default_value = "1/8")]
        t: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
    },
    /// Pushforward profile m(phi . F^n) for the battery up to depth n.
    Pushforward {
        #[arg(long, default_value = "1/64")]
        t: String,
        #[arg(long, default_value_t = 6)]
        n: usize,
        /// Also run the Monte-Carlo cross-check at this depth.
        #[arg(long)]
        mc: bool,
    },
    /// Physical-measure estimates for the battery at one parameter.
    Mu {
        #[arg(long, default_value = "1/64")]
        t: String,
    },
    /// Full response pipeline: series under the unperturbed map plus
    /// difference quotients over the configured t grid.
    Response,
    /// Regularity trace of an evolved standard family.
    Growth {
        #[arg(long, default_value = "1/16")]
        t: String,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        /// Initial segment length.
        #[arg(long, default_value_t = 1e-3)]
        w_len: f64,
    },
    /// Foliation leaves and disintegration residuals.
    Foliate {
        #[arg(long, default_value = "1/8")]
        t: String,
        #[arg(long, default_value_t = 48)]
        leaves: usize,
    },
    /// Equidistribution defect of an evolved vertical line over an
    /// eigen-aligned square grid.
    Equidist {
        #[arg(long, default_value = "1/32")]
        eta: String,
        #[arg(long, default_value_t = 16)]
        k_max: usize,
    },
    /// Scheme-parameter sweep: tau and the empirical contraction ratio.
    CouplingSweep {
        #[arg(long, default_value_t = 100)]
        tuples: usize,
    },
    /// Geometric coupling demo: couple two segments, evolve, decouple.
    CoupleDemo {
        #[arg(long, default_value = "1/16")]
        t: String,
    },
}

fn parse_fraction(s: &str) -> Result<(i64, i64), String> {
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|e| format!("{}", e))?;
        let d: i64 = d.trim().parse().map_err(|e| format!("{}", e))?;
        if d <= 0 {
            return Err("denominator must be positive".into());
        }
        Ok((n, d))
    } else {
        let v: f64 = s.trim().parse().map_err(|e| format!("{}", e))?;
        let den = 1i64 << 20;
        Ok(((v * den as f64).round() as i64, den))
    }
}

enum CliError {
    Config(String),
    Convergence(String),
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("{}", e))
    }
}

impl From<MeasuresError> for CliError {
    fn from(e: MeasuresError) -> Self {
        match e {
            MeasuresError::NoConvergence { .. } => CliError::Convergence(format!("{}", e)),
            other => CliError::Convergence(format!("{}", other)),
        }
    }
}

impl From<ResponseError> for CliError {
    fn from(e: ResponseError) -> Self {
        CliError::Convergence(format!("{}", e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {}", msg);
            ExitCode::from(2)
        }
        Err(CliError::Convergence(msg)) => {
            eprintln!("convergence failure: {}", msg);
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("io error: {}", msg);
            ExitCode::from(4)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| CliError::Config(format!("{}", e)))?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Config(format!("{}", e)))?;
    Ok(cfg)
}

fn family(t: (i64, i64)) -> Result<CatFamily<f64>, CliError> {
    CatFamily::new(t.0 as f64 / t.1 as f64).map_err(|e| CliError::Config(format!("{}", e)))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    let hash = cfg.hash();
    let version = catlab::VERSION;
    std::fs::create_dir_all(&cfg.out_dir)?;
    match &cli.cmd {
        Cmd::Singset { t, k } => {
            let t = parse_fraction(t).map_err(CliError::Config)?;
            if t.0 * 8 > t.1 || t.0 < 0 {
                return Err(CliError::Config(format!("t = {}/{} outside [0, 1/8]", t.0, t.1)));
            }
            let fam = family(t)?;
            let arr = fam
                .singularity_forward(*k, cfg.k_max)
                .map_err(|e| CliError::Config(format!("{}", e)))?;
            let path = cfg.out_dir.join(format!("singset_t{}_{}_k{}.csv", t.0, t.1, k));
            let mut csv = CsvWriter::create(
                &path,
                &["set", "k", "ax", "ay", "bx", "by", "config", "version"],
            )?;
            for s in &arr.segments {
                csv.row(&[
                    "forward".into(),
                    format!("{}", k),
                    format!("{}", s.a.x),
                    format!("{}", s.a.y),
                    format!("{}", s.b.x),
                    format!("{}", s.b.y),
                    hash.clone(),
                    version.into(),
                ])?;
            }
            for s in &fam.s_minus().segments {
                csv.row(&[
                    "backward".into(),
                    "0".into(),
                    format!("{}", s.a.x),
                    format!("{}", s.a.y),
                    format!("{}", s.b.x),
                    format!("{}", s.b.y),
                    hash.clone(),
                    version.into(),
                ])?;
            }
            println!(
                "singset: {} forward (k = {}) and {} backward segments -> {}",
                arr.segments.len(),
                k,
                fam.s_minus().segments.len(),
                path.display()
            );
        }
        Cmd::Pushforward { t, n, mc } => {
            let t = parse_fraction(t).map_err(CliError::Config)?;
            let fam = family(t)?;
            let profile = pushforward_profile(
                &fam,
                &cfg.battery,
                *n,
                cfg.lines,
                cfg.gl_order,
                cfg.gl_panel,
                cfg.fragment_budget,
            )?;
            let path = cfg.out_dir.join(format!("pushforward_t{}_{}.csv", t.0, t.1));
            let mut csv = CsvWriter::create(
                &path,
                &[
                    "t", "observable", "n", "lines", "nodes", "value", "delta", "seed", "config",
                    "version",
                ],
            )?;
            for step in 0..=*n {
                for (i, o) in cfg.battery.iter().enumerate() {
                    csv.row(&[
                        format!("{}", fam.t),
                        o.id().into(),
                        format!("{}", step),
                        format!("{}", cfg.lines),
                        format!("{}", cfg.gl_order),
                        format!("{}", profile.values[step][i]),
                        format!("{}", profile.outer_delta[step][i]),
                        format!("{}", cfg.seed),
                        hash.clone(),
                        version.into(),
                    ])?;
                }
            }
            if *mc {
                let est = monte_carlo_pushforward(&fam, &cfg.battery, *n, cfg.mc_samples, cfg.seed);
                for (o, (mean, se)) in cfg.battery.iter().zip(&est) {
                    println!(
                        "mc  {}: {} +/- {} (quad {})",
                        o.id(),
                        mean,
                        se,
                        profile.values[*n][cfg.battery.iter().position(|b| b == o).unwrap()]
                    );
                }
            }
            println!("pushforward profile -> {}", path.display());
        }
        Cmd::Mu { t } => {
            let t = parse_fraction(t).map_err(CliError::Config)?;
            let fam = family(t)?;
            let ests = mu_all(
                &fam,
                &cfg.battery,
                cfg.mu_tol,
                cfg.n_cap,
                cfg.lines,
                cfg.gl_order,
                cfg.gl_panel,
                cfg.fragment_budget,
            )?;
            let path = cfg.out_dir.join("mu_ledger.csv");
            let exists = path.exists();
            let mut rows = Vec::new();
            for e in &ests {
                rows.push(vec![
                    format!("{}", e.t),
                    e.observable.id().to_string(),
                    format!("{}", e.n),
                    format!("{}", e.lines),
                    format!("{}", e.nodes),
                    format!("{}", e.value),
                    format!("{}", e.delta),
                    format!("{}", cfg.seed),
                    hash.clone(),
                    version.to_string(),
                ]);
            }
            append_csv(
                &path,
                &[
                    "t", "observable", "n", "lines", "nodes", "value", "delta", "seed", "config",
                    "version",
                ],
                rows,
                exists,
            )?;
            for e in &ests {
                println!("mu_t({}) = {} (n = {}, delta = {:.2e})", e.observable.id(), e.value, e.n, e.delta);
            }
            println!("appended -> {}", path.display());
        }
        Cmd::Response => {
            let fam0 = CatFamily::new(0.0).expect("t = 0");
            let series = response_series(
                &fam0,
                &cfg.battery,
                cfg.series_k,
                12,
                cfg.gl_order.max(12),
                cfg.gl_panel,
                cfg.fragment_budget,
                cfg.series_dfs_leaves,
            )?;
            let mut quotients: Vec<Vec<(f64, f64, usize)>> = Vec::new();
            for &(num, den) in &cfg.t_grid {
                let fam = family((num, den))?;
                quotients.push(diff_quotients(
                    &fam,
                    &cfg.battery,
                    cfg.mu_tol,
                    cfg.n_cap,
                    cfg.lines,
                    cfg.gl_order,
                    cfg.gl_panel,
                    cfg.fragment_budget,
                )?);
            }
            let csv_path = cfg.out_dir.join("response.csv");
            let mut csv = CsvWriter::create(
                &csv_path,
                &[
                    "observable", "t", "quotient", "quotient_delta", "series", "k", "tail",
                    "seed", "config", "version",
                ],
            )?;
            let mut reports = Vec::new();
            for (i, o) in cfg.battery.iter().enumerate() {
                let series_val = series.series_value(i);
                let mut qrow = Vec::new();
                let mut max_rel = 0.0f64;
                for (ti, &(num, den)) in cfg.t_grid.iter().enumerate() {
                    let tv = num as f64 / den as f64;
                    let (q, d, _) = quotients[ti][i];
                    qrow.push(q);
                    let rel = (q - series_val).abs() / series_val.abs().max(1e-3);
                    max_rel = max_rel.max(rel);
                    csv.row(&[
                        o.id().into(),
                        format!("{}", tv),
                        format!("{}", q),
                        format!("{}", d),
                        format!("{}", series_val),
                        format!("{}", series.k),
                        format!("{}", series.tail[i]),
                        format!("{}", cfg.seed),
                        hash.clone(),
                        version.into(),
                    ])?;
                }
                reports.push(serde_json::json!({
                    "observable": o.id(),
                    "t_grid": cfg.t_values(),
                    "quotients": qrow,
                    "series": series_val,
                    "K": series.k,
                    "tail": series.tail[i],
                    "max_rel_err": max_rel,
                }));
            }
            let json = serde_json::json!({
                "schema": "catlab.response.v1",
                "config": hash,
                "version": version,
                "seed": cfg.seed,
                "reports": reports,
            });
            let json_path = cfg.out_dir.join("response.json");
            std::fs::write(&json_path, serde_json::to_string_pretty(&json).unwrap())?;
            println!("response -> {} and {}", csv_path.display(), json_path.display());
        }
        Cmd::Growth { t, steps, w_len } => {
            let t = parse_fraction(t).map_err(CliError::Config)?;
            let fam = family(t)?;
            let n0 = measured_n0(&fam, cfg.k_max);
            let w = StandardSegment::from_endpoints(
                [0.4, 0.4],
                [0.4 + w_len / 2f64.sqrt(), 0.4 + w_len / 2f64.sqrt()],
            )
            .map_err(|e| CliError::Config(format!("{}", e)))?;
            let stats = growth_stats(
                &fam,
                &StandardFamily::single(w),
                *steps,
                n0,
                cfg.fragment_budget,
                cfg.resample_particles,
                cfg.seed,
            );
            let path = cfg.out_dir.join(format!("growth_t{}_{}.csv", t.0, t.1));
            let mut csv = CsvWriter::create(
                &path,
                &["t", "step", "z", "n0", "fitted_z", "plateau", "config", "version"],
            )?;
            for (step, z) in stats.z_values.iter().enumerate() {
                csv.row(&[
                    format!("{}", fam.t),
                    format!("{}", step),
                    format!("{}", z),
                    format!("{}", n0),
                    format!("{}", stats.fitted_z),
                    format!("{}", stats.plateau),
                    hash.clone(),
                    version.into(),
                ])?;
            }
            println!(
                "growth: N0 = {}, fitted z = {:.4}, plateau = {:.3} -> {}",
                n0,
                stats.fitted_z,
                stats.plateau,
                path.display()
            );
        }
        Cmd::Foliate { t, leaves } => {
            let t = parse_fraction(t).map_err(CliError::Config)?;
            let tv = t.0 as f64 / t.1 as f64;
            let mut regions = build_f1(tv).map_err(|e| CliError::Config(format!("{}", e)))?;
            regions.extend(build_f2(tv).map_err(|e| CliError::Config(format!("{}", e)))?);
            let path = cfg.out_dir.join(format!("leaves_t{}_{}.csv", t.0, t.1));
            leaf_dump(&regions, *leaves, &path).map_err(|e| CliError::Io(format!("{}", e)))?;
            let res_path = cfg.out_dir.join(format!("disintegration_t{}_{}.csv", t.0, t.1));
            let mut csv = CsvWriter::create(
                &res_path,
                &["region", "test_fn", "residual", "config", "version"],
            )?;
            let tests: [(&str, fn([f64; 2]) -> f64); 3] = [
                ("one", |_| 1.0),
                ("xy", |p| p[0] * p[1]),
                ("cos2pix", |p| (2.0 * std::f64::consts::PI * p[0]).cos()),
            ];
            for region in &regions {
                for (name, g) in tests {
                    let res = disintegration_check(region, g, 1e-6)
                        .map_err(|e| CliError::Convergence(format!("{}", e)))?;
                    csv.row(&[
                        region.id.name().into(),
                        name.into(),
                        format!("{}", res),
                        hash.clone(),
                        version.into(),
                    ])?;
                }
            }
            println!("foliate -> {} and {}", path.display(), res_path.display());
        }
        Cmd::Equidist { eta, k_max } => {
            let eta = parse_fraction(eta).map_err(CliError::Config)?;
            let etav = eta.0 as f64 / eta.1 as f64;
            let fam = CatFamily::new(0.0).expect("t = 0");
            let grid = SquareGrid::new(&fam, etav);
            let w = StandardSegment::vertical(0.37);
            let path = cfg.out_dir.join("equidist.csv");
            let mut csv = CsvWriter::create(
                &path,
                &["eta", "k", "defect", "interior_cells", "config", "version"],
            )?;
            for k in 0..=*k_max {
                let d = equidistribution_defect(&fam, &w, &grid, k);
                csv.row(&[
                    format!("{}", etav),
                    format!("{}", k),
                    format!("{}", d),
                    format!("{}", grid.interior_count),
                    hash.clone(),
                    version.into(),
                ])?;
            }
            println!("equidist -> {}", path.display());
        }
        Cmd::CouplingSweep { tuples } => {
            let path = cfg.out_dir.join("coupling_sweep.csv");
            let mut csv = CsvWriter::create(
                &path,
                &[
                    "rho", "p_c", "beta1", "beta2", "psi_minus", "psi_plus", "status", "tau",
                    "empirical_ratio_max", "config", "version",
                ],
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            use rand::Rng;
            for _ in 0..*tuples {
                // Raw draw; invalid orderings get flagged instead of fixed.
                let rho: f64 = rng.random_range(0.05..0.49);
                let p_c: f64 = rng.random_range(0.01..1.0);
                let beta1 = rng.random_range(1..=4u32);
                let beta2 = rng.random_range(1..=5u32);
                let psi_minus: f64 = rng.random_range(0.05..0.499);
                let psi_plus: f64 = rng.random_range(1.0001..1.2);
                match SchemeParams::new(rho, p_c, beta1, beta2, psi_minus, psi_plus, 2.0, 0.25) {
                    Ok(p) => {
                        let tau = p.tau();
                        let mut worst = 0.0f64;
                        for _ in 0..20 {
                            let s = random_state(&mut rng, 8);
                            let before = star_norm(&s, &p);
                            let after = star_norm(&scheme_step(&s, &p), &p);
                            worst = worst.max(after / before);
                        }
                        csv.row(&[
                            format!("{}", rho),
                            format!("{}", p_c),
                            format!("{}", beta1),
                            format!("{}", beta2),
                            format!("{}", psi_minus),
                            format!("{}", psi_plus),
                            "ok".into(),
                            format!("{}", tau),
                            format!("{}", worst),
                            hash.clone(),
                            version.into(),
                        ])?;
                    }
                    Err(_) => {
                        csv.row(&[
                            format!("{}", rho),
                            format!("{}", p_c),
                            format!("{}", beta1),
                            format!("{}", beta2),
                            format!("{}", psi_minus),
                            format!("{}", psi_plus),
                            "rejected".into(),
                            String::new(),
                            String::new(),
                            hash.clone(),
                            version.into(),
                        ])?;
                    }
                }
            }
            println!("coupling sweep -> {}", path.display());
        }
        Cmd::CoupleDemo { t } => {
            let t = parse_fraction(t).map_err(CliError::Config)?;
            let fam = family(t)?;
            let e_u = fam.eigen.e_u;
            let e_s = fam.eigen.e_s;
            let mk = |c: [f64; 2], half: f64| {
                StandardSegment::from_endpoints(
                    [c[0] - half * e_u[0], c[1] - half * e_u[1]],
                    [c[0] + half * e_u[0], c[1] + half * e_u[1]],
                )
                .expect("demo segment")
            };
            let w1 = mk([0.5, 0.45], 0.35);
            let off = 8e-4;
            let w2 = mk([0.5 + off * e_s[0], 0.45 + off * e_s[1]], 0.3);
            let q = AlignedSquare::new(
                &fam,
                [0.5 + 0.5 * off * e_s[0], 0.45 + 0.5 * off * e_s[1]],
                2e-3 * 0.3,
            );
            let pair = couple_segments(&w1, &w2, &q, 2e-3 * 0.3)
                .map_err(|e| CliError::Config(format!("{}", e)))?;
            let n0 = measured_n0(&fam, cfg.k_max);
            let report = decoupled_fraction(&fam, &pair, 6, n0 as u32, cfg.k_max)
                .map_err(|e| CliError::Config(format!("{}", e)))?;
            println!(
                "coupled at eta = {:.3e}; per-step stable contraction {:.6} (mu_s = {:.6})",
                pair.eta, report.contraction_per_step, fam.eigen.mu_s
            );
            for (i, (loss, eta)) in report
                .block_losses
                .iter()
                .zip(&report.eta_sequence)
                .enumerate()
            {
                println!("block {}: eta {:.3e}, lost {:.3e}", i, eta, loss);
            }
            println!("surviving coupled mass: {:.6}", report.surviving_mass);
        }
    }
    Ok(())
}

/// Smallest depth with `(K + 1) < sqrt(2)^k`, capped at 10.
fn measured_n0(fam: &CatFamily<f64>, k_max: u32) -> usize {
    let lambda = 2f64.sqrt();
    for k in 1..=10u32 {
        if let Ok(kk) = complexity(fam, k, k_max.max(10)) {
            if ((kk + 1) as f64) < lambda.powi(k as i32) {
                return k as usize;
            }
        }
    }
    10
}

fn append_csv(
    path: &std::path::Path,
    header: &[&str],
    rows: Vec<Vec<String>>,
    exists: bool,
) -> Result<(), CliError> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if !exists {
        writeln!(file, "{}", header.join(","))?;
    }
    for row in rows {
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(())
}
