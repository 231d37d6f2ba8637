//! Command-line front end for the link simulator: BER sweeps, complexity
//! tables, convergence histograms, and a built-in self test.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use dcdlink::complexity::{
    calibrated_rows, dcd_addition_histogram, render_report, scenario_total, DetectorKind,
    ScenarioModel,
};
use dcdlink::equalizer::{dcd_bound, default_step_for, DcdProblem};
use dcdlink::harness::output::{render_complexity_tsv, render_histogram_tsv};
use dcdlink::harness::{run_point, run_sweep, write_outputs, ChestMode};
use dcdlink::refsig::{gold_sequence, GoldConfig};
use dcdlink::SimConfig64;

#[derive(Parser)]
#[command(
    name = "dcdlink",
    version,
    about = "Link-level simulator for a quantized multi-user MIMO uplink"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep over the SNR grid and write result files.
    Sweep(RunArgs),
    /// Print the operation-count and gate tables.
    Complexity(RunArgs),
    /// Run one SNR point and report the solver's convergence histogram.
    Histogram(RunArgs),
    /// Run built-in consistency checks.
    Selftest,
}

/// Options shared by the simulating subcommands. Every flag overrides the
/// corresponding key of the configuration file.
#[derive(Args, Default)]
struct RunArgs {
    /// Flat key/value configuration file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of simultaneous users (1..=8).
    #[arg(long)]
    users: Option<usize>,
    /// Number of receive antennas.
    #[arg(long)]
    rx: Option<usize>,
    /// Converter resolution in bits per rail.
    #[arg(long = "adc-bits")]
    adc_bits: Option<u32>,
    /// Comma-separated per-user SNR grid in dB.
    #[arg(long)]
    snr: Option<String>,
    /// Independent slots per SNR point.
    #[arg(long)]
    slots: Option<usize>,
    /// Master seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel knowledge: mmse (pilot-based) or ideal (genie).
    #[arg(long)]
    chest: Option<String>,
    /// Detector: dcd or mmse.
    #[arg(long)]
    detector: Option<String>,
    /// Pilots consulted per interpolated subcarrier.
    #[arg(long)]
    kc: Option<usize>,
    /// Step-halving budget of the coordinate-descent solver.
    #[arg(long)]
    mb: Option<u32>,
    /// Accepted-update budget ("inf" for unlimited).
    #[arg(long)]
    nu: Option<String>,
    /// Box bound on each symbol rail.
    #[arg(long)]
    bound: Option<f64>,
    /// Output directory for result files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn build_config(&self) -> Result<SimConfig64> {
        let mut cfg = SimConfig64::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)
                .with_context(|| format!("reading {}", path.display()))?;
        }
        let overrides: [(&str, Option<String>); 11] = [
            ("users", self.users.map(|v| v.to_string())),
            ("rx", self.rx.map(|v| v.to_string())),
            ("adc_bits", self.adc_bits.map(|v| v.to_string())),
            ("snr", self.snr.clone()),
            ("slots", self.slots.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("chest", self.chest.clone()),
            ("detector", self.detector.clone()),
            ("kc", self.kc.map(|v| v.to_string())),
            ("mb", self.mb.map(|v| v.to_string())),
            ("nu", self.nu.clone()),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                cfg.apply_kv(key, &value)?;
            }
        }
        if let Some(bound) = self.bound {
            cfg.apply_kv("bound", &bound.to_string())?;
            // Keep the step admissible under a tightened box.
            if cfg.dcd.step > cfg.dcd.bound {
                cfg.dcd.step = default_step_for(cfg.dcd.bound);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &SimConfig64) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn cmd_sweep(args: &RunArgs) -> Result<()> {
    let cfg = args.build_config()?;
    let sweep = run_sweep(&cfg)?;
    println!("snr_db\tber\tci_low\tci_high\tbit_errors\tbits");
    for p in &sweep.points {
        let r = &p.record;
        println!(
            "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{}",
            r.snr_db, r.ber, r.ci_low, r.ci_high, r.bit_errors, r.bits
        );
    }
    let dir = args.out_dir(&cfg);
    let written = write_outputs(&cfg, &sweep, &dir)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_complexity(args: &RunArgs) -> Result<()> {
    let cfg = args.build_config()?;
    print!("{}", render_report(cfg.n_rx, cfg.n_users));
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let txt = dir.join("complexity.txt");
        std::fs::write(&txt, render_report(cfg.n_rx, cfg.n_users))?;
        let tsv = dir.join("complexity.tsv");
        std::fs::write(&tsv, render_complexity_tsv(cfg.n_rx, cfg.n_users)?)?;
        println!("wrote {}", txt.display());
        println!("wrote {}", tsv.display());
    }
    Ok(())
}

fn cmd_histogram(args: &RunArgs) -> Result<()> {
    let cfg = args.build_config()?;
    if cfg.detector != DetectorKind::Dcd {
        bail!("the convergence histogram requires the coordinate-descent detector (--detector dcd)");
    }
    if cfg.snr_grid_db.len() != 1 {
        bail!(
            "histogram runs a single SNR point; got {} (pass e.g. --snr 0)",
            cfg.snr_grid_db.len()
        );
    }
    let snr = cfg.snr_grid_db[0];
    let point = run_point(&cfg, snr)?;
    let stats = point
        .solver
        .as_ref()
        .expect("the coordinate-descent detector always reports solver statistics");
    println!("snr_db = {snr}");
    println!("solves = {}", stats.solves);
    println!("mean_additions = {:.4}", stats.histogram.mean);
    println!("min_additions = {}", stats.histogram.min);
    println!("max_additions = {}", stats.histogram.max);
    println!("ber = {:.6e}", point.record.ber);
    print!("{}", render_histogram_tsv(&stats.histogram));
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("dcd_additions.tsv");
        std::fs::write(&path, render_histogram_tsv(&stats.histogram))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn check(name: &str, ok: bool, detail: String) -> Result<()> {
    if ok {
        println!("ok   {name}");
        Ok(())
    } else {
        bail!("FAIL {name}: {detail}");
    }
}

fn cmd_selftest() -> Result<()> {
    // Scrambling-sequence generator against its frozen prefix.
    let bits = gold_sequence(&GoldConfig::new(1, 64))?;
    let text: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
    let frozen = "0000001010000011000000110111010000101011100110101111110111100010";
    check("pilot base sequence", text == frozen, text)?;

    // Bounded coordinate descent against its hand-executed reference run.
    let problem = DcdProblem::new(
        DMatrix::<f64>::identity(2, 2),
        DVector::from_vec(vec![0.5, 0.25]),
        0.5,
        1.0,
    );
    let out = dcd_bound(&problem)?;
    let trace_ok = (out.x[0] - 0.5).abs() < 1e-15
        && (out.x[1] - 0.25).abs() < 1e-15
        && out.ledger.additions == 6
        && out.ledger.comparisons == 22
        && out.ledger.bit_shifts == 32
        && out.ledger.multiplications == 0;
    check("solver reference run", trace_ok, format!("{:?}", out.ledger))?;

    // Gate accounting against the published per-scenario totals.
    let mut totals = Vec::new();
    for det in [DetectorKind::Mmse, DetectorKind::Dcd] {
        let rows = calibrated_rows(det);
        for model in [ScenarioModel::per_symbol(), ScenarioModel::shared_gram()] {
            totals.push(scenario_total(&rows, &model, det)?);
        }
    }
    check(
        "gate accounting",
        totals == vec![29_547_700, 109_040_100, 24_810_000, 99_840_800],
        format!("{totals:?}"),
    )?;

    // A miniature end-to-end run: reproducible, and clean when quantization
    // and interference are removed.
    let mut cfg = SimConfig64::default();
    cfg.n_users = 1;
    cfg.n_rx = 8;
    cfg.n_sc = 16;
    cfg.k_c = 8;
    cfg.n_slots = 2;
    cfg.adc_bits = 14;
    cfg.chest = ChestMode::Ideal;
    cfg.snr_grid_db = vec![40.0];
    let a = run_point(&cfg, 40.0)?;
    let b = run_point(&cfg, 40.0)?;
    check(
        "clean-channel detection",
        a.record.bit_errors == 0,
        format!("ber {}", a.record.ber),
    )?;
    check("reproducibility", a == b, "runs diverged".into())?;

    let ledgers = [out.ledger];
    let hist = dcd_addition_histogram(&ledgers)?;
    check(
        "histogram binning",
        hist.counts[0] == 1 && hist.samples == 1,
        format!("{:?}", hist.counts),
    )?;

    println!("selftest passed");
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Complexity(args) => cmd_complexity(args),
        Command::Histogram(args) => cmd_histogram(args),
        Command::Selftest => cmd_selftest(),
    }
}
