//! Deterministic result files: BER curves, convergence histograms,
//! complexity tables, and the run manifest. Identical configurations and
//! seeds produce byte-identical files (no timestamps, no environment).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::complexity::{
    calibrated_rows, modeled_rows, render_report, scenario_total, AdditionHistogram,
    DetectorKind, ScenarioModel, TableRow, CALIBRATED_RX, CALIBRATED_USERS,
};
use crate::error::{Error, Result};
use crate::harness::{SimConfig, SweepResult};
use crate::num::Scalar;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Render a BER curve as two tab-separated columns (SNR in dB, error rate).
pub fn render_ber_tsv(sweep: &SweepResult) -> String {
    let mut s = String::from("x\ty\n");
    for p in &sweep.points {
        let _ = writeln!(s, "{}\t{:.6e}", p.record.snr_db, p.record.ber);
    }
    s
}

/// Render a BER curve with the confidence interval and raw counts attached.
pub fn render_ber_detail_tsv(sweep: &SweepResult) -> String {
    let mut s = String::from("snr_db\tber\tci_low\tci_high\tbit_errors\tbits\n");
    for p in &sweep.points {
        let r = &p.record;
        let _ = writeln!(
            s,
            "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{}",
            r.snr_db, r.ber, r.ci_low, r.ci_high, r.bit_errors, r.bits
        );
    }
    s
}

/// Render a convergence histogram as two tab-separated columns
/// (left bin edge, count).
pub fn render_histogram_tsv(h: &AdditionHistogram) -> String {
    let mut s = String::from("bin_left\tcount\n");
    for (i, &count) in h.counts.iter().enumerate() {
        let _ = writeln!(s, "{:.4}\t{}", h.bin_left(i), count);
    }
    s
}

fn complexity_rows(n_rx: usize, n_users: usize, detector: DetectorKind) -> Vec<TableRow> {
    if (n_rx, n_users) == (CALIBRATED_RX, CALIBRATED_USERS) {
        calibrated_rows(detector)
    } else {
        modeled_rows(n_rx, n_users, detector)
    }
}

/// Render per-stage operation counts and per-scenario gate totals as TSV.
pub fn render_complexity_tsv(n_rx: usize, n_users: usize) -> Result<String> {
    let mut s = String::from("table\tdetector\tstage\tadditions\tmultiplications\tgates\n");
    let scenarios = [ScenarioModel::per_symbol(), ScenarioModel::shared_gram()];
    for detector in [DetectorKind::Mmse, DetectorKind::Dcd] {
        let rows = complexity_rows(n_rx, n_users, detector);
        for row in &rows {
            let _ = writeln!(
                s,
                "stages\t{}\t{}\t{}\t{}\t{}",
                detector.label(),
                row.stage.label(),
                row.ops.adds,
                row.ops.mults,
                row.gates
            );
        }
        for model in &scenarios {
            let total = scenario_total(&rows, model, detector)?;
            let _ = writeln!(
                s,
                "totals\t{}\tscenario_{}\t\t\t{}",
                detector.label(),
                model.id,
                total
            );
        }
    }
    Ok(s)
}

/// Write every result file for a finished sweep into `out_dir`, creating it
/// if needed. Returns the paths written, in a fixed order.
pub fn write_outputs<T: Scalar>(
    cfg: &SimConfig<T>,
    sweep: &SweepResult,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut written = Vec::new();

    let ber = out_dir.join("ber.tsv");
    write_file(&ber, &render_ber_tsv(sweep))?;
    written.push(ber);

    let detail = out_dir.join("ber_detail.tsv");
    write_file(&detail, &render_ber_detail_tsv(sweep))?;
    written.push(detail);

    let mut histogram_note = String::new();
    if let Some(point) = sweep.histogram_point() {
        let stats = point
            .solver
            .as_ref()
            .expect("histogram point always carries solver statistics");
        let hist = out_dir.join("dcd_additions.tsv");
        write_file(&hist, &render_histogram_tsv(&stats.histogram))?;
        written.push(hist);
        let _ = writeln!(histogram_note, "histogram_snr = {}", point.record.snr_db);
        let _ = writeln!(histogram_note, "histogram_solves = {}", stats.solves);
        let _ = writeln!(
            histogram_note,
            "histogram_mean_additions = {:.4}",
            stats.histogram.mean
        );
    }

    let table_txt = out_dir.join("complexity.txt");
    write_file(&table_txt, &render_report(cfg.n_rx, cfg.n_users))?;
    written.push(table_txt);

    let table_tsv = out_dir.join("complexity.tsv");
    write_file(&table_tsv, &render_complexity_tsv(cfg.n_rx, cfg.n_users)?)?;
    written.push(table_tsv);

    let manifest = out_dir.join("manifest.txt");
    let mut body = cfg.manifest();
    body.push_str(&histogram_note);
    for p in &written {
        if let Some(name) = p.file_name().and_then(|n| n.to_str()) {
            let _ = writeln!(body, "output = {name}");
        }
    }
    let _ = writeln!(body, "output = manifest.txt");
    write_file(&manifest, &body)?;
    written.push(manifest);

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_sweep;

    fn tiny_sweep() -> (SimConfig<f64>, SweepResult) {
        let mut cfg = SimConfig::<f64>::default();
        cfg.n_users = 2;
        cfg.n_rx = 8;
        cfg.n_sc = 16;
        cfg.k_c = 8;
        cfg.n_slots = 1;
        cfg.snr_grid_db = vec![-5.0, 5.0];
        let sweep = run_sweep(&cfg).unwrap();
        (cfg, sweep)
    }

    #[test]
    fn ber_tsv_shape() {
        let (_, sweep) = tiny_sweep();
        let text = render_ber_tsv(&sweep);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x\ty");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("-5\t"));
        assert!(lines[2].starts_with("5\t"));
    }

    #[test]
    fn histogram_tsv_has_one_row_per_bin() {
        let (_, sweep) = tiny_sweep();
        let stats = sweep.histogram_point().unwrap().solver.as_ref().unwrap();
        let text = render_histogram_tsv(&stats.histogram);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_left\tcount");
        assert_eq!(lines.len(), 1 + stats.histogram.counts.len());
        assert!(lines[1].starts_with("1000.0000\t"));
        // Second edge: 1000 + 200/3.
        assert!(lines[2].starts_with("1066.6667\t"));
    }

    #[test]
    fn complexity_tsv_covers_both_detectors_and_scenarios() {
        let text = render_complexity_tsv(64, 8).unwrap();
        assert!(text.contains("totals\tmmse\tscenario_1\t\t\t29547700"));
        assert!(text.contains("totals\tmmse\tscenario_2\t\t\t109040100"));
        assert!(text.contains("totals\tdcd\tscenario_1\t\t\t24810000"));
        assert!(text.contains("totals\tdcd\tscenario_2\t\t\t99840800"));
    }

    #[test]
    fn written_files_are_byte_identical_across_runs() {
        let (cfg, sweep) = tiny_sweep();
        let dir_a = std::env::temp_dir().join("dcdlink_out_a");
        let dir_b = std::env::temp_dir().join("dcdlink_out_b");
        let wrote_a = write_outputs(&cfg, &sweep, &dir_a).unwrap();
        let sweep_b = run_sweep(&cfg).unwrap();
        let wrote_b = write_outputs(&cfg, &sweep_b, &dir_b).unwrap();
        assert_eq!(wrote_a.len(), wrote_b.len());
        for (a, b) in wrote_a.iter().zip(&wrote_b) {
            let ca = std::fs::read(a).unwrap();
            let cb = std::fs::read(b).unwrap();
            assert_eq!(ca, cb, "{} differs", a.display());
        }
    }
}
