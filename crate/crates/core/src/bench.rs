//! Benchmark grid over generated formulas and the three-engine agreement
//! check.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::generators::{generate, Family, GenConfig};
use crate::matrix::MatrixMode;
use crate::sat::{solve_cnf, Verdict};
use crate::solve::{compile, solve_with_witness, Engine, SolveOptions};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub families: Vec<Family>,
    pub ns: Vec<usize>,
    pub ms: Vec<usize>,
    pub reps: usize,
    /// Instance `r` of every cell uses seed `seed + r`.
    pub seed: u64,
    pub cap: usize,
}

/// One elimination run of one instance in one matrix mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub verdict: Option<Verdict>,
    /// Proper resolvents, or `cap + 1` when the cap was hit.
    pub resolvents: usize,
    pub capped: bool,
    /// Seconds spent producing the propositional instance.
    pub time: f64,
    pub sat_time: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeStats {
    pub mean_time: f64,
    pub std_time: f64,
    pub mean_resolvents: f64,
    pub std_resolvents: f64,
    pub capped: usize,
    pub runs: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub family: String,
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    pub matrix_on: ModeStats,
    pub matrix_off: ModeStats,
}

fn run_one(cfg: &GenConfig, matrix: Option<MatrixMode>, cap: usize) -> RunRecord {
    let formula = generate(cfg);
    let opts = SolveOptions { matrix, cap, seed: Some(cfg.seed), ..Default::default() };
    let started = Instant::now();
    let compiled = compile(&formula, &opts);
    let time = started.elapsed().as_secs_f64();
    match compiled {
        Ok(c) => {
            let started = Instant::now();
            let sat = solve_cnf(&c.cnf, true);
            RunRecord {
                seed: cfg.seed,
                verdict: Some(sat.verdict),
                resolvents: c.bfm.counters.resolvents,
                capped: false,
                time,
                sat_time: started.elapsed().as_secs_f64(),
                error: None,
            }
        }
        Err(e) => RunRecord {
            seed: cfg.seed,
            verdict: None,
            resolvents: if e.is_cap() { cap + 1 } else { 0 },
            capped: e.is_cap(),
            time,
            sat_time: 0.0,
            error: Some(e.to_string()),
        },
    }
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn stats(runs: Vec<RunRecord>) -> ModeStats {
    let (mean_time, std_time) = mean_std(runs.iter().map(|r| r.time));
    let (mean_resolvents, std_resolvents) = mean_std(runs.iter().map(|r| r.resolvents as f64));
    ModeStats {
        mean_time,
        std_time,
        mean_resolvents,
        std_resolvents,
        capped: runs.iter().filter(|r| r.capped).count(),
        runs,
    }
}

/// Runs every instance of the grid with the matrix on and off. Instances
/// run in parallel; results come back in grid order.
pub fn bench_grid(cfg: &BenchConfig) -> Vec<CellReport> {
    let mut cells = Vec::new();
    for &family in &cfg.families {
        for &n in &cfg.ns {
            for &m in &cfg.ms {
                cells.push((family, n, m));
            }
        }
    }
    let jobs: Vec<(usize, GenConfig, bool)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, &(family, n, m))| {
            (0..cfg.reps).flat_map(move |r| {
                let g = GenConfig::new(family, n, m, cfg.seed.wrapping_add(r as u64));
                [(c, g.clone(), true), (c, g, false)]
            })
        })
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|(_, g, on)| run_one(g, on.then_some(MatrixMode::Merged), cfg.cap))
        .collect();
    let mut per_cell: Vec<(Vec<RunRecord>, Vec<RunRecord>)> = vec![Default::default(); cells.len()];
    for ((c, _, on), rec) in jobs.iter().zip(records) {
        if *on {
            per_cell[*c].0.push(rec);
        } else {
            per_cell[*c].1.push(rec);
        }
    }
    cells
        .into_iter()
        .zip(per_cell)
        .map(|((family, n, m), (on, off))| CellReport {
            family: family.to_string(),
            n,
            m,
            reps: cfg.reps,
            matrix_on: stats(on),
            matrix_off: stats(off),
        })
        .collect()
}

pub fn render_json_lines(cells: &[CellReport]) -> String {
    cells
        .iter()
        .map(|c| serde_json::to_string(c).expect("cell serializes") + "\n")
        .collect()
}

/// Fixed-width table of mean ± standard deviation per cell.
pub fn render_table(cells: &[CellReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>4} {:>4} | {:>21} {:>12} {:>6} | {:>21} {:>12} {:>6}",
        "family", "n", "m", "on: time (s)", "resolvents", "capped", "off: time (s)", "resolvents", "capped"
    );
    for c in cells {
        let mode = |s: &ModeStats| {
            format!(
                "{:>21} {:>12.1} {:>6}",
                format!("{:.3} ± {:.3}", s.mean_time, s.std_time),
                s.mean_resolvents,
                format!("{}/{}", s.capped, s.runs.len())
            )
        };
        let _ = writeln!(
            out,
            "{:<6} {:>4} {:>4} | {} | {}",
            c.family,
            c.n,
            c.m,
            mode(&c.matrix_on),
            mode(&c.matrix_off)
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub total: usize,
    pub agree: usize,
    pub capped: usize,
    /// One line per instance whose engines disagreed or failed.
    pub failures: Vec<String>,
}

/// Solves `count` generated formulas (seeds `seed..seed+count`) with all
/// three engines and counts those with equal verdicts and valid witnesses.
pub fn check_agreement(
    family: Family,
    n: usize,
    m: usize,
    count: usize,
    seed: u64,
    cap: usize,
) -> CheckOutcome {
    let results: Vec<Result<(), (bool, String)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let cfg = GenConfig::new(family, n, m, seed.wrapping_add(i as u64));
            let formula = generate(&cfg);
            let mut verdicts = Vec::new();
            for engine in [Engine::Bfm, Engine::Split, Engine::Lazy] {
                let opts = SolveOptions { engine, cap, seed: Some(cfg.seed), ..Default::default() };
                let out = solve_with_witness(&formula, &opts);
                match out.report.verdict {
                    Some(v) => verdicts.push((engine, v)),
                    None => {
                        let msg = out.report.error.unwrap_or_default();
                        return Err((out.report.cap_hit, format!("seed {}: {engine}: {msg}", cfg.seed)));
                    }
                }
            }
            if verdicts.iter().all(|(_, v)| *v == verdicts[0].1) {
                Ok(())
            } else {
                let list: Vec<String> = verdicts.iter().map(|(e, v)| format!("{e}={v}")).collect();
                Err((false, format!("seed {}: {}", cfg.seed, list.join(" "))))
            }
        })
        .collect();
    let mut outcome = CheckOutcome { total: count, agree: 0, capped: 0, failures: Vec::new() };
    for r in results {
        match r {
            Ok(()) => outcome.agree += 1,
            Err((capped, line)) => {
                outcome.capped += capped as usize;
                outcome.failures.push(line);
            }
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            families: vec![Family::RandomStructure],
            ns: vec![2, 3],
            ms: vec![2, 3],
            reps: 3,
            seed: 5,
            cap: 10_000,
        }
    }

    #[test]
    fn grid_shape_and_determinism() {
        let a = bench_grid(&small());
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|c| c.matrix_on.runs.len() == 3 && c.matrix_off.runs.len() == 3));
        let b = bench_grid(&small());
        let counts = |cells: &[CellReport]| -> Vec<(usize, Option<Verdict>)> {
            cells
                .iter()
                .flat_map(|c| c.matrix_on.runs.iter().chain(&c.matrix_off.runs))
                .map(|r| (r.resolvents, r.verdict))
                .collect()
        };
        assert_eq!(counts(&a), counts(&b));
        let table = render_table(&a);
        assert_eq!(table.lines().count(), 5);
        assert_eq!(render_json_lines(&a).lines().count(), 4);
    }

    #[test]
    fn matrix_never_adds_resolvents_on_small_cells() {
        for c in bench_grid(&small()) {
            for (on, off) in c.matrix_on.runs.iter().zip(&c.matrix_off.runs) {
                assert!(on.resolvents <= off.resolvents);
                assert_eq!(on.verdict, off.verdict);
            }
        }
    }

    #[test]
    fn engines_agree_on_small_two_cnf() {
        let out = check_agreement(Family::TwoCnf, 3, 4, 20, 1, 100_000);
        assert_eq!(out.agree, 20, "{:?}", out.failures);
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(mean_std([2.0, 2.0, 2.0].into_iter()), (2.0, 0.0));
    }
}
