//! The `dla` command line: solve, compile, gen, check and bench.
//!
//! Exit status follows SAT-solver practice: 10 for a satisfiable formula,
//! 20 for an unsatisfiable one, 0 for other successful commands, 1 for
//! usage or input errors and 2 when a resource cap stopped the run.

use std::fs;
use std::io::{self, Read, Write};

use clap::{Args, Parser, Subcommand};
use dla_core::bench::{bench_grid, check_agreement, render_json_lines, render_table, BenchConfig};
use dla_core::bfm::DEFAULT_RESOLVENT_CAP;
use dla_core::solve::{compile, solve_with_witness, Compiled, Outcome};
use dla_core::{export_dimacs, generate, parse, Engine, Family, Formula, GenConfig, MatrixMode, SolveOptions, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CAP: i32 = 2;
pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;

#[derive(Parser, Debug)]
#[command(name = "dla", version, about = "Decide disjunctive linear arithmetic by Boolean Fourier-Motzkin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a formula file ("-" reads standard input).
    Solve(SolveArgs),
    /// Print the propositional instance of a formula in DIMACS.
    Compile(CompileArgs),
    /// Print a random formula.
    Gen(GenArgs),
    /// Cross-check the three engines on generated formulas.
    Check(CheckArgs),
    /// Time the Boolean elimination over a grid of generated formulas.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct EliminationArgs {
    /// Resolve every bound pair instead of consulting the conjunctions matrix.
    #[arg(long)]
    no_matrix: bool,
    #[arg(long, value_name = "merged|per-instance", default_value = "merged")]
    matrix_mode: MatrixMode,
    /// Variables to eliminate first, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "x1,x2,...")]
    order: Option<Vec<String>>,
    /// Give up after this many resolvents.
    #[arg(long, default_value_t = DEFAULT_RESOLVENT_CAP)]
    cap: usize,
}

impl EliminationArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            matrix: (!self.no_matrix).then_some(self.matrix_mode),
            order: self.order.clone(),
            cap: self.cap,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    file: String,
    #[command(flatten)]
    elim: EliminationArgs,
    #[arg(long, value_name = "bfm|split|lazy", default_value = "bfm")]
    engine: Engine,
    /// Also write the propositional instance in DIMACS.
    #[arg(long, value_name = "FILE")]
    emit_dimacs: Option<String>,
    /// Let the SAT solver branch on every variable, not only original predicates.
    #[arg(long)]
    unrestricted: bool,
    /// Print the report as one JSON line.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CompileArgs {
    file: String,
    #[command(flatten)]
    elim: EliminationArgs,
    /// Output file instead of standard output.
    #[arg(short, long, value_name = "FILE")]
    output: Option<String>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_name = "2cnf|rand")]
    family: Family,
    /// Number of variables.
    #[arg(long)]
    n: usize,
    /// Number of clauses (2cnf) or groups (rand).
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    coeff_range: i64,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_name = "2cnf|rand")]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// First seed; instance i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESOLVENT_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "2cnf,rand")]
    families: Vec<Family>,
    #[arg(long = "n", value_delimiter = ',', default_value = "10,30")]
    ns: Vec<usize>,
    #[arg(long = "m", value_delimiter = ',', default_value = "10,30")]
    ms: Vec<usize>,
    #[arg(long, default_value_t = 6)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    cap: usize,
    /// Print JSON lines instead of the table.
    #[arg(long)]
    json: bool,
    /// Also write JSON lines to this file.
    #[arg(long, value_name = "FILE")]
    json_out: Option<String>,
}

/// Runs one command line. `argv[0]` is the program name.
pub fn run_command(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Compile(a) => compile_cmd(a, out),
        Command::Gen(a) => gen(a, out),
        Command::Check(a) => check(a, out),
        Command::Bench(a) => bench(a, out),
    };
    match result {
        Ok(code) => code,
        Err((code, msg)) => {
            let _ = writeln!(err, "dla: {msg}");
            code
        }
    }
}

type CmdResult = Result<i32, (i32, String)>;

fn usage(msg: impl ToString) -> (i32, String) {
    (EXIT_USAGE, msg.to_string())
}

fn read_formula(path: &str) -> Result<Formula, (i32, String)> {
    let text = if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(usage)?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))?
    };
    parse(&text).map_err(|e| usage(format!("{path}: {e}")))
}

fn write_file(path: &str, text: &str) -> Result<(), (i32, String)> {
    fs::write(path, text).map_err(|e| usage(format!("{path}: {e}")))
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> CmdResult {
    let formula = read_formula(&a.file)?;
    let opts = SolveOptions { engine: a.engine, restrict: !a.unrestricted, ..a.elim.options() };
    let outcome = solve_with_witness(&formula, &opts);
    if let Some(path) = &a.emit_dimacs {
        let compiled = match &outcome.compiled {
            Some(c) => c.clone(),
            None => compile(&formula, &opts).map_err(|e| (exit_for_error(e.is_cap()), e.to_string()))?,
        };
        write_file(path, &export_dimacs(&compiled.cnf))?;
    }
    let report = &outcome.report;
    if a.json {
        let _ = writeln!(out, "{}", report.to_json());
    } else {
        write_human(&formula, &outcome, out);
    }
    match (report.verdict, &report.error) {
        (Some(Verdict::Sat), _) => Ok(EXIT_SAT),
        (Some(Verdict::Unsat), _) => Ok(EXIT_UNSAT),
        (None, error) => Err((exit_for_error(report.cap_hit), error.clone().unwrap_or_default())),
    }
}

fn exit_for_error(cap: bool) -> i32 {
    if cap {
        EXIT_CAP
    } else {
        EXIT_USAGE
    }
}

fn write_human(formula: &Formula, outcome: &Outcome, out: &mut dyn Write) {
    let r = &outcome.report;
    let verdict = r.verdict.map_or("UNKNOWN".to_string(), |v| v.to_string());
    let _ = writeln!(out, "{verdict}");
    let _ = writeln!(out, "engine: {} (matrix {})", r.engine, r.config.matrix);
    if let Some(c) = &outcome.compiled {
        write_compiled(formula, c, out);
    }
    let k = &r.counters;
    let _ = writeln!(
        out,
        "predicates: {}, instances: {}, variables: {}",
        k.predicates, k.instances, k.variables
    );
    let extra: Vec<String> = [
        ("bfm resolvents", k.bfm),
        ("contradictions", k.contradictions),
        ("tautologies", k.tautologies),
        ("pairs pruned", k.pairs_pruned),
        ("split resolvents", k.split),
        ("comb resolvents", k.comb),
        ("cubes examined", k.cubes_examined),
        ("clauses", k.clauses),
    ]
    .iter()
    .filter_map(|(name, v)| v.map(|v| format!("{name}: {v}")))
    .collect();
    if !extra.is_empty() {
        let _ = writeln!(out, "{}", extra.join(", "));
    }
    if let Some(d) = k.sat_decisions {
        let _ = writeln!(out, "sat decisions: {d}, propagations: {}", k.sat_propagations.unwrap_or(0));
    }
    if let Some(w) = &r.witness {
        let _ = writeln!(out, "witness:");
        for name in &formula.vars {
            if let Some(v) = w.get(name) {
                let _ = writeln!(out, "  {name} = {v}");
            }
        }
    }
    if let Some(e) = &r.error {
        let _ = writeln!(out, "error: {e}");
    }
}

fn write_compiled(formula: &Formula, c: &Compiled, out: &mut dyn Write) {
    let table = &c.bfm.table;
    let derived = table.len() - table.num_original();
    let _ = writeln!(out, "derived predicates: {derived}");
    for i in table.num_original()..table.len() {
        let p = dla_core::PredId(i as u32);
        let _ = writeln!(out, "  {p}: {}", table.constraint(p).display_with(&formula.vars));
    }
    let _ = writeln!(out, "implications: {}", c.bfm.implications.len());
    for imp in &c.bfm.implications {
        let _ = writeln!(out, "  {imp}");
    }
}

fn compile_cmd(a: CompileArgs, out: &mut dyn Write) -> CmdResult {
    let formula = read_formula(&a.file)?;
    let compiled = compile(&formula, &a.elim.options())
        .map_err(|e| (exit_for_error(e.is_cap()), e.to_string()))?;
    let text = export_dimacs(&compiled.cnf);
    match &a.output {
        Some(path) => write_file(path, &text)?,
        None => {
            let _ = write!(out, "{text}");
        }
    }
    Ok(EXIT_OK)
}

fn gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    if a.n == 0 || a.m == 0 || a.coeff_range < 1 {
        return Err(usage("--n and --m must be at least 1 and --coeff-range positive"));
    }
    let cfg = GenConfig { coeff_range: a.coeff_range, ..GenConfig::new(a.family, a.n, a.m, a.seed) };
    let _ = writeln!(out, "{}", generate(&cfg).render());
    Ok(EXIT_OK)
}

fn check(a: CheckArgs, out: &mut dyn Write) -> CmdResult {
    if a.n == 0 || a.m == 0 {
        return Err(usage("--n and --m must be at least 1"));
    }
    let r = check_agreement(a.family, a.n, a.m, a.count, a.seed, a.cap);
    for line in &r.failures {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "{}/{} agree", r.agree, r.total);
    if r.agree == r.total {
        Ok(EXIT_OK)
    } else if r.failures.len() == r.capped {
        Err((EXIT_CAP, format!("{} instances hit a cap", r.capped)))
    } else {
        Err((EXIT_USAGE, "engines disagree".to_string()))
    }
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> CmdResult {
    if a.ns.contains(&0) || a.ms.contains(&0) {
        return Err(usage("--n and --m values must be at least 1"));
    }
    let cfg = BenchConfig {
        families: a.families,
        ns: a.ns,
        ms: a.ms,
        reps: a.reps,
        seed: a.seed,
        cap: a.cap,
    };
    let cells = bench_grid(&cfg);
    let lines = render_json_lines(&cells);
    if let Some(path) = &a.json_out {
        write_file(path, &lines)?;
    }
    if a.json {
        let _ = write!(out, "{lines}");
    } else {
        let _ = write!(out, "{}", render_table(&cells));
    }
    Ok(EXIT_OK)
}
