use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use v2m_core::coloring::{ApexWeighting, ColoringOutcome, ColoringSolver};
use v2m_core::experiments::{
    convergence_probability, equilibrium_census, maxcut_quality_benchmark, Report,
};
use v2m_core::machine::{solve_maxcut, SolverParams, TraceConfig, Trajectory};
use v2m_core::puzzles::{
    assignment_to_grid, clues_to_pins, parse_sudoku, read_corpus, rook_graph, sudoku_graph,
    validate_latin, validate_sudoku, CorpusEntry, SquareGrid,
};
use v2m_core::{parse_edge_list, Error, WeightedGraph};

#[derive(Parser)]
#[command(name = "v2m", version, about = "V2 dynamical Ising machine for max-cut and coloring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum cut of a weighted edge-list graph.
    Maxcut {
        graph: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        trace: TraceFlags,
    },
    /// Proper K-coloring of an edge-list graph.
    Color {
        graph: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        colors: u64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = Apex::Uniform)]
        apex: Apex,
        /// Cap on steps summed over all restarts.
        #[arg(long)]
        step_budget: Option<usize>,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        trace: TraceFlags,
    },
    /// An N × N Latin square from the rook's graph.
    Latin {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        size: u64,
        #[arg(long, value_enum, default_value_t = Apex::Degree)]
        apex: Apex,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        trace: TraceFlags,
    },
    /// 9 × 9 Sudoku with the clues pinned.
    Sudoku {
        /// 81 characters, digits with 0 or '.' for blanks.
        #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
        puzzle: Option<String>,
        /// `quizzes,solutions` CSV.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Apex::Degree)]
        apex: Apex,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        trace: TraceFlags,
    },
    /// Batch studies; writes a JSON report.
    Experiment {
        #[arg(value_enum)]
        name: Experiment,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Color counts for the gadget studies: `K`, `A..B` (inclusive) or a
        /// comma list.
        #[arg(long, default_value = "2..10", value_parser = parse_k_range)]
        k: KRange,
        /// Graphs for maxcut-bench.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Nodes per graph for maxcut-bench.
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long)]
    dt: Option<f64>,
    /// Step limit per restart.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, env = "V2_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    perturb_period: Option<usize>,
    #[arg(long)]
    perturb_amp: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunFlags {
    fn params(&self, base: SolverParams) -> SolverParams {
        SolverParams {
            dt: self.dt.unwrap_or(base.dt),
            max_steps: self.steps.unwrap_or(base.max_steps),
            perturb_period: self.perturb_period.unwrap_or(base.perturb_period),
            perturb_amplitude: self.perturb_amp.unwrap_or(base.perturb_amplitude),
            seed: self.seed,
            ..base
        }
    }
}

#[derive(Args, Clone)]
struct TraceFlags {
    /// Write the trajectory of the reported run as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    trace_stride: usize,
}

impl TraceFlags {
    fn config(&self) -> TraceConfig {
        match self.trace {
            Some(_) => TraceConfig::full(self.trace_stride.max(1)),
            None => TraceConfig::off(),
        }
    }

    fn write(&self, trajectory: &Trajectory) -> Result<(), Failure> {
        if let Some(path) = &self.trace {
            let file = fs::File::create(path)
                .map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))?;
            trajectory
                .write_csv(io::BufWriter::new(file))
                .map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Apex {
    Uniform,
    Degree,
}

impl From<Apex> for ApexWeighting {
    fn from(a: Apex) -> Self {
        match a {
            Apex::Uniform => ApexWeighting::Uniform,
            Apex::Degree => ApexWeighting::Degree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    ConvergeProb,
    EquilibriumCensus,
    MaxcutBench,
}

#[derive(Clone, Debug)]
struct KRange(Vec<usize>);

fn parse_k_range(s: &str) -> Result<KRange, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad color count `{t}`"));
    let ks = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if ks.is_empty() || ks.iter().any(|&k| k < 2) {
        return Err("color counts must be at least 2".into());
    }
    Ok(KRange(ks))
}

enum Failure {
    /// Bad input: exit 2.
    Input(String),
    /// Exit 1.
    Internal(String),
    /// Result printed, but the instance was not solved: exit 3.
    Unsolved(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::InvalidArgument(_) | Error::InvalidCell { .. } => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match &cli.command {
        Command::Maxcut { run, .. }
        | Command::Color { run, .. }
        | Command::Latin { run, .. }
        | Command::Sudoku { run, .. }
        | Command::Experiment { run, .. } => run.jobs.max(1),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Unsolved(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Maxcut { graph, run, trace } => cmd_maxcut(&graph, &run, &trace),
        Command::Color {
            graph,
            colors,
            lambda,
            apex,
            step_budget,
            run,
            trace,
        } => {
            let g = load_graph(&graph)?;
            cmd_color(&g, colors as usize, lambda, apex, step_budget, &run, &trace)
        }
        Command::Latin {
            size,
            apex,
            run,
            trace,
        } => cmd_latin(size as usize, apex, &run, &trace),
        Command::Sudoku {
            puzzle,
            corpus,
            count,
            apex,
            run,
            trace,
        } => cmd_sudoku(puzzle, corpus, count, apex, &run, &trace),
        Command::Experiment {
            name,
            trials,
            k,
            count,
            n,
            run,
        } => cmd_experiment(name, trials, &k.0, count, n, &run),
    }
}

fn load_graph(path: &Path) -> Result<WeightedGraph, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Failure::Internal(e.to_string()))
}

fn print_grid(header: Option<String>, grid: &SquareGrid) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    let header = header.map_or(String::new(), |h| format!("\n{h}"));
    write!(out, "{header}\n{grid}").map_err(|e| Failure::Internal(e.to_string()))
}

fn rows(grid: &SquareGrid) -> Vec<Vec<usize>> {
    grid.cells().chunks(grid.n()).map(<[usize]>::to_vec).collect()
}

fn cmd_maxcut(path: &Path, run: &RunFlags, trace: &TraceFlags) -> Result<(), Failure> {
    let g = load_graph(path)?;
    let params = run.params(SolverParams::default());
    let restarts = run.restarts.unwrap_or(10);
    let out = solve_maxcut(&g, &params, restarts, &trace.config())?;
    trace.write(&out.trajectory)?;
    emit(&json!({
        "cut": out.cut,
        "partition": out.sigma,
        "steps": out.steps,
        "stop": out.stop,
        "best_restart": out.best_restart,
        "restarts": out.restarts,
        "seed": params.seed,
        "params": params,
    }))
}

fn coloring(
    g: &WeightedGraph,
    k: usize,
    lambda: f64,
    apex: Apex,
    pins: &[(usize, usize)],
    params: SolverParams,
    run: &RunFlags,
    trace: &TraceFlags,
) -> Result<ColoringOutcome, Failure> {
    let solver = ColoringSolver::new(g, k, lambda)?
        .apex(apex.into())?
        .pins(pins)?
        .params(params)
        .restarts(run.restarts.unwrap_or(50))
        .jobs(run.jobs)
        .trace(trace.config());
    Ok(solver.solve()?)
}

fn cmd_color(
    g: &WeightedGraph,
    k: usize,
    lambda: f64,
    apex: Apex,
    step_budget: Option<usize>,
    run: &RunFlags,
    trace: &TraceFlags,
) -> Result<(), Failure> {
    let params = run.params(SolverParams::solving());
    let mut solver = ColoringSolver::new(g, k, lambda)?
        .apex(apex.into())?
        .params(params.clone())
        .restarts(run.restarts.unwrap_or(50))
        .jobs(run.jobs)
        .trace(trace.config());
    if let Some(budget) = step_budget {
        solver = solver.step_budget(budget);
    }
    let out = solver.solve()?;
    trace.write(&out.trajectory)?;
    emit(&json!({
        "k": k,
        "result": out,
        "seed": params.seed,
        "params": params,
    }))?;
    if out.proper {
        Ok(())
    } else {
        Err(Failure::Unsolved(format!(
            "no proper {k}-coloring after {} restarts ({} conflicts left)",
            out.restarts_used, out.conflicts
        )))
    }
}

fn cmd_latin(n: usize, apex: Apex, run: &RunFlags, trace: &TraceFlags) -> Result<(), Failure> {
    let params = run.params(SolverParams::solving());
    if n == 1 {
        let grid = SquareGrid::new(1, vec![1])?;
        emit(&json!({"size": 1, "proper": true, "grid": rows(&grid), "restarts_used": 0}))?;
        return print_grid(None, &grid);
    }
    let g = rook_graph(n)?;
    let out = coloring(&g, n, 1.0, apex, &[], params.clone(), run, trace)?;
    trace.write(&out.trajectory)?;
    let grid = if out.proper {
        Some(assignment_to_grid(&out.assignment, n)?).filter(validate_latin)
    } else {
        None
    };
    emit(&json!({
        "size": n,
        "proper": grid.is_some(),
        "grid": grid.as_ref().map(rows),
        "conflicts": out.conflicts,
        "restarts_used": out.restarts_used,
        "steps": out.steps,
        "seed": params.seed,
        "params": params,
    }))?;
    match grid {
        Some(grid) => print_grid(None, &grid),
        None => Err(Failure::Unsolved(format!(
            "no {n}x{n} Latin square after {} restarts",
            out.restarts_used
        ))),
    }
}

#[derive(Serialize)]
struct SudokuRecord {
    index: usize,
    clues: usize,
    solved: bool,
    /// Against the corpus solution, when there is one.
    matches_solution: Option<bool>,
    grid: Option<String>,
    conflicts: usize,
    restarts_used: usize,
    total_steps: usize,
    params: SolverParams,
}

fn cmd_sudoku(
    puzzle: Option<String>,
    corpus: Option<PathBuf>,
    count: usize,
    apex: Apex,
    run: &RunFlags,
    trace: &TraceFlags,
) -> Result<(), Failure> {
    let entries = match (puzzle, corpus) {
        (Some(line), _) => vec![CorpusEntry {
            puzzle: parse_sudoku(&line)?,
            solution: None,
        }],
        (None, Some(path)) => {
            if !path.is_file() {
                return Err(Failure::Input(format!("{}: no such file", path.display())));
            }
            read_corpus(&path, count)?
        }
        (None, None) => return Err(Failure::Input("give --puzzle or --corpus".into())),
    };
    if trace.trace.is_some() && entries.len() > 1 {
        return Err(Failure::Input("--trace needs a single puzzle".into()));
    }
    let g = sudoku_graph(3)?;
    let template = ColoringSolver::new(&g, 9, 1.0)?;
    let mut records = Vec::with_capacity(entries.len());
    let mut grids = Vec::new();
    for (index, entry) in entries.iter().enumerate() {
        let pins = clues_to_pins(&entry.puzzle, template.embedding())?;
        let params = run.params(if pins.is_empty() {
            SolverParams::solving()
        } else {
            SolverParams::solving_pinned()
        });
        let out = coloring(&g, 9, 1.0, apex, &pins, params.clone(), run, trace)?;
        trace.write(&out.trajectory)?;
        let grid = if out.proper {
            Some(assignment_to_grid(&out.assignment, 9)?)
                .filter(|grid| validate_sudoku(grid, &entry.puzzle))
        } else {
            None
        };
        let matches_solution = match (&grid, &entry.solution) {
            (Some(grid), Some(solution)) => Some(grid == solution),
            _ => None,
        };
        eprintln!(
            "puzzle {index}: {} after {} restarts",
            if grid.is_some() { "solved" } else { "unsolved" },
            out.restarts_used
        );
        records.push(SudokuRecord {
            index,
            clues: entry.puzzle.clue_count(),
            solved: grid.is_some() && matches_solution != Some(false),
            matches_solution,
            grid: grid.as_ref().map(SquareGrid::to_line),
            conflicts: out.conflicts,
            restarts_used: out.restarts_used,
            total_steps: out.total_steps,
            params,
        });
        if let Some(grid) = grid {
            grids.push((index, grid));
        }
    }
    let unsolved: Vec<usize> = records.iter().filter(|r| !r.solved).map(|r| r.index).collect();
    emit(&json!({
        "puzzles": records,
        "solved": records.len() - unsolved.len(),
        "unsolved": unsolved,
        "seed": run.seed,
    }))?;
    for (index, grid) in &grids {
        let header = (entries.len() > 1).then(|| format!("# puzzle {index}"));
        print_grid(header, grid)?;
    }
    if unsolved.is_empty() {
        Ok(())
    } else {
        Err(Failure::Unsolved(format!("unsolved puzzles: {unsolved:?}")))
    }
}

fn cmd_experiment(
    name: Experiment,
    trials: usize,
    ks: &[usize],
    count: usize,
    n: usize,
    run: &RunFlags,
) -> Result<(), Failure> {
    let params = run.params(SolverParams::default());
    match name {
        Experiment::ConvergeProb => {
            let records = ks
                .iter()
                .map(|&k| {
                    let fraction = convergence_probability(k, trials, &params)?;
                    Ok(json!({"k": k, "trials": trials, "fraction": fraction}))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let lowest = records
                .iter()
                .filter_map(|r| r["fraction"].as_f64())
                .fold(1.0, f64::min);
            emit(&Report {
                experiment: "converge-prob",
                seed: params.seed,
                params: params.clone(),
                summary: json!({"min_fraction": lowest}),
                records,
            })
        }
        Experiment::EquilibriumCensus => {
            let records = ks
                .iter()
                .map(|&k| equilibrium_census(k, trials, &params))
                .collect::<Result<Vec<_>, Error>>()?;
            let max_order = records.iter().map(|c| c.max_order()).max().unwrap_or(0);
            let definite: usize = records.iter().map(|c| c.definite).sum();
            emit(&Report {
                experiment: "equilibrium-census",
                seed: params.seed,
                params: params.clone(),
                summary: json!({
                    "max_order": max_order,
                    "definite_fraction": definite as f64 / (trials * ks.len()) as f64,
                }),
                records,
            })
        }
        Experiment::MaxcutBench => {
            let restarts = run.restarts.unwrap_or(10);
            let (records, summary) = maxcut_quality_benchmark(count, n, restarts, &params)?;
            emit(&Report {
                experiment: "maxcut-bench",
                seed: params.seed,
                params: params.clone(),
                summary,
                records,
            })
        }
    }
}
