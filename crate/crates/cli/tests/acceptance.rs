//! End-to-end acceptance checks, one line per criterion.
//!
//! Set `V2M_SUDOKU_FULL=1` to run the Sudoku check on all 50 corpus puzzles
//! instead of the default subset.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use v2m_core::coloring::{one_hot_gadget, ColoringSolver};
use v2m_core::experiments::{
    brute_force_maxcut, equilibrium_census, maxcut_quality_benchmark, random_weighted_graph,
};
use v2m_core::machine::{
    decompose, discrete_cut, eom_rhs, optimal_rounding_spectrum, relaxed_cut_v2, restart_seed,
    snap_to_clusters, max_speed, Direction, Evolution, RelaxedSpinState, SolverParams,
    StepStats, StopReason, TraceConfig,
};
use v2m_core::puzzles::{
    parse_sudoku, read_corpus, validate_latin, validate_sudoku, SquareGrid,
};
use v2m_core::{parse_edge_list, WeightedGraph};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn v2m(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_v2m"))
        .args(args)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let first = stdout.lines().next().unwrap_or("null");
    let json = serde_json::from_str(first).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), json)
}

fn gadget_optimum() -> Verdict {
    for k in 2..=12 {
        let g = one_hot_gadget(k).unwrap();
        let (best, _) = brute_force_maxcut(&g).unwrap();
        let expected = ((k - 1) * (k - 1)) as f64;
        if best != expected {
            return verdict(false, format!("K = {k}: optimum {best}, expected {expected}"));
        }
        for bits in 0u32..(1 << k) {
            let mut sigma = vec![1i8];
            sigma.extend((0..k).map(|c| if bits >> c & 1 == 1 { 1 } else { -1 }));
            if discrete_cut(&g, &sigma).unwrap() == best && bits.count_ones() != 1 {
                return verdict(false, format!("K = {k}: optimum at non-one-hot {bits:b}"));
            }
        }
    }
    verdict(true, "optimum (K-1)^2 at one-hot patterns only, K = 2..12")
}

fn equilibrium_orders() -> Verdict {
    let mut worst = 1.0f64;
    let mut notes = Vec::new();
    for k in 3..=8 {
        let c = equilibrium_census(k, 1000, &SolverParams::default().with_seed(k as u64)).unwrap();
        if c.max_order() > 3 || c.by_order.contains_key(&0) {
            return verdict(false, format!("K = {k}: orders {:?}", c.by_order.keys()));
        }
        worst = worst.min(c.definite_fraction());
        notes.push(format!("K={k}: R<={}", c.max_order()));
    }
    verdict(
        worst >= 0.9,
        format!("{}; lowest definite fraction {worst:.3}", notes.join(", ")),
    )
}

/// Terminal data for the random max-cut runs shared by three criteria.
struct RandomRuns {
    dominance_failures: usize,
    spectrum_failures: usize,
    /// Runs that hit the step limit instead of settling.
    unsettled: usize,
    stats: Vec<StepStats>,
}

fn random_runs() -> RandomRuns {
    let params = SolverParams {
        max_steps: 2_000_000,
        ..SolverParams::default()
    };
    let mut runs = RandomRuns {
        dominance_failures: 0,
        spectrum_failures: 0,
        unsettled: 0,
        stats: Vec::new(),
    };
    for i in 0..200 {
        let seed = restart_seed(2024, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=16);
        let g = random_weighted_graph(n, 0.5, &mut rng);
        let mut state = RelaxedSpinState::random(n, &mut rng);
        let initial_best = optimal_rounding_spectrum(&state.xi(), &g)
            .iter()
            .map(|r| r.cut)
            .fold(f64::MIN, f64::max);
        let out = Evolution::new(&g, params.clone().with_seed(seed), Direction::Ascent)
            .trace(TraceConfig::off())
            .run(&mut state)
            .unwrap();
        if out.stop == StopReason::MaxSteps {
            runs.unsettled += 1;
        }
        let terminal = discrete_cut(&g, state.sigma()).unwrap();
        if terminal < initial_best - 1e-9 {
            runs.dominance_failures += 1;
        }
        let eps = 4.0 * params.dt * max_speed(&g) + f64::EPSILON;
        let snapped = snap_to_clusters(&state, eps).unwrap();
        let spectrum = optimal_rounding_spectrum(&snapped.xi(), &g);
        let lo = spectrum.iter().map(|r| r.cut).fold(f64::MAX, f64::min);
        let hi = spectrum.iter().map(|r| r.cut).fold(f64::MIN, f64::max);
        if hi - lo > 1e-9 {
            runs.spectrum_failures += 1;
        }
        runs.stats.push(out.stats);
    }
    runs
}

fn worked_example() -> Verdict {
    let g = parse_edge_list(&std::fs::read_to_string(data("prism.txt")).unwrap()).unwrap();
    let mut proper = 0;
    for seed in 0..100 {
        let out = ColoringSolver::new(&g, 3, 1.0)
            .unwrap()
            .params(SolverParams::solving().with_seed(seed))
            .restarts(1000)
            .step_budget(20_000)
            .solve()
            .unwrap();
        if out.proper && out.total_steps <= 20_000 {
            proper += 1;
        }
    }
    verdict(proper >= 90, format!("{proper}/100 attempts properly 3-colored"))
}

fn latin_squares() -> Verdict {
    let mut notes = Vec::new();
    for n in [4, 8] {
        let size = n.to_string();
        let (code, json) = v2m(&["latin", "--size", &size, "--restarts", "50"]);
        let cells: Vec<usize> = json["grid"]
            .as_array()
            .into_iter()
            .flatten()
            .flat_map(|row| row.as_array().cloned().unwrap_or_default())
            .filter_map(|v| v.as_u64().map(|v| v as usize))
            .collect();
        let valid = SquareGrid::new(n, cells).is_ok_and(|g| validate_latin(&g));
        if code != 0 || !valid {
            return verdict(false, format!("N = {n}: exit {code}, valid {valid}"));
        }
        notes.push(format!("N={n} in {} restarts", json["restarts_used"]));
    }
    verdict(true, notes.join(", "))
}

fn sudoku() -> Verdict {
    let full = std::env::var("V2M_SUDOKU_FULL").is_ok_and(|v| v == "1");
    let count = if full { 50 } else { 15 };
    let path = data("sudoku.csv");
    let corpus = read_corpus(&path, count).unwrap();
    let (code, json) = v2m(&[
        "sudoku",
        "--corpus",
        path.to_str().unwrap(),
        "--count",
        &count.to_string(),
    ]);
    if code != 0 && code != 3 {
        return verdict(false, format!("exit {code}"));
    }
    let mut solved = 0;
    for record in json["puzzles"].as_array().into_iter().flatten() {
        let Some(line) = record["grid"].as_str() else {
            continue;
        };
        let i = record["index"].as_u64().unwrap() as usize;
        let cells = parse_sudoku(line).unwrap().cells().iter().map(|&v| usize::from(v)).collect();
        let grid = SquareGrid::new(9, cells).unwrap();
        if !validate_sudoku(&grid, &corpus[i].puzzle) || corpus[i].solution.as_ref() != Some(&grid) {
            return verdict(false, format!("puzzle {i}: produced grid is wrong"));
        }
        solved += 1;
    }
    verdict(
        solved >= 10,
        format!("{solved}/{count} solved, every grid valid and equal to the corpus solution"),
    )
}

fn maxcut_quality() -> Verdict {
    let (_, summary) =
        maxcut_quality_benchmark(100, 12, 10, &SolverParams::default().with_seed(9)).unwrap();
    verdict(
        summary.mean_ratio >= 0.95,
        format!(
            "mean ratio {:.4}, min {:.4}, optimal on {}/{}",
            summary.mean_ratio, summary.min_ratio, summary.optimal, summary.scored
        ),
    )
}

fn numerical_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = [0.0f64; 4];
    for _ in 0..1_000_000 {
        let xi: f64 = rng.gen_range(-10.0..10.0);
        let (s, x, k) = decompose(xi).unwrap();
        if !(-1.0..1.0).contains(&x) {
            return verdict(false, format!("remainder {x} out of range for {xi}"));
        }
        worst[0] = worst[0].max((f64::from(s) + x + 4.0 * k as f64 - xi).abs());
    }
    for t in 0..500 {
        let n = rng.gen_range(1..=20);
        let g = random_weighted_graph(n, 0.5, &mut rng);
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let shift = rng.gen_range(-5.0..5.0);
        let moved: Vec<f64> = xi.iter().map(|v| v + shift).collect();
        let a = relaxed_cut_v2(&g, &RelaxedSpinState::from_xi(&xi).unwrap()).unwrap();
        let b = relaxed_cut_v2(&g, &RelaxedSpinState::from_xi(&moved).unwrap()).unwrap();
        worst[1] = worst[1].max((a - b).abs());

        let edge = WeightedGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        let pair = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let before = relaxed_cut_v2(&edge, &RelaxedSpinState::from_xi(&pair).unwrap()).unwrap();
        let glided = [pair[0] + 2.0, pair[1]];
        let after = relaxed_cut_v2(&edge, &RelaxedSpinState::from_xi(&glided).unwrap()).unwrap();
        worst[2] = worst[2].max((after - (1.0 - before)).abs());

        let state = RelaxedSpinState::random(n, &mut ChaCha8Rng::seed_from_u64(t));
        let v = eom_rhs(&g, &state, Direction::Ascent).unwrap();
        let h = 1e-7;
        for i in 0..n {
            let x = state.x()[i];
            let kink = g.neighbors(i).any(|(j, _)| (x - state.x()[j]).abs() <= 1e-6);
            if kink || x - h < -1.0 || x + h >= 1.0 {
                continue;
            }
            let (mut up, mut down) = (state.clone(), state.clone());
            up.set_x(i, x + h);
            down.set_x(i, x - h);
            let fd = (relaxed_cut_v2(&g, &up).unwrap() - relaxed_cut_v2(&g, &down).unwrap())
                / (2.0 * h);
            // the velocity field is half the gradient of the relaxed cut
            worst[3] = worst[3].max((v[i] - 0.5 * fd).abs());
        }
    }
    let pass = worst[0] <= 1e-12 && worst[1] <= 1e-9 && worst[2] <= 1e-12 && worst[3] <= 1e-6;
    verdict(
        pass,
        format!(
            "max errors: recomposition {:.1e}, translation {:.1e}, gliding {:.1e}, eom {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn report(id: usize, name: &str, limit: Option<Duration>, run: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = run();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let pass = v.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" / limit {:.0} s", l.as_secs_f64()));
    println!(
        "criterion {id:>2} {:<28} {}  {}; {:.1} s{budget}",
        name,
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
    );
    pass
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut ok = true;
    ok &= report(1, "gadget optimum", secs(5), gadget_optimum);
    ok &= report(2, "equilibrium census", secs(60), equilibrium_orders);

    let start = Instant::now();
    let runs = random_runs();
    let shared = start.elapsed();
    ok &= report(3, "terminal dominance", secs(60), || {
        verdict(
            runs.dominance_failures == 0 && shared < Duration::from_secs(60),
            format!(
                "{} of 200 runs below the initial best rounding (runs took {:.1} s)",
                runs.dominance_failures,
                shared.as_secs_f64()
            ),
        )
    });
    ok &= report(4, "rounding invariance", None, || {
        verdict(
            runs.spectrum_failures == 0,
            format!(
                "{} of 200 terminal spectra not flat, {} runs unsettled",
                runs.spectrum_failures, runs.unsettled
            ),
        )
    });
    ok &= report(5, "monotone cut", None, || {
        let unflagged: usize = runs.stats.iter().map(|s| s.unflagged_decreases).sum();
        let flagged_runs = runs.stats.iter().filter(|s| s.flagged_steps > 0).count();
        let held: usize = runs.stats.iter().filter(|s| s.held > 0).count();
        verdict(
            unflagged == 0 && (flagged_runs as f64) < 0.05 * 200.0,
            format!(
                "{unflagged} unflagged decreases, {flagged_runs}/200 runs flagged, \
                 {held}/200 runs with held crossings"
            ),
        )
    });
    ok &= report(6, "worked example", secs(30), worked_example);
    ok &= report(7, "latin squares", secs(120), latin_squares);
    ok &= report(8, "sudoku", secs(300), sudoku);
    ok &= report(9, "max-cut quality", secs(60), maxcut_quality);
    ok &= report(10, "numerical identities", secs(10), numerical_identities);

    if !ok {
        std::process::exit(1);
    }
}
