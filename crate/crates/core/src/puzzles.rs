//! Latin squares and Sudoku as coloring problems.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::coloring::{ColorAssignment, IsingEmbedding};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Cells sharing a row or column of an `n × n` board, node `r·n + c`.
pub fn rook_graph(n: usize) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::invalid("board side must be at least 1"));
    }
    let mut edges = Vec::with_capacity(n * n * (n - 1));
    for a in 0..n * n {
        let (ra, ca) = (a / n, a % n);
        for b in (a + 1)..n * n {
            if ra == b / n || ca == b % n {
                edges.push((a, b, 1.0));
            }
        }
    }
    WeightedGraph::from_edges(n * n, edges)
}

/// Cells of an `m² × m²` grid sharing a row, column or `m × m` box.
pub fn sudoku_graph(m: usize) -> Result<WeightedGraph> {
    if m == 0 {
        return Err(Error::invalid("box size must be at least 1"));
    }
    let side = m * m;
    let boxed = |cell: usize| ((cell / side) / m, (cell % side) / m);
    let mut edges = Vec::new();
    for a in 0..side * side {
        for b in (a + 1)..side * side {
            if a / side == b / side || a % side == b % side || boxed(a) == boxed(b) {
                edges.push((a, b, 1.0));
            }
        }
    }
    WeightedGraph::from_edges(side * side, edges)
}

/// A Sudoku on an `m² × m²` grid, row-major, 0 for blanks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SudokuPuzzle {
    m: usize,
    cells: Vec<u8>,
}

impl SudokuPuzzle {
    pub fn new(m: usize, cells: Vec<u8>) -> Result<Self> {
        let side = m * m;
        Error::check_len(side * side, cells.len())?;
        if let Some(i) = cells.iter().position(|&v| usize::from(v) > side) {
            return Err(Error::InvalidCell { cell: i });
        }
        Ok(SudokuPuzzle { m, cells })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn side(&self) -> usize {
        self.m * self.m
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn clue_count(&self) -> usize {
        self.cells.iter().filter(|&&v| v != 0).count()
    }

    /// `(cell, digit)` for every clue.
    pub fn clues(&self) -> Vec<(usize, usize)> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i, usize::from(v)))
            .collect()
    }
}

/// Reads a standard 81-character puzzle line; `.` counts as a blank.
pub fn parse_sudoku(line: &str) -> Result<SudokuPuzzle> {
    let line = line.trim();
    let count = line.chars().count();
    if count != 81 {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected 81 cells, got {count}"),
        });
    }
    let mut cells = Vec::with_capacity(81);
    for (i, ch) in line.chars().enumerate() {
        let v = match ch {
            '.' => 0,
            '0'..='9' => ch as u8 - b'0',
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("invalid character {ch:?} at cell {i}"),
                })
            }
        };
        cells.push(v);
    }
    SudokuPuzzle::new(3, cells)
}

/// One corpus row: the quiz and, when present, its solution.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub puzzle: SudokuPuzzle,
    pub solution: Option<SquareGrid>,
}

/// Reads up to `limit` rows of a `quizzes,solutions` CSV file.
pub fn read_corpus(path: &Path, limit: usize) -> Result<Vec<CorpusEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_corpus(&text, limit)
}

pub fn parse_corpus(text: &str, limit: usize) -> Result<Vec<CorpusEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        if out.len() == limit {
            break;
        }
        // header is line 1
        let line = row + 2;
        let record = record.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let quiz = record.get(0).ok_or(Error::Parse {
            line,
            msg: "missing quiz column".into(),
        })?;
        let relocate = |e: Error| match e {
            Error::Parse { msg, .. } => Error::Parse { line, msg },
            other => other,
        };
        let puzzle = parse_sudoku(quiz).map_err(relocate)?;
        let solution = match record.get(1).map(str::trim) {
            Some(s) if !s.is_empty() => {
                let solved = parse_sudoku(s).map_err(relocate)?;
                Some(SquareGrid::from_puzzle(&solved).ok_or(Error::Parse {
                    line,
                    msg: "solution has blank cells".into(),
                })?)
            }
            _ => None,
        };
        out.push(CorpusEntry { puzzle, solution });
    }
    Ok(out)
}

/// A filled `n × n` grid with labels in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SquareGrid {
    n: usize,
    cells: Vec<usize>,
}

impl SquareGrid {
    pub fn new(n: usize, cells: Vec<usize>) -> Result<Self> {
        Error::check_len(n * n, cells.len())?;
        if let Some(i) = cells.iter().position(|&v| v == 0 || v > n) {
            return Err(Error::InvalidCell { cell: i });
        }
        Ok(SquareGrid { n, cells })
    }

    fn from_puzzle(p: &SudokuPuzzle) -> Option<Self> {
        let cells: Vec<usize> = p.cells.iter().map(|&v| usize::from(v)).collect();
        SquareGrid::new(p.side(), cells).ok()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn get(&self, r: usize, c: usize) -> usize {
        self.cells[r * self.n + c]
    }

    /// Digits run together, row-major (the corpus format for 9 × 9).
    pub fn to_line(&self) -> String {
        self.cells.iter().map(|v| v.to_string()).collect()
    }
}

impl fmt::Display for SquareGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Clue pins for a Sudoku embedding as `(cell, digit)` pairs, after checking
/// that the embedding fits the puzzle. Apply with `IsingEmbedding::pin_color`.
pub fn clues_to_pins(puzzle: &SudokuPuzzle, emb: &IsingEmbedding) -> Result<Vec<(usize, usize)>> {
    Error::check_len(puzzle.cells.len(), emb.nodes)?;
    if emb.k != puzzle.side() {
        return Err(Error::invalid(format!(
            "embedding has {} colors, puzzle needs {}",
            emb.k,
            puzzle.side()
        )));
    }
    Ok(puzzle.clues())
}

/// Reshapes a full assignment into an `n × n` grid.
pub fn assignment_to_grid(a: &ColorAssignment, n: usize) -> Result<SquareGrid> {
    Error::check_len(n * n, a.len())?;
    let cells = a
        .colors
        .iter()
        .enumerate()
        .map(|(i, c)| c.ok_or(Error::InvalidCell { cell: i }))
        .collect::<Result<Vec<_>>>()?;
    SquareGrid::new(n, cells)
}

fn is_permutation(values: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n + 1];
    let mut count = 0;
    for v in values {
        if v == 0 || v > n || seen[v] {
            return false;
        }
        seen[v] = true;
        count += 1;
    }
    count == n
}

/// Every row and column holds each label once.
pub fn validate_latin(grid: &SquareGrid) -> bool {
    let n = grid.n;
    (0..n).all(|r| is_permutation((0..n).map(|c| grid.get(r, c)), n))
        && (0..n).all(|c| is_permutation((0..n).map(|r| grid.get(r, c)), n))
}

/// Latin, plus every box a permutation and every clue respected.
pub fn validate_sudoku(grid: &SquareGrid, puzzle: &SudokuPuzzle) -> bool {
    let (m, n) = (puzzle.m, puzzle.side());
    if grid.n != n || !validate_latin(grid) {
        return false;
    }
    let boxes_ok = (0..n).all(|b| {
        let (br, bc) = ((b / m) * m, (b % m) * m);
        is_permutation((0..n).map(|k| grid.get(br + k / m, bc + k % m)), n)
    });
    let clues_ok = puzzle
        .cells
        .iter()
        .zip(&grid.cells)
        .all(|(&clue, &v)| clue == 0 || usize::from(clue) == v);
    boxes_ok && clues_ok
}
