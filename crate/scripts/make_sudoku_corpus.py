"""Writes a seeded corpus of 9x9 sudoku puzzles with unique solutions.

Output is `quizzes,solutions` CSV, one 81-digit string per field, 0 for blanks.
"""
import argparse
import random


def candidates(grid, cell):
    r, c = divmod(cell, 9)
    used = set(grid[r * 9:r * 9 + 9]) | set(grid[c::9])
    br, bc = r - r % 3, c - c % 3
    for i in range(3):
        used.update(grid[(br + i) * 9 + bc:(br + i) * 9 + bc + 3])
    return [d for d in range(1, 10) if d not in used]


def count_solutions(grid, limit=2):
    blanks = [i for i, v in enumerate(grid) if v == 0]
    if not blanks:
        return 1
    cell = min(blanks, key=lambda i: len(candidates(grid, i)))
    total = 0
    for d in candidates(grid, cell):
        grid[cell] = d
        total += count_solutions(grid, limit - total)
        grid[cell] = 0
        if total >= limit:
            break
    return total


def fill(grid, rng):
    blanks = [i for i, v in enumerate(grid) if v == 0]
    if not blanks:
        return True
    cell = min(blanks, key=lambda i: len(candidates(grid, i)))
    options = candidates(grid, cell)
    rng.shuffle(options)
    for d in options:
        grid[cell] = d
        if fill(grid, rng):
            return True
    grid[cell] = 0
    return False


def make_puzzle(rng, clues):
    solution = [0] * 81
    fill(solution, rng)
    puzzle = solution[:]
    cells = list(range(81))
    rng.shuffle(cells)
    for cell in cells:
        if sum(1 for v in puzzle if v) <= clues:
            break
        keep = puzzle[cell]
        puzzle[cell] = 0
        if count_solutions(puzzle[:]) != 1:
            puzzle[cell] = keep
    return puzzle, solution


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default="data/sudoku.csv")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w") as f:
        f.write("quizzes,solutions\n")
        for _ in range(args.count):
            puzzle, solution = make_puzzle(rng, rng.randint(30, 36))
            f.write("".join(map(str, puzzle)) + "," + "".join(map(str, solution)) + "\n")


if __name__ == "__main__":
    main()
