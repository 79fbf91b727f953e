"""Hydrophobic barcode faces and the docking score.

Each exterior face carries a 4x4 grid of hydrophobic/hydrophilic cells.  When
two faces meet under water, paired hydrophobic cells expel the water film
between them and bind (+1), a hydrophobic cell against a hydrophilic one
frustrates that and repels (-1), and hydrophilic pairs are neutral (0).  The
second face is seen mirrored because the faces meet front to front.

Peripheral registration rectangles let faces engage in any of the four
in-plane rotations and also permit half-step offsets; plain faces meet only
in the single canonical alignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import DomainError

GRID = 4
HYDROPHOBIC = 1
HYDROPHILIC = 0


class Offset(Enum):
    FULL = "full"
    HALF_X = "half_x"
    HALF_Y = "half_y"


@dataclass(frozen=True)
class FacePattern:
    grid: tuple                      # 4 rows of 4 ints (1 hydrophobic)
    registration_rects: bool = False

    def __post_init__(self):
        if len(self.grid) != GRID or any(len(row) != GRID for row in self.grid):
            raise DomainError("face pattern must be 4x4")
        for row in self.grid:
            for cell in row:
                if cell not in (HYDROPHOBIC, HYDROPHILIC):
                    raise DomainError("cells must be hydrophobic(1)/hydrophilic(0)")

    @classmethod
    def parse(cls, rows, registration_rects: bool = False) -> "FacePattern":
        """Rows of '#' (hydrophobic) and '.' (hydrophilic), e.g. ["##..", ...]."""
        if isinstance(rows, str):
            rows = rows.split("/")
        grid = tuple(tuple(HYDROPHOBIC if ch == "#" else HYDROPHILIC
                           for ch in row) for row in rows)
        return cls(grid, registration_rects)

    def text(self) -> str:
        return "/".join("".join("#" if c else "." for c in row)
                        for row in self.grid)


def _mirror(grid):
    """The partner face as seen from this face's frame (left-right flip)."""
    return tuple(tuple(row[GRID - 1 - c] for c in range(GRID)) for row in grid)


def _rot90(grid):
    return tuple(tuple(grid[GRID - 1 - c][r] for c in range(GRID))
                 for r in range(GRID))


def _rotations(grid, allow: bool):
    yield grid
    if allow:
        g = grid
        for _ in range(3):
            g = _rot90(g)
            yield g


def _pair_score(a: int, b: int) -> int:
    if a == HYDROPHOBIC and b == HYDROPHOBIC:
        return 1
    if a != b:
        return -1
    return 0


def _overlap_score(a_grid, b_grid, dx: int, dy: int) -> int:
    """Score of b_grid laid over a_grid displaced by (dx, dy) cells."""
    score = 0
    for r in range(GRID):
        for c in range(GRID):
            rr, cc = r + dy, c + dx
            if 0 <= rr < GRID and 0 <= cc < GRID:
                score += _pair_score(a_grid[r][c], b_grid[rr][cc])
    return score


def _one_sided(a_grid, b_grid, shifts, guided: bool) -> int:
    mirrored = _mirror(b_grid)
    best = None
    for grid in _rotations(mirrored, guided):
        for dx, dy in shifts:
            s = _overlap_score(a_grid, grid, dx, dy)
            if best is None or s > best:
                best = s
    return best


def dock_score(face_a: FacePattern, face_b: FacePattern,
               offset: Offset = Offset.FULL) -> int:
    """Binding score of two meeting faces at the given registration offset.

    Half offsets require registration rectangles on both faces.  With
    rectangles present the realized score is the best over the guided
    rotations (viewed from either partner, which keeps the score symmetric);
    without them only the canonical alignment engages.
    """
    guided = face_a.registration_rects and face_b.registration_rects
    if offset is not Offset.FULL and not guided:
        raise DomainError("half offsets need registration rectangles on both faces")
    if offset is Offset.FULL:
        shifts = [(0, 0)]
    elif offset is Offset.HALF_X:
        shifts = [(GRID // 2, 0), (-(GRID // 2), 0)]
    else:
        shifts = [(0, GRID // 2), (0, -(GRID // 2))]
    best = _one_sided(face_a.grid, face_b.grid, shifts, guided)
    if guided:
        other = _one_sided(face_b.grid, face_a.grid, shifts, guided)
        if other > best:
            best = other
    return best


ALL_HYDROPHOBIC = FacePattern.parse("####/####/####/####")
ALL_HYDROPHILIC = FacePattern.parse("..../..../..../....")
CHECKERBOARD = FacePattern.parse("#.#./.#.#/#.#./.#.#")
INV_CHECKERBOARD = FacePattern.parse(".#.#/#.#./.#.#/#.#.")
