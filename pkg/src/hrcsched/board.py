"""Board state and gravity for the assembly grid.

Stones sit on a width x height grid. Removing a stone may leave stones
above it unsupported; those descend one row at a time until every stone
again has at least one occupied cell somewhere under its span. Only
stones currently in the bottom row can be picked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .jobspec import JobSpec


class BoardError(ValueError):
    pass


@dataclass
class Stone:
    id: str
    kind: str
    col: int
    span: int
    row: int


@dataclass
class PickOutcome:
    removed: str
    # (task id, old row, new row) per single-row descent, in scan order
    descents: list[tuple[str, int, int]] = field(default_factory=list)


class Board:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        # grid[row][col] holds a task id or None; row 0 is the bottom
        self.grid: list[list[str | None]] = [[None] * width for _ in range(height)]
        self.stones: dict[str, Stone] = {}

    @classmethod
    def from_spec(cls, spec: JobSpec) -> "Board":
        board = cls(spec.width, spec.height)
        for t in spec.tasks:
            board._place(Stone(t.id, t.kind, t.col, t.span, t.row))
        return board

    def _place(self, stone: Stone) -> None:
        for c in range(stone.col, stone.col + stone.span):
            if self.grid[stone.row][c] is not None:
                raise BoardError(f"cell ({stone.row}, {c}) already occupied")
            self.grid[stone.row][c] = stone.id
        self.stones[stone.id] = stone

    def copy(self) -> "Board":
        dup = Board.__new__(Board)
        dup.width = self.width
        dup.height = self.height
        dup.grid = [row[:] for row in self.grid]
        dup.stones = {
            sid: Stone(s.id, s.kind, s.col, s.span, s.row) for sid, s in self.stones.items()
        }
        return dup

    def __contains__(self, task_id: str) -> bool:
        return task_id in self.stones

    def __len__(self) -> int:
        return len(self.stones)

    def bottom_row_tasks(self) -> list[str]:
        """Ids of stones in row 0, left to right, each listed once."""
        seen: list[str] = []
        for tid in self.grid[0]:
            if tid is not None and (not seen or seen[-1] != tid):
                seen.append(tid)
        return seen

    def remove_and_cascade(self, task_id: str) -> PickOutcome:
        """Remove a bottom-row stone and let the stack settle.

        Each settling pass scans rows bottom-up and columns left to right;
        a stone whose entire span has empty cells directly below moves down
        one row. Passes repeat until nothing moves, so a stone can fall
        several rows through repeated passes.
        """
        stone = self.stones.get(task_id)
        if stone is None:
            raise BoardError(f"no stone {task_id!r} on the board")
        if stone.row != 0:
            raise BoardError(f"stone {task_id!r} is not in the bottom row")

        for c in range(stone.col, stone.col + stone.span):
            self.grid[0][c] = None
        del self.stones[task_id]

        outcome = PickOutcome(removed=task_id)
        moved = True
        while moved:
            moved = False
            for r in range(1, self.height):
                row_cells = self.grid[r]
                for c in range(self.width):
                    tid = row_cells[c]
                    if tid is None:
                        continue
                    s = self.stones[tid]
                    if s.row != r or s.col != c:
                        continue  # not the leftmost cell of this stone
                    below = self.grid[r - 1]
                    if all(below[cc] is None for cc in range(s.col, s.col + s.span)):
                        for cc in range(s.col, s.col + s.span):
                            below[cc] = tid
                            row_cells[cc] = None
                        s.row = r - 1
                        outcome.descents.append((tid, r, r - 1))
                        moved = True
        return outcome

    def is_gravity_fixpoint(self) -> bool:
        for s in self.stones.values():
            if s.row == 0:
                continue
            below = self.grid[s.row - 1]
            if all(below[c] is None for c in range(s.col, s.col + s.span)):
                return False
        return True

    def render(self) -> str:
        """Text picture, top row first: '.' empty, else the stone's kind."""
        lines = []
        for r in range(self.height - 1, -1, -1):
            lines.append(
                "".join(
                    "." if tid is None else self.stones[tid].kind for tid in self.grid[r]
                )
            )
        return "\n".join(lines)
