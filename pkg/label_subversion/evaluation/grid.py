"""Run independent protocol cells concurrently and gather them by key."""

import asyncio
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Generic, Hashable, Iterable, Tuple, TypeVar

from coveo_styles.styles import echo

from label_subversion.exceptions import InvalidParameters

T = TypeVar("T")


@dataclass(frozen=True)
class Cell(Generic[T]):
    key: Hashable
    task: Callable[[], T]


async def _run_cells(cells: Iterable[Cell[T]], jobs: int, verbose: bool) -> Dict[Hashable, T]:
    loop = asyncio.get_running_loop()
    results: Dict[Hashable, T] = {}

    with ThreadPoolExecutor(max_workers=jobs) as executor:

        async def _launch(cell: Cell[T]) -> Tuple[Hashable, T]:
            return cell.key, await loop.run_in_executor(executor, cell.task)

        for next_result in asyncio.as_completed([_launch(cell) for cell in cells]):
            key, value = await next_result
            if verbose:
                echo.noise(f"{key} completed", item=True)
            results[key] = value

    return results


def run_cells(
    cells: Iterable[Cell[T]], *, jobs: int = 1, verbose: bool = False
) -> Dict[Hashable, T]:
    """Completion order never shows in the output: callers index the results by key."""
    if jobs < 1:
        raise InvalidParameters(f"jobs must be positive, got {jobs}")
    cells = list(cells)
    if not cells:
        return {}
    return asyncio.run(_run_cells(cells, jobs, verbose))
