import sys
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Awaitable, Dict, Optional, Tuple, TypeVar

from .asyncio_utils import Runner


_T = TypeVar("_T")


@dataclass
class Root:
    color: bool
    tty: bool
    terminal_size: Tuple[int, int]
    verbosity: int
    show_traceback: bool
    seed: int
    threads: Optional[int]
    out: Optional[Path]
    config_path: Optional[Path]
    command_path: str = ""
    # resolved parameters of the running command, echoed into outputs
    command_params: Dict[str, Any] = field(default_factory=dict)

    _runner: Runner = field(init=False)

    def __post_init__(self) -> None:
        self._runner = Runner(threads=self.threads, debug=self.verbosity >= 2)
        self._runner.__enter__()

    def close(self) -> None:
        try:
            # Suppress prints unhandled exceptions
            # on event loop closing
            sys.stderr = None  # type: ignore
            self._runner.__exit__(*sys.exc_info())
        finally:
            sys.stderr = sys.__stderr__

    def run(self, main: Awaitable[_T]) -> _T:
        return self._runner.run(main)

    @property
    def executor(self) -> Executor:
        return self._runner.executor

    @property
    def quiet(self) -> bool:
        return self.verbosity < 0

    def resolve_seed(self, seed: Optional[int]) -> int:
        return self.seed if seed is None else seed

    def resolve_out(self, out: Optional[str]) -> Optional[Path]:
        return self.out if out is None else Path(out)
