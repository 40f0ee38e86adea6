import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from types import TracebackType
from typing import Awaitable, Optional, Type, TypeVar


_T = TypeVar("_T")
logger = logging.getLogger(__name__)


class Runner:
    """Event loop whose default executor is a bounded thread pool.

    Experiment trials are scheduled on the executor with
    ``loop.run_in_executor``, so ``threads`` caps their parallelism.
    """

    def __init__(self, *, threads: Optional[int] = None, debug: bool = False) -> None:
        self._debug = debug
        self._started = False
        self._stopped = False
        self._executor = ThreadPoolExecutor(max_workers=threads)
        self._loop = asyncio.new_event_loop()
        self._loop.set_default_executor(self._executor)

    @property
    def executor(self) -> ThreadPoolExecutor:
        return self._executor

    def run(self, main: Awaitable[_T]) -> _T:
        assert self._started
        assert not self._stopped
        if not asyncio.iscoroutine(main):
            raise ValueError("a coroutine was expected, got {!r}".format(main))
        return self._loop.run_until_complete(main)

    def __enter__(self) -> "Runner":
        assert not self._started
        assert not self._stopped
        self._started = True
        asyncio.set_event_loop(self._loop)
        self._loop.set_debug(self._debug)
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType],
    ) -> None:
        assert self._started
        assert not self._stopped
        self._stopped = True
        try:
            _cancel_all_tasks(self._loop)
            self._loop.run_until_complete(self._loop.shutdown_asyncgens())
        finally:
            # worker threads cannot be interrupted, queued trials are dropped
            self._executor.shutdown(wait=exc_type is None)
            asyncio.set_event_loop(None)
            self._loop.close()


def _cancel_all_tasks(loop: asyncio.AbstractEventLoop) -> None:
    to_cancel = asyncio.all_tasks(loop)
    if not to_cancel:
        return

    for task in to_cancel:
        task.cancel()

    loop.run_until_complete(asyncio.gather(*to_cancel, return_exceptions=True))

    for task in to_cancel:
        if task.cancelled():
            continue
        if task.exception() is not None:
            logger.debug(
                "Unhandled exception during shutdown of %r",
                task,
                exc_info=task.exception(),
            )
