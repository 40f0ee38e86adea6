import abc
from typing import Any, Generic, List, Optional, Sequence, Tuple, TypeVar, Union

import click
import numpy as np

from mdidro.api import IllegalArgumentError, MomentSet
from mdidro.api.parser import parse_estimators, parse_moment_set, parse_vector


_T = TypeVar("_T")


class SpecType(click.ParamType, Generic[_T], abc.ABC):
    """Parameter parsed by a library parser; its errors become usage errors."""

    def convert(
        self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]
    ) -> _T:
        if not isinstance(value, str):
            # already converted, e.g. a default
            return value  # type: ignore
        try:
            return self.parse(value)
        except IllegalArgumentError as exc:
            self.fail(str(exc), param, ctx)

    @abc.abstractmethod
    def parse(self, value: str) -> _T:
        pass


class MomentSetType(SpecType[MomentSet]):
    name = "set"

    def parse(self, value: str) -> MomentSet:
        return parse_moment_set(value)


class VectorType(SpecType[np.ndarray]):
    name = "vector"

    def parse(self, value: str) -> np.ndarray:
        return parse_vector(value)


class EstimatorsType(SpecType[List[Tuple[str, float]]]):
    name = "estimators"

    def parse(self, value: str) -> List[Tuple[str, float]]:
        return parse_estimators(value)


class GridType(click.ParamType):
    """Comma separated grid of numbers; a list from a config file is accepted."""

    def __init__(self, item_type: Union[type, click.ParamType]) -> None:
        self.item_type = click.types.convert_type(item_type)
        self.name = f"{self.item_type.name}[,...]"

    def convert(
        self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]
    ) -> Tuple[Any, ...]:
        items: Sequence[Any]
        if isinstance(value, str):
            items = [item for item in value.split(",") if item.strip()]
        else:
            items = value
        if not items:
            self.fail("the grid is empty", param, ctx)
        return tuple(self.item_type.convert(item, param, ctx) for item in items)


MOMENT_SET = MomentSetType()
VECTOR = VectorType()
ESTIMATORS = EstimatorsType()
INT_GRID = GridType(int)
FLOAT_GRID = GridType(float)
