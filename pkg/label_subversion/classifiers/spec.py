from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Mapping, Union

from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.exceptions import ConfigError, InvalidParameters
from label_subversion.gbdt import GbdtParams
from label_subversion.utils import config_factory, find_option

ClassifierConfig = Union[str, Mapping[str, Any], "ClassifierSpec"]


@dataclass(frozen=True)
class ClassifierSpec:
    """What to fit. Only the fields relevant to `kind` are consulted."""

    kind: ClassifierKind = ClassifierKind.LogisticRegression
    gamma: float = 1.0  # loss weight, linear kinds
    k_neighbors: int = 5  # knn
    gbdt_params: GbdtParams = field(default_factory=GbdtParams)  # gbdt
    max_iterations: int = 1000  # linear solver
    tolerance: float = 1e-6  # linear solver

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", ClassifierKind.parse(self.kind))
        except ValueError as exception:
            raise InvalidParameters(str(exception)) from exception
        if self.gamma <= 0:
            raise InvalidParameters(f"gamma must be positive, got {self.gamma}")
        if self.k_neighbors < 1:
            raise InvalidParameters(f"k_neighbors must be positive, got {self.k_neighbors}")
        if self.max_iterations < 1:
            raise InvalidParameters(f"max_iterations must be positive, got {self.max_iterations}")
        if self.tolerance < 0:
            raise InvalidParameters(f"tolerance must be non-negative, got {self.tolerance}")

    @property
    def label(self) -> str:
        return self.kind.label

    @classmethod
    def from_config(cls, config: ClassifierConfig) -> "ClassifierSpec":
        """Handles the short form (`"knn"`) and mappings (`{"kind": "knn", "k-neighbors": 3}`)."""
        if isinstance(config, ClassifierSpec):
            return config
        if isinstance(config, str):
            config = {"kind": config}
        if not isinstance(config, Mapping):
            raise ConfigError(f"Cannot read a classifier from {config!r}")

        options = dict(config)
        overrides: Dict[str, Any] = {}
        if (key := find_option(options, "gbdt_params")) is not None:
            gbdt = options.pop(key)
            overrides["gbdt_params"] = (
                gbdt if isinstance(gbdt, GbdtParams) else config_factory(GbdtParams, gbdt or {})
            )
        return config_factory(cls, options, **overrides)

    def to_config(self) -> Dict[str, Any]:
        """A json-ready mapping that `from_config` reads back to an equal spec."""
        config = asdict(self)
        config["kind"] = str(self.kind)
        return config
