"""The experiment configuration: what to load, how to split it and who attacks whom.

Configurations are JSON objects; keys may be kebab-case or snake_case. `to_dict` returns the fully
resolved configuration, which reads back (`from_mapping`) to an equal one: manifests are configs.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Final, Iterable, Mapping, MutableMapping, Optional, Tuple

from coveo_itertools.lookups import dict_lookup

from label_subversion.attacks.config import AttackConfig, CostScheme, Strategy
from label_subversion.classifiers.kind import ClassifierKind
from label_subversion.classifiers.spec import ClassifierConfig, ClassifierSpec
from label_subversion.datasets import (
    Dataset,
    TrainTestSplit,
    generate_circular,
    generate_linear,
    load_csv,
    split,
    standardize,
)
from label_subversion.exceptions import CandidateSetError, ConfigError
from label_subversion.gbdt import GbdtParams
from label_subversion.sampling import DEFAULT_LARGE_RATIO, DEFAULT_SMALL_RATIO, GradientOrder
from label_subversion.utils import config_factory, derive_seed, find_option

DATASET_KINDS: Final[Tuple[str, ...]] = ("csv", "linear", "circular")
# radial noise must stay well under the ring width, the linear clusters may overlap a little.
DEFAULT_NOISE: Final[Dict[str, float]] = {"linear": 0.85, "circular": 0.1}
DEFAULT_BUDGETS: Final[Tuple[float, ...]] = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3)


@dataclass(frozen=True)
class DatasetSource:
    """A csv file (`path`, `label_column`, `positive_value`) or a generator (`n`, `noise`)."""

    kind: str = "linear"
    path: Optional[str] = None
    label_column: str = "label"
    positive_value: str = "1"
    n: int = 1000
    noise: Optional[float] = None
    name: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", str(self.kind).lower())
        if self.kind not in DATASET_KINDS:
            raise ConfigError(f"dataset.kind must be one of {DATASET_KINDS}, got {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise ConfigError("dataset.path is required when dataset.kind is 'csv'")
        if self.kind != "csv" and self.noise is None:
            object.__setattr__(self, "noise", DEFAULT_NOISE[self.kind])
        object.__setattr__(self, "positive_value", str(self.positive_value))

    def load(self, seed: int) -> Dataset:
        if self.kind == "csv":
            assert self.path
            return load_csv(self.path, self.label_column, self.positive_value, name=self.name)
        assert self.noise is not None
        generator = generate_linear if self.kind == "linear" else generate_circular
        return generator(self.n, self.noise, seed)


@dataclass(frozen=True)
class CostRun:
    """One row of the cost analysis: a budget fraction under a cost scheme."""

    budget: float
    large_cost: float = 1.0
    small_cost: float = 1.0
    label: Optional[str] = None

    @property
    def scheme(self) -> CostScheme:
        return CostScheme(self.large_cost, self.small_cost, self.label)


def _default_cost_runs() -> Tuple[CostRun, ...]:
    return CostRun(budget=0.1), CostRun(budget=0.2, small_cost=2.0)


def _default_specs() -> Tuple[ClassifierSpec, ...]:
    return (ClassifierSpec(ClassifierKind.LogisticRegression),)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSource = field(default_factory=DatasetSource)
    train_fraction: float = 0.2
    stratified: bool = False
    standardize: bool = True
    surrogates: Tuple[ClassifierSpec, ...] = field(default_factory=_default_specs)
    victims: Tuple[ClassifierSpec, ...] = field(default_factory=_default_specs)
    strategies: Tuple[Strategy, ...] = (Strategy.Ogds,)
    # single-budget commands (attack, transfer, susceptibility); a fraction of the training set.
    budget: float = 0.2
    budgets: Tuple[float, ...] = DEFAULT_BUDGETS
    a: float = DEFAULT_LARGE_RATIO
    b: float = DEFAULT_SMALL_RATIO
    # signed: the small-gradient block is the tail of the signed ranking, one class at a time.
    gradient_order: GradientOrder = GradientOrder.Signed
    t_max: int = 10
    cost_scheme: CostScheme = field(default_factory=CostScheme)
    cost_runs: Tuple[CostRun, ...] = field(default_factory=_default_cost_runs)
    pair_normalized: bool = True
    gbdt: GbdtParams = field(default_factory=GbdtParams)
    seed: int = 0
    jobs: int = 1
    out: str = "subversion-output"

    def __post_init__(self) -> None:
        for name in ("surrogates", "victims", "strategies", "budgets", "cost_runs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "strategies", tuple(Strategy.parse(s) for s in self.strategies))
        object.__setattr__(self, "budgets", tuple(float(budget) for budget in self.budgets))
        try:
            object.__setattr__(self, "gradient_order", GradientOrder.parse(self.gradient_order))
        except CandidateSetError as exception:
            raise ConfigError(str(exception)) from exception

        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.surrogates or not self.victims or not self.strategies:
            raise ConfigError("surrogates, victims and strategies may not be empty")
        for budget in (self.budget, *self.budgets, *(run.budget for run in self.cost_runs)):
            if not 0 <= budget <= 1:
                raise ConfigError(f"Budgets are fractions in [0, 1], got {budget}")
        if list(self.budgets) != sorted(self.budgets):
            raise ConfigError(f"budgets must be in ascending order, got {list(self.budgets)}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be positive, got {self.jobs}")
        if self.t_max < 1:
            raise ConfigError(f"t_max must be positive, got {self.t_max}")

    @classmethod
    def from_mapping(cls, config: Mapping[str, Any]) -> "ExperimentConfig":
        options = dict(config)
        sections: Dict[str, Any] = {}

        def _pop(name: str) -> Any:
            key = find_option(options, name)
            return None if key is None else options.pop(key)

        if (dataset := _pop("dataset")) is not None:
            sections["dataset"] = config_factory(DatasetSource, _as_mapping("dataset", dataset))
        for name in ("surrogates", "victims"):
            if (specs := _pop(name)) is not None:
                sections[name] = tuple(_classifiers(name, specs))
        if (cost_scheme := _pop("cost_scheme")) is not None:
            sections["cost_scheme"] = config_factory(
                CostScheme, _as_mapping("cost_scheme", cost_scheme)
            )
        if (cost_runs := _pop("cost_runs")) is not None:
            sections["cost_runs"] = tuple(
                config_factory(CostRun, _as_mapping("cost_runs", run))
                for run in _as_list(cost_runs)
            )
        if (gbdt := _pop("gbdt")) is not None:
            sections["gbdt"] = config_factory(GbdtParams, _as_mapping("gbdt", gbdt))
        if (strategies := _pop("strategies")) is not None:
            sections["strategies"] = tuple(_as_list(strategies))
        if (gradient_order := _pop("gradient_order")) is not None:
            try:
                sections["gradient_order"] = GradientOrder.parse(gradient_order)
            except CandidateSetError as exception:
                raise ConfigError(str(exception)) from exception

        return config_factory(cls, options, **sections)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": asdict(self.dataset),
            "train_fraction": self.train_fraction,
            "stratified": self.stratified,
            "standardize": self.standardize,
            "surrogates": [spec.to_config() for spec in self.surrogates],
            "victims": [spec.to_config() for spec in self.victims],
            "strategies": [str(strategy) for strategy in self.strategies],
            "budget": self.budget,
            "budgets": list(self.budgets),
            "a": self.a,
            "b": self.b,
            "gradient_order": str(self.gradient_order),
            "t_max": self.t_max,
            "cost_scheme": asdict(self.cost_scheme),
            "cost_runs": [asdict(run) for run in self.cost_runs],
            "pair_normalized": self.pair_normalized,
            "gbdt": asdict(self.gbdt),
            "seed": self.seed,
            "jobs": self.jobs,
            "out": self.out,
        }

    @property
    def output_directory(self) -> Path:
        return Path(self.out)

    def prepare_split(self) -> TrainTestSplit:
        """Load (or generate), split and optionally standardize. Seeds derive from `seed`."""
        data = self.dataset.load(derive_seed(self.seed, "dataset"))
        split_seed = derive_seed(self.seed, "split")
        data_split = split(data, self.train_fraction, split_seed, self.stratified)
        return standardize(data_split) if self.standardize else data_split

    def attack_config(self, **changes: Any) -> AttackConfig:
        """The base attack configuration; protocols fill in budget, surrogate and validation."""
        options: Dict[str, Any] = dict(
            a=self.a,
            b=self.b,
            t_max=self.t_max,
            seed=self.seed,
            surrogate=self.surrogates[0],
            cost_scheme=self.cost_scheme,
            pair_normalized=self.pair_normalized,
            gradient_order=self.gradient_order,
        )
        options.update(changes)
        return AttackConfig(**options)


def _as_mapping(section: str, value: Any) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{section}: expected an object, got {value!r}")
    return value


def _as_list(value: Any) -> Iterable[Any]:
    return value if isinstance(value, (list, tuple)) else [value]


def _classifiers(section: str, value: Any) -> Iterable[ClassifierSpec]:
    specs: Iterable[ClassifierConfig] = _as_list(value)
    for spec in specs:
        try:
            yield ClassifierSpec.from_config(spec)
        except ConfigError as exception:
            raise ConfigError(f"{section}: {exception}") from exception


def _parse_value(raw: str) -> Any:
    """JSON when it parses (numbers, booleans, lists, objects), the raw text otherwise."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def set_option(config: MutableMapping[str, Any], assignment: str) -> None:
    """Apply a `dotted.key=value` assignment onto a raw configuration mapping."""
    key, separator, raw = assignment.partition("=")
    if not separator or not key.strip():
        raise ConfigError(f"Expected KEY=VALUE, got {assignment!r}")

    *parents, leaf = key.strip().split(".")
    section = config
    for parent in parents:
        existing = find_option(section, parent) or parent
        child = dict_lookup(section, existing, default=None)
        if child is None:
            child = section[existing] = {}
        elif not isinstance(child, MutableMapping):
            raise ConfigError(f"Cannot set {key!r}: {parent!r} is not a section")
        section = child
    section[find_option(section, leaf) or leaf] = _parse_value(raw)


def apply_overrides(
    config: MutableMapping[str, Any], flags: Mapping[str, Any], assignments: Iterable[str] = ()
) -> MutableMapping[str, Any]:
    """Command-line flags win over the file; `None` flags were not given."""
    for name, value in flags.items():
        if value is not None:
            config[find_option(config, name) or name] = value
    for assignment in assignments:
        set_option(config, assignment)
    return config
