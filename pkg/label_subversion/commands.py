"""Mounts label-flip poisoning attacks and their evaluation protocols from the command line."""

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Dict, Generator, Iterable, Optional, Set, Tuple, TypeVar

import click
import pandas as pd
from coveo_functools.finalizer import finalizer
from coveo_styles.styles import ExitWithFailure, echo, install_pretty_exception_hook

from label_subversion.attacks.config import Strategy, budget_from_fraction
from label_subversion.attacks.strategies import run_strategy
from label_subversion.classifiers.factory import fit
from label_subversion.classifiers.linear import LinearModel
from label_subversion.classifiers.model import TrainedModel
from label_subversion.evaluation.protocols import (
    budget_sweep,
    cost_analysis,
    susceptibility_report,
    transferability_matrix,
    victim_error,
)
from label_subversion.evaluation.reporting import (
    cost_frame,
    gradients_frame,
    matrix_frame,
    plot_data,
    poisoned_labels_frame,
    poisoned_points_frame,
    ranking_frame,
    sweep_frame,
    write_csv,
    write_json,
    write_text,
)
from label_subversion.exceptions import ConfigError, DatasetError, SubversionException
from label_subversion.experiment import ExperimentConfig, apply_overrides
from label_subversion.sampling import gradient_profile
from label_subversion.utils import derive_seed, load_json_from_path

F = TypeVar("F", bound=Callable[..., Any])

CONFIG_ERROR_EXIT_CODE = 1
RUNTIME_ERROR_EXIT_CODE = 2

STRATEGY_CHOICE = click.Choice([str(strategy) for strategy in Strategy])


def exit_code_for(exception: SubversionException) -> int:
    return CONFIG_ERROR_EXIT_CODE if isinstance(exception, ConfigError) else RUNTIME_ERROR_EXIT_CODE


def _suggestions_for(exception: SubversionException) -> Tuple[str, ...]:
    if isinstance(exception, ConfigError):
        return ("Check the configuration file and the --set assignments.",)
    if isinstance(exception, DatasetError):
        return ("Check the dataset section of the configuration.",)
    return ()


@contextmanager
def _failures_as_exit_codes() -> Generator[None, None, None]:
    try:
        yield
    except SubversionException as exception:
        raise ExitWithFailure(
            suggestions=_suggestions_for(exception), exit_code=exit_code_for(exception)
        ) from exception


def _echo_updated(updated: Set[Path]) -> None:
    if updated:
        echo.outcome("Updated:", pad_before=True)
        for updated_path in sorted(updated):
            echo.noise(updated_path, item=True)


def _warn_if_unconverged(model: TrainedModel) -> None:
    if isinstance(model, LinearModel) and not model.converged:
        echo.warning(
            f"{model.kind.label} stopped after {len(model.objective_trace) - 1} descent step(s)"
            " without converging; raise max_iterations or loosen tolerance."
        )


class _Reports:
    """Writes the report files of one run into the output directory and remembers what changed."""

    def __init__(self, config: ExperimentConfig, *, dry_run: bool) -> None:
        self.directory = config.output_directory
        self.dry_run = dry_run
        self.updated: Set[Path] = set()
        if not dry_run:
            self.directory.mkdir(parents=True, exist_ok=True)
        self.json("manifest.json", config.to_dict())

    def _track(self, path: Path, changed: bool) -> None:
        if changed:
            self.updated.add(path)

    def csv(self, name: str, frame: pd.DataFrame) -> None:
        path = self.directory / name
        self._track(path, write_csv(frame, path, dry_run=self.dry_run))

    def json(self, name: str, payload: Dict[str, Any]) -> None:
        path = self.directory / name
        self._track(path, write_json(payload, path, dry_run=self.dry_run))

    def text(self, name: str, content: str) -> None:
        path = self.directory / name
        self._track(path, write_text(content, path, dry_run=self.dry_run))


def _load_experiment(
    config_path: Optional[Path], assignments: Iterable[str], **flags: Any
) -> ExperimentConfig:
    """The configuration file (if any), then the flags, then the `--set` assignments."""
    with _failures_as_exit_codes():
        if config_path is not None and not config_path.is_file():
            raise ConfigError(f"Cannot find the configuration file: {config_path}")
        raw = {} if config_path is None else load_json_from_path(config_path)
        return ExperimentConfig.from_mapping(apply_overrides(raw, flags, assignments))


def _experiment_options(function: F) -> F:
    options = (
        click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False, path_type=Path),
            default=None,
            help="A json experiment configuration; a previous run's manifest.json works too.",
        ),
        click.option("--seed", type=int, default=None, help="The master seed."),
        click.option("--jobs", type=int, default=None, help="How many grid cells run at once."),
        click.option("--out", type=str, default=None, help="The output directory."),
        click.option("--standardize/--no-standardize", default=None),
        click.option(
            "--set",
            "assignments",
            multiple=True,
            metavar="KEY=VALUE",
            help="Override any configuration key; dots address nested sections.",
        ),
        click.option("--dry-run/--no-dry-run", default=False),
        click.option("--verbose", is_flag=True, default=False),
    )
    for option in reversed(options):
        function = option(function)
    return function


@click.group()
def subvert() -> None:
    """The 'subvert' cli entry point."""
    install_pretty_exception_hook()


@subvert.command()
@_experiment_options
@click.option("--strategy", type=STRATEGY_CHOICE, default=None)
@click.option("--budget", type=float, default=None, help="A fraction of the training set.")
def attack(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out: Optional[str] = None,
    standardize: Optional[bool] = None,
    assignments: Tuple[str, ...] = (),
    dry_run: bool = False,
    verbose: bool = False,
    strategy: Optional[str] = None,
    budget: Optional[float] = None,
) -> None:
    """Poison the training labels once, then fit every victim on them."""
    config = _load_experiment(
        config_path,
        assignments,
        seed=seed,
        jobs=jobs,
        out=out,
        standardize=standardize,
        strategies=None if strategy is None else [strategy],
        budget=budget,
    )
    selected = config.strategies[0]
    echo.step(
        f"Mounting {selected} against {config.dataset.kind} data (budget {config.budget:.0%})"
    )

    with _failures_as_exit_codes():
        data_split = config.prepare_split()
        train = data_split.train
        gradients = gradient_profile(
            train,
            config.gbdt,
            derive_seed(config.seed, "gradients"),
            ordering=config.gradient_order,
        )
        attack_config = config.attack_config(
            budget=budget_from_fraction(config.budget, train.n),
            validation=data_split.test,
            seed=derive_seed(config.seed, config.surrogates[0].label, config.budget),
        )
        result = run_strategy(selected, train, attack_config, gradients)
        surrogate_seed = derive_seed(config.seed, "surrogate")
        clean_model = fit(attack_config.surrogate, train, surrogate_seed)
        poisoned_model = fit(
            attack_config.surrogate, train.with_labels(result.poisoned_labels), surrogate_seed
        )
        victims = {
            spec.label: {
                "clean": victim_error(spec, train, train.labels, data_split.test, config.seed),
                "poisoned": victim_error(
                    spec, train, result.poisoned_labels, data_split.test, config.seed
                ),
            }
            for spec in config.victims
        }

    if verbose:
        for label, errors in victims.items():
            echo.noise(f"{label}: {errors['clean']:.3f} -> {errors['poisoned']:.3f}", item=True)
        for model in (clean_model, poisoned_model):
            _warn_if_unconverged(model)

    reports = _Reports(config, dry_run=dry_run)
    with finalizer(_echo_updated, reports.updated):
        reports.csv(
            "poisoned_labels.csv",
            poisoned_labels_frame(train.labels, result, data_split.train_indices),
        )
        reports.csv(
            "poisoned_points.csv",
            poisoned_points_frame(
                train, result, clean_model, poisoned_model, data_split.train_indices
            ),
        )
        reports.json(
            "attack.json",
            {
                **result.to_json(),
                "victim_errors": victims,
                "surrogate_model": poisoned_model.to_json(),
            },
        )

    echo.success(f"{result.flips} label(s) flipped out of {train.n}.")


@subvert.command()
@_experiment_options
@click.option("--strategy", "strategies", multiple=True, type=STRATEGY_CHOICE)
def sweep(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out: Optional[str] = None,
    standardize: Optional[bool] = None,
    assignments: Tuple[str, ...] = (),
    dry_run: bool = False,
    verbose: bool = False,
    strategies: Tuple[str, ...] = (),
) -> None:
    """Victim error against the budget, one curve per strategy and victim (self-attacks)."""
    config = _load_experiment(
        config_path,
        assignments,
        seed=seed,
        jobs=jobs,
        out=out,
        standardize=standardize,
        strategies=list(strategies) or None,
    )
    echo.step(f"Sweeping {len(config.budgets)} budget(s) for {len(config.victims)} victim(s)")

    with _failures_as_exit_codes():
        data_split = config.prepare_split()
        results = [
            budget_sweep(
                data_split,
                config.strategies,
                victim,
                config.budgets,
                config.attack_config(),
                gbdt_params=config.gbdt,
                jobs=config.jobs,
                verbose=verbose,
            )
            for victim in config.victims
        ]

    reports = _Reports(config, dry_run=dry_run)
    with finalizer(_echo_updated, reports.updated):
        reports.csv("sweep.csv", pd.concat([sweep_frame(result) for result in results]))
        reports.json("sweep.json", {"sweeps": [result.to_json() for result in results]})
        for result in results:
            for strategy, content in plot_data(result).items():
                reports.text(f"plot-{result.victim}-{strategy}.txt", content)

    echo.success()


@subvert.command()
@_experiment_options
@click.option("--budget", type=float, default=None, help="A fraction of the training set.")
def transfer(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out: Optional[str] = None,
    standardize: Optional[bool] = None,
    assignments: Tuple[str, ...] = (),
    dry_run: bool = False,
    verbose: bool = False,
    budget: Optional[float] = None,
) -> None:
    """Poison with every surrogate, then fit every victim on each poisoned labeling."""
    config = _load_experiment(
        config_path,
        assignments,
        seed=seed,
        jobs=jobs,
        out=out,
        standardize=standardize,
        budget=budget,
    )
    echo.step(
        f"Transferring attacks from {len(config.surrogates)} surrogate(s) "
        f"to {len(config.victims)} victim(s)"
    )

    with _failures_as_exit_codes():
        matrix = transferability_matrix(
            config.prepare_split(),
            config.surrogates,
            config.victims,
            config.budget,
            config.attack_config(),
            strategy=config.strategies[0],
            gbdt_params=config.gbdt,
            jobs=config.jobs,
            verbose=verbose,
        )

    reports = _Reports(config, dry_run=dry_run)
    with finalizer(_echo_updated, reports.updated):
        reports.csv("transfer.csv", matrix_frame(matrix))
        reports.json("transfer.json", matrix.to_json())

    echo.success()


@subvert.command()
@_experiment_options
@click.option("--budget", type=float, default=None, help="A fraction of the training set.")
def susceptibility(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out: Optional[str] = None,
    standardize: Optional[bool] = None,
    assignments: Tuple[str, ...] = (),
    dry_run: bool = False,
    verbose: bool = False,
    budget: Optional[float] = None,
) -> None:
    """The transferability matrix with clean errors, and victims ranked by error increase."""
    config = _load_experiment(
        config_path,
        assignments,
        seed=seed,
        jobs=jobs,
        out=out,
        standardize=standardize,
        budget=budget,
    )
    echo.step(f"Measuring the susceptibility of {len(config.victims)} victim(s)")

    with _failures_as_exit_codes():
        report = susceptibility_report(
            config.prepare_split(),
            config.surrogates,
            config.victims,
            config.budget,
            config.attack_config(),
            strategy=config.strategies[0],
            gbdt_params=config.gbdt,
            jobs=config.jobs,
            verbose=verbose,
        )

    for label, increase in report.ranking():
        echo.noise(f"{label}: {increase:+.3f}", item=True)

    reports = _Reports(config, dry_run=dry_run)
    with finalizer(_echo_updated, reports.updated):
        reports.csv("susceptibility.csv", matrix_frame(report.matrix))
        reports.csv("susceptibility-ranking.csv", ranking_frame(report))
        reports.json("susceptibility.json", report.to_json())

    echo.success()


@subvert.command()
@_experiment_options
def cost(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out: Optional[str] = None,
    standardize: Optional[bool] = None,
    assignments: Tuple[str, ...] = (),
    dry_run: bool = False,
    verbose: bool = False,
) -> None:
    """OGDS under every configured (cost scheme, budget) run."""
    config = _load_experiment(
        config_path, assignments, seed=seed, jobs=jobs, out=out, standardize=standardize
    )
    echo.step(f"Analyzing {len(config.cost_runs)} cost run(s)")

    with _failures_as_exit_codes():
        rows = cost_analysis(
            config.prepare_split(),
            [(run.scheme, run.budget) for run in config.cost_runs],
            config.attack_config(),
            victim=config.victims[0],
            gbdt_params=config.gbdt,
            jobs=config.jobs,
            verbose=verbose,
        )

    reports = _Reports(config, dry_run=dry_run)
    with finalizer(_echo_updated, reports.updated):
        reports.csv("cost.csv", cost_frame(rows))
        reports.json("cost.json", {"rows": [row.to_json() for row in rows]})

    echo.success()


@subvert.command()
@_experiment_options
def gradients(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    jobs: Optional[int] = None,
    out: Optional[str] = None,
    standardize: Optional[bool] = None,
    assignments: Tuple[str, ...] = (),
    dry_run: bool = False,
    verbose: bool = False,
) -> None:
    """Per-instance (g, h) of a GBDT fit on the whole dataset, with the gradient rank of every row.

    Trees are insensitive to per-feature scaling: the dataset is profiled as loaded, unsplit.
    """
    config = _load_experiment(
        config_path, assignments, seed=seed, jobs=jobs, out=out, standardize=standardize
    )
    echo.step("Profiling the gradients of every instance")

    with _failures_as_exit_codes():
        data = config.dataset.load(derive_seed(config.seed, "dataset"))
        profile = gradient_profile(
            data,
            config.gbdt,
            derive_seed(config.seed, "gradients"),
            ordering=config.gradient_order,
        )

    if verbose:
        echo.noise(f"{data}: mean |g| = {abs(profile.g).mean():.4f}", item=True)

    reports = _Reports(config, dry_run=dry_run)
    with finalizer(_echo_updated, reports.updated):
        reports.csv("gradients.csv", gradients_frame(profile))

    echo.success()
