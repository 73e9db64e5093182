"""Per-symbol operation counts for the detector family.

Pure integer arithmetic; each algorithm row is a closed-form count of
multiplications and additions per processed symbol in terms of the
observation dimension M, rank D, inner cycles J, path count Lp and the
maximum rank D_max of the automatic rank-selection variant.  The
eigendecomposition row only has an order-of-magnitude cost, reported as
M**3 with the ``asymptotic`` flag set.
"""

import csv
import enum
import itertools
from dataclasses import dataclass, field

from .errors import ConfigurationError


class Algorithm(enum.Enum):
    FULL_RANK_LMS = "full_rank_lms"
    FULL_RANK_MBER = "full_rank_mber"
    MWF_LMS = "mwf_lms"
    EIG = "eig"
    JIO_LMS = "jio_lms"
    MWF_MBER = "mwf_mber"
    JIO_MBER = "jio_mber"
    JIO_MBER_AUTO = "jio_mber_auto"


@dataclass(frozen=True)
class OpCountReport:
    algorithm: Algorithm
    multiplications: int
    additions: int
    params: dict = field(default_factory=dict)
    asymptotic: bool = False


# multiplication/addition formulas per algorithm and the parameters each needs
_FORMULAS = {
    Algorithm.FULL_RANK_LMS: (
        ("M",),
        lambda M, D, J, Lp, D_max: 2 * M + 1,
        lambda M, D, J, Lp, D_max: 2 * M,
    ),
    Algorithm.FULL_RANK_MBER: (
        ("M",),
        lambda M, D, J, Lp, D_max: 4 * M + 1,
        lambda M, D, J, Lp, D_max: 4 * M - 1,
    ),
    Algorithm.MWF_LMS: (
        ("M", "D"),
        lambda M, D, J, Lp, D_max: D * M**2 - M**2 + 2 * D * M + 4 * D + 1,
        lambda M, D, J, Lp, D_max: D * M**2 - M**2 + 3 * D - 2,
    ),
    Algorithm.EIG: (
        ("M",),
        lambda M, D, J, Lp, D_max: M**3,
        lambda M, D, J, Lp, D_max: M**3,
    ),
    Algorithm.JIO_LMS: (
        ("M", "D"),
        lambda M, D, J, Lp, D_max: 3 * D * M + M + 3 * D + 6,
        lambda M, D, J, Lp, D_max: 2 * D * M + M + 4 * D - 2,
    ),
    Algorithm.MWF_MBER: (
        ("M", "D", "Lp"),
        lambda M, D, J, Lp, D_max: (D + 1) * M**2
        + (3 * D + 1) * M
        + 3 * D
        + M * Lp
        + 10,
        lambda M, D, J, Lp, D_max: (D - 1) * M**2
        + (2 * D - 1) * M
        + 2 * D
        + M * Lp
        + 1,
    ),
    Algorithm.JIO_MBER: (
        ("M", "D", "J"),
        lambda M, D, J, Lp, D_max: 6 * M * D * J + 5 * D * J + M * J + 11 * J,
        lambda M, D, J, Lp, D_max: 5 * M * D * J + D * J - M * J - J,
    ),
    Algorithm.JIO_MBER_AUTO: (
        ("M", "D_max"),
        lambda M, D, J, Lp, D_max: (6 * M + 5) * D_max + M + 11,
        lambda M, D, J, Lp, D_max: (5 * M + 1) * D_max - M - 1,
    ),
}


def op_count(
    algorithm: Algorithm,
    *,
    M: int,
    D: int | None = None,
    J: int | None = None,
    Lp: int | None = None,
    D_max: int | None = None,
) -> OpCountReport:
    """Evaluate one algorithm's per-symbol multiplication/addition counts."""
    algorithm = Algorithm(algorithm)
    required, mults, adds = _FORMULAS[algorithm]
    supplied = {"M": M, "D": D, "J": J, "Lp": Lp, "D_max": D_max}
    params = {}
    for name in required:
        value = supplied[name]
        if value is None:
            raise ConfigurationError(
                f"{algorithm.value} requires parameter {name}", field=name
            )
        if int(value) < 1:
            raise ConfigurationError(
                f"{algorithm.value}: {name} must be a positive integer, got {value}",
                field=name,
            )
        params[name] = int(value)
    args = {name: params.get(name) for name in ("M", "D", "J", "Lp", "D_max")}
    return OpCountReport(
        algorithm=algorithm,
        multiplications=int(mults(**args)),
        additions=int(adds(**args)),
        params=params,
        asymptotic=algorithm is Algorithm.EIG,
    )


def complexity_sweep(algorithms, param_grid: dict) -> list[OpCountReport]:
    """Cross-product evaluation of ``op_count`` over a parameter grid.

    ``param_grid`` maps parameter names (M, D, J, Lp, D_max) to value
    lists; every algorithm is evaluated at every grid point using the
    parameters its row requires.
    """
    algorithms = [Algorithm(a) for a in algorithms]
    if not algorithms:
        raise ConfigurationError("need at least one algorithm")
    if not param_grid or any(len(list(v)) == 0 for v in param_grid.values()):
        raise ConfigurationError("parameter grid must be non-empty")
    unknown = set(param_grid) - {"M", "D", "J", "Lp", "D_max"}
    if unknown:
        raise ConfigurationError(f"unknown grid parameters: {sorted(unknown)}")
    names = sorted(param_grid)
    reports = []
    for values in itertools.product(*(param_grid[n] for n in names)):
        point = dict(zip(names, values))
        for algorithm in algorithms:
            reports.append(
                op_count(
                    algorithm,
                    M=point.get("M"),
                    D=point.get("D"),
                    J=point.get("J"),
                    Lp=point.get("Lp"),
                    D_max=point.get("D_max"),
                )
            )
    return reports


def write_complexity_csv(reports: list[OpCountReport], path) -> None:
    """CSV export: algorithm,M,D,J,Lp,Dmax,mults,adds (blank = unused)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "M", "D", "J", "Lp", "Dmax", "mults", "adds"])
        for rep in reports:
            p = rep.params
            writer.writerow(
                [
                    rep.algorithm.value,
                    p.get("M", ""),
                    p.get("D", ""),
                    p.get("J", ""),
                    p.get("Lp", ""),
                    p.get("D_max", ""),
                    rep.multiplications,
                    rep.additions,
                ]
            )
