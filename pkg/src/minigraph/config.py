"""Solver configuration and its flat ``key = value`` file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import UsageError


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the Newton solver and of the capped sweep.

    Attributes
    ----------
    newton_tol : float
        Convergence threshold on the max-norm of the normalized residual.
    max_iters : int
        Newton iterations before giving up on Newton.
    damping : float
        Backtracking factor applied to a rejected step.
    max_halvings : int
        Rejected steps allowed per Newton iteration.
    picard_iters : int
        Frozen-coefficient iterations attempted after Newton stalls.
    t0, K : float, int
        Cap schedule ``t0 * 2**k`` for ``k = 0..K``.
    continuation : bool
        Split a failed cap step into smaller cap increments.
    margin : float
        Core sub-raster distance from infinite faces, in units of ``h``.
    cauchy_tol : float
        Accept the capped family once the last core Cauchy difference is below this.
    h, delta : float
        Grid spacing and minimum height used by the command line front end.
    scheme : str
        ``"flux"`` (conservative, default) or ``"nondivergence"``.
    """

    newton_tol: float = 1e-8
    max_iters: int = 50
    damping: float = 0.5
    max_halvings: int = 20
    picard_iters: int = 50
    t0: float = 1.0
    K: int = 8
    continuation: bool = True
    margin: float = 4.0
    cauchy_tol: float = 1e-2
    h: float = 1.0 / 64
    delta: float = 0.05
    scheme: str = "flux"

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise UsageError("newton_tol must be positive")
        if not 0 < self.damping < 1:
            raise UsageError("damping must lie in (0, 1)")
        if self.t0 < 0:
            raise UsageError("t0 must be nonnegative")
        if self.K < 0 or self.max_iters < 1:
            raise UsageError("K must be >= 0 and max_iters >= 1")
        if not self.h > 0:
            raise UsageError("h must be positive")
        if self.scheme not in ("flux", "nondivergence"):
            raise UsageError("scheme must be 'flux' or 'nondivergence'")

    @property
    def slack(self) -> float:
        """Uniform tolerance for discrete inequalities."""
        return 10.0 * self.newton_tol

    def caps(self) -> list[float]:
        return [self.t0 * 2.0**k for k in range(self.K + 1)]

    def with_overrides(self, **kw) -> "SolverConfig":
        clean = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **clean)

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in asdict(self).items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    return repr(v)


def _coerce(name: str, typ, raw: str):
    raw = raw.strip()
    try:
        if typ in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ in (int, "int"):
            return int(raw)
        if typ in (str, "str"):
            return raw
        return float(raw)
    except ValueError as exc:
        raise UsageError(f"bad value for {name}: {raw!r}") from exc


def parse_config_text(text: str, base: SolverConfig | None = None) -> SolverConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    base = base or SolverConfig()
    types = {f.name: f.type for f in fields(SolverConfig)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, types[key], raw)
    return replace(base, **updates)


def load_config(path: str | Path | None, base: SolverConfig | None = None) -> SolverConfig:
    if path is None:
        return base or SolverConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, base)
