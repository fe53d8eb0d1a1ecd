"""Line-oriented run configuration: ``section.key = value`` with # comments.

Every module invariant is revalidated at parse time and reported with the
line number of the offending key; unknown keys are rejected.  All errors in a
file are collected before raising.
"""

from dataclasses import dataclass, field

from .grid import GridError, GridSpec, build_grid
from .model import ModelError, NonlinearityModel, critical_exponent
from .solver import (ArmijoRule, FileInit, FixedRule, GaussianBump,
                     RandomInit, SolverConfig)
from .symmetry import SignedPermutation, SymmetryConstraint, SymmetryError

KNOWN_KEYS = {
    "grid.N", "grid.m", "grid.L", "grid.n",
    "model.term",
    "constraint.kind", "constraint.k", "constraint.l", "constraint.generator",
    "solver.max_iters", "solver.grad_tol", "solver.lin_tol", "solver.seed",
    "solver.step", "solver.init",
    "analysis.thresholds", "analysis.separations",
    "output.dir", "output.emit",
}
REPEATABLE = {"model.term", "constraint.generator"}
EMIT_CHOICES = ("summary", "trace", "slices", "field", "dipole", "timing")


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"line {ln}: {msg}" if ln else msg
                                   for ln, msg in self.errors))


@dataclass(frozen=True)
class AnalysisConfig:
    thresholds: tuple = (1e-4, 1e-6, 1e-8)
    separations: tuple = ()


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    emit: tuple = EMIT_CHOICES


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    model: NonlinearityModel
    constraint: SymmetryConstraint
    solver: SolverConfig
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _tokenize(text):
    """Yield (line_number, key, raw_value) for every assignment."""
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            yield ln, None, f"expected 'section.key = value', got {raw.strip()!r}"
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        yield ln, key, value


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    errors = []
    single = {}
    repeated = {k: [] for k in REPEATABLE}

    for ln, key, value in _tokenize(text):
        if key is None:
            errors.append((ln, value))
            continue
        if key not in KNOWN_KEYS:
            errors.append((ln, f"unknown key {key!r}"))
            continue
        if key in REPEATABLE:
            repeated[key].append((ln, value))
        elif key in single:
            errors.append((ln, f"duplicate key {key!r} "
                               f"(first set on line {single[key][0]})"))
        else:
            single[key] = (ln, value)

    if overrides:
        for key, value in overrides.items():
            if key not in KNOWN_KEYS:
                errors.append((0, f"unknown override key {key!r}"))
            elif key in REPEATABLE:
                repeated[key] = [(0, value)]
            else:
                single[key] = (0, value)

    def take(key, parse, default=None, required=False):
        if key not in single:
            if required:
                errors.append((0, f"missing required key {key!r}"))
            return default
        ln, raw = single[key]
        try:
            return parse(raw)
        except (ValueError, GridError, ModelError, SymmetryError) as exc:
            errors.append((ln, f"{key}: {exc}"))
            return default

    n_dims = take("grid.N", int, required=True)
    m_dims = take("grid.m", int, required=True)
    widths = take("grid.L", _floats, required=True)
    counts = take("grid.n", _ints, required=True)

    spec = None
    m_line = single.get("grid.m", single.get("grid.N", (0, "")))[0]
    if n_dims is not None and m_dims is not None and not (1 <= m_dims < n_dims):
        errors.append((m_line, f"m < N required: got m={m_dims}, N={n_dims}"))
    elif None not in (n_dims, m_dims) and widths and counts:
        try:
            spec = build_grid(n_dims, m_dims,
                              widths[0] if len(widths) == 1 else widths,
                              counts[0] if len(counts) == 1 else counts)
        except GridError as exc:
            errors.append((m_line, str(exc)))

    terms = []
    for ln, raw in repeated["model.term"]:
        try:
            parts = _floats(raw)
            if len(parts) != 2:
                raise ValueError("expected 'coefficient exponent'")
            terms.append((parts[0], parts[1]))
        except ValueError as exc:
            errors.append((ln, f"model.term: {exc}"))
    model = None
    if not repeated["model.term"]:
        errors.append((0, "missing required key 'model.term'"))
    elif len(terms) == len(repeated["model.term"]):
        try:
            model = NonlinearityModel(tuple(terms))
            if n_dims is not None:
                two_star = critical_exponent(n_dims)
                for a, p in model.terms:
                    if not (p < two_star):
                        raise ModelError(
                            f"exponent {p:g} violates p < 2*={two_star:g} "
                            f"for N={n_dims}")
        except ModelError as exc:
            errors.append((repeated["model.term"][0][0], str(exc)))

    constraint = _parse_constraint(single, repeated, m_dims, errors)

    solver_kwargs = {}
    for key, name, parse in (("solver.max_iters", "max_iters", int),
                             ("solver.grad_tol", "grad_tol", float),
                             ("solver.lin_tol", "lin_tol", float),
                             ("solver.seed", "seed", int)):
        val = take(key, parse)
        if val is not None:
            solver_kwargs[name] = val
    step = take("solver.step", _parse_step)
    if step is not None:
        solver_kwargs["step_rule"] = step
    init = take("solver.init", _parse_init)
    if init is not None:
        solver_kwargs["init"] = init

    analysis = AnalysisConfig(
        thresholds=tuple(take("analysis.thresholds", _floats,
                              default=(1e-4, 1e-6, 1e-8))),
        separations=tuple(take("analysis.separations", _floats, default=())),
    )
    output = OutputConfig(
        directory=take("output.dir", str, default="out"),
        emit=tuple(take("output.emit", _parse_emit, default=EMIT_CHOICES)),
    )

    solver = None
    if constraint is not None:
        try:
            solver = SolverConfig(constraint=constraint, **solver_kwargs)
            if spec is not None:
                constraint.validate_grid(spec, require_odd_counts=True)
        except (ValueError, SymmetryError) as exc:
            errors.append((single.get("constraint.kind", (0, ""))[0], str(exc)))

    if errors:
        raise ConfigError(errors)
    return RunConfig(grid=spec, model=model, constraint=constraint,
                     solver=solver, analysis=analysis, output=output)


def _floats(raw):
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ValueError("expected at least one number")
    return tuple(float(p) for p in parts)


def _ints(raw):
    parts = raw.replace(",", " ").split()
    if not parts:
        raise ValueError("expected at least one integer")
    out = []
    for p in parts:
        v = float(p)
        if v != int(v):
            raise ValueError(f"expected an integer, got {p}")
        out.append(int(v))
    return tuple(out)


def _parse_step(raw):
    parts = raw.split()
    if not parts:
        raise ValueError("expected 'armijo [c1 backtrack]' or 'fixed eta'")
    if parts[0] == "armijo":
        c1 = float(parts[1]) if len(parts) > 1 else 1e-4
        bt = float(parts[2]) if len(parts) > 2 else 0.5
        return ArmijoRule(c1, bt)
    if parts[0] == "fixed":
        if len(parts) != 2:
            raise ValueError("fixed step needs exactly one size")
        return FixedRule(float(parts[1]))
    raise ValueError(f"unknown step rule {parts[0]!r}")


def _parse_init(raw):
    parts = raw.split()
    if not parts:
        raise ValueError("expected 'gaussian [center] [width]', 'random' "
                         "or 'file PATH'")
    if parts[0] == "auto":
        return None
    if parts[0] == "gaussian":
        center = None
        width = 1.0
        if len(parts) >= 2:
            center = tuple(float(c) for c in parts[1].split(","))
        if len(parts) >= 3:
            width = float(parts[2])
        return GaussianBump(center, width)
    if parts[0] == "random":
        return RandomInit()
    if parts[0] == "file":
        if len(parts) != 2:
            raise ValueError("file init needs exactly one path")
        return FileInit(parts[1])
    raise ValueError(f"unknown init {parts[0]!r}")


def _parse_emit(raw):
    tokens = tuple(raw.split())
    for t in tokens:
        if t not in EMIT_CHOICES:
            raise ValueError(f"unknown emit target {t!r}; "
                             f"choose from {EMIT_CHOICES}")
    return tokens


def _parse_constraint(single, repeated, m_dims, errors):
    kind_entry = single.get("constraint.kind")
    kind = kind_entry[1] if kind_entry else "full"
    ln = kind_entry[0] if kind_entry else 0
    try:
        if kind == "full":
            return SymmetryConstraint.full_space()
        if kind == "kodd":
            if "constraint.k" not in single:
                raise SymmetryError("kodd constraint needs constraint.k")
            return SymmetryConstraint.k_odd(int(single["constraint.k"][1]))
        if kind == "cyclicodd":
            if "constraint.l" not in single:
                raise SymmetryError("cyclicodd constraint needs constraint.l")
            return SymmetryConstraint.cyclic_odd(int(single["constraint.l"][1]))
        if kind == "ginvariant":
            gens = []
            for gln, raw in repeated["constraint.generator"]:
                try:
                    gens.append(_parse_generator(raw, m_dims))
                except (ValueError, SymmetryError) as exc:
                    errors.append((gln, f"constraint.generator: {exc}"))
            if not gens:
                raise SymmetryError("ginvariant constraint needs at least one "
                                    "constraint.generator")
            return SymmetryConstraint.g_invariant(gens)
        raise SymmetryError(f"unknown constraint kind {kind!r}; choose "
                            "full, kodd, cyclicodd or ginvariant")
    except (ValueError, SymmetryError) as exc:
        errors.append((ln, str(exc)))
        return None


def _parse_generator(raw, m_dims):
    """Format: m signed 1-based axis images, a colon, then the parity.

    Example for m=2: ``-2 1 : -1`` maps e1 -> -e2, e2 -> +e1 with parity -1.
    """
    if ":" not in raw:
        raise ValueError("expected 'images : parity'")
    images_raw, parity_raw = raw.rsplit(":", 1)
    images = _ints(images_raw)
    if m_dims is not None and len(images) != m_dims:
        raise ValueError(f"expected {m_dims} axis images, got {len(images)}")
    perm = []
    signs = []
    for img in images:
        if img == 0 or abs(img) > len(images):
            raise ValueError(f"axis image {img} out of range")
        perm.append(abs(img) - 1)
        signs.append(1 if img > 0 else -1)
    parity = int(parity_raw)
    return SignedPermutation(tuple(perm), tuple(signs)), parity
