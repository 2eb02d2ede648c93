"""Command-line front end emitting deterministic CSV data files.

Examples:
    tdac transfer --q 8 --ratio 0.6931471805599453 --out runs
    tdac waveform --code 11111111 --tau1 1 --tau2 0.5 --tw 0.005
    tdac reproduce fig2 --out figs
    tdac fit --input waveform.csv --model dual
    tdac calibrate --tau2 1 --q 8 --lo 0.3 --hi 1.2
    tdac --config experiment.cfg

Exit codes: 0 success, 1 input or data error, 2 usage error,
3 fit did not converge.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (
    TransferCurve,
    calibrate_pulse_width,
    fit_waveform,
    linearity_report,
    transfer_curve,
)
from .core import LN2, DigitalCode, TdacConfig, convert_quadrature
from .ode import (
    LeakConfig,
    Waveform,
    default_t_end,
    peak_of,
    simulate_leaky,
    simulate_leaky_numeric,
)
from .signed import SignedTdacConfig, signed_transfer_curve, simulate_signed_leaky


class UsageError(Exception):
    """Bad or missing command-line/config input; maps to exit code 2."""


def _fmt(x) -> str:
    # fixed 17-significant-digit formatting keeps every CSV byte-reproducible
    return format(float(x), ".17g")


def _bool_str(flag: bool) -> str:
    return "true" if flag else "false"


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)


def _csv_text(header: str, rows: list[str]) -> str:
    return "\n".join([header, *rows]) + "\n"


def _transfer_rows(curve: TransferCurve) -> list[str]:
    return [f"{int(c)},{_fmt(v)}" for c, v in zip(curve.codes, curve.outputs)]


def _waveform_rows(wf: Waveform) -> list[str]:
    return [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(wf.times, wf.values)]


# ---------------------------------------------------------------------------
# experiment config files

_CONVERTERS = {
    "int": int,
    "float": float,
    "str": str,
}


def _parse_bool(value: str) -> bool:
    low = value.lower()
    if low in {"true", "1", "yes", "on"}:
        return True
    if low in {"false", "0", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _convert(conv: str, key: str, value: str, path) -> object:
    try:
        if conv == "bool":
            return _parse_bool(value)
        if conv == "float_list":
            return [float(x) for x in value.split(",") if x.strip()]
        if conv == "str_list":
            return [x.strip() for x in value.split(",") if x.strip()]
        return _CONVERTERS[conv](value)
    except ValueError as exc:
        raise ValueError(f"{path}: key {key!r}: {exc}") from None


_BASE_TRANSFER_KEYS = {
    "base.q": ("q", "int"),
    "base.tau2": ("tau2", "float"),
    "base.vset": ("vset", "float"),
    "base.cout": ("cout", "float"),
}

_FILE_KEYS: dict[str, dict[str, tuple[str, str]]] = {
    "transfer": {
        **_BASE_TRANSFER_KEYS,
        "base.ratio": ("ratio", "float"),
        "base.tw": ("tw", "float"),
        "engine": ("engine", "str"),
        "sampling.steps_per_slot": ("steps_per_slot", "int"),
        "signed.enabled": ("signed", "bool"),
        "signed.gain_pos": ("gain_pos", "float"),
        "signed.gain_neg": ("gain_neg", "float"),
        "signed.baseline": ("baseline", "float"),
    },
    "waveform": {
        **_BASE_TRANSFER_KEYS,
        "code": ("code", "str"),
        "base.ratio": ("ratio", "float"),
        "base.tw": ("tw", "float"),
        "leak.tau1": ("tau1", "float"),
        "leak.v0": ("v0", "float"),
        "sampling.t_end": ("t_end", "float"),
        "sampling.dt_out": ("dt_out", "float"),
        "sampling.dt": ("dt", "float"),
        "engine": ("engine", "str"),
    },
    "sweep-ratio": {
        **_BASE_TRANSFER_KEYS,
        "sweep.ratios": ("ratios", "float_list"),
    },
    "sweep-code": {
        **_BASE_TRANSFER_KEYS,
        "sweep.codes": ("codes", "str_list"),
        "base.ratio": ("ratio", "float"),
        "base.tw": ("tw", "float"),
        "leak.tau1": ("tau1", "float"),
        "leak.v0": ("v0", "float"),
        "sampling.t_end": ("t_end", "float"),
        "sampling.dt_out": ("dt_out", "float"),
        "sampling.dt": ("dt", "float"),
        "engine": ("engine", "str"),
    },
    "fit": {
        "input": ("input", "str"),
        "model": ("model", "str"),
        "fit.max_iterations": ("max_iterations", "int"),
    },
    "calibrate": {
        "base.q": ("q", "int"),
        "base.tau2": ("tau2", "float"),
        "lo": ("lo", "float"),
        "hi": ("hi", "float"),
    },
    "reproduce": {
        "figure": ("figure", "str"),
    },
}

_DEFAULTS: dict[str, dict] = {
    "transfer": dict(
        q=8, ratio=None, tw=None, tau2=1.0, vset=1.0, cout=1.0,
        engine="closed-form", steps_per_slot=256,
        signed=False, gain_pos=1.0, gain_neg=1.0, baseline=0.0,
    ),
    "waveform": dict(
        code=None, q=None, ratio=None, tw=None, tau2=1.0, vset=1.0, cout=1.0,
        tau1=1.0, v0=0.0, t_end=None, dt_out=None, dt=None, engine="analytic",
    ),
    "sweep-ratio": dict(q=8, tau2=1.0, vset=1.0, cout=1.0, ratios=None),
    "sweep-code": dict(
        codes=None, ratio=None, tw=None, tau2=1.0, vset=1.0, cout=1.0,
        tau1=1.0, v0=0.0, t_end=None, dt_out=None, dt=None, engine="analytic",
    ),
    "fit": dict(input=None, model=None, max_iterations=200),
    "calibrate": dict(q=8, tau2=1.0, lo=None, hi=None),
    "reproduce": dict(figure=None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed experiment file: kind, output directory, parameter block."""

    kind: str
    out: str | None
    params: dict

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ValueError(f"cannot read config file {path}: {exc}") from None
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key in raw:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value.strip()
        kind = raw.pop("experiment", None)
        if kind is None:
            raise ValueError(f"{path}: missing experiment= line")
        if kind not in _FILE_KEYS:
            raise ValueError(f"{path}: unknown experiment kind {kind!r}")
        out = raw.pop("out", None)
        allowed = _FILE_KEYS[kind]
        params = {}
        for key, value in raw.items():
            if key not in allowed:
                # unknown keys are hard errors so typos cannot silently vanish
                raise ValueError(f"{path}: unknown key {key!r} for experiment {kind!r}")
            dest, conv = allowed[key]
            params[dest] = _convert(conv, key, value, path)
        return cls(kind, out, params)


# ---------------------------------------------------------------------------
# runners

def _resolve_tw(params, what: str) -> float:
    if params.get("tw") is not None:
        return float(params["tw"])
    if params.get("ratio") is not None:
        return float(params["ratio"]) * float(params["tau2"])
    raise UsageError(f"{what} needs --tw or --ratio")


def _report_lines(report) -> list[str]:
    return [
        f"lsb_step={_fmt(report.lsb_step)}",
        f"max_abs_inl={_fmt(report.max_abs_inl)}",
        f"max_abs_dnl={_fmt(report.max_abs_dnl)}",
        f"monotone={_bool_str(report.monotone)}",
    ]


def _run_transfer(params, out_dir: Path) -> int:
    tw = _resolve_tw(params, "transfer")
    config = TdacConfig(
        q=params["q"], t_w=tw, tau2=params["tau2"],
        v_set=params["vset"], c_out=params["cout"],
    )
    if params["signed"]:
        scfg = SignedTdacConfig(
            base=config, gain_pos=params["gain_pos"],
            gain_neg=params["gain_neg"], baseline=params["baseline"],
        )
        curve = signed_transfer_curve(scfg)
    elif params["engine"] == "quadrature":
        n = 1 << config.q
        outputs = [
            convert_quadrature(config, DigitalCode.from_int(v, config.q),
                               params["steps_per_slot"])
            for v in range(n)
        ]
        curve = TransferCurve(np.arange(n), np.array(outputs), config)
    elif params["engine"] == "closed-form":
        curve = transfer_curve(config)
    else:
        raise ValueError(f"unknown engine {params['engine']!r}")
    path = out_dir / "transfer.csv"
    _write_text_atomic(path, _csv_text("code,v_out", _transfer_rows(curve)))
    print(f"csv={path}")
    for line in _report_lines(linearity_report(curve)):
        print(line)
    return 0


def _run_waveform(params, out_dir: Path) -> int:
    if params["code"] is None:
        raise UsageError("waveform needs --code")
    code = DigitalCode.from_string(params["code"])
    if params["q"] is not None and params["q"] != code.q:
        raise ValueError(f"code has {code.q} bits but --q {params['q']} was given")
    tw = _resolve_tw(params, "waveform")
    config = TdacConfig(
        q=code.q, t_w=tw, tau2=params["tau2"],
        v_set=params["vset"], c_out=params["cout"],
    )
    leak = LeakConfig(tau1=params["tau1"], v0=params["v0"])
    t_end = params["t_end"] if params["t_end"] is not None else default_t_end(config, leak)
    if params["engine"] == "numeric":
        dt = params["dt"]
        if dt is None:
            dt = min(tw / 16.0, 1e-2 * min(leak.tau1, config.tau2, tw))
        wf = simulate_leaky_numeric(config, leak, code, t_end, dt)
    elif params["engine"] == "analytic":
        wf = simulate_leaky(config, leak, code, t_end, params["dt_out"])
    else:
        raise ValueError(f"unknown engine {params['engine']!r}")
    path = out_dir / "waveform.csv"
    _write_text_atomic(path, _csv_text("t,v", _waveform_rows(wf)))
    t_peak, v_peak = peak_of(wf)
    print(f"csv={path}")
    print(f"peak_time={_fmt(t_peak)}")
    print(f"peak_value={_fmt(v_peak)}")
    return 0


def _read_waveform_csv(path) -> Waveform:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise ValueError("line 1: empty input file")
    if lines[0].strip() != "t,v":
        raise ValueError("line 1: expected header 't,v'")
    times: list[float] = []
    values: list[float] = []
    prev = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two comma-separated fields")
        try:
            t, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric row {line!r}") from None
        if prev is not None and t <= prev:
            raise ValueError(f"line {lineno}: time values must be strictly increasing")
        prev = t
        times.append(t)
        values.append(v)
    if not times:
        raise ValueError("line 2: no data rows")
    return Waveform(np.array(times), np.array(values))


def _run_fit(params, out_dir: Path) -> int:
    if params["input"] is None:
        raise UsageError("fit needs --input")
    if params["model"] is None:
        raise UsageError("fit needs --model alpha|dual")
    wf = _read_waveform_csv(params["input"])
    result = fit_waveform(wf, params["model"], params["max_iterations"])
    print(f"model={result.model}")
    print(f"v_set_fit={_fmt(result.v_set_fit)}")
    print(f"tau1_fit={_fmt(result.tau1_fit)}")
    print(f"tau2_fit={_fmt(result.tau2_fit)}")
    print(f"sse={_fmt(result.sse)}")
    print(f"converged={_bool_str(result.converged)}")
    print(f"iterations={result.iterations}")
    return 0 if result.converged else 3


def _run_calibrate(params, out_dir: Path) -> int:
    if params["lo"] is None or params["hi"] is None:
        raise UsageError("calibrate needs --lo and --hi")
    tw = calibrate_pulse_width(params["tau2"], params["q"], (params["lo"], params["hi"]))
    achieved = linearity_report(
        transfer_curve(TdacConfig(q=params["q"], t_w=tw, tau2=params["tau2"]))
    ).max_abs_inl
    print(f"t_w={_fmt(tw)}")
    print(f"max_abs_inl={_fmt(achieved)}")
    return 0


def _run_sweep_ratio(params, out_dir: Path) -> int:
    ratios = params["ratios"]
    if not ratios:
        raise UsageError("sweep-ratio needs sweep.ratios=<r1,r2,...>")
    files = []
    for r in ratios:
        cfg = TdacConfig(q=params["q"], t_w=r * params["tau2"], tau2=params["tau2"],
                         v_set=params["vset"], c_out=params["cout"])
        curve = transfer_curve(cfg)
        files.append((f"sweep_ratio_{_fmt(r)}.csv", "code,v_out", _transfer_rows(curve)))
    manifest = [
        ("experiment", "sweep-ratio"),
        ("q", str(params["q"])),
        ("tau2", _fmt(params["tau2"])),
        ("vset", _fmt(params["vset"])),
        ("cout", _fmt(params["cout"])),
        ("ratios", ",".join(_fmt(r) for r in ratios)),
    ]
    return _emit_members(files, manifest, "sweep_ratio_manifest.txt", out_dir)


def _run_sweep_code(params, out_dir: Path) -> int:
    codes = params["codes"]
    if not codes:
        raise UsageError("sweep-code needs sweep.codes=<c1,c2,...>")
    tw = _resolve_tw(params, "sweep-code")
    leak = LeakConfig(tau1=params["tau1"], v0=params["v0"])
    files = []
    t_end = None
    for text in codes:
        code = DigitalCode.from_string(text)
        cfg = TdacConfig(q=code.q, t_w=tw, tau2=params["tau2"],
                         v_set=params["vset"], c_out=params["cout"])
        if t_end is None:
            t_end = params["t_end"] if params["t_end"] is not None else default_t_end(cfg, leak)
        wf = simulate_leaky(cfg, leak, code, t_end, params["dt_out"])
        files.append((f"sweep_code_{text}.csv", "t,v", _waveform_rows(wf)))
    manifest = [
        ("experiment", "sweep-code"),
        ("codes", ",".join(codes)),
        ("tw", _fmt(tw)),
        ("tau1", _fmt(params["tau1"])),
        ("tau2", _fmt(params["tau2"])),
        ("vset", _fmt(params["vset"])),
        ("cout", _fmt(params["cout"])),
        ("v0", _fmt(params["v0"])),
        ("t_end", _fmt(t_end)),
        ("dt_out", "default" if params["dt_out"] is None else _fmt(params["dt_out"])),
        ("engine", "analytic"),
    ]
    return _emit_members(files, manifest, "sweep_code_manifest.txt", out_dir)


# ---------------------------------------------------------------------------
# figure reproduction

def _fig2():
    members = [("0.5", 0.5), ("ln2", LN2), ("0.9", 0.9)]
    files = []
    for label, r in members:
        curve = transfer_curve(TdacConfig(q=8, t_w=r, tau2=1.0))
        files.append((f"fig2_ratio_{label}.csv", "code,v_out", _transfer_rows(curve)))
    manifest = [
        ("figure", "fig2"), ("q", "8"), ("tau2", _fmt(1.0)),
        ("vset", _fmt(1.0)), ("cout", _fmt(1.0)),
        ("ratios", ",".join(_fmt(r) for _, r in members)),
    ]
    return files, manifest


def _fig3_tw_sweep(figure: str, tau1: float, tau2: float):
    # all bits set; q is chosen so the gate stays up well past the peak,
    # which is what makes the peak independent of the pulse width
    factors = [0.01, 0.02, 0.05]
    t_end = 6.0 * max(tau1, tau2)
    dt_out = t_end / 600.0
    leak = LeakConfig(tau1=tau1)
    files = []
    qs = []
    tws = []
    for f in factors:
        tw = f * tau2
        q = round(12.0 * max(tau1, tau2) / tw)
        qs.append(q)
        tws.append(tw)
        cfg = TdacConfig(q=q, t_w=tw, tau2=tau2)
        wf = simulate_leaky(cfg, leak, DigitalCode.from_int((1 << q) - 1, q), t_end, dt_out)
        files.append((f"{figure}_tw_{f}.csv", "t,v", _waveform_rows(wf)))
    manifest = [
        ("figure", figure), ("code", "all-ones"),
        ("q", ",".join(str(q) for q in qs)),
        ("tw", ",".join(_fmt(tw) for tw in tws)),
        ("tau1", _fmt(tau1)), ("tau2", _fmt(tau2)),
        ("vset", _fmt(1.0)), ("v0", _fmt(0.0)),
        ("t_end", _fmt(t_end)), ("dt_out", _fmt(dt_out)),
        ("engine", "analytic"),
    ]
    return files, manifest


def _fig3_code_sweep(figure: str, tau1: float, tau2: float):
    codes = ["11111111", "10101010", "01010101"]
    tw = LN2 * tau2
    t_end = 10.0 * max(tau1, tau2) + 8.0 * tw
    dt_out = 0.02 * max(tau1, tau2)
    cfg = TdacConfig(q=8, t_w=tw, tau2=tau2)
    leak = LeakConfig(tau1=tau1)
    files = []
    for text in codes:
        wf = simulate_leaky(cfg, leak, DigitalCode.from_string(text), t_end, dt_out)
        files.append((f"{figure}_code_{text}.csv", "t,v", _waveform_rows(wf)))
    manifest = [
        ("figure", figure), ("codes", ",".join(codes)),
        ("q", "8"), ("tw", _fmt(tw)),
        ("tau1", _fmt(tau1)), ("tau2", _fmt(tau2)),
        ("vset", _fmt(1.0)), ("v0", _fmt(0.0)),
        ("t_end", _fmt(t_end)), ("dt_out", _fmt(dt_out)),
        ("engine", "analytic"),
    ]
    return files, manifest


def _fig6_shape():
    scfg = SignedTdacConfig(base=TdacConfig(q=8, t_w=LN2, tau2=1.0))
    curve = signed_transfer_curve(scfg)
    files = [("fig6_signed_transfer.csv", "code,v_out", _transfer_rows(curve))]
    manifest = [
        ("figure", "fig6-shape"), ("q", "8"), ("ratio", _fmt(LN2)),
        ("tau2", _fmt(1.0)), ("vset", _fmt(1.0)), ("cout", _fmt(1.0)),
        ("gain_pos", _fmt(1.0)), ("gain_neg", _fmt(1.0)), ("baseline", _fmt(0.0)),
    ]
    return files, manifest


def _fig7_shape():
    codes = ["11111111", "10101010", "01111111", "01010101"]
    tau1, tau2 = 1.0, 0.5
    tw = LN2 * tau2
    t_end, dt_out = 12.0, 0.02
    scfg = SignedTdacConfig(base=TdacConfig(q=8, t_w=tw, tau2=tau2))
    leak = LeakConfig(tau1=tau1)
    files = []
    for text in codes:
        wf = simulate_signed_leaky(scfg, leak, DigitalCode.from_string(text), t_end, dt_out)
        files.append((f"fig7_code_{text}.csv", "t,v", _waveform_rows(wf)))
    manifest = [
        ("figure", "fig7-shape"), ("codes", ",".join(codes)),
        ("q", "8"), ("tw", _fmt(tw)),
        ("tau1", _fmt(tau1)), ("tau2", _fmt(tau2)),
        ("vset", _fmt(1.0)), ("v0", _fmt(0.0)),
        ("gain_pos", _fmt(1.0)), ("gain_neg", _fmt(1.0)), ("baseline", _fmt(0.0)),
        ("t_end", _fmt(t_end)), ("dt_out", _fmt(dt_out)),
        ("engine", "analytic"),
    ]
    return files, manifest


_FIGURES = {
    "fig2": _fig2,
    "fig3a": lambda: _fig3_tw_sweep("fig3a", 1.0, 1.0),
    "fig3b": lambda: _fig3_code_sweep("fig3b", 1.0, 1.0),
    "fig3c": lambda: _fig3_tw_sweep("fig3c", 1.0, 0.5),
    "fig3d": lambda: _fig3_code_sweep("fig3d", 1.0, 0.5),
    "fig6-shape": _fig6_shape,
    "fig7-shape": _fig7_shape,
}


def _emit_members(files, manifest, manifest_name: str, out_dir: Path) -> int:
    # members first, each atomically; the manifest is always written last
    names = []
    for name, header, rows in files:
        path = out_dir / name
        _write_text_atomic(path, _csv_text(header, rows))
        names.append(name)
        print(f"file={path}")
    manifest = list(manifest) + [("files", ",".join(names))]
    manifest_path = out_dir / manifest_name
    _write_text_atomic(manifest_path, "\n".join(f"{k}={v}" for k, v in manifest) + "\n")
    print(f"manifest={manifest_path}")
    return 0


def _run_reproduce(params, out_dir: Path) -> int:
    figure = params["figure"]
    if figure is None:
        raise UsageError("reproduce needs a figure id")
    if figure not in _FIGURES:
        known = ", ".join(sorted(_FIGURES))
        raise UsageError(f"unknown figure id {figure!r}; known: {known}")
    files, manifest = _FIGURES[figure]()
    return _emit_members(files, manifest, f"{figure}_manifest.txt", out_dir)


_RUNNERS = {
    "transfer": _run_transfer,
    "waveform": _run_waveform,
    "sweep-ratio": _run_sweep_ratio,
    "sweep-code": _run_sweep_code,
    "fit": _run_fit,
    "calibrate": _run_calibrate,
    "reproduce": _run_reproduce,
}


# ---------------------------------------------------------------------------
# argument parsing and dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdac",
        description="Behavioral time-domain DAC simulator and analysis tool.",
    )
    parser.add_argument("--config", metavar="PATH",
                        help="experiment file (key=value lines); flags override it")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory for data files (default: .)")
    parser.add_argument("--seed", type=int,
                        help="reserved; all computation is deterministic")

    # the global flags are also accepted after the subcommand; SUPPRESS keeps
    # the subparser from clobbering a value parsed by the main parser
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS)
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("transfer", parents=[common],
                       help="full transfer curve plus linearity summary")
    p.add_argument("--q", type=int)
    p.add_argument("--ratio", type=float, help="t_w / tau2, alternative to --tw")
    p.add_argument("--tw", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--vset", type=float)
    p.add_argument("--cout", type=float)
    p.add_argument("--engine", choices=["closed-form", "quadrature"])
    p.add_argument("--steps-per-slot", dest="steps_per_slot", type=int)
    p.add_argument("--signed", action="store_true", default=None,
                   help="use the eight-bit sign+magnitude model")
    p.add_argument("--gain-pos", dest="gain_pos", type=float)
    p.add_argument("--gain-neg", dest="gain_neg", type=float)
    p.add_argument("--baseline", type=float)

    p = sub.add_parser("waveform", parents=[common], help="leaky-mode output waveform for one code")
    p.add_argument("--code", help="MSB-first binary string, e.g. 10101010")
    p.add_argument("--q", type=int, help="expected code width (checked against --code)")
    p.add_argument("--ratio", type=float)
    p.add_argument("--tw", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--vset", type=float)
    p.add_argument("--cout", type=float)
    p.add_argument("--tau1", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--dt-out", dest="dt_out", type=float)
    p.add_argument("--dt", type=float, help="integration step for --engine numeric")
    p.add_argument("--engine", choices=["analytic", "numeric"])

    p = sub.add_parser("reproduce", parents=[common], help="emit the data files behind one figure")
    p.add_argument("figure", nargs="?", choices=sorted(_FIGURES))

    p = sub.add_parser("fit", parents=[common], help="fit a synaptic-shape model to a t,v CSV")
    p.add_argument("--input", help="CSV file with header t,v")
    p.add_argument("--model", choices=["alpha", "dual"])
    p.add_argument("--max-iterations", dest="max_iterations", type=int)

    p = sub.add_parser("calibrate", parents=[common], help="search the pulse width with minimal |INL|")
    p.add_argument("--tau2", type=float)
    p.add_argument("--q", type=int)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)

    return parser


def _dispatch(args: argparse.Namespace) -> int:
    exp = ExperimentConfig.from_file(args.config) if args.config else None
    command = args.command or (exp.kind if exp else None)
    if command is None:
        raise UsageError("give a subcommand or a --config file with an experiment= line")
    if exp is not None and args.command is not None and exp.kind != args.command:
        raise ValueError(
            f"config file declares experiment={exp.kind!r} "
            f"but the {args.command!r} command was given"
        )
    params = dict(_DEFAULTS[command])
    if exp is not None:
        params.update(exp.params)
    if args.command is not None:
        for key in _DEFAULTS[command]:
            value = getattr(args, key, None)
            if value is not None:
                params[key] = value
    out_dir = Path(args.out or (exp.out if exp else None) or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[command](params, out_dir)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
