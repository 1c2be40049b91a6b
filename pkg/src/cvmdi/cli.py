"""Command-line client for the rate service.

Runs the same service layer in process by default; with --server it talks
to a running HTTP instance instead and prints identical output. CSV floats
carry 17 significant digits so every value round-trips exactly.

Exit codes: 0 success, 1 failed verification, 2 rejected input.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from . import service
from .channel import DEFAULT_LOSS_DB_PER_KM
from .errors import ValidationError
from .schemas import (
    EmulateRequest,
    EmulateResponse,
    RateReportModel,
    RateRequest,
    SweepRequest,
    SweepResponse,
    ThresholdRequest,
    ThresholdResponse,
    VerifyRequest,
    VerifyResponse,
)

OUTPUT_DIR_ENV = "CVMDI_OUTPUT_DIR"

_LOCAL = {
    "rate": (RateRequest, service.compute_rate, RateReportModel),
    "threshold": (ThresholdRequest, service.find_threshold, ThresholdResponse),
    "sweep": (SweepRequest, service.run_sweep, SweepResponse),
    "verify": (VerifyRequest, service.run_verify, VerifyResponse),
    "emulate": (EmulateRequest, service.run_emulate, EmulateResponse),
}


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: the command, its request, and output routing."""

    command: str
    request: BaseModel
    fmt: str = "csv"
    output: str | None = None
    server: str | None = None


def _f17(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.17g}"


def _report_csv_lines(model: RateReportModel) -> list:
    names = list(RateReportModel.model_fields)
    row = [_f17(getattr(model, n)) for n in names]
    return [",".join(names), ",".join(row)]


def _threshold_csv_lines(model: ThresholdResponse) -> list:
    header = "status,tau_star,distance_km,searched_floor_km"
    row = ",".join(
        [model.status, _f17(model.tau_star), _f17(model.distance_km), _f17(model.searched_floor_km)]
    )
    return [header, row]


SWEEP_COLUMNS = "d_km,tau,epsilon,xi,mu,rate_bits,nu1,nu2,iab,holevo"


def _sweep_csv_lines(model: SweepResponse) -> list:
    """Fixed plot-ready columns; inf marks the zero-distance divergence and
    nan marks points outside the supported domain."""
    lines = [SWEEP_COLUMNS]
    for row in model.rows:
        if row.status == "ok" and row.report is not None:
            r = row.report
            cells = [
                _f17(row.d_km), _f17(r.tau), _f17(r.epsilon), _f17(r.xi), _f17(r.mu),
                _f17(r.rate), _f17(r.nu1), _f17(r.nu2), _f17(r.iab), _f17(r.holevo),
            ]
        else:
            marker = "inf" if row.status == "diverging" else "nan"
            tau = "1" if row.status == "diverging" else ""
            cells = [
                _f17(row.d_km), tau, _f17(model.epsilon), _f17(model.xi), _f17(model.mu),
                marker, "", "", "", "",
            ]
        lines.append(",".join(cells))
    return lines


def _verify_csv_lines(model: VerifyResponse) -> list:
    lines = ["check,tau,epsilon,reference,value,residual,tolerance,passed"]
    for c in model.checks:
        lines.append(
            ",".join(
                [
                    '"' + c.check + '"',
                    _f17(c.tau),
                    _f17(c.epsilon),
                    _f17(c.reference),
                    _f17(c.value),
                    _f17(c.residual),
                    _f17(c.tolerance),
                    "pass" if c.passed else "fail",
                ]
            )
        )
    return lines


def _emulate_csv_lines(model: EmulateResponse) -> list:
    e = model.estimate
    header = (
        "tau_hat,tau_se,epsilon_hat,epsilon_se,iab_hat,iab_se,"
        "n_rounds,n_subbatches,rate_at_estimate"
    )
    rate = "" if model.rate_at_estimate is None else _f17(model.rate_at_estimate.rate)
    row = ",".join(
        [
            _f17(e.tau_hat), _f17(e.tau_se), _f17(e.epsilon_hat), _f17(e.epsilon_se),
            _f17(e.iab_hat), _f17(e.iab_se), str(e.n_rounds), str(e.n_subbatches), rate,
        ]
    )
    lines = [header, row]
    if model.note:
        lines.append(f"# note: {model.note}")
    return lines


_CSV_RENDERERS = {
    "rate": _report_csv_lines,
    "threshold": _threshold_csv_lines,
    "sweep": _sweep_csv_lines,
    "verify": _verify_csv_lines,
    "emulate": _emulate_csv_lines,
}


def _render(command: str, model: BaseModel, fmt: str) -> str:
    if fmt == "json":
        return model.model_dump_json(indent=2) + "\n"
    return "\n".join(_CSV_RENDERERS[command](model)) + "\n"


def _resolve_output(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _execute_remote(config: RunConfig) -> BaseModel:
    import httpx

    url = config.server.rstrip("/") + "/" + config.command
    response = httpx.post(url, json=config.request.model_dump(mode="json"), timeout=600.0)
    if response.status_code == 422:
        detail = response.json().get("detail", response.text)
        raise ValidationError(str(detail))
    response.raise_for_status()
    response_type = _LOCAL[config.command][2]
    return response_type.model_validate(response.json())


def run(config: RunConfig) -> int:
    """Execute one invocation and write its rendered output. Returns the
    process exit code rather than raising on rejected input."""
    try:
        if config.server is not None:
            result = _execute_remote(config)
        else:
            result = _LOCAL[config.command][1](config.request)
    except (ValidationError, PydanticValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    text = _render(config.command, result, config.fmt)
    target = _resolve_output(config.output)
    if target is None:
        sys.stdout.write(text)
    else:
        target.write_text(text, encoding="utf-8")

    if config.command == "verify":
        ok = result.passed
        worst = max(c.residual / c.tolerance for c in result.checks)
        print(f"verify: {'PASS' if ok else 'FAIL'} (worst residual at "
              f"{worst:.3g} of its tolerance)")
        return 0 if ok else 1
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format (default csv)")
    parser.add_argument("--output", default=None,
                        help=f"output file; relative paths resolve under ${OUTPUT_DIR_ENV} "
                             "if set; default stdout")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in process")


def _add_link(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--tau", type=float, help="link transmissivity in (0, 1)")
    group.add_argument("--distance-km", type=float, help="fiber length in km")


def _add_loss_rate(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--loss-rate-db-per-km", type=float, default=DEFAULT_LOSS_DB_PER_KM,
                        help="fiber loss rate (default 0.2 dB/km)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvmdi",
        description="Key rates for a continuous-variable relay protocol: "
                    "closed forms, covariance-matrix oracle, and sampled emulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="key rate for one link")
    _add_link(p)
    p.add_argument("--epsilon", type=float, default=0.0, help="excess noise (default 0)")
    p.add_argument("--xi", type=float, default=1.0, help="reconciliation efficiency (default 1)")
    p.add_argument("--mu", type=float, default=None,
                   help="modulation variance; default: asymptotic at xi = 1, optimized below")
    _add_loss_rate(p)
    _add_common(p)

    p = sub.add_parser("threshold", help="largest tolerable loss with a positive rate")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=None)
    _add_loss_rate(p)
    _add_common(p)

    p = sub.add_parser("sweep", help="rate as a function of fiber length")
    p.add_argument("--d-min", type=float, default=0.0)
    p.add_argument("--d-max", type=float, default=170.0)
    p.add_argument("--step", type=float, default=5.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=None)
    _add_loss_rate(p)
    _add_common(p)

    p = sub.add_parser("verify", help="cross-route residual table (CI gate)")
    _add_common(p)

    p = sub.add_parser("emulate", help="simulate rounds, estimate the channel, price it")
    _add_link(p)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=1.0e4)
    p.add_argument("--eta", type=float, default=1.0, help="detector efficiency (default 1)")
    p.add_argument("--n", type=int, default=100000, help="number of rounds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--xi", type=float, default=1.0)
    _add_loss_rate(p)
    _add_common(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _request_from_args(args: argparse.Namespace) -> BaseModel:
    common = {"format", "output", "server", "command"}
    payload = {
        k: v for k, v in vars(args).items()
        if k not in common and v is not None
    }
    request_type = _LOCAL[args.command][0]
    return request_type(**payload)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .api import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    try:
        request = _request_from_args(args)
    except (ValidationError, PydanticValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = RunConfig(
        command=args.command,
        request=request,
        fmt=args.format,
        output=args.output,
        server=args.server,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
