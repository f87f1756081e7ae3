"""Command-line pipeline: simulate -> estimate -> fit -> reconstruct.

Every subcommand that writes files also writes a manifest with its full
configuration and the SHA-256 of each artifact. The exit code is 0 only if
all artifacts were written and read back.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import FitResult, NonclassicalityReport, build_report, fit_cf
from .estimation import MAX_B, CfEstimate, choose_cutoff, estimate_cf
from .homodyne_sim import load_dataset, sample_quadratures, sample_via_loss_channel, save_dataset
from .numerics import MAX_SEED, Grid1D
from .reconstruction import PEstimate, hankel_transform, reconstruct
from .states import (
    StateModel,
    model_cf,
    model_p,
    normally_ordered_moment,
    rescale_p_for_loss,
    spats_p,
    thermal_p,
)


class CliError(Exception):
    pass


def _seed(text):
    value = int(text)
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _cutoff(text):
    if text == "auto":
        return text
    value = float(text)
    if not 0 < value <= MAX_B:
        raise argparse.ArgumentTypeError(f"cutoff must lie in (0, {MAX_B}] or be 'auto'")
    return value


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(path: Path, command: str, args: argparse.Namespace, artifacts: list[Path]):
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "package": "glauber_p",
        "version": __version__,
        "command": command,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in config.items()},
        "artifacts": {str(p): _sha256(p) for p in artifacts},
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _model_from(args, prefix=""):
    try:
        return StateModel(
            getattr(args, prefix + "nbar"), getattr(args, prefix + "eta"), getattr(args, prefix + "w")
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _b_grid(args):
    try:
        return Grid1D.from_range(0.0, args.b_max, args.b_step)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args) -> int:
    model = _model_from(args)
    if args.n < 1:
        raise CliError("--n must be positive")
    sampler = sample_quadratures if args.sampler == "direct" else sample_via_loss_channel
    data = sampler(model, args.n, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path, side = save_dataset(data, out)
    back = load_dataset(csv_path)
    if not np.array_equal(back.samples, data.samples):
        raise CliError("dataset did not read back identically")
    manifest = _write_manifest(out.with_suffix(".manifest.json"), "simulate", args, [csv_path, side])
    var_expected = 2 * model.eta * model.nbar + 1 + 2 * model.w * model.eta * (1 + model.nbar)
    print(f"wrote {data.n} quadratures to {csv_path} (sidecar {side}, manifest {manifest})")
    print(
        f"mean {data.samples.mean():+.5f}  variance {data.samples.var():.5f}"
        f"  (model variance {var_expected:.5f})"
    )
    return 0


def _estimate(args, data) -> CfEstimate:
    try:
        return estimate_cf(
            data, _b_grid(args), cutoff=args.cutoff, k_sigma=args.k_sigma, window=args.window
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_estimate(args) -> int:
    data = load_dataset(args.data)
    cf = _estimate(args, data)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cf.save(out)
    CfEstimate.load(out)
    _write_manifest(out.with_suffix(".manifest.json"), "estimate", args, [Path(args.data), out])
    print(f"characteristic function on {cf.grid.count} points written to {out}; cutoff {cf.cutoff}")
    return 0


def _initial(args):
    try:
        return StateModel(args.nbar0, args.eta0, args.w0)
    except ValueError as exc:
        raise CliError(f"initial model: {exc}") from exc


def cmd_fit(args) -> int:
    cf = CfEstimate.load(args.cf)
    if args.cutoff is not None:
        if args.cutoff == "auto":
            raise CliError("fit takes a numeric --cutoff")
        try:
            choose_cutoff(cf, fixed=args.cutoff)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    try:
        fit = fit_cf(cf, _initial(args), fit_w=args.fit_w)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(fit.to_dict(), indent=2) + "\n", encoding="utf-8")
    FitResult.from_dict(json.loads(out.read_text(encoding="utf-8")))
    _write_manifest(out.with_suffix(".manifest.json"), "fit", args, [Path(args.cf), out])
    m = fit.model
    print(f"nbar={m.nbar:.5f} eta={m.eta:.5f} w={m.w:.5f} chi2={fit.residual:.4g} dof={fit.dof}")
    return 0


def _write_cross_section(path: Path, est: PEstimate):
    cols = est.cross_section()
    names = list(cols)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*(cols[k] for k in names)):
            writer.writerow([repr(float(v)) for v in row])


def cmd_reconstruct(args) -> int:
    data = load_dataset(args.data)
    cf = _estimate(args, data)
    if cf.cutoff is None:
        raise CliError("no cutoff")
    fit = None
    if not args.no_fit:
        try:
            fit = fit_cf(cf, _initial(args), fit_w=args.fit_w)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    try:
        alpha_grid = Grid1D.from_range(0.0, args.alpha_max, args.alpha_step)
        est = reconstruct(
            cf, alpha_grid, fitted=None if fit is None else fit.model, variance_step=args.variance_step
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    report = build_report(cf, est, fit, k_sigma=args.significance)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cf_path = cf.save(out / "cf.json")
    p_csv, p_meta = est.save(out / "p.csv")
    report_path = report.save(out / "report.json")
    xs_path = out / "cross_section.csv"
    _write_cross_section(xs_path, est)

    CfEstimate.load(cf_path)
    PEstimate.load(p_csv)
    if NonclassicalityReport.load(report_path) != report:
        raise CliError("report did not read back identically")
    np.loadtxt(xs_path, delimiter=",", skiprows=1, ndmin=2)
    _write_manifest(
        out / "manifest.json",
        "reconstruct",
        args,
        [Path(args.data), cf_path, p_csv, p_meta, report_path, xs_path],
    )
    print(report.summary())
    return 0


def oracle_checks(nbar, eta, w, cutoff, loss_eta=0.5, alpha_max=3.0) -> dict[str, float]:
    """Noiseless closure deviations (sup-norm on ``|alpha| <= alpha_max``)."""
    b_grid = Grid1D.from_range(0.0, cutoff, 0.01)
    alpha = np.linspace(0.0, alpha_max, int(round(alpha_max / 0.02)) + 1)
    out = {}
    cases = {
        "hankel_pair_spats": StateModel(nbar, 1.0, 1.0),
        "hankel_pair_thermal": StateModel(nbar, 1.0, 0.0),
        "hankel_pair_model": StateModel(nbar, eta, w),
    }
    for name, m in cases.items():
        rec = hankel_transform(lambda b: model_cf(b, m), b_grid, alpha)
        out[name] = float(np.max(np.abs(rec - model_p(alpha, m))))

    out["moment_k0_spats"] = abs(normally_ordered_moment(lambda a: spats_p(a, nbar), 0, nbar=nbar) - 1)
    out["moment_k1_spats"] = abs(
        normally_ordered_moment(lambda a: spats_p(a, nbar), 1, nbar=nbar) - (2 * nbar + 1)
    )
    out["moment_k1_thermal"] = abs(
        normally_ordered_moment(lambda a: thermal_p(a, nbar), 1, nbar=nbar) - nbar
    )

    # the lossy CF is integrated to cutoff / sqrt(eta), the image of the
    # lossless cutoff under b -> sqrt(eta) b
    lossless = StateModel(nbar, 1.0, w)
    lossy = StateModel(nbar, loss_eta, w)
    lossy_grid = Grid1D.from_range(0.0, cutoff / np.sqrt(loss_eta), 0.01)
    direct = hankel_transform(lambda b: model_cf(b, lossless), b_grid, alpha)
    measured = lambda a: hankel_transform(lambda b: model_cf(b, lossy), lossy_grid, a)  # noqa: E731
    out["loss_covariance"] = float(np.max(np.abs(rescale_p_for_loss(measured, loss_eta)(alpha) - direct)))
    return out


def cmd_oracle(args) -> int:
    if args.nbar <= 0:
        raise CliError("--nbar must be positive for the P-function oracles")
    _model_from(args)
    results = oracle_checks(args.nbar, args.eta, args.w, args.cutoff, args.loss_eta)
    ok = True
    for name, dev in results.items():
        passed = dev < args.tol
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:22s} max deviation {dev:.3e}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        payload = {"tolerance": args.tol, "deviations": results, "passed": ok}
        out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        json.loads(out.read_text(encoding="utf-8"))
        _write_manifest(out.with_suffix(".manifest.json"), "oracle", args, [out])
    return 0 if ok else 1


# -- parser ------------------------------------------------------------------


def _add_model_args(p, nbar=1.11, eta=0.60, w=1.0):
    p.add_argument("--nbar", type=float, default=nbar, help="mean thermal photon number")
    p.add_argument("--eta", type=float, default=eta, help="overall detection efficiency")
    p.add_argument("--w", type=float, default=w, help="SPATS weight (1 = pure SPATS)")


def _add_estimate_args(p):
    p.add_argument("--b-max", type=float, default=4.0)
    p.add_argument("--b-step", type=float, default=0.01)
    p.add_argument("--cutoff", type=_cutoff, default="auto", help="number or 'auto'")
    p.add_argument("--k-sigma", type=float, default=1.0, help="threshold for --cutoff auto")
    p.add_argument("--window", type=float, default=0.25, help="trailing window for --cutoff auto")


def _add_initial_args(p):
    p.add_argument("--nbar0", type=float, default=1.0, help="fit start: nbar")
    p.add_argument("--eta0", type=float, default=0.5, help="fit start: eta (held fixed with --fit-w)")
    p.add_argument("--w0", type=float, default=1.0, help="fit start / fixed value: w")
    p.add_argument("--fit-w", action="store_true", help="fit the SPATS weight as well")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glauber-p", description="P-function reconstruction from homodyne data"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic quadrature dataset")
    _add_model_args(p)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--sampler", choices=["direct", "loss-channel"], default="direct")
    p.add_argument("--out", default="quadratures.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the characteristic function")
    p.add_argument("--data", required=True)
    _add_estimate_args(p)
    p.add_argument("--out", default="cf.json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fit", help="fit the state model to a CF estimate")
    p.add_argument("--cf", required=True)
    p.add_argument("--cutoff", type=_cutoff, default=None, help="override the stored cutoff")
    _add_initial_args(p)
    p.add_argument("--out", default="fit.json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reconstruct", help="estimate, fit, invert and report")
    p.add_argument("--data", required=True)
    _add_estimate_args(p)
    _add_initial_args(p)
    p.add_argument("--no-fit", action="store_true", help="skip the fit and the systematic error")
    p.add_argument("--alpha-max", type=float, default=3.0)
    p.add_argument("--alpha-step", type=float, default=0.02)
    p.add_argument("--variance-step", type=float, default=0.02)
    p.add_argument("--significance", type=float, default=3.0, help="sigma level of the verdict")
    p.add_argument("--out-dir", default="reconstruction")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("oracle", help="noiseless closure tests")
    _add_model_args(p, eta=1.0)
    p.add_argument("--cutoff", type=_positive, default=6.0)
    p.add_argument("--loss-eta", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--out", default=None, help="optional JSON results file")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
