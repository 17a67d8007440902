"""Command-line interface: fit, diagnose, simulate.

Exit codes: 0 success, 1 numerical failure, 2 usage or I/O error. All
randomness is controlled by explicit --seed flags or the design file, so a
rerun with the same arguments produces byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np
from scipy.special import expit

from . import dataset as ds
from . import diagnostics, modelio, montecarlo, render
from .errors import DataError, NumericalError
from .estimator import FitOptions, fit_supervised, fit_unsupervised
from .geometry import SupervisedUnfoldingMap, UnfoldingMap
from .reduced_rank import ReducedRankMap

OFFSET_CHOICES = {"per-item": "per_item", "shared": "shared", "per-person": "per_person"}


def _positive_dim(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("dimensionality must be >= 1")
    return value


def _dim_range(text: str):
    parts = text.split("..")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected a range like 1..3")
    lo, hi = (_positive_dim(p) for p in parts)
    if hi < lo:
        raise argparse.ArgumentTypeError("range upper bound below lower bound")
    return list(range(lo, hi + 1))


def _center_list(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("centering must be comma-separated numbers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logunfold",
        description="Fit, diagnose, and simulate logistic unfolding maps for binary data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="estimate a map from CSV data")
    p_fit.add_argument("--responses", required=True, help="CSV of 0/1 responses (optional 'n' frequency column)")
    p_fit.add_argument("--predictors", help="CSV of real-valued predictors (enables the supervised map)")
    p_fit.add_argument("--dim", type=_positive_dim, help="dimensionality S")
    p_fit.add_argument("--scan-dim", type=_dim_range, metavar="A..B", help="fit every S in the range and print one row each")
    p_fit.add_argument("--starts", type=int, default=1, help="number of random starts")
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.add_argument("--offset", choices=sorted(OFFSET_CHOICES), default="per-item")
    p_fit.add_argument("--center", type=_center_list, help="comma-separated constants subtracted from the predictor columns")
    p_fit.add_argument("--out", help="write the fitted model JSON here")
    p_fit.add_argument("--svg", help="write the joint map SVG here")
    p_fit.add_argument("--maxouter", type=int, default=65536)
    p_fit.add_argument("--eps", type=float, default=1e-6, help="outer deviance tolerance")
    p_fit.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_fit.set_defaults(func=command_fit)

    p_diag = sub.add_parser("diagnose", help="reports for a fitted model")
    p_diag.add_argument("--model", required=True, help="model JSON from 'fit'")
    p_diag.add_argument("--responses", required=True)
    p_diag.add_argument("--predictors")
    p_diag.add_argument("--threshold", type=float, default=0.5)
    p_diag.add_argument("--metrics", metavar="CSV", help="classification metrics per item")
    p_diag.add_argument("--residuals", metavar="CSV", help="raw and deviance residuals")
    p_diag.add_argument("--influence", metavar="PREFIX", help="leave-one-out influence (writes PREFIX.csv and PREFIX.svg)")
    p_diag.add_argument("--cpr", metavar="PREFIX", help="component-plus-residual panels (writes PREFIX.csv and PREFIX.svg)")
    p_diag.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_diag.set_defaults(func=command_diagnose)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo design")
    p_sim.add_argument("--design", required=True, help="TOML design file")
    p_sim.add_argument("--kind", choices=["recovery", "predictive"], help="study kind (may also come from the design file)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_sim.set_defaults(func=command_simulate)
    return parser


def _load_inputs(args):
    data = ds.load_csv(args.responses, "responses")
    predictors = None
    if args.predictors:
        predictors = ds.load_csv(args.predictors, "predictors")
        center = getattr(args, "center", None)
        if center:
            predictors = predictors.center(center)
    return data, predictors


def command_fit(args) -> int:
    if not args.dim and not args.scan_dim:
        raise DataError("need --dim or --scan-dim")
    data, predictors = _load_inputs(args)
    dims = args.scan_dim or [args.dim]
    variant = OFFSET_CHOICES[args.offset]
    supervised = predictors is not None
    if not supervised:
        data = ds.compress_profiles(
            data.expand(), drop_all_zero=True, item_labels=data.item_labels
        )

    rows = []
    for S in dims:
        opts = FitOptions(
            S=S,
            maxouter=args.maxouter,
            eps_outer=args.eps,
            offset_variant=variant,
            n_starts=args.starts,
            seed=args.seed,
            threads=args.threads,
        )
        if supervised:
            map_, report = fit_supervised(data, predictors, opts)
        else:
            map_, report = fit_unsupervised(data, opts)
        rows.append((S, map_, report, opts))

    print(f"{'S':>3} {'deviance':>14} {'npar':>8} {'AIC':>14} {'converged':>10}")
    for S, _, report, _ in rows:
        print(
            f"{S:>3} {report.deviance:>14.4f} {report.npar:>8d} "
            f"{report.aic:>14.4f} {str(report.converged):>10}"
        )
    best = min(rows, key=lambda row: row[2].aic)
    S, map_, report, opts = best
    if len(rows) > 1:
        print(f"best AIC at S={S}")
    if args.out:
        centering = predictors.centering if supervised else None
        modelio.save_model(args.out, map_, report, opts, centering)
        print(f"model written to {args.out}")
    if args.svg:
        svg = render.render_map(map_, dataset=data, predictors=predictors)
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
        print(f"map written to {args.svg}")
    return 0


def _model_probabilities(map_, data, predictors):
    if isinstance(map_, UnfoldingMap):
        if map_.U.shape[0] != data.I:
            raise DataError(
                "unsupervised model was fitted on different profiles than the responses file"
            )
        return map_.probabilities(), map_.linear_predictor()
    if predictors is None:
        raise DataError("this model type needs --predictors")
    if predictors.X.shape[0] != data.I:
        raise DataError("predictor rows must match response rows")
    if isinstance(map_, SupervisedUnfoldingMap):
        theta = np.asarray(map_.m)[None, :] - map_.distances(predictors.X)
        return expit(theta), theta
    if isinstance(map_, ReducedRankMap):
        theta = map_.linear_predictor(predictors.X)
        return expit(theta), theta
    raise DataError(f"unknown model type {type(map_).__name__}")


def command_diagnose(args) -> int:
    map_, meta = modelio.load_model(args.model)
    data = ds.load_csv(args.responses, "responses")
    if len(map_.item_labels) != data.R:
        raise DataError(
            f"model has {len(map_.item_labels)} items but data has {data.R}"
        )
    predictors = None
    if args.predictors:
        predictors = ds.load_csv(args.predictors, "predictors")
        predictors = modelio.apply_centering(predictors, meta.get("centering"))
    if isinstance(map_, UnfoldingMap):
        data = ds.compress_profiles(
            data.expand(), drop_all_zero=True, item_labels=data.item_labels
        )
    Pi, Theta = _model_probabilities(map_, data, predictors)

    wrote_any = False
    if args.metrics:
        table = diagnostics.classification_metrics(
            data.Y, Pi, n=data.n, threshold=args.threshold, item_labels=data.item_labels
        )
        with open(args.metrics, "w", encoding="utf-8") as fh:
            fh.write(table.to_csv())
        print(f"metrics written to {args.metrics}")
        wrote_any = True
    if args.residuals:
        raw = diagnostics.raw_residuals(data.Y, Pi)
        dev = diagnostics.deviance_residuals(data.Y, data.n, Theta)
        with open(args.residuals, "w", encoding="utf-8") as fh:
            fh.write("profile,item,raw,deviance\n")
            for i in range(data.I):
                for r in range(data.R):
                    fh.write(
                        f"{data.profile_labels[i]},{data.item_labels[r]},"
                        f"{raw[i, r]:.8g},{dev[i, r]:.8g}\n"
                    )
        print(f"residuals written to {args.residuals}")
        wrote_any = True
    if args.influence:
        if not isinstance(map_, SupervisedUnfoldingMap):
            raise DataError("influence diagnostics need a supervised unfolding model")
        opts = _options_from_meta(meta, map_.S)
        records = diagnostics.influence(data, predictors, opts, map_, threads=args.threads)
        with open(args.influence + ".csv", "w", encoding="utf-8") as fh:
            fh.write(diagnostics.influence_csv(records))
        with open(args.influence + ".svg", "w", encoding="utf-8") as fh:
            fh.write(render.render_panels("influence", records))
        print(f"influence written to {args.influence}.csv and .svg")
        wrote_any = True
    if args.cpr:
        if not isinstance(map_, SupervisedUnfoldingMap):
            raise DataError("component-plus-residual plots need a supervised unfolding model")
        panels = [
            diagnostics.component_residual_data(map_, predictors, data.Y, p, r)
            for p in range(predictors.P)
            for r in range(data.R)
        ]
        with open(args.cpr + ".csv", "w", encoding="utf-8") as fh:
            fh.write("predictor,item,kind,x,y\n")
            for pan in panels:
                for row in pan.to_rows():
                    fh.write(f"{row[0]},{row[1]},{row[2]},{row[3]:.8g},{row[4]:.8g}\n")
        with open(args.cpr + ".svg", "w", encoding="utf-8") as fh:
            fh.write(render.render_panels("cpr", panels))
        print(f"component-plus-residual data written to {args.cpr}.csv and .svg")
        wrote_any = True
    if not wrote_any:
        print("nothing to do: pass --metrics, --residuals, --influence, or --cpr")
    return 0


def _options_from_meta(meta, S) -> FitOptions:
    opts = FitOptions(S=S)
    stored = meta.get("options")
    if isinstance(stored, dict):
        valid = {k: v for k, v in stored.items() if hasattr(opts, k)}
        try:
            opts = FitOptions(**{**opts.__dict__, **valid})
        except (DataError, TypeError):
            opts = FitOptions(S=S)
    return opts


def command_simulate(args) -> int:
    design = montecarlo.load_design(args.design, args.kind)
    os.makedirs(args.out, exist_ok=True)
    if isinstance(design, montecarlo.RecoveryDesign):
        result = montecarlo.run_recovery(design, threads=args.threads)
        _write_study(result, args.out)
        for measure in ("phi_uv", "phi_v", "r_uv", "r_v"):
            strips = []
            for size in design.sample_sizes:
                vals = [r[measure] for r in result.records if r["sample_size"] == size]
                if vals:
                    strips.append((f"n={size}", vals))
            if strips:
                path = os.path.join(args.out, f"recovery_{measure}.svg")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(render.render_panels("local_optima", strips, seed=0))
    else:
        result = montecarlo.run_predictive(design, threads=args.threads)
        _write_study(result, args.out)
        for size in design.train_sizes:
            rows = [r for r in result.records if r["train_size"] == size]
            if not rows:
                continue
            pairs = [
                ("distance", [r["brier_distance"] for r in rows]),
                ("inner product", [r["brier_rrr"] for r in rows]),
            ]
            path = os.path.join(args.out, f"brier_{design.family}_n{size}.svg")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(render.render_panels("brier_box", pairs))
    print(f"study outputs written to {args.out}")
    if result.failures:
        print(f"warning: {len(result.failures)} replications failed")
    return 0


def _write_study(result, out_dir) -> None:
    with open(os.path.join(out_dir, "records.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.to_csv())
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(result.summary_json())


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
