"""Command-line entry point: simulate, fit, select and summarize workflows.

Exit codes: 0 success, 1 runtime failure (a machine-readable error JSON goes
to stderr), 2 usage error.  The output directory may be overridden with the
NLARCH_OUTPUT_DIR environment variable; no other setting has an env hook.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, io
from ._kernels import BACKEND
from .core import NlarchError, SpatialParams, queen_contiguity, row_normalize
from .inference import format_summary, recover_volatility, summarize, SummaryRow
from .mixture import DEFAULT_MIXTURE
from .sampler import PriorSpec, SamplerConfig, run_chain
from .selection import scan_q
from .shrinkage import ShrinkageConfig, run_chain_shrinkage
from .simulate import SimConfig, simulate_panel
from .core import log_squared_transform


def _out_dir(args) -> str:
    out = os.environ.get("NLARCH_OUTPUT_DIR") or args.out_dir
    io.ensure_dir(out)
    return out


def _parse_q_list(text):
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        iterations=args.iterations, burn_in=args.burn_in, thin=args.thin,
        c_rho=args.c_rho, seed=args.seed, max_field_draws=args.max_field_draws,
    )


def _load_inputs(args):
    panel = io.parse_panel_csv(args.panel)
    M = io.read_weights(args.weights)
    if not M.row_normalized and args.row_normalize:
        M = row_normalize(M)
    prior = io.load_prior_json(args.prior) if args.prior else PriorSpec()
    if args.no_stability:
        prior = PriorSpec(
            b_phi=prior.b_phi, B_phi=prior.B_phi, b_beta=prior.b_beta,
            B_beta=prior.B_beta, b_lambda=prior.b_lambda, B_lambda=prior.B_lambda,
            rho_support=prior.rho_support, enforce_stability=False,
        )
    return panel, M, prior


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    M = row_normalize(queen_contiguity(args.rows, args.cols))
    cfg = SimConfig(
        T=args.T, q=args.q,
        params=SpatialParams(args.rho, args.gamma, args.delta),
        beta=np.asarray(args.beta, dtype=float),
        M=M, burn_in_periods=args.burn_in_periods, seed=args.seed,
        covariate_law=args.covariate_law,
    )
    t0 = time.time()
    panel, truth = simulate_panel(cfg)
    io.write_panel_csv(os.path.join(out, "panel.csv"), panel)
    io.write_weights_dense(os.path.join(out, "weights.csv"), M)
    io.write_json(os.path.join(out, "truth.json"), {
        "rho": cfg.params.rho, "gamma": cfg.params.gamma, "delta": cfg.params.delta,
        "beta": cfg.beta, "lambda": truth.lam, "F": truth.F, "h_star": truth.h_star,
    })
    io.write_json(os.path.join(out, "manifest.json"), {
        "command": "simulate", "version": __version__, "seed": args.seed,
        "n": cfg.n, "T": cfg.T, "q": cfg.q, "covariate_law": cfg.covariate_law,
        "burn_in_periods": cfg.burn_in_periods,
        "true_h_star_mean": float(truth.h_star.mean()),
        "runtime_seconds": time.time() - t0,
    })
    print(f"wrote panel ({cfg.n} units x {cfg.T} periods) to {out}")
    return 0


def cmd_fit(args) -> int:
    out = _out_dir(args)
    panel, M, prior = _load_inputs(args)
    cfg = _sampler_config(args)
    if args.shrinkage:
        draws = run_chain_shrinkage(panel, M, prior, cfg, args.q_max,
                                    ShrinkageConfig(), floor=args.floor,
                                    progress=args.progress)
    else:
        draws = run_chain(panel, M, prior, cfg, args.q, floor=args.floor,
                          progress=args.progress)
    logsq = log_squared_transform(panel, args.floor)
    vol = recover_volatility(draws, logsq, M, panel.X)
    io.write_draws_csv(os.path.join(out, "draws.csv"), draws)
    io.write_volatility_csv(os.path.join(out, "volatility.csv"), vol, panel.unit_ids)
    manifest = dict(draws.manifest)
    manifest.update({
        "command": "fit",
        "panel": os.path.abspath(args.panel),
        "weights": os.path.abspath(args.weights),
        "volatility_overall_average": vol.overall_average,
        "volatility_spread": list(vol.spread),
    })
    io.write_json(os.path.join(out, "manifest.json"), manifest)
    rows = summarize(draws)
    rows.append(SummaryRow("h*", vol.overall_average, *vol.spread))
    print(format_summary(rows))
    print(f"acceptance rate {manifest['acceptance_rate']:.3f}; outputs in {out}")
    return 0


def cmd_select(args) -> int:
    out = _out_dir(args)
    panel, M, prior = _load_inputs(args)
    cfg = _sampler_config(args)
    report = scan_q(panel, M, prior, cfg, _parse_q_list(args.q),
                    shrinkage=args.shrinkage, floor=args.floor, jobs=args.jobs)
    io.write_json(os.path.join(out, "dic.json"), report.as_dict())
    print(report.table())
    return 0


def cmd_summarize(args) -> int:
    cols = io.read_draws_csv(args.draws)
    names = [n for n in cols if n not in ("iteration",)]
    rows = []
    for name in names:
        lo, med, hi = np.quantile(cols[name], [0.025, 0.5, 0.975])
        rows.append(SummaryRow(name, float(med), float(lo), float(hi)))
    print(format_summary(rows))
    return 0


def _dump_mixture() -> int:
    t = DEFAULT_MIXTURE
    print(f"{'component':>9} {'p':>10} {'mu':>11} {'sigma2':>10}")
    for j in range(t.n_components):
        print(f"{j + 1:>9} {t.p[j]:>10.5f} {t.mu[j]:>11.5f} {t.sigma2[j]:>10.5f}")
    print(f"mean {t.mean():.5f}  variance {t.variance():.5f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlarch",
        description="Bayesian network / spatiotemporal log-ARCH volatility modeling",
    )
    ap.add_argument("--version", action="version", version=f"nlarch {__version__} ({BACKEND} kernels)")
    ap.add_argument("--dump-mixture", action="store_true",
                    help="print the ten-component mixture table and exit")
    sub = ap.add_subparsers(dest="command")

    sim = sub.add_parser("simulate", help="generate a synthetic panel on a queen lattice")
    sim.add_argument("--rows", type=int, default=7)
    sim.add_argument("--cols", type=int, default=7)
    sim.add_argument("--T", type=int, default=100)
    sim.add_argument("--q", type=int, default=2)
    sim.add_argument("--rho", type=float, default=0.16)
    sim.add_argument("--gamma", type=float, default=0.15)
    sim.add_argument("--delta", type=float, default=0.2)
    sim.add_argument("--beta", type=float, nargs="*", default=[-2.0])
    sim.add_argument("--burn-in-periods", type=int, default=200)
    sim.add_argument("--covariate-law",
                     choices=("uniform_pm1", "uniform_centered", "uniform"),
                     default="uniform_pm1")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out-dir", default="nlarch_sim")
    sim.set_defaults(func=cmd_simulate)

    def add_fit_args(p):
        p.add_argument("--panel", required=True, help="long-format panel CSV")
        p.add_argument("--weights", required=True, help="dense or edge-list weight CSV")
        p.add_argument("--row-normalize", action="store_true",
                       help="row-normalize the weights after reading")
        p.add_argument("--prior", help="prior JSON file")
        p.add_argument("--no-stability", action="store_true",
                       help="do not truncate (rho, gamma, delta) to the stable region")
        p.add_argument("--iterations", type=int, default=100_000)
        p.add_argument("--burn-in", type=int, default=20_000)
        p.add_argument("--thin", type=int, default=1)
        p.add_argument("--c-rho", type=float, default=0.1)
        p.add_argument("--floor", type=float, default=1e-12)
        p.add_argument("--max-field-draws", type=int, default=2000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default="nlarch_fit")

    fit = sub.add_parser("fit", help="run one MCMC chain")
    add_fit_args(fit)
    fit.add_argument("--q", type=int, default=0, help="number of latent factors")
    fit.add_argument("--shrinkage", action="store_true", help="Bayesian-Lasso loading priors")
    fit.add_argument("--q-max", type=int, default=None,
                     help="candidate factor count for --shrinkage")
    fit.add_argument("--progress", action="store_true")
    fit.set_defaults(func=cmd_fit)

    sel = sub.add_parser("select", help="scan factor counts by DIC")
    add_fit_args(sel)
    sel.add_argument("--q", required=True, help="candidates, e.g. 1..8 or 1,2,4")
    sel.add_argument("--shrinkage", action="store_true")
    sel.add_argument("--jobs", type=int, default=1, help="concurrent chains")
    sel.set_defaults(func=cmd_select)

    summ = sub.add_parser("summarize", help="summarize a draws CSV")
    summ.add_argument("--draws", required=True)
    summ.set_defaults(func=cmd_summarize)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.dump_mixture:
        return _dump_mixture()
    if args.command is None:
        ap.print_usage(sys.stderr)
        return 2
    if args.command == "fit" and args.shrinkage and args.q_max is None:
        ap.error("--shrinkage requires --q-max")
    try:
        return args.func(args)
    except NlarchError as exc:
        json.dump({"error": str(exc), "type": type(exc).__name__}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except OSError as exc:
        json.dump({"error": str(exc), "type": "OSError"}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
