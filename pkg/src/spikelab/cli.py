"""Command-line entry point.

Every module is exposed through one `spikelab` command with subcommands.
Output is CSV (header row, plot-ready) or JSON ({"columns", "rows"},
matching the shipped schema file), written atomically via temp file +
rename. Exit codes: 0 success, 2 configuration error, 1 computation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile

import numpy as np

DEFAULT_SEED = 1234  # fixed, never time-based: identical configs give identical bytes


def parse_grid(spec: str) -> np.ndarray:
    """'a:b:n' -> n evenly spaced points from a to b, strictly increasing."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be 'start:stop:count', got {spec!r}")
    a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("grid count must be >= 1")
    if n > 1 and not b > a:
        raise ValueError("grid must be strictly increasing")
    return np.linspace(a, b, n)


def _threads(args) -> int | None:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("SPIKELAB_THREADS")
    return int(env) if env else None


def write_table(path: str, columns: list[str], rows: list[list], fmt: str) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            if fmt == "json":
                json.dump({"columns": columns, "rows": rows}, f, indent=1)
                f.write("\n")
            else:
                w = csv.writer(f)
                w.writerow(columns)
                w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, columns, rows, summary: str) -> int:
    write_table(args.output, columns, rows, args.format)
    print(f"{summary} -> {args.output} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------- handlers


def _cmd_scalar(args) -> int:
    from .priors import parse_prior
    from .scalar_channel import channel_eval

    prior = parse_prior(args.prior)
    rows = []
    for g in parse_grid(args.gamma_grid):
        ev = channel_eval(prior, float(g), order=args.quad_order)
        rows.append([ev.gamma, ev.psi, ev.psi_prime, ev.mmse])
    return _emit(args, ["gamma", "psi", "psi_prime", "mmse"], rows, "scalar channel")


def _cmd_wigner_curves(args) -> int:
    from .priors import parse_prior
    from .rs_wigner import mmse_limit, mse_pca_limit, mutual_information_limit, q_star

    prior = parse_prior(args.prior)
    rows = []
    for lam in parse_grid(args.lambda_grid):
        lam = float(lam)
        qs, _ = q_star(prior, lam, order=args.quad_order)
        rows.append(
            [
                lam,
                qs,
                mmse_limit(prior, lam, order=args.quad_order),
                mutual_information_limit(prior, lam, order=args.quad_order),
                mse_pca_limit(prior, lam),
            ]
        )
    return _emit(
        args, ["lambda", "q_star", "mmse", "mutual_information", "mse_pca"], rows,
        "wigner limit curves",
    )


def _cmd_wigner_landscape(args) -> int:
    from .priors import parse_prior
    from .rs_wigner import landscape

    prior = parse_prior(args.prior)
    grid = parse_grid(args.q_grid) if args.q_grid else None
    rows = []
    for lam in args.lam:
        ls = landscape(prior, lam, q_grid=grid, order=args.quad_order)
        for q, v in zip(ls.q_grid, ls.potential_values):
            rows.append([lam, float(q), float(v), ls.q_star])
    return _emit(
        args, ["lambda", "q", "potential", "q_star"], rows, "free energy landscape"
    )


def _cmd_wigner_phase_diagram(args) -> int:
    from .rs_wigner import phase_diagram

    cells = phase_diagram(
        parse_grid(args.p_grid),
        parse_grid(args.lambda_grid),
        order=args.quad_order,
        threads=_threads(args),
    )
    rows = [
        [c.p, c.lam, c.phase.value, c.q_star, int(c.lambda_c_marker)] for c in cells
    ]
    return _emit(
        args, ["p", "lambda", "phase", "q_star", "lambda_c_marker"], rows,
        "phase diagram",
    )


def _cmd_wigner_threshold(args) -> int:
    from .priors import parse_prior
    from .rs_wigner import it_threshold

    lam_c = it_threshold(parse_prior(args.prior), order=args.quad_order)
    return _emit(args, ["lambda_c"], [[lam_c]], f"threshold lambda_c={lam_c:.6f}")


def _cmd_wishart_curves(args) -> int:
    from .priors import parse_prior
    from .rs_wishart import mmse_uu_limit, mmse_uv_limit, solve

    pu, pv = parse_prior(args.prior_u), parse_prior(args.prior_v)
    rows = []
    for lam in parse_grid(args.lambda_grid):
        lam = float(lam)
        sol = solve(pu, pv, lam, args.alpha, order=args.quad_order)
        rows.append(
            [
                lam,
                args.alpha,
                sol.q_u_star,
                sol.q_v_star,
                sol.value,
                mmse_uv_limit(pu, pv, lam, args.alpha, order=args.quad_order),
                mmse_uu_limit(pu, pv, lam, args.alpha, order=args.quad_order),
            ]
        )
    return _emit(
        args,
        ["lambda", "alpha", "q_u", "q_v", "free_energy", "mmse_uv", "mmse_uu"],
        rows,
        "wishart limit curves",
    )


def _cmd_wishart_covariance(args) -> int:
    from .priors import parse_prior
    from .rs_wishart import spiked_covariance_curve

    pts = spiked_covariance_curve(
        parse_prior(args.prior_u), args.lam, parse_grid(args.alpha_grid),
        order=args.quad_order,
    )
    rows = [
        [p.alpha, p.q_v_star, p.q_u_star, p.mmse_uu, p.mse_pca, p.mse_amp_se]
        for p in pts
    ]
    return _emit(
        args,
        ["alpha", "q_v_star", "q_u_star", "mmse_uu", "mse_pca", "mse_amp_se"],
        rows,
        "spiked covariance curve",
    )


def _cmd_wishart_mixed(args) -> int:
    from .priors import parse_prior
    from .rs_wishart import mixed_model_value

    pu, pv = parse_prior(args.prior_u), parse_prior(args.prior_v)
    rows = []
    for g in parse_grid(args.gamma_grid):
        val, qu = mixed_model_value(
            pu, pv, args.lam, float(g), args.alpha, order=args.quad_order
        )
        rows.append([float(g), args.lam, args.alpha, val, qu])
    return _emit(
        args, ["gamma", "lambda", "alpha", "value", "q_u"], rows, "mixed model"
    )


def _cmd_se(args) -> int:
    from .dynamics import state_evolution_wigner, state_evolution_wishart
    from .priors import parse_prior

    if args.model == "wigner":
        trace = state_evolution_wigner(
            parse_prior(args.prior), args.lam, args.iters,
            q0_override=args.q0, order=args.quad_order,
        )
        rows = [[t, float(q)] for t, q in enumerate(trace.q_values)]
        return _emit(args, ["t", "q"], rows, "wigner state evolution")
    trace = state_evolution_wishart(
        parse_prior(args.prior_u),
        parse_prior(args.prior_v),
        args.lam,
        args.alpha,
        args.iters,
        q_v0=args.q0 or 0.0,
        order=args.quad_order,
    )
    rows = [[t, float(qu), float(qv)] for t, (qu, qv) in enumerate(trace.q_values)]
    return _emit(args, ["t", "q_u", "q_v"], rows, "wishart state evolution")


def _cmd_amp_run(args) -> int:
    from .dynamics import amp_wigner, generate_wigner
    from .priors import parse_prior

    prior = parse_prior(args.prior)
    rows = []
    for k in range(args.seeds):
        seed = args.seed + k
        inst = generate_wigner(prior, args.n, args.lam, seed)
        trace = amp_wigner(inst, args.iters, order=args.quad_order)
        for r in trace.records:
            rows.append(
                [seed, r.t, r.overlap_emp, r.overlap_se, r.norm_emp, r.mse_emp, r.mse_se]
            )
    return _emit(
        args,
        ["seed", "t", "overlap_emp", "overlap_se", "norm_emp", "mse_emp", "mse_se"],
        rows,
        "amp runs",
    )


def _cmd_pca_run(args) -> int:
    from .dynamics import generate_wigner, pca_estimate_wigner, top_eigenvector
    from .priors import parse_prior

    prior = parse_prior(args.prior)
    rows = []
    for k in range(args.seeds):
        seed = args.seed + k
        inst = generate_wigner(prior, args.n, args.lam, seed)
        eig, _ = top_eigenvector(inst.Y / math.sqrt(args.n))
        mse, overlap = pca_estimate_wigner(inst)
        rows.append([seed, eig, overlap * overlap, mse])
    return _emit(args, ["seed", "eigenvalue", "overlap_sq", "mse"], rows, "pca runs")


def _cmd_oracle_wigner(args) -> int:
    from .oracle import report
    from .priors import parse_prior

    prior = parse_prior(args.prior)
    rows = []
    for lam in parse_grid(args.lambda_grid):
        r = report(prior, args.n, float(lam), args.trials, args.seed,
                   threads=_threads(args))
        rows.append(
            [r.lam, r.f_n, r.f_n_err, r.mmse_n, r.mmse_n_err, r.rs_f, r.rs_mmse]
        )
    return _emit(
        args,
        ["lambda", "f_n", "f_n_err", "mmse_n", "mmse_n_err", "rs_f", "rs_mmse"],
        rows,
        f"oracle wigner n={args.n}",
    )


def _cmd_oracle_pin(args) -> int:
    from .oracle import pinned_overlap_variance
    from .priors import parse_prior

    prior = parse_prior(args.prior)
    rows = []
    for eps in parse_grid(args.epsilon_grid):
        v = pinned_overlap_variance(
            prior, args.n, args.lam, float(eps), args.trials, args.seed,
            threads=_threads(args),
        )
        rows.append([float(eps), v])
    return _emit(args, ["epsilon", "overlap_variance"], rows, "pinning experiment")


def _cmd_oracle_rem(args) -> int:
    from .oracle import rem_free_energy, rem_mc

    rows = []
    for lam in parse_grid(args.lambda_grid):
        f, e = rem_mc(args.n, float(lam), args.trials, args.seed,
                      threads=_threads(args))
        rows.append([float(lam), f, e, rem_free_energy(float(lam))])
    return _emit(
        args, ["lambda", "f_n", "f_n_err", "f_limit"], rows, f"planted REM n={args.n}"
    )


def _cmd_oracle_wasserstein(args) -> int:
    from .oracle import wasserstein_stability_check
    from .priors import parse_prior

    lhs, rhs = wasserstein_stability_check(
        parse_prior(args.prior), args.n, args.lam, args.m, args.trials, args.seed
    )
    return _emit(
        args, ["m", "lhs", "rhs"], [[args.m, lhs, rhs]],
        f"stability lhs={lhs:.4g} <= rhs={rhs:.4g}",
    )


_PRESETS = {
    # MMSE / PCA / AMP curves for the two-group prior at p = 0.05
    "mmse_xx": ["wigner", "curves", "--prior", "sbm:p=0.05",
                "--lambda-grid", "0.1:2.0:100"],
    # potential landscapes across the impossible / hard / easy phases
    "free_energy_landscape": ["wigner", "landscape", "--prior", "sbm:p=0.05",
                              "--lambda", "0.4", "--lambda", "0.8",
                              "--lambda", "1.5"],
    "phase_diagram": ["wigner", "phase-diagram", "--p-grid", "0.01:0.49:25",
                      "--lambda-grid", "0.1:1.5:29"],
    # sparse spiked covariance at lambda = 1, s = 0.15
    "mmse_spiked_covariance": ["wishart", "covariance", "--prior-u", "sparse:s=0.15",
                               "--lambda", "1.0", "--alpha-grid", "0.5:20:40"],
}


def _add_common(sp, output_required: bool = True):
    sp.add_argument("-o", "--output", required=output_required, help="output path")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--quad-order", type=int, default=61)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--threads", type=int, default=None,
                    help="worker pool size (or env SPIKELAB_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spikelab")
    ap.add_argument("--config", help="JSON file of flag defaults")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scalar", help="scalar channel curves")
    p.add_argument("--prior", required=True)
    p.add_argument("--gamma-grid", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_scalar)

    wig = sub.add_parser("wigner", help="symmetric model limits").add_subparsers(
        dest="subcommand", required=True
    )
    p = wig.add_parser("curves")
    p.add_argument("--prior", required=True)
    p.add_argument("--lambda-grid", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_wigner_curves)
    p = wig.add_parser("landscape")
    p.add_argument("--prior", required=True)
    p.add_argument("--lambda", dest="lam", type=float, action="append", required=True)
    p.add_argument("--q-grid", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_wigner_landscape)
    p = wig.add_parser("phase-diagram")
    p.add_argument("--p-grid", required=True)
    p.add_argument("--lambda-grid", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_wigner_phase_diagram)
    p = wig.add_parser("threshold")
    p.add_argument("--prior", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_wigner_threshold)

    wis = sub.add_parser("wishart", help="rectangular model limits").add_subparsers(
        dest="subcommand", required=True
    )
    p = wis.add_parser("curves")
    p.add_argument("--prior-u", required=True)
    p.add_argument("--prior-v", required=True)
    p.add_argument("--lambda-grid", required=True)
    p.add_argument("--alpha", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_wishart_curves)
    p = wis.add_parser("covariance")
    p.add_argument("--prior-u", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha-grid", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_wishart_covariance)
    p = wis.add_parser("mixed")
    p.add_argument("--prior-u", required=True)
    p.add_argument("--prior-v", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--gamma-grid", required=True)
    p.add_argument("--alpha", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_wishart_mixed)

    p = sub.add_parser("se", help="state evolution traces")
    p.add_argument("--model", choices=["wigner", "wishart"], required=True)
    p.add_argument("--prior")
    p.add_argument("--prior-u")
    p.add_argument("--prior-v")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--q0", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_se)

    amp = sub.add_parser("amp").add_subparsers(dest="subcommand", required=True)
    p = amp.add_parser("run")
    p.add_argument("--prior", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--seeds", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_amp_run)

    pca = sub.add_parser("pca").add_subparsers(dest="subcommand", required=True)
    p = pca.add_parser("run")
    p.add_argument("--prior", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seeds", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_pca_run)

    orc = sub.add_parser("oracle").add_subparsers(dest="subcommand", required=True)
    p = orc.add_parser("wigner")
    p.add_argument("--prior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda-grid", required=True)
    p.add_argument("--trials", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_oracle_wigner)
    p = orc.add_parser("pin")
    p.add_argument("--prior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--epsilon-grid", required=True)
    p.add_argument("--trials", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_oracle_pin)
    p = orc.add_parser("rem")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda-grid", required=True)
    p.add_argument("--trials", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_oracle_rem)
    p = orc.add_parser("wasserstein")
    p.add_argument("--prior", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_oracle_wasserstein)

    p = sub.add_parser("preset", help="named figure-data bundles")
    p.add_argument("name", choices=sorted(_PRESETS))
    _add_common(p)
    p.set_defaults(func=None)
    return ap


def figure_bundles() -> dict[str, list[str]]:
    """Named presets expanding to full argument lists; flags given alongside
    the preset name override the expansion."""
    return dict(_PRESETS)


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pull --config out of argv and splice the file's key/value pairs in as
    defaults (before the explicit flags, so flags win)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    with open(path) as f:
        conf = json.load(f)
    extra: list[str] = []
    for k, v in conf.items():
        extra.extend([f"--{k.replace('_', '-')}", str(v)])
    # defaults go right after the subcommand words (leading non-flag tokens)
    j = 0
    while j < len(rest) and not rest[j].startswith("-"):
        j += 1
    return rest[:j] + extra + rest[j:]


def parse_and_dispatch(argv: list[str]) -> int:
    ap = build_parser()
    try:
        argv = _apply_config(ap, argv)
        if argv and argv[0] == "preset":
            ns = ap.parse_args(argv)
            expansion = _PRESETS[ns.name]
            passthrough = argv[2:]
            argv = expansion + passthrough
        args = ap.parse_args(argv)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
