"""Command-line front end.

Subcommands: ``analyze`` runs the generator -> discriminant -> walk pipeline
with the full invariant suite, ``random`` emits seeded instances, ``round``
drives the rounding-promise model, ``reduce`` verifies the enlarged-space
embedding of a canonical generator, and ``spectrum`` dumps CSV spectra.

Exit codes: 0 all checks pass, 2 invalid input, 3 a verified property
failed.  Reports are JSON and deterministic for a given instance and seed;
wall-clock timings are only included on request.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .davies import commutant_dimension, davies_lindbladian, gibbs_state
from .discriminant import discriminant_matrix, purified_fixed_point, similarity_khat, verify_similarity
from .energy import (
    RoundingPromise,
    check_rounding_promise,
    gibbs_overlap_pair,
    query_cost_estimate,
    rounded_hamiltonian,
)
from .formats import (
    InstanceFormatError,
    LoadedInstance,
    dump_canonical,
    dump_channel,
    dump_davies,
    load_instance,
    resolve_max_dim,
)
from .instances import (
    random_canonical_lindbladian,
    random_davies_instance,
    random_db_channel,
)
from .lindblad import (
    DB_TOLERANCE,
    channel_to_lindbladian,
    check_canonical,
    check_detailed_balance,
    fixed_point_residual,
    lindblad_matrix,
    spectral_gap,
    to_lindbladian,
)
from .matrix_core import dagger, unvec
from .reduction import reduce_to_davies
from .superop import GNS, KMS, PINNED_WEIGHTS, WeightFunction, reference_state
from .walk import (
    build_isometry_single,
    combine_couplings,
    gap_amplification_check,
    walk_spectrum,
)

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_PROPERTY_FAILED = 3

_WEIGHT_CHOICES = {
    "one": GNS,
    "gns": GNS,
    "sqrt": KMS,
    "kms": KMS,
    "power03": PINNED_WEIGHTS[2],
}


class ReportBuilder:
    """Accumulates named checks; every boolean carries residual and tolerance."""

    def __init__(self, kind: str, dimension: int, digest: str) -> None:
        self.data: dict = {
            "schema_version": "1",
            "tool_version": __version__,
            "kind": kind,
            "dimension": dimension,
            "instance_digest": digest,
            "checks": [],
            "notes": [],
        }

    def check(self, name: str, residual: float, tolerance: float) -> bool:
        passed = bool(residual <= tolerance)
        self.data["checks"].append(
            {"name": name, "passed": passed, "residual": float(residual), "tolerance": float(tolerance)}
        )
        return passed

    def check_flag(self, name: str, passed: bool, detail: float, tolerance: float = 0.0) -> bool:
        self.data["checks"].append(
            {"name": name, "passed": bool(passed), "residual": float(detail), "tolerance": float(tolerance)}
        )
        return bool(passed)

    def note(self, text: str) -> None:
        self.data["notes"].append(text)

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.data["checks"])


def _selected_weights(arg: str | None) -> list[tuple[str, WeightFunction]]:
    if not arg:
        return [("one", GNS), ("sqrt", KMS), ("power03", PINNED_WEIGHTS[2])]
    out = []
    for token in arg.split(","):
        token = token.strip().lower()
        if token not in _WEIGHT_CHOICES:
            raise InstanceFormatError(
                f"unknown weight function {token!r}; choose from one, sqrt, power03"
            )
        out.append((token, _WEIGHT_CHOICES[token]))
    return out


def _channel_reference(loaded: LoadedInstance):
    if loaded.channel_sigma is not None:
        return loaded.channel_sigma
    lb = channel_to_lindbladian(loaded.channel)
    d = loaded.dimension
    mixed = np.eye(d) / d
    if fixed_point_residual(lb, mixed) <= 1e-9:
        return reference_state(mixed)
    lhat = lindblad_matrix(lb)
    _, svals, vh = np.linalg.svd(lhat)
    null_mask = svals <= max(1e-10, svals[0] * 1e-12)
    if int(np.sum(null_mask)) != 1:
        raise InstanceFormatError(
            "channel fixed point is ambiguous; provide sigma in the payload"
        )
    rho = unvec(vh[-1].conj(), d, d)
    rho = (rho + dagger(rho)) / 2.0
    rho = rho / np.trace(rho).real
    return reference_state(rho)


def _analyze(loaded: LoadedInstance, args) -> dict:
    report = ReportBuilder(loaded.kind, loaded.dimension, loaded.digest)
    weights = _selected_weights(args.f_functions)
    tol = float(args.tolerance) if args.tolerance else DB_TOLERANCE
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    if loaded.kind == "davies":
        cl = davies_lindbladian(loaded.davies)
        ref = cl.reference
    elif loaded.kind == "canonical":
        cl = loaded.canonical
        ref = cl.reference
    else:
        cl = None
        ref = _channel_reference(loaded)
    timings["generator"] = time.perf_counter() - t0

    if cl is not None:
        lb = to_lindbladian(cl)
        canon = check_canonical(cl, raise_on_failure=False)
        report.check("canonical_adjoint_pairing", canon["adjoint_pairing"], 1e-10)
        report.check("canonical_modular_eigenvector", canon["modular_eigenvector"], 1e-9)
        report.check("canonical_kms_ratio", canon["kms_ratio"], 1e-10)
        report.check("canonical_weight_sum", canon["weight_sum"], 1e-10)
    else:
        lb = channel_to_lindbladian(loaded.channel)
        report.check("kraus_completeness", loaded.channel.completeness_defect(), 1e-10)

    t0 = time.perf_counter()
    db_residuals = {}
    for name, f in weights:
        db_residuals[name] = check_detailed_balance(lb, ref, f)
        report.check(f"detailed_balance[{name}]", db_residuals[name], tol)
    fp = fixed_point_residual(lb, ref.sigma)
    report.check("fixed_point", fp, 1e-9)
    timings["detailed_balance"] = time.perf_counter() - t0

    lhat = lindblad_matrix(lb)
    lhat_eigs = np.linalg.eigvals(lhat)
    report.data["norms"] = {"lindbladian": float(np.linalg.norm(lhat, 2))}
    report.check("lindbladian_real_spectrum", float(np.max(np.abs(lhat_eigs.imag))), 1e-9)

    t0 = time.perf_counter()
    if cl is not None:
        disc = discriminant_matrix(cl)
        for name, f in weights:
            report.check(f"similarity[{name}]", verify_similarity(lb, ref, f, disc), tol)
        report.check(
            "khat_fixed_point", float(np.linalg.norm(disc.khat @ disc.fixed_point)), 1e-9
        )
    else:
        khat = similarity_khat(lb, ref, KMS)
        khat = (khat + dagger(khat)) / 2.0
        disc_q = np.eye(khat.shape[0]) + khat
        fixed = purified_fixed_point(ref)
        report.check("khat_fixed_point", float(np.linalg.norm(khat @ fixed)), 1e-8)
        for name, f in weights:
            if name != "sqrt":
                other = similarity_khat(lb, ref, f)
                report.check(
                    f"f_independence[sqrt vs {name}]", float(np.linalg.norm(khat - other, 2)), tol
                )
        disc = None
    timings["discriminant"] = time.perf_counter() - t0

    q = disc.q if disc is not None else disc_q
    q_eigs = np.linalg.eigvalsh((q + dagger(q)) / 2.0)
    gap_q = spectral_gap(q, 1.0) if abs(q_eigs[-1] - 1.0) <= 1e-8 else None
    gap_l = -float(np.sort(lhat_eigs.real)[-2]) if lhat.shape[0] >= 2 else 0.0
    report.data["spectra"] = {
        "lindbladian_real": np.sort(lhat_eigs.real).tolist(),
        "discriminant": q_eigs.tolist(),
    }
    if gap_q is not None:
        report.check("gap_equality_L_vs_Q", abs(gap_l - gap_q), 1e-9)
        gaps = gap_amplification_check(q)
        report.check_flag(
            "gap_amplification", gaps.holds, gaps.theta - gaps.sqrt_two_delta, 0.0
        )
        report.data["gaps"] = {
            "delta": gaps.delta,
            "theta": gaps.theta,
            "sqrt_two_delta": gaps.sqrt_two_delta,
            "amplification_holds": gaps.holds,
        }
        top_multiplicity = int(np.sum(q_eigs >= q_eigs[-1] - 1e-8))
        if top_multiplicity > 1:
            report.note(f"discriminant top eigenvalue is {top_multiplicity}-fold degenerate")
    else:
        report.note("discriminant top eigenvalue is not 1; gap analysis skipped")

    t0 = time.perf_counter()
    if loaded.kind == "davies":
        from .davies import reflection_defect

        reflective = all(reflection_defect(s) <= 1e-10 for s, _ in loaded.davies.couplings)
        if reflective:
            parts = [
                build_isometry_single(loaded.davies, i)
                for i in range(len(loaded.davies.couplings))
            ]
            coupling_weights = [w for _, w in loaded.davies.couplings]
            if len(parts) == 1 and args.combine_mode == "state-prep":
                emb = parts[0]
            else:
                emb = combine_couplings(parts, coupling_weights, mode=args.combine_mode)
            keystone = float(np.linalg.norm(emb.encoded_matrix() - emb.encoding_scale * q, 2))
            report.check("keystone_TRT_equals_Q", keystone, 1e-9)
            report.data["encoding_scale"] = emb.encoding_scale
            spectrum = walk_spectrum(emb, q)
            report.check("walk_phase_match", spectrum.phase_match_residual, tol)
            if spectrum.fixed_point_residual is not None:
                report.check("walk_fixed_point", spectrum.fixed_point_residual, tol)
            report.data["spectra"]["walk_phases_b"] = spectrum.phases_b.tolist()
            report.data["spectra"]["walk_phases_bperp"] = {
                "zero": spectrum.bperp_zero_count,
                "pi": spectrum.bperp_pi_count,
            }
            ops = [s for s, _ in loaded.davies.couplings]
            ops.append(loaded.davies.hamiltonian.matrix())
            cdim = commutant_dimension(ops)
            report.data["commutant_dimension"] = cdim
            if cdim == 1:
                top_multiplicity = int(np.sum(q_eigs >= q_eigs[-1] - 1e-8))
                report.check_flag(
                    "unique_fixed_point", top_multiplicity == 1, float(top_multiplicity), 1.0
                )
        else:
            report.note("couplings are not reflections; walk runs through the reduction")
            _, red = reduce_to_davies(cl)
            report.check("keystone_TRT_equals_Q", red.q_match_residual, 1e-9)
            report.check("walk_phase_match", red.phase_match_residual, tol)
    elif loaded.kind == "canonical":
        _, red = reduce_to_davies(cl)
        report.check("keystone_TRT_equals_Q", red.q_match_residual, 1e-9)
        report.check("walk_phase_match", red.phase_match_residual, tol)
        report.check("reduction_completeness", red.completeness_residual, 1e-10)
        report.data["reduction"] = {
            "enlarged_system_dim": red.enlarged_system_dim,
            "walk_space_dim": red.walk_space_dim,
        }
    else:
        report.note("channel instances stop at the discriminant; no walk is constructed")
    timings["walk"] = time.perf_counter() - t0

    if args.timings:
        report.data["timings"] = {k: round(v, 6) for k, v in timings.items()}
    return report.data


def _write_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _report_exit(report: dict) -> int:
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    if failed:
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY_FAILED
    return EXIT_OK


def cmd_analyze(args) -> int:
    loaded = load_instance(args.instance, max_dim=args.max_dim)
    report = _analyze(loaded, args)
    _write_report(report, args.out)
    if args.spectra_dir:
        _dump_spectra_csv(report, args.spectra_dir)
    return _report_exit(report)


def _dump_spectra_csv(report: dict, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    spectra = report.get("spectra", {})
    if "discriminant" in spectra:
        with open(os.path.join(directory, "discriminant.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["index", "eigenvalue"])
            for i, value in enumerate(spectra["discriminant"]):
                writer.writerow([i, value])
    if "lindbladian_real" in spectra:
        with open(os.path.join(directory, "lindbladian.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["index", "eigenvalue"])
            for i, value in enumerate(spectra["lindbladian_real"]):
                writer.writerow([i, value])
    if "walk_phases_b" in spectra:
        with open(os.path.join(directory, "walk_phases.csv"), "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["eigenphase", "subspace"])
            for value in spectra["walk_phases_b"]:
                writer.writerow([value, "B"])
            perp = spectra.get("walk_phases_bperp", {})
            for _ in range(perp.get("zero", 0)):
                writer.writerow([0.0, "Bperp"])
            for _ in range(perp.get("pi", 0)):
                writer.writerow([float(np.pi), "Bperp"])


def cmd_random(args) -> int:
    cap = resolve_max_dim(args.max_dim, default=8)
    if not 2 <= args.d <= cap:
        raise InstanceFormatError(f"dimension {args.d} outside [2, {cap}]")
    rng = np.random.default_rng(args.seed)
    if args.kind == "davies":
        inst = random_davies_instance(
            rng, args.d, n_couplings=args.couplings, beta=args.beta, filter_kind=args.filter
        )
        payload = dump_davies(inst)
    elif args.kind == "canonical":
        payload = dump_canonical(random_canonical_lindbladian(rng, args.d, n_terms=args.couplings))
    else:
        channel, sigma = random_db_channel(rng, args.d)
        payload = dump_channel(channel, sigma)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_round(args) -> int:
    loaded = load_instance(args.instance, max_dim=args.max_dim)
    if loaded.kind != "davies":
        raise InstanceFormatError("the round command needs a davies-kind instance")
    inst = loaded.davies
    promise = RoundingPromise(r=args.r, alpha=args.alpha)
    report = ReportBuilder(loaded.kind, loaded.dimension, loaded.digest)

    verdict = check_rounding_promise(inst.hamiltonian, promise)
    rounded = rounded_hamiltonian(inst.hamiltonian, promise.r)
    exact, bound = gibbs_overlap_pair(inst.hamiltonian, inst.beta, promise.r)
    report.check_flag("overlap_bound", exact >= bound - 1e-12, exact - bound, 0.0)
    report.data["rounding"] = {
        "r": promise.r,
        "alpha": promise.alpha,
        "promise_holds": verdict,
        "rounded_eigenvalues": rounded.rounded.eigenvalues.tolist(),
        "original_eigenvalues": inst.hamiltonian.eigenvalues.tolist(),
    }
    report.data["overlap"] = {
        "exact": exact,
        "bound": bound,
        "beta": inst.beta,
    }
    report.data["query_cost"] = query_cost_estimate(promise, args.delta)
    _write_report(report.data, args.out)
    return _report_exit(report.data)


def cmd_reduce(args) -> int:
    loaded = load_instance(args.instance, max_dim=args.max_dim)
    if loaded.kind == "canonical":
        cl = loaded.canonical
    elif loaded.kind == "davies":
        cl = davies_lindbladian(loaded.davies)
    else:
        raise InstanceFormatError("the reduce command needs a canonical or davies instance")
    report = ReportBuilder(loaded.kind, loaded.dimension, loaded.digest)
    reduced, red = reduce_to_davies(cl)
    report.check("q_match", red.q_match_residual, 1e-9)
    report.check("extended_completeness", red.completeness_residual, 1e-10)
    report.check("block_recovery", red.block_recovery_residual, 1e-10)
    report.check("c12_sectors_inert", red.c12_contribution_residual, 1e-9)
    report.check("phase_gap_match", abs(red.phase_gap_reduced - red.phase_gap_direct), 1e-7)
    report.check("walk_phase_match", red.phase_match_residual, 1e-8)
    report.check("fixed_point_eigenvector", red.fixed_point_residual, 1e-8)
    report.data["reduction"] = {
        "enlarged_system_dim": red.enlarged_system_dim,
        "walk_space_dim": red.walk_space_dim,
        "phase_gap_direct": red.phase_gap_direct,
        "phase_gap_reduced": red.phase_gap_reduced,
        "register_dims": reduced.layout.register_dims,
    }
    _write_report(report.data, args.out)
    return _report_exit(report.data)


def cmd_spectrum(args) -> int:
    loaded = load_instance(args.instance, max_dim=args.max_dim)
    report = _analyze(loaded, args)
    _dump_spectra_csv(report, args.out_dir)
    return _report_exit(report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lszwalk",
        description="Detailed-balanced Lindbladians, their discriminants and Szegedy walks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--max-dim", type=int, default=None, help="dimension cap (default: LSZ_MAX_DIM or 16)")
        p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    def analysis_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--f-functions", default=None, help="comma list from one,sqrt,power03 (default: all)")
        p.add_argument("--tolerance", type=float, default=None, help="detailed-balance tolerance (default 1e-8)")
        p.add_argument(
            "--combine-mode",
            choices=("state-prep", "paper-theta"),
            default="state-prep",
            help="multi-coupling combination (paper-theta scales the encoding by 1/M)",
        )
        p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    p_analyze = sub.add_parser("analyze", help="full verification pipeline for one instance")
    p_analyze.add_argument("instance")
    common(p_analyze)
    analysis_flags(p_analyze)
    p_analyze.add_argument("--spectra-dir", default=None, help="also write CSV spectra into this directory")
    p_analyze.set_defaults(func=cmd_analyze)

    p_random = sub.add_parser("random", help="emit a seeded random instance file")
    p_random.add_argument("--kind", choices=("davies", "canonical", "channel"), default="davies")
    p_random.add_argument("--d", type=int, default=3, help="Hilbert space dimension")
    p_random.add_argument("--couplings", type=int, default=1, help="number of couplings / terms")
    p_random.add_argument("--beta", type=float, default=None, help="inverse temperature (default: random)")
    p_random.add_argument("--filter", choices=("metropolis", "glauber"), default="metropolis")
    p_random.add_argument("--seed", type=int, default=0)
    common(p_random)
    p_random.set_defaults(func=cmd_random)

    p_round = sub.add_parser("round", help="rounding promise, floor-rounded Hamiltonian and overlap")
    p_round.add_argument("instance")
    p_round.add_argument("--r", type=int, required=True, help="pointer bits")
    p_round.add_argument("--alpha", type=float, required=True, help="promise margin in (0, 1)")
    p_round.add_argument("--delta", type=float, default=0.01, help="target diamond-norm error for the cost")
    common(p_round)
    p_round.set_defaults(func=cmd_round)

    p_reduce = sub.add_parser("reduce", help="verify the enlarged-space reflection embedding")
    p_reduce.add_argument("instance")
    common(p_reduce)
    p_reduce.set_defaults(func=cmd_reduce)

    p_spectrum = sub.add_parser("spectrum", help="write CSV spectra for an instance")
    p_spectrum.add_argument("instance")
    p_spectrum.add_argument("--out-dir", required=True)
    common(p_spectrum)
    analysis_flags(p_spectrum)
    p_spectrum.set_defaults(func=cmd_spectrum)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceFormatError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except FileNotFoundError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except ValueError as exc:
        print(f"property violated: {exc}", file=sys.stderr)
        return EXIT_PROPERTY_FAILED


if __name__ == "__main__":
    sys.exit(main())
