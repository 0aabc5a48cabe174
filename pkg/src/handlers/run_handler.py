#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
运行处理器: 按 RunConfig 的模式调度各计算模块, 写出报告与表格, 并给出退出码。

退出码: 0 成功; 1 未收敛; 2 工具包错误 (ScatterTraceError); 3 未预期的异常。
"""
import logging
import math
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.core.constants import RunMode
from src.core.data_manager import load_group, load_orbit, load_spectrum, save_orbit, save_perturbed
from src.core.eigen_solver import PerturbedSpectrum, polybound_diagnostic, safe_heights, solve_new_eigs
from src.core.errors import DomainError, IncompleteEnumerationError, ScatterTraceError
from src.core.fuchsian_orbits import OrbitSpectrum, enumerate_orbit
from src.core.green_functions import fit_sigma_envelope
from src.core.spectral_function import CouplingContext, Spectrum, make_context, s_prime_spectral_many, s_spectral_many
from src.core.test_functions import (appendix_h_eps, appendix_local_estimates, appendix_onset_height,
                                     appendix_params_from_heights, compbound_diagnostic, dyadic_heights,
                                     make_cauchy_h, membership_check)
from src.core.trace_formula import (TraceReport, contour_series_ratio, diffractive_line_terms, diffractive_sum,
                                    geometric_line, identity_term, pretrace_rhs, select_nu, select_sigma,
                                    series_ratio_bound, spectral_side, truncated_check)
from src.core.workers import set_parallel_threshold
from src.handlers.config_handler import RunConfig
from src.handlers.export_handler import ExportHandler
from src.utils.gpu_utils import set_gpu_enabled

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_TOOLKIT_ERROR = 2
EXIT_UNEXPECTED = 3

# 截断迹公式的收敛判据
TRUNCATED_GAP_TOL = 1e-6
# 几何侧自洽检验中求积误差的余量
GEOMETRIC_QUADRATURE_TOL = 1e-7
RESEARCH_DISCLAIMER = ("谱侧与几何侧来自独立提供的数据, 其 (Γ, 谱, 权重) 的相互一致性未经验证; "
                       "两侧之差仅作参考, 不作为收敛判据。")


class RunHandler:

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.export = ExportHandler(cfg.output_dir)
        set_gpu_enabled(cfg.use_gpu)
        set_parallel_threshold(cfg.parallel_threshold)

    def run(self) -> int:
        handlers = {
            RunMode.ORBITS: self.run_orbits,
            RunMode.EIGENS: self.run_eigens,
            RunMode.TRACE_TRUNCATED: self.run_trace_truncated,
            RunMode.TRACE_GEOMETRIC: self.run_trace_geometric,
            RunMode.DIAGNOSTICS: self.run_diagnostics,
            RunMode.TESTFN: self.run_testfn,
        }
        logger.info(f"运行模式: {self.cfg.mode.value}, 输出目录: {self.cfg.output_dir}")
        try:
            converged = handlers[self.cfg.mode]()
        except ScatterTraceError as e:
            logger.error(f"{type(e).__name__}: {e.describe()}", exc_info=True)
            self.export.write_report({"mode": self.cfg.mode.value, "error": type(e).__name__,
                                      "module": e.module, "message": str(e), "context": e.context})
            return EXIT_TOOLKIT_ERROR
        except Exception as e:
            logger.error(f"未预期的错误: {e}", exc_info=True)
            return EXIT_UNEXPECTED
        return EXIT_OK if converged else EXIT_NOT_CONVERGED

    # ------------------------------------------------------------ 输入

    def _orbit(self) -> Optional[OrbitSpectrum]:
        cfg = self.cfg
        if cfg.orbit_path:
            return load_orbit(cfg.orbit_path)
        if cfg.group_path:
            tol = cfg.tolerances
            group = load_group(cfg.group_path, det_tol=tol.det_load_tol)
            return enumerate_orbit(group, cfg.radius, cluster_tol=tol.cluster_tol, max_words=cfg.max_words,
                                   fix_tol=tol.fix_tol, quantum=tol.dedup_quantum)
        return None

    def _context(self, orbit: Optional[OrbitSpectrum]) -> CouplingContext:
        cfg = self.cfg
        m = cfg.m or (orbit.stabilizer_order if orbit is not None else 1)
        if cfg.beta is not None:
            return CouplingContext.from_beta(cfg.beta, m=m, convention=cfg.beta_convention)
        return make_context(cfg.alpha, m, orbit, cfg.beta_convention, cfg.eps_growth, tolerances=cfg.tolerances)

    def _lambda_max(self, spec: Spectrum) -> float:
        if self.cfg.lambda_max is not None:
            return self.cfg.lambda_max
        if spec.complete:
            return 4.0 * max(float(spec.lambdas[-1]), 1.0) + 10.0
        return spec.truncation / self.cfg.safety_factor

    def _coupling_fields(self, ctx: CouplingContext) -> Dict[str, Any]:
        return {"alpha": ctx.alpha, "beta": ctx.beta, "c0": ctx.c0, "m": ctx.m, "c0_tail": ctx.c0_tail,
                "beta_convention": ctx.convention.value}

    def _test_function(self):
        return make_cauchy_h(self.cfg.a, self.cfg.power)

    # ------------------------------------------------------------ orbits

    def run_orbits(self) -> bool:
        try:
            orbit = self._orbit()
        except IncompleteEnumerationError as e:
            save_orbit(e.partial, self.export.path("orbit_partial.csv"))
            raise
        save_orbit(orbit, self.export.path("orbit.csv"))
        edges, counts = orbit.histogram(self.cfg.histogram_bin)
        self.export.write_table(pd.DataFrame({"lo": edges[:-1], "hi": edges[1:], "count": counts}),
                                "orbit_histogram.csv")
        self.export.write_report({
            "mode": self.cfg.mode.value, "label": orbit.label, "radius": orbit.radius,
            "stabilizer_order": orbit.stabilizer_order, "tau0": orbit.tau0,
            "distinct_lengths": int(orbit.lengths.size), "orbit_points": orbit.element_count,
            "converged": True,
        })
        return True

    # ------------------------------------------------------------ eigens

    def _solve(self, spec: Spectrum, ctx: CouplingContext) -> PerturbedSpectrum:
        return solve_new_eigs(ctx, spec, self._lambda_max(spec), safety=self.cfg.safety_factor,
                              xtol=self.cfg.tolerances.bisect_xtol)

    def run_eigens(self) -> bool:
        spec = load_spectrum(self.cfg.spectrum_path)
        ctx = self._context(self._orbit())
        perturbed = self._solve(spec, ctx)
        save_perturbed(perturbed, self.export.path("perturbed.csv"))
        heights = safe_heights(spec, perturbed, self.cfg.safe_heights) if len(spec) > 2 else None
        if heights is not None:
            self.export.write_table(pd.DataFrame({
                "T": heights.T_values,
                "rho_k": [p[0] for p in heights.provenance],
                "chi": [p[1] for p in heights.provenance],
                "rho_next": [p[2] for p in heights.provenance],
            }), "safe_heights.csv")
        self.export.write_report({
            "mode": self.cfg.mode.value, **self._coupling_fields(ctx),
            "lambda_max": perturbed.lambda_max, "new_eigenvalues": [e.mu for e in perturbed.new_eigs],
            "ground": perturbed.ground, "inherited": [list(p) for p in perturbed.inherited],
            "skipped_brackets": [list(p) for p in perturbed.skipped],
            "safe_heights": list(heights.T_values) if heights is not None else [],
            "converged": not perturbed.skipped,
        })
        return not perturbed.skipped

    # ------------------------------------------------------------ trace-truncated

    def _boundary_samples(self, ctx: CouplingContext, spec: Spectrum, T: float, sigma: float) -> pd.DataFrame:
        """∂B(T) 底边与右边上的 S′/S 采样"""
        bottom = np.linspace(-T, T, 401) - 1j * sigma
        right = T + 1j * np.linspace(-sigma, sigma, 101)
        frames = []
        for edge, rho in (("bottom", bottom), ("right", right)):
            values, _ = s_spectral_many(ctx, spec, rho, pole_tol=self.cfg.tolerances.pole_tol)
            ratio = s_prime_spectral_many(ctx, spec, rho, pole_tol=self.cfg.tolerances.pole_tol) / values
            frames.append(pd.DataFrame({"edge": edge, "re_rho": rho.real, "im_rho": rho.imag,
                                        "re": ratio.real, "im": ratio.imag}))
        return pd.concat(frames, ignore_index=True)

    def run_trace_truncated(self) -> bool:
        cfg = self.cfg
        spec = load_spectrum(cfg.spectrum_path)
        ctx = self._context(self._orbit())
        perturbed = self._solve(spec, ctx)
        h = self._test_function()
        sigma = cfg.sigma if cfg.sigma is not None else min(1.0, 0.5 * (0.5 + h.sigma))
        if sigma >= h.sigma:
            raise DomainError("测试函数带宽必须大于 σ", "run_handler", {"sigma": sigma, "h_sigma": h.sigma})
        if cfg.T is not None:
            heights = [cfg.T]
        else:
            heights = list(safe_heights(spec, perturbed, cfg.safe_heights).T_values)
        heights = [T for T in heights if 0.25 + T * T < perturbed.lambda_max]
        if not heights:
            raise DomainError("没有满足 1/4 + T² < lambda_max 的高度", "run_handler",
                              {"lambda_max": perturbed.lambda_max})
        rows = []
        for T in heights:
            check = truncated_check(h, ctx, spec, perturbed, T, sigma, tolerances=cfg.tolerances)
            rows.append({"T": T, "lhs": check.lhs, "rhs_re": check.rhs.real, "rhs_im": check.rhs.imag,
                         "gap": check.gap, "zeros_inside": check.zeros_inside, "poles_inside": check.poles_inside})
        self.export.write_table(pd.DataFrame(rows), "truncated_check.csv")
        self.export.write_table(self._boundary_samples(ctx, spec, heights[0], sigma), "boundary_log_derivative.csv")
        worst = max(r["gap"] for r in rows)
        converged = worst <= TRUNCATED_GAP_TOL
        self.export.write_report({
            "mode": cfg.mode.value, **self._coupling_fields(ctx), "sigma": sigma, "test_function": h.tag,
            "checks": rows, "gap": worst, "converged": converged,
        })
        return converged

    # ------------------------------------------------------------ trace-geometric

    def run_trace_geometric(self) -> bool:
        cfg = self.cfg
        orbit = self._orbit()
        ctx = self._context(orbit)
        h = self._test_function()
        spec = load_spectrum(cfg.spectrum_path) if cfg.spectrum_path else None
        perturbed = self._solve(spec, ctx) if spec is not None else None

        sigma = cfg.sigma if cfg.sigma is not None else select_sigma(
            ctx, orbit, perturbed, cap=cfg.sigma_cap, target=cfg.sigma_target_ratio, eps_growth=cfg.eps_growth)
        if sigma >= h.sigma:
            raise DomainError("测试函数带宽必须大于 σ, 请增大 a", "run_handler", {"sigma": sigma, "h_sigma": h.sigma})
        nu = cfg.nu if cfg.nu is not None else select_nu(ctx, sigma)
        ratio = series_ratio_bound(ctx, orbit, sigma, eps_growth=cfg.eps_growth)

        tol = cfg.tolerances
        line = geometric_line(h, ctx, orbit, sigma, tolerances=tol)
        pointwise = (contour_series_ratio(ctx, orbit, sigma, line.rhos, tolerances=tol) if ctx.beta != 0.0
                     else np.zeros(line.rhos.size))
        if np.any(pointwise >= 1.0):
            logger.warning(f"路径上 |βG/(1 + mβψ)| 的最大值 {float(np.max(pointwise)):.4g} ≥ 1")

        pre = pretrace_rhs(h, ctx, orbit, sigma, line=line, half_line=cfg.half_line, tolerances=tol)
        ident = identity_term(h, ctx, nu, tolerances=tol)
        diff = diffractive_sum(h, ctx, orbit, cfg.k_max, nu, sigma, n_axis=cfg.n_axis,
                               spline_points=cfg.spline_points, ratio=ratio, tolerances=tol)
        line_terms = diffractive_line_terms(h, ctx, orbit, cfg.k_max, sigma, line=line, tolerances=tol)

        geometric = ident.value + math.fsum(diff.values)
        gap = abs(pre.value - geometric)
        tail_total = pre.tail + ident.tail + diff.total_tail
        converged = gap <= tail_total + GEOMETRIC_QUADRATURE_TOL

        report = TraceReport(mode=cfg.mode.value, alpha=ctx.alpha, beta=ctx.beta, c0=ctx.c0, nu=nu, sigma=sigma,
                             k_max=cfg.k_max, identity_term=ident.value, pretrace=pre.value,
                             diffractive_terms=diff.values, gap=gap, converged=converged)
        report.tails = {"pretrace": pre.tail, "identity": ident.tail, "diffractive": [t.tail for t in diff.terms],
                        "remainder": diff.remainder, "spline_error": diff.spline_error, "series_ratio": ratio,
                        "max_pointwise_ratio": float(np.max(pointwise)) if pointwise.size else 0.0}
        report.notes.append(f"test_function={h.tag}")
        report.notes.append("diffractive_line_terms=" + ",".join(repr(t.value) for t in line_terms))

        if spec is not None:
            side = spectral_side(h, spec, perturbed)
            report.spectral_side = side.value
            report.research_mode = True
            report.tails["spectral"] = side.tail
            report.tails["research_gap"] = abs(side.value - geometric)
            report.notes.append(RESEARCH_DISCLAIMER)
            logger.warning(RESEARCH_DISCLAIMER)

        magnitudes = pd.DataFrame({"k": np.arange(1, cfg.k_max + 1), "nested": diff.values,
                                   "line": [t.value for t in line_terms], "tail": [t.tail for t in diff.terms],
                                   "tuples": diff.tuple_counts})
        self.export.write_table(magnitudes, "diffractive_terms.csv")
        self.export.write_complex_series("s_sigma_line.csv", line.rhos.real, line.denom + ctx.beta * line.greens,
                                         {"ratio": pointwise})
        self.export.write_report(report.to_dict())
        logger.info(f"pretrace = {pre.value:.16g}, 恒等项 + 衍射项 = {geometric:.16g}, gap = {gap:.3e}, "
                    f"尾项合计 {tail_total:.3e}")
        return converged

    # ------------------------------------------------------------ diagnostics

    def run_diagnostics(self) -> bool:
        cfg = self.cfg
        orbit = self._orbit()
        report: Dict[str, Any] = {"mode": cfg.mode.value}
        ok = True
        if orbit is not None and not orbit.is_empty:
            C, sigmas, majorants = fit_sigma_envelope(orbit)
            self.export.write_table(pd.DataFrame({"sigma": sigmas, "majorant": majorants,
                                                  "scaled": majorants * np.sqrt(sigmas)}), "sigma_envelope.csv")
            report["sigma_envelope_C"] = C
        if cfg.spectrum_path:
            spec = load_spectrum(cfg.spectrum_path)
            ctx = self._context(orbit)
            perturbed = self._solve(spec, ctx)
            heights = safe_heights(spec, perturbed, cfg.safe_heights)
            sigma = cfg.sigma if cfg.sigma is not None else 1.0
            poly = polybound_diagnostic(spec, heights, sigma, n_w=cfg.n_w)
            comp = compbound_diagnostic(ctx, spec, heights.T_values, sigma, n_segment=cfg.n_segment)
            self.export.write_table(pd.DataFrame(poly, columns=["T", "ratio"]), "polybound.csv")
            self.export.write_table(pd.DataFrame([r._asdict() for r in comp],
                                                 columns=["T", "integral", "ratio", "skipped"]), "compbound.csv")
            report.update(self._coupling_fields(ctx))
            report["polybound_max_ratio"] = max((r for _, r in poly), default=0.0)
            finite = [r.ratio for r in comp if not r.skipped]
            report["compbound_max_ratio"] = max(finite, default=0.0)
            report["compbound_skipped"] = sum(r.skipped for r in comp)
            ok = heights.complete
        report["converged"] = ok
        self.export.write_report(report)
        return ok

    # ------------------------------------------------------------ testfn

    def run_testfn(self) -> bool:
        cfg = self.cfg
        h = self._test_function()
        # 带域边缘紧贴极点 ±ia, 抽样检验取认证带宽的 90%
        member = membership_check(h, 0.9 * h.sigma, h.delta, seed=cfg.seed)
        sigma = cfg.sigma if cfg.sigma is not None else 1.0
        heights, exponents = dyadic_heights(3, 48, cfg.eps)
        params = appendix_params_from_heights(heights, cfg.eps, sigma)
        estimates = appendix_local_estimates(params)
        h_eps = appendix_h_eps(params)
        onset = appendix_onset_height(cfg.eps, sigma, params.sigma0)
        self.export.write_table(pd.DataFrame([e._asdict() for e in estimates]), "appendix_estimates.csv")
        positive = all(e.lower_constant > 0.0 for e in estimates)
        report = {
            "mode": cfg.mode.value, "test_function": h.tag, "membership": member.checks,
            "membership_details": member.details, "appendix": {
                "eps": cfg.eps, "sigma": sigma, "sigma0": params.sigma0, "heights": list(params.heights),
                "exponents": list(params.exponents), "onset_height": onset, "tag": h_eps.tag,
                "truncation_tail": h_eps.params["tail"], "positive_on_segments": positive,
            },
            "converged": member.passed and positive,
        }
        self.export.write_report(report)
        return member.passed and positive


def run(cfg: RunConfig) -> int:
    return RunHandler(cfg).run()
