"""
SAP на явном множестве секущих
"""
import time
from typing import Union

import numpy as np
from loguru import logger

from hsap.core.exceptions import EmptyCandidateSetError
from hsap.schemas.matrices import DataMatrix
from hsap.schemas.projection import HsapResult, InitStrategy, RunReport
from hsap.schemas.secants import SecantSet
from hsap.services.hsap_engine import (
    bilipschitz_lower_bound,
    evaluate_candidates,
    init_projection,
    iterate_projection,
    update_projection,
)
from hsap.services.linalg import subspace_distance
from hsap.services.secant import full_secants
from hsap.utils.const import DEFAULT_ALPHA, DEFAULT_SECANT_CAP, DEGENERACY_TOL


def sap_step(projection: np.ndarray, secants: SecantSet, alpha: float = DEFAULT_ALPHA, degeneracy_tol: float = DEGENERACY_TOL) -> np.ndarray:
    """
    Один шаг SAP: худшая секущая (первая при ничьей) и тот же update_projection, что в HSAP

    Raises:
        EmptyCandidateSetError: Пустое множество секущих
    """
    if secants.count == 0:
        raise EmptyCandidateSetError("SAP needs at least one secant", code="empty_secant_set")
    candidate = evaluate_candidates(projection, [], secants)
    return update_projection(projection, candidate, alpha, degeneracy_tol)


def sap_run(
    data: DataMatrix,
    k: int,
    alpha: float = DEFAULT_ALPHA,
    iters: int = 80,
    init: Union[InitStrategy, str] = InitStrategy.PCA,
    seed: int = 0,
    cap: int = DEFAULT_SECANT_CAP,
    init_center: bool = False,
    stop_tol: float = 0.0,
    stop_window: int = 1,
) -> HsapResult:
    """
    SAP на полном множестве секущих

    Args:
        data: Набор D
        k: Размерность проекции
        alpha: Шаг сдвига
        iters: Число итераций
        init: pca или random
        seed: Seed инициализации
        cap: Предел материализации секущих
        init_center: Центрировать данные перед PCA
        stop_tol: Порог критерия окна (0 = выкл.)
        stop_window: Окно критерия

    Returns:
        HsapResult: Та же форма, что у run_hsap (без меток и моделей)

    Raises:
        SecantCapExceededError: Полное множество слишком велико, нужен HSAP
    """
    started = time.perf_counter()
    secants = full_secants(data, cap=cap)
    if secants.count == 0:
        raise EmptyCandidateSetError("All points coincide, SAP has no secants", code="empty_secant_set")
    initial = init_projection(data, k, init, seed, center=init_center)

    def evaluate(projection: np.ndarray, iteration: int):
        return evaluate_candidates(projection, [], secants)

    state, stopped_early = iterate_projection(initial, evaluate, alpha, iters, stop_tol, stop_window)
    bound = bilipschitz_lower_bound(state.projection, secants)
    report = RunReport(
        final_objective=bound,
        bilipschitz_a=bound,
        iterations_run=state.iteration,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        subspace_drift=subspace_distance(initial, state.projection),
        stopped_early=stopped_early,
        n_clusters=0,
        n_secants=secants.count,
    )
    logger.info(f"SAP finished: {report.iterations_run} iterations over {secants.count} secants, objective {bound:.6g}")
    return HsapResult(
        projection=state.projection,
        initial_projection=initial,
        trace=state.trace,
        report=report,
        secants=secants,
    )
