"""
MCMC Service
------------
Block Metropolis sampler for the main radial density on the chart
(arg t, C, U), with target exp(chart_log_density): the main density times
the chart factor m! prod_k 2 c_k^1.

Each sweep proposes, in turn:

  angles  wrapped Gaussian steps, then re-sort (columns of C follow)
  C       Gaussian steps on every real coordinate; c^1 <= 0 is rejected
  U       U <- expm(s K) U with K a random anti-Hermitian matrix

All three proposals are symmetric, so acceptance uses the density ratio
only. Step scales adapt toward TARGET_ACCEPTANCE while the sampler is in
its initial phase (burn-in) and are frozen afterwards.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.linalg as sla

from haar_radial.errors import ChainStuck, DegenerateSampleError, DomainError
from haar_radial.services.density import DensityMutation, DensityReading, chart_log_density
from haar_radial.services.matrix_core import BlockUnitary, random_anti_hermitian
from haar_radial.services.spectral import TWO_PI, SpectralData, extract_direct

logger = logging.getLogger(__name__)

BLOCKS = ("angles", "C", "U")
TARGET_ACCEPTANCE = 0.3
ADAPT_EVERY = 50
STUCK_ACCEPTANCE = 0.01
MAX_START_ATTEMPTS = 100
MCMC_STREAM_TAG = 1  # keeps chain streams apart from Monte Carlo chunk streams


@dataclass
class McmcChain:
    state: SpectralData
    step_scales: dict[str, float]
    acceptance_rate: float = 0.0
    chain_length: int = 0
    accepted: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BLOCKS, 0))
    proposed: dict[str, int] = field(default_factory=lambda: dict.fromkeys(BLOCKS, 0))

    def block_rates(self) -> dict[str, float]:
        return {b: self.accepted[b] / self.proposed[b] if self.proposed[b] else 0.0 for b in BLOCKS}


def log_target(
    sd: SpectralData, reading: DensityReading | None = None, mutation: DensityMutation = "none"
) -> float:
    if np.any(sd.C[0, :].real <= 0):
        return -np.inf
    try:
        return chart_log_density(sd, reading=reading, mutation=mutation)
    except DomainError:
        return -np.inf


def haar_start(n: int, m: int, rng: np.random.Generator) -> SpectralData:
    """A starting point drawn from the target itself: the coordinates of a Haar sample."""
    for _ in range(MAX_START_ATTEMPTS):
        try:
            return extract_direct(BlockUnitary.haar(n, m, rng), strict_u=True)
        except DegenerateSampleError as e:
            logger.debug(f"start rejected: {e}")
    raise RuntimeError(f"no general-position Haar sample in {MAX_START_ATTEMPTS} attempts")


class RadialMetropolis:
    """
    Single-chain block sampler. ``step`` performs one sweep over the three
    blocks and returns the current state.
    """

    def __init__(
        self,
        x0: SpectralData,
        rng: np.random.Generator,
        step_scales: dict[str, float] | None = None,
        reading: DensityReading | None = None,
        mutation: DensityMutation = "none",
    ):
        self._rng = rng
        self._reading = reading
        self._mutation = mutation
        self._log_pdf = log_target(x0, reading, mutation)
        if not np.isfinite(self._log_pdf):
            raise DomainError("starting point has zero density")
        scales = {"angles": 0.3, "C": 0.3, "U": 0.3}
        scales.update(step_scales or {})
        self.chain = McmcChain(state=x0, step_scales=scales)
        self._initial_phase = True
        self._window = dict.fromkeys(BLOCKS, 0)
        self._window_steps = 0

    def in_initial_phase(self) -> bool:
        return self._initial_phase

    def set_initial_phase(self, in_initial_phase: bool) -> None:
        """Leaving the initial phase freezes the scales and resets the acceptance counters."""
        self._initial_phase = bool(in_initial_phase)
        if not self._initial_phase:
            self.chain.accepted = dict.fromkeys(BLOCKS, 0)
            self.chain.proposed = dict.fromkeys(BLOCKS, 0)
            self.chain.chain_length = 0

    @property
    def log_pdf(self) -> float:
        return self._log_pdf

    # --- proposals -------------------------------------------------------
    def _propose_angles(self, sd: SpectralData) -> SpectralData:
        args = np.mod(sd.args + self.chain.step_scales["angles"] * self._rng.standard_normal(sd.m), TWO_PI)
        order = np.argsort(-args, kind="stable")
        return SpectralData(t=np.exp(1j * args[order]), C=sd.C[:, order], U=sd.U)

    def _propose_c(self, sd: SpectralData) -> SpectralData:
        s = self.chain.step_scales["C"]
        step = s * (self._rng.standard_normal(sd.C.shape) + 1j * self._rng.standard_normal(sd.C.shape))
        step[0, :] = s * self._rng.standard_normal(sd.m)
        return SpectralData(t=sd.t, C=sd.C + step, U=sd.U)

    def _propose_u(self, sd: SpectralData) -> SpectralData:
        k = random_anti_hermitian(sd.n, self._rng)
        return SpectralData(t=sd.t, C=sd.C, U=sla.expm(self.chain.step_scales["U"] * k) @ sd.U)

    # --- iteration -------------------------------------------------------
    def _update(self, block: str, proposal: SpectralData) -> None:
        self.chain.proposed[block] += 1
        log_pdf = log_target(proposal, self._reading, self._mutation)
        if np.log(self._rng.uniform()) < log_pdf - self._log_pdf:
            self.chain.state = proposal
            self._log_pdf = log_pdf
            self.chain.accepted[block] += 1
            self._window[block] += 1

    def _adapt(self) -> None:
        for block in BLOCKS:
            rate = self._window[block] / self._window_steps
            self.chain.step_scales[block] *= float(np.exp(rate - TARGET_ACCEPTANCE))
        self._window = dict.fromkeys(BLOCKS, 0)
        self._window_steps = 0

    def step(self) -> SpectralData:
        self._update("angles", self._propose_angles(self.chain.state))
        self._update("C", self._propose_c(self.chain.state))
        self._update("U", self._propose_u(self.chain.state))
        self.chain.chain_length += 1
        self._window_steps += 1
        if self._initial_phase and self._window_steps >= ADAPT_EVERY:
            self._adapt()
        total_proposed = sum(self.chain.proposed.values())
        self.chain.acceptance_rate = sum(self.chain.accepted.values()) / total_proposed
        return self.chain.state


def mcmc_sample(
    n: int,
    m: int,
    chain_length: int,
    burn_in: int,
    seed: int,
    reading: DensityReading | None = None,
    mutation: DensityMutation = "none",
    sampler_out: list | None = None,
    stream: int = 0,
) -> Iterator[SpectralData]:
    """
    Yield ``chain_length`` post-burn-in states of a chain targeting the main
    density. Raises ChainStuck at the end when the frozen-scale acceptance
    rate is below STUCK_ACCEPTANCE. ``sampler_out``, if given, receives the
    sampler so callers can read its diagnostics. Chains with the same seed and
    different ``stream`` are independent.
    """
    if chain_length < 10 * burn_in:
        raise ValueError(f"chain_length {chain_length} must be >= 10 * burn_in ({burn_in})")
    rng = np.random.default_rng(np.random.SeedSequence([seed, stream, MCMC_STREAM_TAG]))
    sampler = RadialMetropolis(haar_start(n, m, rng), rng, reading=reading, mutation=mutation)
    if sampler_out is not None:
        sampler_out.append(sampler)

    for _ in range(burn_in):
        sampler.step()
    sampler.set_initial_phase(False)
    logger.info(f"burn-in done ({burn_in} sweeps), frozen scales {sampler.chain.step_scales}")

    for _ in range(chain_length):
        yield sampler.step()

    rates = sampler.chain.block_rates()
    logger.info(f"chain n={n} m={m} seed={seed}: acceptance {sampler.chain.acceptance_rate:.3f} {rates}")
    if sampler.chain.acceptance_rate < STUCK_ACCEPTANCE:
        raise ChainStuck(sampler.chain.acceptance_rate)
