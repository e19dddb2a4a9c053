import numpy as np
import pytest

import poptomo as pt

TWO_PI = 2.0 * np.pi

# Reference drive: Omega = 2*pi*60 kHz, detunings 3 and 11 kHz (ordinary
# frequencies, converted to angular on ingestion).
RABI = TWO_PI * 60e3
DELTA1 = TWO_PI * 3e3
DELTA2 = TWO_PI * 11e3
SAMPLE_INTERVAL = 1.16e-6


@pytest.fixture(scope="session")
def ladder():
    return pt.Ladder5(RABI, DELTA1, DELTA2)


@pytest.fixture(scope="session")
def ladder_model(ladder):
    return pt.EvolutionModel(hamiltonian=ladder, gamma=375.0)


@pytest.fixture(scope="session")
def drive_only_model(ladder):
    return pt.EvolutionModel(hamiltonian=ladder, gamma=0.0)


@pytest.fixture(scope="session")
def pi_half_state(drive_only_model, ladder):
    rho0 = pt.DensityMatrix.basis_state(5, 0)
    return pt.prepare_pulse_state(
        rho0, drive_only_model, pt.pi_half_duration(ladder.rabi_omega)
    )


def quick_subplex(max_evals=30_000, restarts=3, seed=0):
    return pt.SubplexConfig(
        simplex=pt.SimplexConfig(max_evals=max_evals),
        restarts=restarts,
        rng_seed=seed,
    )
