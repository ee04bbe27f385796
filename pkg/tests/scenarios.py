"""Small synthetic devices shared by the test modules.

Dispersion is a second-order Taylor expansion per field, with group indices
close to the shipped templates so that coupling constants of the same size
give comparable gain.
"""

from importlib import resources

import numpy as np
from scipy.constants import c

from twmsim.config import load_config
from twmsim.dispersion import FrequencyGrid, baseline_phase_mismatch, centered_grid, qpm_period, taylor_dispersion
from twmsim.nonlinearity import (
    InteractionCoefficients,
    apodized_poling,
    generate_inhomogeneity,
    periodic_poling,
    uniform_pattern,
)
from twmsim.process import ProcessKind
from twmsim.pump import PumpPulse, gaussian_spectral_amplitude
from twmsim.scenario import LossModel, Scenario, build_scenario

PDC_DESIGN = (775e-9, 1500e-9, {"pump": (2.15, 2.30, 2e-25), "signal": (2.10, 2.30, 1e-25),
                                "idler": (2.09, 2.20, 1e-25)})
QFC_DESIGN = (1300e-9, 1550e-9, {"pump": (2.14, 2.25, 1e-25), "signal": (2.13, 2.35, 1e-25),
                                 "idler": (2.20, 2.25, 2e-25)})


def omega(wl):
    return 2 * np.pi * c / wl


def models(kind="pdc"):
    kind = ProcessKind.coerce(kind)
    wl_p, wl_s, design = PDC_DESIGN if kind is ProcessKind.PDC else QFC_DESIGN
    wp, ws = omega(wl_p), omega(wl_s)
    wi = wp - ws if kind is ProcessKind.PDC else wp + ws
    centres = {"pump": wp, "signal": ws, "idler": wi}
    return {f: taylor_dispersion(centres[f], *design[f], half_width=0.08 * centres[f]) for f in design}


def synthetic(kind="pdc", n=16, length=2e-3, spacing=1.3e12, photons=1.5e6, twm=None, tau=250e-15,
              poling="periodic", xpm=0.0, spm=0.0, inhomogeneity=0.0, seed=0, loss=None, pump_alpha=0.0):
    """Scenario on ``n`` points; ``poling`` is uniform, periodic, apodized or a pattern."""
    kind = ProcessKind.coerce(kind)
    ms = models(kind)
    wp, ws, wi = (ms[f].omega_central for f in ("pump", "signal", "idler"))
    if twm is None:
        twm = 333.0 if kind is ProcessKind.PDC else 4e4
    sg = centered_grid(ws, spacing, n, "signal")
    ig = centered_grid(wi, spacing, n, "idler")
    pulse = PumpPulse(wp, ms["pump"].central_group_velocity, photons, tau)
    dbeta = baseline_phase_mismatch(ms["pump"], ms["signal"], ms["idler"], wp, ws, wi, kind)
    period = qpm_period(dbeta)
    if poling == "uniform":
        pattern = uniform_pattern(length)
    elif poling == "periodic":
        pattern = periodic_poling(period, length)
    elif poling == "apodized":
        sigma = 0.2 * length
        pattern = apodized_poling(lambda z: np.exp(-((z - length / 2) ** 2) / (2 * sigma**2)), period, length)
    else:
        pattern = poling
    inhom = None
    if inhomogeneity:
        inhom = generate_inhomogeneity(inhomogeneity, length / 10, np.linspace(0, length, 101), seed)
    coeffs = InteractionCoefficients(twm, xpm, xpm, spm)
    return build_scenario(kind, sg, ig, ms, pulse, coeffs, pattern, inhomogeneity=inhom,
                          loss=loss or LossModel(), pump_alpha=pump_alpha)


def single_mode(kind, coupling, length=1e-3, spacing=1e12):
    """Two-mode device on one frequency per band, no walk-off and no mismatch.

    ``coupling`` is the modulus of the generator's off-diagonal entry, so the
    mixing angle (QFC) or squeezing parameter (PDC) equals ``coupling * length``.
    """
    kind = ProcessKind.coerce(kind)
    ms = models(kind)
    wp, ws, wi = (ms[f].omega_central for f in ("pump", "signal", "idler"))
    pulse = PumpPulse(wp, ms["pump"].central_group_velocity, 1.0, 250e-15)
    amp = float(gaussian_spectral_amplitude(pulse, wp))
    twm = coupling * np.sqrt(2 * np.pi) / (amp * spacing)
    sg = FrequencyGrid(ws - spacing, spacing, 1, "signal")
    ig = FrequencyGrid(wi - spacing, spacing, 1, "idler")
    return Scenario(kind, sg, ig, np.zeros(1), np.zeros(1), pulse, InteractionCoefficients(twm),
                    uniform_pattern(length))


def template(name, **overrides):
    path = resources.files("twmsim") / "templates" / f"{name}.toml"
    return load_config(path, overrides=overrides or None)
