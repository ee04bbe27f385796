"""Regenerate the synthetic dispersion tables shipped with the scenario templates.

The tables are second-order Taylor expansions of beta around each band
centre. Group indices are chosen to reproduce the group-velocity matching
conditions of each configuration:

* smpsg: pump and signal group-velocity matched, idler faster (asymmetric GVM)
* bsvg:  all three nearly matched, pump slightly slower (broadband)
* qfc:   pump and output (idler) matched, input signal slower
"""

from pathlib import Path

import numpy as np
from scipy.constants import c

from twmsim.dispersion import taylor_dispersion, write_dispersion_csv

OUT = Path(__file__).resolve().parents[1] / "src" / "twmsim" / "templates"


def omega(wl):
    return 2 * np.pi * c / wl


# (pump wl, signal wl, kind, half-width fraction, {field: (n_phase, n_group, gvd s^2/m)})
DESIGNS = {
    "smpsg": (775e-9, 1500e-9, "pdc", 0.08,
              {"pump": (2.15, 2.30, 2e-25), "signal": (2.10, 2.30, 1e-25), "idler": (2.09, 2.20, 1e-25)}),
    "bsvg": (775e-9, 1500e-9, "pdc", 0.12,
             {"pump": (2.18, 2.35, 3e-25), "signal": (2.12, 2.28, 1e-25), "idler": (2.11, 2.27, 1e-25)}),
    "qfc": (1300e-9, 1550e-9, "qfc", 0.08,
            {"pump": (2.14, 2.25, 1e-25), "signal": (2.13, 2.35, 1e-25), "idler": (2.20, 2.25, 2e-25)}),
}


def main():
    for name, (wl_p, wl_s, kind, frac, fields) in DESIGNS.items():
        wp, ws = omega(wl_p), omega(wl_s)
        wi = wp - ws if kind == "pdc" else wp + ws
        centres = {"pump": wp, "signal": ws, "idler": wi}
        for field, (n, ng, gvd) in fields.items():
            w0 = centres[field]
            model = taylor_dispersion(w0, n, ng, gvd, frac * w0)
            write_dispersion_csv(OUT / f"{name}_{field}.csv", model)
            print(f"{name}_{field}.csv  v_g = {model.central_group_velocity:.6e} m/s")


if __name__ == "__main__":
    main()
