"""When does pump self-phase modulation start to matter?

The overlap between the pump spectrum with and without SPM, accumulated over
the device, is a cheap figure of merit: near 1 the SPM can be ignored, below
about 0.9 it reshapes the pump and with it the joint spectrum.

    python demos/04_spm_onset.py
"""

from importlib import resources

import numpy as np

from twmsim.config import load_config
from twmsim.harness import run_spm_scan


def main():
    cfg = load_config(resources.files("twmsim") / "templates" / "smpsg.toml", overrides={"grid.points": 16})
    rows = run_spm_scan(cfg, np.logspace(4, 9, 11), simulate_states=False)
    print("pump photons   overlap   regime")
    for row in rows:
        print(f"{row['pump_photons']:>12.2e}   {row['overlap_fom']:.4f}    {row['regime']}")


if __name__ == "__main__":
    main()
