"""Mollified drifts b^(n) give laws that settle down as n grows.

Compares the X_t marginals at levels (8, 32) and (16, 64) with KS and energy
distances, with a reduced path count.  The acceptance suite runs
``stablesde uniqueness --scenario scenarios/uniqueness.json`` at 2e4 paths.

Run:  python3 demos/uniqueness_trend.py
"""

from stablesde import Lattice, four_atom_law
from stablesde.drift import radial_singular_drift
from stablesde.simulate import SimConfig, same_law_control, uniqueness_probe


def main():
    law = four_atom_law(0.05**1.5)
    lat = Lattice(2, 2.0, 512)
    drift = radial_singular_drift(lat, 0.5, 0.3, 0.5, 0.025, 6, 12, inward=True)
    print("admissibility margin:", drift.admissibility(law.alpha).margin)
    cfg = SimConfig(h=1e-3, T_sim=0.5, paths=5000, seed=11)
    rep = uniqueness_probe(cfg, law, drift, (8, 32), 0.5)
    for key, lv in (("first", "(8,32)"), ("second", "(16,64)")):
        r = rep[key]
        print(f"levels {lv}: KS {r['ks_max']:.3f} (5% critical {r['ks_critical_5pct']:.3f}), energy {r['energy']:.2e}")
    ctrl = same_law_control(cfg, law, drift, 16, 0.5)
    print(f"same-law control: KS {ctrl['ks_max']:.4f}, passed {ctrl['passed']}")


if __name__ == "__main__":
    main()
