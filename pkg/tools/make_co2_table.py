#!/usr/bin/env python3
"""Regenerate src/cctskit/data/co2_properties.csv.

Density: Redlich-Kwong EOS with the CO2-specific parameters of Spycher,
Pruess & Ennis-King (2003), a(T) = a0 + a1*T, fitted to CO2 PVT data over
the geologic-storage window. Viscosity: dilute-gas term plus excess-density
polynomial of Fenghour, Wakeham & Vesovic (1998), evaluated at the RK
density. Agreement with reference data is within a few percent over the
table range; worst near the critical point (31 C, 7.4 MPa).

Run from the repo root:  python tools/make_co2_table.py
"""

import math
import pathlib

R = 83.1446  # cm3 bar / (K mol)
M_CO2 = 44.0098  # g/mol

# Spycher et al. (2003) RK parameters for pure CO2
A0 = 7.54e7  # bar cm6 K^0.5 / mol2
A1 = -4.13e4  # bar cm6 K^-0.5 / mol2
B = 27.80  # cm3/mol

PRESSURES_MPA = [5.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
TEMPERATURES_C = [20.0, 30.0, 40.0, 50.0, 60.0, 80.0, 100.0, 120.0, 150.0]


def rk_volume(t_k: float, p_bar: float) -> float:
    """Molar volume (cm3/mol) from the RK cubic; lowest-fugacity real root."""
    a = A0 + A1 * t_k
    # P = RT/(v-b) - a/(sqrt(T) v (v+b))  ->  cubic in v
    rt = R * t_k
    sq = math.sqrt(t_k)
    c2 = -rt / p_bar
    c1 = -(rt * B / p_bar - a / (p_bar * sq) + B * B)
    c0 = -a * B / (p_bar * sq)
    roots = _cubic_roots(1.0, c2, c1, c0)
    real = sorted(v for v in roots if v > B)
    if len(real) == 1:
        return real[0]
    # two-phase region: pick the root with lower fugacity
    return min((real[0], real[-1]), key=lambda v: _ln_fugacity(t_k, p_bar, v, a))


def _ln_fugacity(t_k: float, p_bar: float, v: float, a: float) -> float:
    rt = R * t_k
    z = p_bar * v / rt
    lnphi = (
        z
        - 1.0
        - math.log(z * (1.0 - B / v))
        - a / (B * rt * math.sqrt(t_k)) * math.log(1.0 + B / v)
    )
    return lnphi


def _cubic_roots(a3, a2, a1, a0):
    """Real roots of a3 x^3 + a2 x^2 + a1 x + a0 (Cardano)."""
    p = (3 * a3 * a1 - a2 * a2) / (3 * a3 * a3)
    q = (2 * a2**3 - 9 * a3 * a2 * a1 + 27 * a3 * a3 * a0) / (27 * a3**3)
    shift = -a2 / (3 * a3)
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc > 0:
        u = _cbrt(-q / 2 + math.sqrt(disc))
        w = _cbrt(-q / 2 - math.sqrt(disc))
        return [u + w + shift]
    if abs(disc) < 1e-30:
        return [2 * _cbrt(-q / 2) + shift, -_cbrt(-q / 2) + shift]
    r = math.sqrt(-(p**3) / 27)
    phi = math.acos(max(-1.0, min(1.0, -q / (2 * r))))
    m = 2 * math.sqrt(-p / 3)
    return [m * math.cos((phi + 2 * math.pi * k) / 3) + shift for k in range(3)]


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


# Fenghour et al. (1998) viscosity correlation
_FENG_A = [0.235156, -0.491266, 5.211155e-2, 5.347906e-2, -1.537102e-2]
_FENG_D = {
    (1, 1): 0.4071119e-2,
    (2, 1): 0.7198037e-4,
    (6, 4): 0.2411697e-16,
    (8, 1): 0.2971072e-22,
    (8, 2): -0.1627888e-22,
}
_EPS_K = 251.196  # energy scaling temperature, K


def viscosity_pa_s(t_k: float, rho_kg_m3: float) -> float:
    t_star = t_k / _EPS_K
    ln_t = math.log(t_star)
    g_star = math.exp(sum(c * ln_t**i for i, c in enumerate(_FENG_A)))
    eta0 = 1.00697 * math.sqrt(t_k) / g_star  # uPa s
    rho = rho_kg_m3
    excess = (
        _FENG_D[(1, 1)] * rho
        + _FENG_D[(2, 1)] * rho**2
        + _FENG_D[(6, 4)] * rho**6 / t_star**3
        + _FENG_D[(8, 1)] * rho**8
        + _FENG_D[(8, 2)] * rho**8 / t_star
    )
    return (eta0 + excess) * 1e-6


def main() -> None:
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "cctskit" / "data" / "co2_properties.csv"
    lines = [
        "# CO2 density (kg/m3) and viscosity (Pa.s) lookup table, v1",
        "# Generated by tools/make_co2_table.py; see that script for methods.",
        "pressure_mpa,temperature_c,density_kg_m3,viscosity_pa_s",
    ]
    for p in PRESSURES_MPA:
        for t in TEMPERATURES_C:
            t_k = t + 273.15
            v = rk_volume(t_k, p * 10.0)
            rho = M_CO2 / v * 1000.0  # g/cm3 -> kg/m3
            mu = viscosity_pa_s(t_k, rho)
            lines.append(f"{p:.1f},{t:.1f},{rho:.2f},{mu:.4e}")
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({len(PRESSURES_MPA) * len(TEMPERATURES_C)} rows)")


if __name__ == "__main__":
    main()
