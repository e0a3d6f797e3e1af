"""Cavity rates from quality factors and the loss-chain efficiency product."""

from __future__ import annotations

from sqzlab.errors import DomainError, InvalidCouplingError
from sqzlab.models import CavityParams, LossChain
from sqzlab.units import hz_to_angular, wavelength_to_angular


def derive_rates(
    q_tot: float,
    q_int: float,
    resonance_wavelength: float,
    assume_undercoupled: bool = True,
    fsr: float = hz_to_angular(5.7e9),
    detuning: float = 0.0,
) -> CavityParams:
    """Derive κ, κ_e, κ_i from a loaded Q and the Q attributed to the uncoupled loss.

    Under the default undercoupled assumption the larger Q is the intrinsic one, so
    κ_i = ω₀/Q_int and κ_e = κ − κ_i. With ``assume_undercoupled=False`` the same pair is read
    as overcoupled and the two partial rates swap roles.

    Args:
        q_tot: Loaded quality factor
        q_int: Second quality factor from the dip depth (intrinsic when undercoupled)
        resonance_wavelength: Vacuum wavelength (m)
        assume_undercoupled: Coupling branch
        fsr: Free spectral range (rad/s)
        detuning: Drive detuning (rad/s)

    Returns:
        CavityParams with κ_e + κ_i = κ exactly

    Raises:
        InvalidCouplingError: If Q_tot > Q_int or a Q is not positive
    """
    if q_tot <= 0 or q_int <= 0:
        raise InvalidCouplingError(f"Quality factors must be positive, got {q_tot}, {q_int}")
    if q_tot > q_int:
        raise InvalidCouplingError(f"Q_tot ({q_tot}) cannot exceed Q_int ({q_int})")

    omega0 = wavelength_to_angular(resonance_wavelength)
    kappa = omega0 / q_tot
    kappa_other = omega0 / q_int
    kappa_rest = max(kappa - kappa_other, 0.0)

    if assume_undercoupled:
        external, intrinsic = kappa_rest, kappa_other
    else:
        external, intrinsic = kappa_other, kappa_rest
    return CavityParams.from_rates(
        resonance_wavelength=resonance_wavelength,
        external_rate=external,
        intrinsic_rate=intrinsic,
        fsr=fsr,
        detuning=detuning,
    )


def total_efficiency(chain: LossChain) -> float:
    """η_tot = ρ·T·ε·∏extra.

    Raises:
        DomainError: If any factor lies outside [0, 1]
    """
    product = 1.0
    for name, factor in chain.factors().items():
        if not 0.0 <= factor <= 1.0:
            raise DomainError(f"Efficiency factor '{name}' must lie in [0, 1], got {factor}")
        product *= factor
    return product
