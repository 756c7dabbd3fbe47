"""Physical constants and unit helpers.

All constants are CODATA values truncated to 6 significant figures.
Unit conventions used throughout the package: magnetic fields in gauss,
lengths in cm (positions in mm at the file level), wavelengths in
angstrom, angles in rad.
"""

import math

H_PLANCK = 6.62607e-34      # J s
HBAR = 1.05457e-34          # J s
M_NEUTRON = 1.67493e-27     # kg
MU_NEUTRON = -9.66236e-27   # J/T, signed: the neutron moment is negative

ANGSTROM = 1e-10            # m
GAUSS = 1e-4               # T
CM = 1e-2                  # m

# Depth of a spin-turner coil along the beam, used only by the
# turners-in-field imperfection model (sets the transverse field that
# yields a quarter turn on its own).
TURNER_COIL_LENGTH_CM = 2.0


def neutron_velocity(wavelength_angstrom: float) -> float:
    """de Broglie velocity in m/s for a given wavelength in angstrom."""
    if wavelength_angstrom <= 0:
        raise ValueError("wavelength must be positive")
    return H_PLANCK / (M_NEUTRON * wavelength_angstrom * ANGSTROM)


def larmor_angular_frequency(field_gauss: float) -> float:
    """Precession angular frequency 2|mu|B/hbar in rad/s for B in gauss."""
    return 2.0 * abs(MU_NEUTRON) * field_gauss * GAUSS / HBAR


def precession_angle_per_cm(field_gauss: float, wavelength_angstrom: float) -> float:
    """Accumulated precession angle in rad per cm of flight path."""
    v = neutron_velocity(wavelength_angstrom)
    return larmor_angular_frequency(field_gauss) * CM / v


def guide_distance_cm(n_wind: int, field_gauss: float, wavelength_angstrom: float) -> float:
    """Turner separation giving a total precession of 2*n_wind*pi."""
    return 2.0 * n_wind * math.pi / precession_angle_per_cm(field_gauss, wavelength_angstrom)
