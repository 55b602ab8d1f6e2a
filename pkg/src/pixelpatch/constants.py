"""Physical constants used across the solver and analytic models."""

C0 = 299792458.0                  # vacuum speed of light (m/s)
MU0 = 1.25663706212e-6            # vacuum permeability (H/m)
EPS0 = 1.0 / (MU0 * C0 * C0)      # vacuum permittivity (F/m)
ETA0 = MU0 * C0                   # vacuum wave impedance (ohm)
