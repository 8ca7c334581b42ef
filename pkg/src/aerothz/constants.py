"""Physical constants shared across the package."""

# Propagation speed used throughout (m/s).  The round value keeps derived
# quantities (Doppler shifts, antenna spacing) consistent with the link
# budgets this simulator reproduces.
SPEED_OF_LIGHT = 3e8
