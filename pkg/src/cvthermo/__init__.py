"""Work extraction by measurement backaction on two-mode Gaussian states.

Modules:
    gaussian    covariance-matrix algebra (backaction, purity, entropy, invariants)
    thermo      extracted work, low-temperature forms, discrete comparators
    fock        truncated Fock-space brute-force oracle
    validation  cross-validation suite used by ``cvthermo validate``
    cli         command-line front end
"""

__version__ = "0.1.0"
