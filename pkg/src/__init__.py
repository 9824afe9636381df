"""lipidmc: lattice Monte Carlo of binary lipid mixtures."""
