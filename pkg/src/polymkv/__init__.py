"""Numerical solvers for polynomial McKean-Vlasov control problems via
moment embedding: regression Monte Carlo (regress-later and control
randomization) and quantization, with portfolio and systemic-risk
benchmarks.

Submodules: ``core``, ``ctrlsearch``, ``embedding``, ``quant``, ``regmc``,
``problems`` and ``cli``. Importing the package itself is cheap; numerical
modules load on first use.
"""

__version__ = "0.1.0"
